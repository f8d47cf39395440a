#pragma once

#include <filesystem>

#include "pagsr/tensor.hpp"

namespace pagsr {

struct LoadedImage {
  Tensor32 pixels;  // [1, C, H, W], C = 1 (gray) or 3 (RGB), values in [0, 1]
  int bit_depth = 8;
};

/// Reads binary PGM/PPM (P5/P6) or PNG, 8- or 16-bit, normalizing by the
/// format maximum. PNG alpha channels are dropped, palettes expanded.
LoadedImage load_image(const std::filesystem::path& path);

/// Writes a [1, C, H, W] tensor (C = 1 or 3) quantized to bit_depth (8 or 16).
/// The format follows the extension: .png, .pgm or .ppm. Values are clamped
/// to [0, 1] before quantization.
void save_image(const Tensor32& img, const std::filesystem::path& path, int bit_depth = 16);

}  // namespace pagsr
