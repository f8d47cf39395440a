#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pagsr/tensor.hpp"

namespace pagsr {

/// How a low-resolution depth map is synthesized from a high-resolution one.
struct DegradationSpec {
  int factor = 2;             // power of two in [1, 16]
  double noise_sigma = 0.0;   // Gaussian std in 8-bit intensity units; 0 = noise-free
  // Optional missing-region mask at LR resolution (row-major, nonzero = missing).
  // Missing pixels are set to 0 after noise.
  std::vector<std::uint8_t> missing_mask;

  void validate() const;
};

struct RgbdSample {
  Tensor32 depth_hr;  // [1, 1, H, W]
  Tensor32 rgb;       // [1, 3, H, W]
  Tensor32 depth_lr;  // [1, 1, H/s, W/s]
  int scale = 2;
  std::string provenance;
  DegradationSpec degradation;
  std::uint64_t seed = 0;
};

/// Bicubic downsample by spec.factor, optional Gaussian noise of std
/// noise_sigma/255 (clamped to [0, 1]), then the missing mask.
Tensor32 degrade(const Tensor32& depth_hr, const DegradationSpec& spec, std::uint64_t seed);

/// Pairs depth and RGB with a freshly degraded LR depth map.
RgbdSample make_sample(Tensor32 depth_hr, Tensor32 rgb, const DegradationSpec& spec,
                       std::uint64_t seed, std::string provenance);

struct PatchPair {
  Tensor32 depth;
  Tensor32 rgb;
  int y = 0;
  int x = 0;
};

/// Overlapping size x size crops on a stride grid, identical windows for
/// depth and RGB. Images smaller than size yield no patches and a warning.
std::vector<PatchPair> crop_patches(const Tensor32& depth, const Tensor32& rgb, int size = 256,
                                    int stride = 64, std::vector<std::string>* warnings = nullptr);

/// Closed-form patch count for an h x w image.
std::size_t patch_count(int h, int w, int size, int stride);

/// Elements of the dihedral group of the square.
enum class Dihedral : int {
  kIdentity = 0,
  kRot90,
  kRot180,
  kRot270,
  kFlip,
  kFlipRot90,
  kFlipRot180,
  kFlipRot270,
};

inline constexpr std::array<Dihedral, 8> kAllDihedral = {
    Dihedral::kIdentity, Dihedral::kRot90,     Dihedral::kRot180,     Dihedral::kRot270,
    Dihedral::kFlip,     Dihedral::kFlipRot90, Dihedral::kFlipRot180, Dihedral::kFlipRot270};

/// Applies the transform to every plane of a square tensor. Rotations are
/// counter-clockwise; kFlipRotK is a horizontal flip applied after kRotK.
Tensor32 apply_dihedral(const Tensor32& t, Dihedral d);

/// Group product: transform equal to applying a first, then b.
Dihedral compose(Dihedral a, Dihedral b);

/// The eight transforms of a square sample, applied identically to depth
/// and RGB; the LR depth is transformed the same way.
std::array<RgbdSample, 8> augment8(const RgbdSample& sample);

/// Piecewise-planar depth with a textured RGB image whose texture partly
/// ignores the depth edges. Deterministic in seed.
struct SyntheticScene {
  Tensor32 depth;
  Tensor32 rgb;
};
SyntheticScene synthetic_scene(int h, int w, std::uint64_t seed);

struct DatasetEntry {
  std::string name;
  Tensor32 depth;  // [1, 1, H, W]
  Tensor32 rgb;    // [1, 3, H, W]
};

/// Loads `<root>/<name>_depth.{png,pgm}` with `<root>/<name>_rgb.{png,ppm}`.
/// Names come from `<root>/manifest.txt` when present, otherwise from a
/// directory scan, sorted.
std::vector<DatasetEntry> load_dataset(const std::filesystem::path& root);

}  // namespace pagsr
