#pragma once

#include <filesystem>
#include <optional>

#include "pagsr/model.hpp"

namespace pagsr {

inline constexpr char kWeightsMagic[4] = {'P', 'A', 'G', 'W'};
inline constexpr std::uint16_t kWeightsVersion = 1;

/// Writes weights in the PAGW format: magic, u16 version, config (l, C, D,
/// G, Cg as u32), u32 entry count, then per entry u16 name length, UTF-8
/// name, u8 rank, u32 dims, raw float32 values. All integers little-endian.
void save_weights(const ModelWeights<float>& weights, const std::filesystem::path& path);

/// Parses a PAGW file. The whole file is validated before anything is
/// returned. The returned config carries default seed/residual settings.
ModelWeights<float> load_weights(const std::filesystem::path& path);

/// As above, but also requires the stored architecture to match expected.
ModelWeights<float> load_weights(const std::filesystem::path& path, const ModelConfig& expected);

std::vector<unsigned char> encode_weights(const ModelWeights<float>& weights);
ModelWeights<float> decode_weights(const std::vector<unsigned char>& bytes,
                                   const std::optional<ModelConfig>& expected = std::nullopt);

}  // namespace pagsr
