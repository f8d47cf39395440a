#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pagsr/data.hpp"
#include "pagsr/model.hpp"

namespace pagsr {

/// Root-mean-squared error in 8-bit units (normalized values x 255).
double rmse(const Tensor32& pred, const Tensor32& gt);

/// RMSE over pixels with gt > 0 only; invalid (zero) ground truth is skipped.
/// Returns 0 when no pixel is valid.
double masked_rmse(const Tensor32& pred, const Tensor32& gt);

struct EvalRow {
  std::string image;
  int scale = 1;
  std::string method;
  double rmse = 0.0;
  std::string error;  // non-empty when the row could not be evaluated
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::map<std::string, std::string> metadata;

  void write_csv(std::ostream& out) const;
  /// Image x scale grid per method.
  void write_table(std::ostream& out) const;
};

struct EvalOptions {
  std::vector<int> scales{2, 4, 8, 16};
  std::vector<std::string> methods{"bicubic"};
  // Weight file per scale for the "pagnet" method.
  std::map<int, std::filesystem::path> weights;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Evaluates each (image, scale, method). Images not divisible by a scale
/// are center-cropped; the crop is recorded in metadata. Rows are ordered by
/// (image, scale, method).
EvalReport eval_dataset(const std::vector<DatasetEntry>& dataset, const EvalOptions& options);

/// Largest centered region whose sides are multiples of factor.
Tensor32 center_crop_to_multiple(const Tensor32& t, int factor);

/// Super-resolves one depth map; output is clamped to [0, 1].
Tensor32 super_resolve(const ModelWeights<float>& weights, const Tensor32& depth_lr,
                       const Tensor32& rgb);

/// Loads inputs, runs the network and writes a 16-bit depth map.
void infer(const std::filesystem::path& weights_path, const std::filesystem::path& depth_lr_path,
           const std::filesystem::path& rgb_path, const std::filesystem::path& out_path);

enum class AttentionVariant { kWith, kWithout };

/// Raw (pre-normalization) guidance features of one stage.
struct FeatureDump {
  Tensor32 features;   // [1, Cg, H, W]
  Tensor32 attention;  // [1, 1, H, W]
};
FeatureDump compute_features(const ModelWeights<float>& weights, const Tensor32& depth_lr,
                             const Tensor32& rgb, int stage, AttentionVariant variant);

/// Writes one min-max normalized 16-bit PGM per feature channel plus the raw
/// attention map, returning the written paths.
std::vector<std::filesystem::path> dump_features(const ModelWeights<float>& weights,
                                                 const Tensor32& depth_lr, const Tensor32& rgb,
                                                 int stage, AttentionVariant variant,
                                                 const std::filesystem::path& out_dir);

}  // namespace pagsr
