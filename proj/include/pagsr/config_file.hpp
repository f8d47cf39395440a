#pragma once

#include <filesystem>
#include <iosfwd>

#include "pagsr/model.hpp"
#include "pagsr/training.hpp"

namespace pagsr {

/// Everything a training run reads from its config file.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  int patch_size = 256;
  int patch_stride = 64;
  bool augment = true;
  double noise_sigma = 0.0;
};

/// Flat `key = value` text, one pair per line, `#` starts a comment and
/// strings may be double-quoted. Keys are the ModelConfig/TrainConfig field
/// names plus patch_size, patch_stride, augment and noise_sigma. Unknown
/// keys are an error. train.scale follows the model factor unless given.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace pagsr
