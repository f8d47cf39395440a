#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pagsr/data.hpp"
#include "pagsr/model.hpp"

namespace pagsr {

struct TrainConfig {
  int batch_size = 8;
  double learning_rate = 1e-4;
  int epochs = 30;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;
  int scale = 2;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // steps between checkpoints; 0 disables
  std::filesystem::path checkpoint_path;
  int max_steps = 0;  // stop after this many optimizer steps; 0 = run all epochs

  void validate() const;
};

struct LossRecord {
  std::int64_t step = 0;
  int epoch = 0;
  double loss = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;

  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

template <typename T>
struct CombinedLoss {
  Tensor<T> total;  // l2 + l1, recorded on the tape
  T l1;
  T l2;
};

/// Mean-squared plus mean-absolute error over the whole batch tensor.
/// Samples share a size, so this equals the mean of per-sample losses.
template <typename T>
CombinedLoss<T> combined_loss(const Tensor<T>& pred, const Tensor<T>& target,
                              Tape<T>* tape = nullptr);

/// Stacks samples [i0, i1, ...] into batch tensors.
struct Batch {
  Tensor32 depth_lr;
  Tensor32 rgb;
  Tensor32 depth_hr;
};
Batch make_batch(const std::vector<RgbdSample>& dataset, const std::vector<std::size_t>& indices);

/// Sample order of one epoch, seeded from (seed, epoch). The final short
/// batch is padded by wrapping to the start of the order.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t dataset_size, int batch_size,
                                                    std::uint64_t seed, int epoch);

using StepCallback = std::function<void(const LossRecord&)>;

/// Mini-batch ADAM on the combined loss. Throws NumericError naming the batch
/// on a non-finite loss.
template <typename T>
std::vector<LossRecord> train(ModelWeights<T>& weights, const std::vector<RgbdSample>& dataset,
                              const TrainConfig& config, const StepCallback& on_step = {});

/// CSV with header `step,epoch,loss,l1,l2`.
void write_loss_csv(const std::vector<LossRecord>& history, std::ostream& out);

}  // namespace pagsr
