#include "pagsr/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "pagsr/weights_io.hpp"

namespace pagsr {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("ADAM betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (checkpoint_every < 0 || max_steps < 0) {
    throw ConfigError("checkpoint_every and max_steps must be non-negative");
  }
}

template <typename T>
CombinedLoss<T> combined_loss(const Tensor<T>& pred, const Tensor<T>& target, Tape<T>* tape) {
  const auto terms = ops::loss_terms(pred, target, tape);
  return {ops::add(terms.l2, terms.l1, tape), terms.l1[0], terms.l2[0]};
}

Batch make_batch(const std::vector<RgbdSample>& dataset, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ConfigError("make_batch: no samples");
  auto stack = [&](auto member) {
    const Shape s = (dataset[indices[0]].*member).shape();
    Tensor32 out(Shape{static_cast<int>(indices.size()), s.c, s.h, s.w});
    const std::size_t block = s.numel();
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const Tensor32& t = dataset[indices[i]].*member;
      if (t.shape() != s) {
        throw ShapeError("make_batch: sample " + std::to_string(indices[i]) + " has shape " +
                         t.shape().str() + ", expected " + s.str());
      }
      std::copy(t.raw(), t.raw() + block, out.raw() + i * block);
    }
    return out;
  };
  return {stack(&RgbdSample::depth_lr), stack(&RgbdSample::rgb), stack(&RgbdSample::depth_hr)};
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t dataset_size, int batch_size,
                                                    std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(dataset_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  const std::size_t bs = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < dataset_size; start += bs) {
    std::vector<std::size_t> b;
    for (std::size_t i = 0; i < bs; ++i) b.push_back(order[(start + i) % dataset_size]);
    batches.push_back(std::move(b));
  }
  return batches;
}

template <typename T>
std::vector<LossRecord> train(ModelWeights<T>& weights, const std::vector<RgbdSample>& dataset,
                              const TrainConfig& config, const StepCallback& on_step) {
  config.validate();
  if (dataset.empty()) throw ConfigError("train: dataset is empty");
  for (const auto& s : dataset) {
    if (s.scale != config.scale) {
      throw ConfigError("train: sample '" + s.provenance + "' has scale " +
                        std::to_string(s.scale) + ", config scale is " +
                        std::to_string(config.scale));
    }
  }
  if (weights.config.factor() != config.scale) {
    throw ConfigError("train: model factor " + std::to_string(weights.config.factor()) +
                      " does not match training scale " + std::to_string(config.scale));
  }
  const AdamConfig adam{config.learning_rate, config.beta1, config.beta2, config.epsilon};
  std::vector<LossRecord> history;
  std::int64_t step = 0;
  Tape<T> tape;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = epoch_batches(dataset.size(), config.batch_size, config.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Batch batch = make_batch(dataset, batches[b]);
      const Tensor<T> dl = batch.depth_lr.template cast<T>();
      const Tensor<T> ih = batch.rgb.template cast<T>();
      const Tensor<T> target = batch.depth_hr.template cast<T>();

      tape.reset();
      const Tensor<T> pred = pagnet_forward(dl, ih, weights, &tape);
      const CombinedLoss<T> loss = combined_loss(pred, target, &tape);
      const double value = static_cast<double>(loss.total[0]);
      if (!std::isfinite(value)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b) + " (step " + std::to_string(step) + ")");
      }
      tape.backward(loss.total);
      adam_step(weights.params, adam);
      ++step;

      const LossRecord rec{step, epoch, value, static_cast<double>(loss.l1),
                           static_cast<double>(loss.l2)};
      history.push_back(rec);
      if (on_step) on_step(rec);
      if (config.checkpoint_every > 0 && !config.checkpoint_path.empty() &&
          step % config.checkpoint_every == 0) {
        save_weights(weights.template cast<float>(), config.checkpoint_path);
      }
      if (config.max_steps > 0 && step >= config.max_steps) return history;
    }
  }
  return history;
}

void write_loss_csv(const std::vector<LossRecord>& history, std::ostream& out) {
  out << "step,epoch,loss,l1,l2\n";
  out << std::setprecision(9);
  for (const auto& r : history) {
    out << r.step << ',' << r.epoch << ',' << r.loss << ',' << r.l1 << ',' << r.l2 << '\n';
  }
}

template CombinedLoss<float> combined_loss(const Tensor<float>&, const Tensor<float>&, Tape<float>*);
template CombinedLoss<double> combined_loss(const Tensor<double>&, const Tensor<double>&,
                                            Tape<double>*);
template std::vector<LossRecord> train(ModelWeights<float>&, const std::vector<RgbdSample>&,
                                       const TrainConfig&, const StepCallback&);
template std::vector<LossRecord> train(ModelWeights<double>&, const std::vector<RgbdSample>&,
                                       const TrainConfig&, const StepCallback&);

}  // namespace pagsr
