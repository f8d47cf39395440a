#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pagsr/tensor.hpp"

namespace pagsr {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  std::vector<T> adam_m;
  std::vector<T> adam_v;
  std::int64_t step_count = 0;
};

/// Ordered store of uniquely named trainable tensors.
template <typename T>
class ParameterStore {
 public:
  /// Registers a zero-filled parameter; throws on duplicate names. The
  /// returned reference is invalidated by the next add(); copy the handle.
  Tensor<T>& add(const std::string& name, Shape shape);
  Tensor<T>& add(const std::string& name, Tensor<T> value);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Tensor<T>& get(const std::string& name) const;
  Tensor<T>& get(const std::string& name);
  const Parameter<T>& entry(const std::string& name) const;

  std::vector<Parameter<T>>& entries() { return entries_; }
  const std::vector<Parameter<T>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();

  /// Deep copy: fresh storage for values and optimizer state.
  ParameterStore clone() const;

  template <typename U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (const auto& p : entries_) out.add(p.name, p.value.template cast<U>());
    return out;
  }

 private:
  std::vector<Parameter<T>> entries_;
  std::map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;
};

/// One bias-corrected ADAM update over every parameter, then clears grads.
/// Every parameter must carry a gradient.
template <typename T>
void adam_step(ParameterStore<T>& store, const AdamConfig& config);

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;

}  // namespace pagsr
