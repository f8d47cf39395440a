#include "pagsr/parameters.hpp"

#include <cmath>

namespace pagsr {

template <typename T>
Tensor<T>& ParameterStore<T>::add(const std::string& name, Shape shape) {
  return add(name, Tensor<T>(shape));
}

template <typename T>
Tensor<T>& ParameterStore<T>::add(const std::string& name, Tensor<T> value) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  value.set_requires_grad(true);
  Parameter<T> p;
  p.name = name;
  p.adam_m.assign(value.numel(), T(0));
  p.adam_v.assign(value.numel(), T(0));
  p.value = std::move(value);
  index_[name] = entries_.size();
  entries_.push_back(std::move(p));
  return entries_.back().value;
}

template <typename T>
const Parameter<T>& ParameterStore<T>::entry(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return entries_[it->second];
}

template <typename T>
const Tensor<T>& ParameterStore<T>::get(const std::string& name) const {
  return entry(name).value;
}

template <typename T>
Tensor<T>& ParameterStore<T>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return entries_[it->second].value;
}

template <typename T>
std::size_t ParameterStore<T>::scalar_count() const {
  std::size_t total = 0;
  for (const auto& p : entries_) total += p.value.numel();
  return total;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : entries_) p.value.zero_grad();
}

template <typename T>
ParameterStore<T> ParameterStore<T>::clone() const {
  ParameterStore out;
  for (const auto& p : entries_) {
    out.add(p.name, p.value.clone());
    auto& dst = out.entries_.back();
    dst.adam_m = p.adam_m;
    dst.adam_v = p.adam_v;
    dst.step_count = p.step_count;
  }
  return out;
}

template <typename T>
void adam_step(ParameterStore<T>& store, const AdamConfig& config) {
  if (!(config.learning_rate >= 0.0)) {
    throw ConfigError("adam_step: learning rate must be non-negative");
  }
  for (const auto& p : store.entries()) {
    if (!p.value.has_grad()) {
      throw AutogradError("adam_step: parameter '" + p.name + "' has no gradient");
    }
  }
  for (auto& p : store.entries()) {
    ++p.step_count;
    const double t = static_cast<double>(p.step_count);
    const double m_corr = 1.0 - std::pow(config.beta1, t);
    const double v_corr = 1.0 - std::pow(config.beta2, t);
    const auto g = p.value.grad();
    auto x = p.value.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double gi = g[i];
      const double m = config.beta1 * p.adam_m[i] + (1.0 - config.beta1) * gi;
      const double v = config.beta2 * p.adam_v[i] + (1.0 - config.beta2) * gi * gi;
      p.adam_m[i] = static_cast<T>(m);
      p.adam_v[i] = static_cast<T>(v);
      const double m_hat = m / m_corr;
      const double v_hat = v / v_corr;
      x[i] = static_cast<T>(x[i] - config.learning_rate * m_hat /
                                       (std::sqrt(v_hat) + config.epsilon));
    }
    p.value.clear_grad();
  }
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template void adam_step(ParameterStore<float>&, const AdamConfig&);
template void adam_step(ParameterStore<double>&, const AdamConfig&);

}  // namespace pagsr
