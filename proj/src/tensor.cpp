#include "pagsr/tensor.hpp"

#include <atomic>
#include <sstream>

namespace pagsr {

namespace {
std::atomic<bool> g_finite_checks{false};
}

std::string Shape::str() const {
  std::ostringstream os;
  os << n << 'x' << c << 'x' << h << 'x' << w;
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(shape) {
  if (!shape.valid()) throw ShapeError("tensor shape must be positive, got " + shape.str());
  storage_ = std::make_shared<Storage>();
  storage_->data.assign(shape.numel(), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(shape) {
  if (!shape.valid()) throw ShapeError("tensor shape must be positive, got " + shape.str());
  if (data.size() != shape.numel()) {
    throw ShapeError("tensor of shape " + shape.str() + " needs " +
                     std::to_string(shape.numel()) + " values, got " +
                     std::to_string(data.size()));
  }
  storage_ = std::make_shared<Storage>();
  storage_->data.assign(data.begin(), data.end());
}

template <typename T>
std::span<T> Tensor<T>::ensure_grad() const {
  if (storage_->grad.size() != storage_->data.size()) {
    storage_->grad.assign(storage_->data.size(), T(0));
  }
  return storage_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() const {
  if (has_grad()) std::fill(storage_->grad.begin(), storage_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  Tensor out(shape_);
  std::copy(storage_->data.begin(), storage_->data.end(), out.raw());
  return out;
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (shape.numel() != numel()) {
    throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  Tensor out(shape);
  std::copy(storage_->data.begin(), storage_->data.end(), out.raw());
  return out;
}

void set_finite_checks(bool enabled) { g_finite_checks.store(enabled); }
bool finite_checks_enabled() { return g_finite_checks.load(); }

template <typename T>
void check_finite(const Tensor<T>& t, const char* op) {
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

template class Tensor<float>;
template class Tensor<double>;
template void check_finite(const Tensor<float>&, const char*);
template void check_finite(const Tensor<double>&, const char*);

}  // namespace pagsr
