#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "pagsr/error.hpp"

namespace pagsr {

/// Extents of a 4-D tensor laid out row-major over (batch, channel, height, width).
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool valid() const { return n >= 1 && c >= 1 && h >= 1 && w >= 1; }
  std::array<int, 4> dims() const { return {n, c, h, w}; }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// 64-byte aligned allocation. Eigen chooses its vectorized code path from
/// the runtime alignment of a buffer, so a fixed alignment keeps float
/// results identical from run to run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Dense 4-D array with an optional gradient buffer.
///
/// Tensor is a handle: copies share the same storage, the way parameters
/// and recorded activations are shared between the model and the tape.
/// Use clone() for an independent copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> data);

  static Tensor zeros(Shape shape) { return Tensor(shape); }
  static Tensor filled(Shape shape, T value) { return Tensor(shape, value); }

  bool defined() const { return static_cast<bool>(storage_); }
  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return shape_.numel(); }

  std::span<T> data() { return storage_->data; }
  std::span<const T> data() const { return storage_->data; }
  T* raw() { return storage_->data.data(); }
  const T* raw() const { return storage_->data.data(); }

  T& operator[](std::size_t i) { return storage_->data[i]; }
  const T& operator[](std::size_t i) const { return storage_->data[i]; }

  std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  T& at(int n, int c, int h, int w) { return storage_->data[offset(n, c, h, w)]; }
  const T& at(int n, int c, int h, int w) const {
    return storage_->data[offset(n, c, h, w)];
  }

  bool requires_grad() const { return storage_ && storage_->requires_grad; }
  Tensor& set_requires_grad(bool on = true) {
    storage_->requires_grad = on;
    return *this;
  }

  // Gradient access goes through the shared storage, so a const handle can
  // still receive accumulated gradients from the tape.
  bool has_grad() const { return storage_ && !storage_->grad.empty(); }
  std::span<T> grad() const { return storage_->grad; }
  std::span<T> ensure_grad() const;
  void zero_grad() const;
  void clear_grad() const { storage_->grad.clear(); }

  bool same_storage(const Tensor& other) const { return storage_ == other.storage_; }

  /// Deep copy of values only; the copy does not require grad.
  Tensor clone() const;

  /// Same values, new shape with identical element count.
  Tensor reshaped(Shape shape) const;

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(numel());
    std::transform(storage_->data.begin(), storage_->data.end(), out.begin(),
                   [](T v) { return static_cast<U>(v); });
    return Tensor<U>(shape_, std::move(out));
  }

  bool all_finite() const {
    return std::all_of(storage_->data.begin(), storage_->data.end(),
                       [](T v) { return std::isfinite(v); });
  }

 private:
  struct Storage {
    AlignedVector<T> data;
    AlignedVector<T> grad;
    bool requires_grad = false;
  };

  Shape shape_{};
  std::shared_ptr<Storage> storage_;
};

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

/// Enables a NaN/Inf scan on the output of every forward op. Off by default.
void set_finite_checks(bool enabled);
bool finite_checks_enabled();

template <typename T>
void check_finite(const Tensor<T>& t, const char* op);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace pagsr
