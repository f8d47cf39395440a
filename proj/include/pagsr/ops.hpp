#pragma once

#include <utility>
#include <vector>

#include "pagsr/tape.hpp"
#include "pagsr/tensor.hpp"

// Differentiable primitives. Every op takes an optional tape as its last
// argument; when the tape is non-null and some input requires grad, the op
// is recorded and its output requires grad.
namespace pagsr::ops {

struct IntPair {
  int h = 0;
  int w = 0;
};

struct ConvParams {
  IntPair stride{1, 1};
  IntPair padding{0, 0};
};

/// Padding that preserves spatial size for an odd kernel at stride 1.
inline ConvParams same_padding(int kh, int kw) {
  return ConvParams{{1, 1}, {(kh - 1) / 2, (kw - 1) / 2}};
}

/// Zero-padded cross-correlation plus per-output-channel bias.
/// weight is [Cout, Cin, kh, kw]; bias holds Cout values in any 4-D layout.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 ConvParams params = {}, Tape<T>* tape = nullptr);

/// Output extents of conv2d, validating the input/kernel combination.
Shape conv2d_output_shape(const Shape& input, const Shape& weight, ConvParams params);

/// [N, C*r*r, H, W] -> [N, C, r*H, r*W].
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& input, int r, Tape<T>* tape = nullptr);

enum class ElementwiseOp { kSigmoid, kRelu, kAdd, kMulBroadcast };

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a, Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> relu(const Tensor<T>& a, Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr);

/// a[N,C,H,W] scaled per pixel by map[N,1,H,W], shared across channels.
template <typename T>
Tensor<T> mul_broadcast(const Tensor<T>& a, const Tensor<T>& map, Tape<T>* tape = nullptr);

/// Dispatcher over the four elementwise kinds; b is ignored for unary kinds.
template <typename T>
Tensor<T> elementwise(ElementwiseOp kind, const Tensor<T>& a, const Tensor<T>* b = nullptr,
                      Tape<T>* tape = nullptr);

/// Same-shape product.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor, Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts, Tape<T>* tape = nullptr);

/// Channels [begin, end) of the input.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& input, int begin, int end, Tape<T>* tape = nullptr);

/// Scalar (1x1x1x1) sum of all elements.
template <typename T>
Tensor<T> sum(const Tensor<T>& a, Tape<T>* tape = nullptr);

template <typename T>
struct LossTerms {
  Tensor<T> l2;  // mean squared difference
  Tensor<T> l1;  // mean absolute difference
};

template <typename T>
LossTerms<T> loss_terms(const Tensor<T>& pred, const Tensor<T>& target, Tape<T>* tape = nullptr);

}  // namespace pagsr::ops
