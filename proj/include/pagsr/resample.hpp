#pragma once

#include "pagsr/tensor.hpp"

namespace pagsr {

/// Catmull-Rom cubic kernel (a = -0.5).
double cubic_kernel(double x);

/// Separable bicubic resampling of every (n, c) plane to out_h x out_w.
///
/// Pixel centers are aligned (src = (dst + 0.5) / scale - 0.5) and samples
/// outside the image are clamped to the nearest edge pixel. When an axis is
/// shrunk the kernel is stretched by the inverse scale so it also acts as an
/// anti-aliasing filter, matching the usual imresize behaviour.
template <typename T>
Tensor<T> bicubic_resample(const Tensor<T>& img, int out_h, int out_w);

}  // namespace pagsr
