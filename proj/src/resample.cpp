#include "pagsr/resample.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace pagsr {

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  const double ax = std::abs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  std::vector<int> first;       // first source index per output sample
  std::vector<int> index;       // clamped source indices, `width` per output
  std::vector<double> weight;   // matching weights, normalized to sum 1
  int width = 0;
};

Taps make_taps(int in, int out) {
  const double scale = static_cast<double>(out) / in;
  const double stretch = scale < 1.0 ? scale : 1.0;
  const double support = 2.0 / stretch;
  Taps taps;
  taps.width = static_cast<int>(std::ceil(2.0 * support)) + 2;
  taps.index.resize(static_cast<std::size_t>(out) * taps.width);
  taps.weight.resize(taps.index.size());
  for (int o = 0; o < out; ++o) {
    const double center = (o + 0.5) / scale - 0.5;
    const int left = static_cast<int>(std::floor(center - support));
    double total = 0.0;
    for (int k = 0; k < taps.width; ++k) {
      const int src = left + k;
      const double w = stretch * cubic_kernel((center - src) * stretch);
      taps.index[o * taps.width + k] = std::min(std::max(src, 0), in - 1);
      taps.weight[o * taps.width + k] = w;
      total += w;
    }
    for (int k = 0; k < taps.width; ++k) taps.weight[o * taps.width + k] /= total;
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> bicubic_resample(const Tensor<T>& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw ShapeError("bicubic_resample: output size must be positive, got " +
                     std::to_string(out_h) + "x" + std::to_string(out_w));
  }
  const Shape& is = img.shape();
  const Shape os{is.n, is.c, out_h, out_w};
  const Taps tx = make_taps(is.w, out_w);
  const Taps ty = make_taps(is.h, out_h);
  Tensor<T> out(os);
  std::vector<double> rows(static_cast<std::size_t>(is.h) * out_w);
  for (int n = 0; n < is.n; ++n) {
    for (int c = 0; c < is.c; ++c) {
      const T* src = img.raw() + img.offset(n, c, 0, 0);
      T* dst = out.raw() + out.offset(n, c, 0, 0);
      for (int y = 0; y < is.h; ++y) {
        const T* line = src + static_cast<std::size_t>(y) * is.w;
        for (int x = 0; x < out_w; ++x) {
          double acc = 0.0;
          for (int k = 0; k < tx.width; ++k) {
            acc += tx.weight[x * tx.width + k] * line[tx.index[x * tx.width + k]];
          }
          rows[static_cast<std::size_t>(y) * out_w + x] = acc;
        }
      }
      for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
          double acc = 0.0;
          for (int k = 0; k < ty.width; ++k) {
            acc += ty.weight[y * ty.width + k] *
                   rows[static_cast<std::size_t>(ty.index[y * ty.width + k]) * out_w + x];
          }
          dst[static_cast<std::size_t>(y) * out_w + x] = static_cast<T>(acc);
        }
      }
    }
  }
  return out;
}

template Tensor<float> bicubic_resample(const Tensor<float>&, int, int);
template Tensor<double> bicubic_resample(const Tensor<double>&, int, int);

}  // namespace pagsr
