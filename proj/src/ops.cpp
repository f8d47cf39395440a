#include "pagsr/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace pagsr::ops {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
void finish(const Tensor<T>& out, const char* op) {
  if (finite_checks_enabled()) check_finite(out, op);
}

struct ConvGeometry {
  int cin, h, w, kh, kw, ho, wo;
  ConvParams p;
  bool pointwise() const {
    return kh == 1 && kw == 1 && p.stride.h == 1 && p.stride.w == 1 && p.padding.h == 0 &&
           p.padding.w == 0;
  }
  int rows() const { return cin * kh * kw; }
  int cols() const { return ho * wo; }
};

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  for (int ci = 0; ci < g.cin; ++ci) {
    const T* plane = x + static_cast<std::size_t>(ci) * g.h * g.w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        T* row = col + static_cast<std::size_t>((ci * g.kh + ky) * g.kw + kx) * g.cols();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.p.stride.h - g.p.padding.h + ky;
          T* dst = row + static_cast<std::size_t>(oy) * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.wo, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.p.stride.w - g.p.padding.w + kx;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* dx) {
  for (int ci = 0; ci < g.cin; ++ci) {
    T* plane = dx + static_cast<std::size_t>(ci) * g.h * g.w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const T* row = col + static_cast<std::size_t>((ci * g.kh + ky) * g.kw + kx) * g.cols();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.p.stride.h - g.p.padding.h + ky;
          if (iy < 0 || iy >= g.h) continue;
          const T* src = row + static_cast<std::size_t>(oy) * g.wo;
          T* dst = plane + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.p.stride.w - g.p.padding.w + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes differ, " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

}  // namespace

Shape conv2d_output_shape(const Shape& in, const Shape& wt, ConvParams p) {
  if (p.stride.h < 1 || p.stride.w < 1) throw ShapeError("conv2d: stride must be positive");
  if (p.padding.h < 0 || p.padding.w < 0) throw ShapeError("conv2d: padding must be non-negative");
  if (wt.c != in.c) {
    throw ShapeError("conv2d: input channels (dim 1) = " + std::to_string(in.c) +
                     " but weight expects " + std::to_string(wt.c));
  }
  const int span_h = in.h + 2 * p.padding.h;
  const int span_w = in.w + 2 * p.padding.w;
  if (wt.h > span_h) {
    throw ShapeError("conv2d: kernel height " + std::to_string(wt.h) +
                     " exceeds padded input height " + std::to_string(span_h));
  }
  if (wt.w > span_w) {
    throw ShapeError("conv2d: kernel width " + std::to_string(wt.w) +
                     " exceeds padded input width " + std::to_string(span_w));
  }
  return Shape{in.n, wt.n, (span_h - wt.h) / p.stride.h + 1, (span_w - wt.w) / p.stride.w + 1};
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 ConvParams params, Tape<T>* tape) {
  const Shape os = conv2d_output_shape(input.shape(), weight.shape(), params);
  if (bias.numel() != static_cast<std::size_t>(weight.shape().n)) {
    throw ShapeError("conv2d: bias has " + std::to_string(bias.numel()) +
                     " entries but weight has " + std::to_string(weight.shape().n) +
                     " output channels");
  }
  const Shape& is = input.shape();
  const ConvGeometry g{is.c, is.h, is.w, weight.shape().h, weight.shape().w, os.h, os.w, params};
  const int cout = os.c;
  Tensor<T> out(os);

  ConstMatMap<T> wmat(weight.raw(), cout, g.rows());
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bvec(bias.raw(), cout);
  AlignedVector<T> col;
  if (!g.pointwise()) col.resize(static_cast<std::size_t>(g.rows()) * g.cols());

  for (int n = 0; n < is.n; ++n) {
    const T* xn = input.raw() + static_cast<std::size_t>(n) * is.c * is.plane();
    MatMap<T> yn(out.raw() + static_cast<std::size_t>(n) * cout * os.plane(), cout, g.cols());
    if (g.pointwise()) {
      yn.noalias() = wmat * ConstMatMap<T>(xn, g.rows(), g.cols());
    } else {
      im2col(xn, g, col.data());
      yn.noalias() = wmat * ConstMatMap<T>(col.data(), g.rows(), g.cols());
    }
    yn.colwise() += bvec;
  }
  finish(out, "conv2d");

  if (should_record(tape, {&input, &weight, &bias})) {
    tape->record("conv2d", {input, weight, bias}, out, [input, weight, bias, out, g, cout]() {
      const Shape& is = input.shape();
      const Shape& os = out.shape();
      const auto dy_all = out.grad();
      ConstMatMap<T> wmat(weight.raw(), cout, g.rows());
      AlignedVector<T> col(g.pointwise() ? 0 : static_cast<std::size_t>(g.rows()) * g.cols());
      AlignedVector<T> dcol(input.requires_grad() && !g.pointwise() ? col.size() : 0);
      for (int n = 0; n < is.n; ++n) {
        ConstMatMap<T> dy(dy_all.data() + static_cast<std::size_t>(n) * cout * os.plane(), cout,
                          g.cols());
        const T* xn = input.raw() + static_cast<std::size_t>(n) * is.c * is.plane();
        if (weight.requires_grad()) {
          MatMap<T> dw(weight.ensure_grad().data(), cout, g.rows());
          if (g.pointwise()) {
            dw.noalias() += dy * ConstMatMap<T>(xn, g.rows(), g.cols()).transpose();
          } else {
            im2col(xn, g, col.data());
            dw.noalias() += dy * ConstMatMap<T>(col.data(), g.rows(), g.cols()).transpose();
          }
        }
        if (bias.requires_grad()) {
          Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(bias.ensure_grad().data(), cout);
          db += dy.rowwise().sum();
        }
        if (input.requires_grad()) {
          T* dxn = input.ensure_grad().data() + static_cast<std::size_t>(n) * is.c * is.plane();
          if (g.pointwise()) {
            MatMap<T>(dxn, g.rows(), g.cols()).noalias() += wmat.transpose() * dy;
          } else {
            MatMap<T>(dcol.data(), g.rows(), g.cols()).noalias() = wmat.transpose() * dy;
            col2im_add(dcol.data(), g, dxn);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& input, int r, Tape<T>* tape) {
  if (r < 1) throw ShapeError("pixel_shuffle: factor must be positive");
  const Shape& is = input.shape();
  if (is.c % (r * r) != 0) {
    throw ShapeError("pixel_shuffle: channel count " + std::to_string(is.c) +
                     " is not divisible by r^2 = " + std::to_string(r * r));
  }
  const Shape os{is.n, is.c / (r * r), is.h * r, is.w * r};
  Tensor<T> out(os);
  // out(n, c, r*h + a, r*w + b) = in(n, c*r*r + a*r + b, h, w)
  auto for_each = [is, os, r](auto&& fn) {
    for (int n = 0; n < os.n; ++n)
      for (int c = 0; c < os.c; ++c)
        for (int a = 0; a < r; ++a)
          for (int b = 0; b < r; ++b) {
            const int ic = c * r * r + a * r + b;
            for (int h = 0; h < is.h; ++h)
              for (int w = 0; w < is.w; ++w) {
                const std::size_t src =
                    ((static_cast<std::size_t>(n) * is.c + ic) * is.h + h) * is.w + w;
                const std::size_t dst =
                    ((static_cast<std::size_t>(n) * os.c + c) * os.h + (r * h + a)) * os.w +
                    (r * w + b);
                fn(src, dst);
              }
          }
  };
  const T* x = input.raw();
  T* y = out.raw();
  for_each([x, y](std::size_t src, std::size_t dst) { y[dst] = x[src]; });

  if (should_record(tape, {&input})) {
    tape->record("pixel_shuffle", {input}, out, [input, out, for_each]() {
      const T* dy = out.grad().data();
      T* dx = input.ensure_grad().data();
      for_each([dx, dy](std::size_t src, std::size_t dst) { dx[src] += dy[dst]; });
    });
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a, Tape<T>* tape) {
  Tensor<T> out(a.shape());
  const T* x = a.raw();
  T* y = out.raw();
  for (std::size_t i = 0; i < a.numel(); ++i) {
    // Split by sign so exp never overflows.
    if (x[i] >= T(0)) {
      y[i] = T(1) / (T(1) + std::exp(-x[i]));
    } else {
      const T e = std::exp(x[i]);
      y[i] = e / (T(1) + e);
    }
  }
  finish(out, "sigmoid");
  if (should_record(tape, {&a})) {
    tape->record("sigmoid", {a}, out, [a, out]() {
      const auto dy = out.grad();
      const auto dx = a.ensure_grad();
      const T* y = out.raw();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * y[i] * (T(1) - y[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a, Tape<T>* tape) {
  Tensor<T> out(a.shape());
  const T* x = a.raw();
  T* y = out.raw();
  for (std::size_t i = 0; i < a.numel(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  finish(out, "relu");
  if (should_record(tape, {&a})) {
    tape->record("relu", {a}, out, [a, out]() {
      const auto dy = out.grad();
      const auto dx = a.ensure_grad();
      const T* x = a.raw();
      for (std::size_t i = 0; i < dx.size(); ++i) {
        if (x[i] > T(0)) dx[i] += dy[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape) {
  require_same_shape(a, b, "add");
  Tensor<T> out(a.shape());
  const T* x = a.raw();
  const T* z = b.raw();
  T* y = out.raw();
  for (std::size_t i = 0; i < a.numel(); ++i) y[i] = x[i] + z[i];
  finish(out, "add");
  if (should_record(tape, {&a, &b})) {
    tape->record("add", {a, b}, out, [a, b, out]() {
      const auto dy = out.grad();
      for (const Tensor<T>* t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        const auto dx = t->ensure_grad();
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul_broadcast(const Tensor<T>& a, const Tensor<T>& map, Tape<T>* tape) {
  const Shape& as = a.shape();
  const Shape& ms = map.shape();
  if (ms.c != 1 || ms.n != as.n || ms.h != as.h || ms.w != as.w) {
    throw ShapeError("mul_broadcast: map must be " + Shape{as.n, 1, as.h, as.w}.str() +
                     ", got " + ms.str());
  }
  const std::size_t plane = as.plane();
  Tensor<T> out(as);
  for (int n = 0; n < as.n; ++n) {
    const T* m = map.raw() + n * plane;
    for (int c = 0; c < as.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * as.c + c) * plane;
      const T* x = a.raw() + base;
      T* y = out.raw() + base;
      for (std::size_t i = 0; i < plane; ++i) y[i] = x[i] * m[i];
    }
  }
  finish(out, "mul_broadcast");
  if (should_record(tape, {&a, &map})) {
    tape->record("mul_broadcast", {a, map}, out, [a, map, out]() {
      const Shape& as = a.shape();
      const std::size_t plane = as.plane();
      const T* dy = out.grad().data();
      T* da = a.requires_grad() ? a.ensure_grad().data() : nullptr;
      T* dm = map.requires_grad() ? map.ensure_grad().data() : nullptr;
      for (int n = 0; n < as.n; ++n) {
        const T* m = map.raw() + n * plane;
        for (int c = 0; c < as.c; ++c) {
          const std::size_t base = (static_cast<std::size_t>(n) * as.c + c) * plane;
          const T* x = a.raw() + base;
          const T* g = dy + base;
          for (std::size_t i = 0; i < plane; ++i) {
            if (da) da[base + i] += g[i] * m[i];
            if (dm) dm[n * plane + i] += g[i] * x[i];
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> elementwise(ElementwiseOp kind, const Tensor<T>& a, const Tensor<T>* b, Tape<T>* tape) {
  switch (kind) {
    case ElementwiseOp::kSigmoid:
      return sigmoid(a, tape);
    case ElementwiseOp::kRelu:
      return relu(a, tape);
    case ElementwiseOp::kAdd:
    case ElementwiseOp::kMulBroadcast:
      if (b == nullptr) throw ShapeError("elementwise: binary op requires a second operand");
      return kind == ElementwiseOp::kAdd ? add(a, *b, tape) : mul_broadcast(a, *b, tape);
  }
  throw ShapeError("elementwise: unknown op kind");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape) {
  require_same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
  finish(out, "mul");
  if (should_record(tape, {&a, &b})) {
    tape->record("mul", {a, b}, out, [a, b, out]() {
      const auto dy = out.grad();
      if (a.requires_grad()) {
        const auto da = a.ensure_grad();
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * b[i];
      }
      if (b.requires_grad()) {
        const auto db = b.ensure_grad();
        for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[i] * a[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor, Tape<T>* tape) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * factor;
  finish(out, "scale");
  if (should_record(tape, {&a})) {
    tape->record("scale", {a}, out, [a, out, factor]() {
      const auto dy = out.grad();
      const auto da = a.ensure_grad();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * factor;
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts, Tape<T>* tape) {
  if (parts.empty()) throw ShapeError("concat_channels: empty part list");
  const Shape& first = parts.front().shape();
  int channels = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Shape& s = parts[i].shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw ShapeError("concat_channels: part " + std::to_string(i) + " has shape " + s.str() +
                       ", expected N,H,W of " + first.str());
    }
    channels += s.c;
  }
  const Shape os{first.n, channels, first.h, first.w};
  const std::size_t plane = os.plane();
  Tensor<T> out(os);
  int c0 = 0;
  for (const auto& p : parts) {
    const int pc = p.shape().c;
    for (int n = 0; n < os.n; ++n) {
      const T* src = p.raw() + static_cast<std::size_t>(n) * pc * plane;
      T* dst = out.raw() + (static_cast<std::size_t>(n) * os.c + c0) * plane;
      std::copy(src, src + pc * plane, dst);
    }
    c0 += pc;
  }
  bool record = false;
  for (const auto& p : parts) record = record || p.requires_grad();
  if (tape != nullptr && record) {
    tape->record("concat_channels", parts, out, [parts, out]() {
      const Shape& os = out.shape();
      const std::size_t plane = os.plane();
      const T* dy = out.grad().data();
      int c0 = 0;
      for (const auto& p : parts) {
        const int pc = p.shape().c;
        if (p.requires_grad()) {
          T* dx = p.ensure_grad().data();
          for (int n = 0; n < os.n; ++n) {
            const T* src = dy + (static_cast<std::size_t>(n) * os.c + c0) * plane;
            T* dst = dx + static_cast<std::size_t>(n) * pc * plane;
            for (std::size_t i = 0; i < pc * plane; ++i) dst[i] += src[i];
          }
        }
        c0 += pc;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& input, int begin, int end, Tape<T>* tape) {
  const Shape& is = input.shape();
  if (begin < 0 || end > is.c || begin >= end) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") invalid for " + std::to_string(is.c) +
                     " channels");
  }
  const Shape os{is.n, end - begin, is.h, is.w};
  const std::size_t block = os.c * is.plane();
  Tensor<T> out(os);
  for (int n = 0; n < is.n; ++n) {
    const T* src = input.raw() + (static_cast<std::size_t>(n) * is.c + begin) * is.plane();
    std::copy(src, src + block, out.raw() + n * block);
  }
  if (should_record(tape, {&input})) {
    tape->record("slice_channels", {input}, out, [input, out, begin, block]() {
      const Shape& is = input.shape();
      const T* dy = out.grad().data();
      T* dx = input.ensure_grad().data();
      for (int n = 0; n < is.n; ++n) {
        T* dst = dx + (static_cast<std::size_t>(n) * is.c + begin) * is.plane();
        for (std::size_t i = 0; i < block; ++i) dst[i] += dy[n * block + i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a, Tape<T>* tape) {
  Tensor<T> out(Shape{1, 1, 1, 1});
  T acc = T(0);
  for (T v : a.data()) acc += v;
  out[0] = acc;
  if (should_record(tape, {&a})) {
    tape->record("sum", {a}, out, [a, out]() {
      const T g = out.grad()[0];
      for (T& d : a.ensure_grad()) d += g;
    });
  }
  return out;
}

template <typename T>
LossTerms<T> loss_terms(const Tensor<T>& pred, const Tensor<T>& target, Tape<T>* tape) {
  require_same_shape(pred, target, "loss_terms");
  const std::size_t count = pred.numel();
  if (count == 0) throw ShapeError("loss_terms: empty tensor");
  T sq = T(0);
  T ab = T(0);
  for (std::size_t i = 0; i < count; ++i) {
    const T d = pred[i] - target[i];
    sq += d * d;
    ab += std::abs(d);
  }
  LossTerms<T> out{Tensor<T>(Shape{}, sq / T(count)), Tensor<T>(Shape{}, ab / T(count))};
  if (should_record(tape, {&pred, &target})) {
    // l2 and l1 are separate tape nodes; each scatters only its own term.
    auto scatter = [pred, target, count](T g2, T g1) {
      for (int side = 0; side < 2; ++side) {
        const Tensor<T>& t = side == 0 ? pred : target;
        if (!t.requires_grad()) continue;
        const T sign = side == 0 ? T(1) : T(-1);
        const auto dx = t.ensure_grad();
        for (std::size_t i = 0; i < count; ++i) {
          const T d = pred[i] - target[i];
          const T s = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
          dx[i] += sign * (g2 * T(2) * d + g1 * s) / T(count);
        }
      }
    };
    const Tensor<T> l2 = out.l2;
    const Tensor<T> l1 = out.l1;
    tape->record("loss_l2", {pred, target}, l2, [scatter, l2]() { scatter(l2.grad()[0], T(0)); });
    tape->record("loss_l1", {pred, target}, l1, [scatter, l1]() { scatter(T(0), l1.grad()[0]); });
  }
  return out;
}

#define PAGSR_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, ConvParams, \
                            Tape<T>*);                                                        \
  template Tensor<T> pixel_shuffle(const Tensor<T>&, int, Tape<T>*);                          \
  template Tensor<T> sigmoid(const Tensor<T>&, Tape<T>*);                                     \
  template Tensor<T> relu(const Tensor<T>&, Tape<T>*);                                        \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&, Tape<T>*);                       \
  template Tensor<T> mul_broadcast(const Tensor<T>&, const Tensor<T>&, Tape<T>*);             \
  template Tensor<T> elementwise(ElementwiseOp, const Tensor<T>&, const Tensor<T>*, Tape<T>*); \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&, Tape<T>*);                       \
  template Tensor<T> scale(const Tensor<T>&, T, Tape<T>*);                                    \
  template Tensor<T> concat_channels(const std::vector<Tensor<T>>&, Tape<T>*);                \
  template Tensor<T> slice_channels(const Tensor<T>&, int, int, Tape<T>*);                    \
  template Tensor<T> sum(const Tensor<T>&, Tape<T>*);                                         \
  template LossTerms<T> loss_terms(const Tensor<T>&, const Tensor<T>&, Tape<T>*);

PAGSR_INSTANTIATE_OPS(float)
PAGSR_INSTANTIATE_OPS(double)

}  // namespace pagsr::ops
