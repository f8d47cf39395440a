#pragma once

// Finite-difference gradient checks for every differentiable primitive,
// shared by the unit tests and the acceptance runner.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace pagsr::testing {

struct PrimitiveCase {
  std::string name;
  // Builds inputs and a loss for one seed.
  std::function<GradCheckResult(std::uint64_t seed)> run;
};

inline Shape small_shape(std::mt19937_64& rng, int channels = 0) {
  std::uniform_int_distribution<int> n(1, 2), c(1, 3), hw(2, 6);
  return Shape{n(rng), channels > 0 ? channels : c(rng), hw(rng), hw(rng)};
}

inline GradCheckResult check_conv(std::uint64_t seed, int kh, int kw, int stride, int ph, int pw) {
  std::mt19937_64 rng(seed);
  Shape xs = small_shape(rng);
  xs.h = std::max(xs.h, kh);
  xs.w = std::max(xs.w, kw);
  if (stride == 2) {
    xs.h += xs.h % 2;
    xs.w += xs.w % 2;
  }
  std::uniform_int_distribution<int> cout(1, 3);
  const int co = cout(rng);
  const auto x = random_tensor(xs, rng);
  const auto w = random_tensor(Shape{co, xs.c, kh, kw}, rng);
  const auto b = random_tensor(Shape{co, 1, 1, 1}, rng);
  const ops::ConvParams p{{stride, stride}, {ph, pw}};
  const auto os = ops::conv2d_output_shape(xs, w.shape(), p);
  const auto probe = random_tensor(os, rng);
  return grad_check(
      [&](Tape<double>* t, const std::vector<Tensor64>& in) {
        return probe_loss(ops::conv2d(in[0], in[1], in[2], p, t), probe, t);
      },
      {x, w, b});
}

inline std::vector<PrimitiveCase> primitive_cases() {
  std::vector<PrimitiveCase> cases;
  cases.push_back({"conv2d 3x3 pad 1", [](std::uint64_t s) { return check_conv(s, 3, 3, 1, 1, 1); }});
  cases.push_back({"conv2d 9x1 pad (4,0)", [](std::uint64_t s) { return check_conv(s, 9, 1, 1, 4, 0); }});
  cases.push_back({"conv2d 1x9 pad (0,4)", [](std::uint64_t s) { return check_conv(s, 1, 9, 1, 0, 4); }});
  cases.push_back({"conv2d 2x2 stride 2", [](std::uint64_t s) { return check_conv(s, 2, 2, 2, 0, 0); }});
  cases.push_back({"conv2d 1x1", [](std::uint64_t s) { return check_conv(s, 1, 1, 1, 0, 0); }});
  cases.push_back({"pixel_shuffle r=2", [](std::uint64_t s) {
    std::mt19937_64 rng(s);
    Shape xs = small_shape(rng);
    xs.c *= 4;
    const auto x = random_tensor(xs, rng);
    const auto probe = random_tensor(Shape{xs.n, xs.c / 4, xs.h * 2, xs.w * 2}, rng);
    return grad_check([&](Tape<double>* t, const std::vector<Tensor64>& in) {
      return probe_loss(ops::pixel_shuffle(in[0], 2, t), probe, t);
    }, {x});
  }});
  cases.push_back({"sigmoid", [](std::uint64_t s) {
    std::mt19937_64 rng(s);
    const auto x = random_tensor(small_shape(rng), rng, -4.0, 4.0);
    const auto probe = random_tensor(x.shape(), rng);
    return grad_check([&](Tape<double>* t, const std::vector<Tensor64>& in) {
      return probe_loss(ops::sigmoid(in[0], t), probe, t);
    }, {x});
  }});
  cases.push_back({"relu", [](std::uint64_t s) {
    std::mt19937_64 rng(s);
    auto x = random_tensor(small_shape(rng), rng);
    // Keep samples away from the kink so central differences are valid.
    for (double& v : x.data()) v = v < 0 ? v - 0.01 : v + 0.01;
    const auto probe = random_tensor(x.shape(), rng);
    return grad_check([&](Tape<double>* t, const std::vector<Tensor64>& in) {
      return probe_loss(ops::relu(in[0], t), probe, t);
    }, {x});
  }});
  cases.push_back({"add", [](std::uint64_t s) {
    std::mt19937_64 rng(s);
    const Shape shape = small_shape(rng);
    const auto a = random_tensor(shape, rng);
    const auto b = random_tensor(shape, rng);
    const auto probe = random_tensor(shape, rng);
    return grad_check([&](Tape<double>* t, const std::vector<Tensor64>& in) {
      return probe_loss(ops::add(in[0], in[1], t), probe, t);
    }, {a, b});
  }});
  cases.push_back({"mul_broadcast", [](std::uint64_t s) {
    std::mt19937_64 rng(s);
    const Shape shape = small_shape(rng);
    const auto a = random_tensor(shape, rng);
    const auto m = random_tensor(Shape{shape.n, 1, shape.h, shape.w}, rng);
    const auto probe = random_tensor(shape, rng);
    return grad_check([&](Tape<double>* t, const std::vector<Tensor64>& in) {
      return probe_loss(ops::mul_broadcast(in[0], in[1], t), probe, t);
    }, {a, m});
  }});
  cases.push_back({"concat_channels", [](std::uint64_t s) {
    std::mt19937_64 rng(s);
    const Shape base = small_shape(rng);
    std::vector<Tensor64> parts;
    int total = 0;
    for (int i = 0; i < 3; ++i) {
      Shape ps = base;
      ps.c = 1 + i;
      total += ps.c;
      parts.push_back(random_tensor(ps, rng));
    }
    const auto probe = random_tensor(Shape{base.n, total, base.h, base.w}, rng);
    return grad_check([&](Tape<double>* t, const std::vector<Tensor64>& in) {
      return probe_loss(ops::concat_channels(in, t), probe, t);
    }, parts);
  }});
  cases.push_back({"loss_terms", [](std::uint64_t s) {
    std::mt19937_64 rng(s);
    const Shape shape = small_shape(rng);
    const auto p = random_tensor(shape, rng);
    const auto q = random_tensor(shape, rng);
    return grad_check([&](Tape<double>* t, const std::vector<Tensor64>& in) {
      const auto terms = ops::loss_terms(in[0], in[1], t);
      // Weight the terms differently so each one's gradient is visible.
      return ops::add(ops::scale(terms.l2, 0.7, t), ops::scale(terms.l1, 1.3, t), t);
    }, {p, q});
  }});
  return cases;
}

}  // namespace pagsr::testing
