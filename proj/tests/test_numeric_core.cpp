#include <doctest.h>

#include <cmath>
#include <limits>

#include "nara/adam.hpp"
#include "nara/dense.hpp"
#include "nara/finite_diff.hpp"
#include "nara/gaussian.hpp"
#include "nara/lstm.hpp"
#include "nara/tensor.hpp"
#include "support.hpp"

using namespace nara;

TEST_CASE("tensor shape and flatten round trip") {
  Tensor a({2, 3}, 1.5);
  CHECK(a.size() == 6);
  CHECK(a.dim(1) == 3);
  a.at(1, 2) = 4.0;
  CHECK(a[5] == 4.0);
  Tensor b({4});
  auto flat = flatten({&a, &b});
  CHECK(flat.size() == 10);
  flat[9] = 7.0;
  unflatten({&a, &b}, flat);
  CHECK(b[3] == 7.0);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1.0}), Error);
  a[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(a.all_finite());
}

TEST_CASE("substreams are deterministic and distinct by purpose") {
  Rng a = substream(3, 17, DrawPurpose::draft);
  Rng b = substream(3, 17, DrawPurpose::draft);
  Rng c = substream(3, 17, DrawPurpose::resample);
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
}

TEST_CASE("dense forward matches naive matrix product") {
  Rng rng(1);
  const auto layer = DenseLayer::uniform(5, 3, rng);
  const auto x = test::random_values(5, rng);
  const auto y = layer.forward(x);
  for (std::size_t r = 0; r < 3; ++r) {
    double acc = layer.bias[r];
    for (std::size_t c = 0; c < 5; ++c) acc += layer.weight.at(r, c) * x[c];
    CHECK(y[r] == doctest::Approx(acc).epsilon(1e-14));
  }
  CHECK_THROWS_AS(layer.forward(std::vector<double>(4)), Error);
}

TEST_CASE("gaussian log density matches closed form and rejects non-finite input") {
  const GaussianHead head{0.3, std::log(0.25)};
  const double expected = -0.5 * std::log(2.0 * M_PI * 0.25) - 0.5 * (1.1 - 0.3) * (1.1 - 0.3) / 0.25;
  CHECK(gaussian_log_density(1.1, head) == doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_WITH_AS(gaussian_log_density(std::nan(""), head), "non-finite input", Error);
  CHECK(clamp_log_var(50.0) == kLogVarMax);
  CHECK(clamp_log_var(-50.0) == kLogVarMin);
  CHECK(gaussian_sample({1.0, std::log(4.0)}, 0.5) == doctest::Approx(2.0));
}

TEST_CASE("lstm step matches the scalar reference") {
  Rng rng(2);
  const auto cell = LstmCell::uniform(3, 4, rng);
  LstmState s(4);
  s.h = test::random_values(4, rng);
  s.c = test::random_values(4, rng);
  const auto x = test::random_values(3, rng);
  const auto got = lstm_step(cell, s, x);
  const auto want = test::lstm_reference(cell, s, x);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(got.h[j] == doctest::Approx(want.h[j]).epsilon(1e-13));
    CHECK(got.c[j] == doctest::Approx(want.c[j]).epsilon(1e-13));
  }
}

TEST_CASE("lstm backward without a recorded step throws") {
  const LstmCell cell(1, 2);
  LstmCell grad(1, 2);
  LstmState dprev(2);
  std::vector<double> dh(2, 1.0), dc(2, 0.0);
  CHECK_THROWS_AS(lstm_step_backward(cell, LstmStepCache{}, dh, dc, grad, dprev, {}), Error);
}

TEST_CASE("adam matches the scalar recursion") {
  Tensor p({1}, 0.5);
  Tensor g({1});
  AdamState adam({&p}, AdamOptions{0.01});
  double ref = 0.5, m = 0.0, v = 0.0;
  for (int t = 1; t <= 50; ++t) {
    const double grad = 2.0 * (ref - 3.0);
    g[0] = 2.0 * (p[0] - 3.0);
    adam.apply({&p}, {&g});
    m = 0.9 * m + 0.1 * grad;
    v = 0.999 * v + 0.001 * grad * grad;
    const double mhat = m / (1.0 - std::pow(0.9, t));
    const double vhat = v / (1.0 - std::pow(0.999, t));
    ref -= 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
    CHECK(p[0] == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("adam converges on a quadratic and refuses non-finite gradients") {
  Tensor p({2}, std::vector<double>{4.0, -3.0});
  Tensor g({2});
  AdamState adam({&p}, AdamOptions{0.05});
  for (int t = 0; t < 2000; ++t) {
    g[0] = 2.0 * (p[0] - 1.0);
    g[1] = 2.0 * (p[1] + 2.0);
    adam.apply({&p}, {&g});
  }
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(p[1] == doctest::Approx(-2.0).epsilon(1e-3));
  const Tensor before = p;
  g[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(adam.apply({&p}, {&g}), "diverged", Error);
  CHECK(p == before);
}

TEST_CASE("finite differences recover a known gradient") {
  auto f = [](std::span<const double> x) { return x[0] * x[0] * x[1] + std::sin(x[1]); };
  const std::vector<double> at{1.5, -0.7};
  const std::vector<double> exact{2.0 * 1.5 * -0.7, 1.5 * 1.5 + std::cos(-0.7)};
  for (auto stencil : {Stencil::three_point, Stencil::five_point}) {
    const auto num = finite_difference_gradient(f, at, stencil == Stencil::three_point ? 1e-5 : 1e-3, stencil);
    CHECK(max_relative_error(exact, num) < 1e-8);
  }
}
