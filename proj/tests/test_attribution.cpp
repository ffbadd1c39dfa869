#include <doctest.h>

#include <cmath>
#include <random>

#include "tangrad/attribution.hpp"
#include "tangrad/errors.hpp"
#include "test_support.hpp"

using namespace tangrad;
using test_support::max_abs_diff;
using test_support::random_net;
using test_support::random_vector;

namespace {

nn::DenseNetwork linear_model(const num::Vector& w) {
  num::Matrix m(1, w.size());
  for (std::size_t i = 0; i < w.size(); ++i) m(0, i) = w[i];
  nn::DenseNetwork net;
  net.layers.push_back({m, {0.0}, nn::Activation::identity});
  return net;
}

nn::DenseNetwork softplus_unit() {
  num::Matrix m(1, 1, 1.0);
  nn::DenseNetwork net;
  net.layers.push_back({m, {0.0}, nn::Activation::softplus});
  return net;
}

double softplus_ref(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

TEST_CASE("integrated_gradients: linear model is exact for any step count") {
  const auto net = linear_model({1.0, 2.0});
  for (int m : {1, 3, 64}) {
    const attr::Attribution a =
        attr::integrated_gradients(net, {1.0, 1.0}, {0.0, 0.0}, m, 0);
    CHECK(a.values[0] == doctest::Approx(1.0));
    CHECK(a.values[1] == doctest::Approx(2.0));
    CHECK(a.quadrature_steps == m);
    REQUIRE(a.base_point.has_value());
  }
}

TEST_CASE("integrated_gradients: base equal to input gives zero attribution") {
  const auto net = linear_model({3.0, -1.0});
  const attr::Attribution a =
      attr::integrated_gradients(net, {0.4, 0.6}, {0.4, 0.6}, 16, 0);
  CHECK(num::norm2(a.values) == doctest::Approx(0.0));
}

TEST_CASE("integrated_gradients: softplus unit matches the closed-form integral") {
  // For F(x) = softplus(x), IG from 0 to 1 equals F(1) - F(0) exactly by the
  // fundamental theorem; the midpoint rule at m=64 must land within 1e-3.
  const auto net = softplus_unit();
  const double expected = softplus_ref(1.0) - softplus_ref(0.0);
  const attr::Attribution a = attr::integrated_gradients(net, {1.0}, {0.0}, 64, 0);
  CHECK(std::abs(a.values[0] - expected) < 1e-3);
  const double f1 = nn::forward(net, {1.0})[0];
  const double f0 = nn::forward(net, {0.0})[0];
  CHECK(std::abs(a.values[0] - (f1 - f0)) < 1e-3);
}

TEST_CASE("integrated_gradients: completeness error shrinks as m doubles") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + rng() % 7;
    const auto net = random_net(d, 8, 1, rng);
    const num::Vector x = random_vector(d, rng, -0.5, 0.5);
    num::Vector base = x;
    const num::Vector dir = test_support::random_unit(d, rng);
    num::axpy(0.9, dir, base);  // |x - base| <= 1

    auto completeness_error = [&](int m) {
      const attr::Attribution a = attr::integrated_gradients(net, x, base, m, 0);
      double total = 0.0;
      for (double v : a.values) total += v;
      const double df = nn::forward(net, x)[0] - nn::forward(net, base)[0];
      return std::abs(total - df);
    };
    const double e128 = completeness_error(128);
    const double e256 = completeness_error(256);
    CHECK(e128 <= 1e-3);
    // quadratic decay until floating-point noise dominates
    CHECK((e256 < e128 || e128 < 1e-9));
  }
}

TEST_CASE("integrated_gradients: endpoint swap flips the sign") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + rng() % 5;
    const auto net = random_net(d, 6, 2, rng);
    const num::Vector x = random_vector(d, rng);
    const num::Vector base = random_vector(d, rng);
    const attr::Attribution fwd = attr::integrated_gradients(net, x, base, 32, 1);
    const attr::Attribution rev = attr::integrated_gradients(net, base, x, 32, 1);
    CHECK(max_abs_diff(fwd.values, num::scaled(rev.values, -1.0)) < 1e-6);
  }
}

TEST_CASE("path_attribution: straight line equals integrated gradients") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t d = 2 + rng() % 5;
    const auto net = random_net(d, 6, 1, rng);
    const num::Vector x = random_vector(d, rng);
    const num::Vector base = random_vector(d, rng);
    const int m = 16;
    const attr::PathSpec path = attr::straight_line_path(base, x, m);
    const attr::Attribution via_path = attr::path_attribution(net, path, 0);
    const attr::Attribution via_ig = attr::integrated_gradients(net, x, base, m, 0);
    CHECK(max_abs_diff(via_path.values, via_ig.values) < 1e-10);
  }
}

TEST_CASE("path_attribution: straight line on a linear model is (x-x') .* w") {
  const auto net = linear_model({2.0, -3.0});
  const attr::PathSpec path = attr::straight_line_path({1.0, 1.0}, {2.0, 0.0}, 4);
  const attr::Attribution a = attr::path_attribution(net, path, 0);
  CHECK(a.values[0] == doctest::Approx(2.0));   // (2-1)*2
  CHECK(a.values[1] == doctest::Approx(3.0));   // (0-1)*-3
}

TEST_CASE("path_attribution: closed loop telescopes to zero total") {
  std::mt19937_64 rng(17);
  const auto net = random_net(2, 8, 1, rng);
  // circle of radius 0.8, finely sampled, ending where it starts
  attr::PathSpec loop;
  const int segments = 256;
  for (int k = 0; k <= segments; ++k) {
    const double t = 2.0 * 3.14159265358979323846 * k / segments;
    loop.samples.push_back({0.8 * std::cos(t), 0.8 * std::sin(t)});
  }
  const attr::Attribution a = attr::path_attribution(net, loop, 0);
  double total = 0.0;
  for (double v : a.values) total += v;
  CHECK(std::abs(total) < 1e-3);  // F(end) - F(start) = 0 up to quadrature error
}

TEST_CASE("path_attribution: piecewise path equals its coarsening on linear models") {
  const auto net = linear_model({1.0, 1.0});
  attr::PathSpec two;
  two.samples = {{0.0, 0.0}, {0.3, 0.7}, {1.0, 1.0}};
  attr::PathSpec one;
  one.samples = {{0.0, 0.0}, {1.0, 1.0}};
  const attr::Attribution a2 = attr::path_attribution(net, two, 0);
  const attr::Attribution a1 = attr::path_attribution(net, one, 0);
  CHECK(max_abs_diff(a2.values, a1.values) < 1e-12);
}

TEST_CASE("path_attribution: degenerate path throws") {
  const auto net = linear_model({1.0});
  attr::PathSpec flat;
  flat.samples = {{0.5}, {0.5}, {0.5}};
  CHECK_THROWS_AS(attr::path_attribution(net, flat, 0), DegeneratePath);
  attr::PathSpec single;
  single.samples = {{0.5}};
  CHECK_THROWS_AS(attr::path_attribution(net, single, 0), DegeneratePath);
}

TEST_CASE("gradient_explainer: linear weight vector, constant zero, exact delegation") {
  const auto net = linear_model({4.0, -2.0});
  const attr::Attribution a = attr::gradient_explainer(net, {9.0, 9.0}, 0);
  CHECK(a.values == num::Vector{4.0, -2.0});
  CHECK_FALSE(a.base_point.has_value());

  const auto constant = linear_model({0.0, 0.0});
  CHECK(num::norm2(attr::gradient_explainer(constant, {1.0, 2.0}, 0).values) == 0.0);

  std::mt19937_64 rng(18);
  const auto rnet = random_net(3, 5, 2, rng);
  const num::Vector x = random_vector(3, rng);
  CHECK(attr::gradient_explainer(rnet, x, 1).values == nn::input_gradient(rnet, x, 1));
}

TEST_CASE("smoothgrad: sigma zero is the plain gradient, bit for bit") {
  std::mt19937_64 rng(19);
  const auto net = random_net(4, 6, 2, rng);
  const num::Vector x = random_vector(4, rng);
  const attr::Attribution sg = attr::smoothgrad(net, x, 1, 0.0, 25, 12345);
  CHECK(sg.values == nn::input_gradient(net, x, 1));
}

TEST_CASE("smoothgrad: linear model is the weight vector for any sigma") {
  const auto net = linear_model({1.5, -0.5, 2.0});
  for (double sigma : {0.02, 0.5, 3.0}) {
    const attr::Attribution sg =
        attr::smoothgrad(net, {0.1, 0.2, 0.3}, 0, sigma, 25, 99);
    CHECK(max_abs_diff(sg.values, {1.5, -0.5, 2.0}) < 1e-14);
  }
}

TEST_CASE("smoothgrad: seeded runs are identical; defaults match sigma=0.02 n=25") {
  std::mt19937_64 rng(20);
  const auto net = random_net(5, 8, 1, rng);
  const num::Vector x = random_vector(5, rng);
  const attr::Attribution a = attr::smoothgrad(net, x, 0, 0.02, 25, 777);
  const attr::Attribution b = attr::smoothgrad(net, x, 0, 0.02, 25, 777);
  CHECK(a.values == b.values);
  CHECK(defaults::kSmoothgradSigma == 0.02);
  CHECK(defaults::kSmoothgradSamples == 25);
}

TEST_CASE("smoothgrad approaches the gradient as sigma shrinks") {
  std::mt19937_64 rng(23);
  const auto net = random_net(4, 10, 1, rng);
  const num::Vector x = random_vector(4, rng);
  const num::Vector g = nn::input_gradient(net, x, 0);
  double prev = 1e300;
  for (double sigma : {0.1, 0.01, 0.001}) {
    const attr::Attribution sg = attr::smoothgrad(net, x, 0, sigma, 50, 31);
    const double diff = num::norm2(num::sub(sg.values, g));
    CHECK(diff < prev);
    prev = diff;
  }
}

TEST_CASE("input_times_gradient: zero input, linear case, softplus closed form") {
  const auto net = linear_model({5.0, 6.0});
  CHECK(num::norm2(attr::input_times_gradient(net, {0.0, 0.0}, 0).values) == 0.0);
  CHECK(attr::input_times_gradient(net, {1.0, 1.0}, 0).values == num::Vector{5.0, 6.0});

  // F(x) = softplus(x): x * F'(x) = x * sigmoid(x) at x = 2
  const auto sp = softplus_unit();
  const double expected = 2.0 / (1.0 + std::exp(-2.0));
  CHECK(attr::input_times_gradient(sp, {2.0}, 0).values[0] ==
        doctest::Approx(expected).epsilon(1e-12));
}
