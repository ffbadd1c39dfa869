#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "tangrad/basepoint.hpp"
#include "tangrad/errors.hpp"
#include "test_support.hpp"

using namespace tangrad;
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

manifold::TangentBasis span_e1(std::size_t d) {
  manifold::TangentBasis tb;
  tb.point.assign(d, 0.0);
  tb.basis.ambient_dim = d;
  num::Vector e(d, 0.0);
  e[0] = 1.0;
  tb.basis.vectors.push_back(std::move(e));
  return tb;
}

double min_eigenvalue(const num::Matrix& m) {
  Eigen::MatrixXd em(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) em(long(r), long(c)) = m(r, c);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(em).eigenvalues().minCoeff();
}

data::Dataset two_point_dataset() {
  data::Dataset ds;
  ds.points = {{0.0, 0.0}, {3.0, 4.0}};
  data::recompute_bounds(ds);
  return ds;
}

}  // namespace

TEST_CASE("baseline_basepoint: zero") {
  basepoint::BaselineSpec spec;
  const num::Vector alpha =
      basepoint::baseline_basepoint(spec, {1.0, 2.0, 3.0, 4.0}, data::Dataset{});
  CHECK(alpha == num::Vector(4, 0.0));
}

TEST_CASE("baseline_basepoint: max distance picks the farthest point") {
  basepoint::BaselineSpec spec;
  spec.method = basepoint::BaselineMethod::max_distance;
  spec.p_norm = 2;
  const num::Vector alpha =
      basepoint::baseline_basepoint(spec, {0.0, 0.0}, two_point_dataset());
  CHECK(alpha == num::Vector{3.0, 4.0});
}

TEST_CASE("baseline_basepoint: max distance ties go to the lowest index") {
  data::Dataset ds;
  ds.points = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}};
  data::recompute_bounds(ds);
  basepoint::BaselineSpec spec;
  spec.method = basepoint::BaselineMethod::max_distance;
  const num::Vector alpha = basepoint::baseline_basepoint(spec, {0.0, 0.0}, ds);
  CHECK(alpha == ds.points[0]);
}

TEST_CASE("baseline_basepoint: max distance on an empty dataset throws") {
  basepoint::BaselineSpec spec;
  spec.method = basepoint::BaselineMethod::max_distance;
  CHECK_THROWS_AS(basepoint::baseline_basepoint(spec, {0.0, 0.0}, data::Dataset{}),
                  EmptyDataset);
}

TEST_CASE("baseline_basepoint: gaussian with sigma 0 returns x; clipping applies") {
  basepoint::BaselineSpec spec;
  spec.method = basepoint::BaselineMethod::gaussian;
  spec.sigma = 0.0;
  const num::Vector x = {0.25, 0.75};
  CHECK(basepoint::baseline_basepoint(spec, x, data::Dataset{}) == x);

  spec.sigma = 10.0;
  spec.bounds_lo = {0.0, 0.0};
  spec.bounds_hi = {1.0, 1.0};
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const num::Vector a = basepoint::baseline_basepoint(spec, x, data::Dataset{}, rng);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(a[i] >= 0.0);
      CHECK(a[i] <= 1.0);
    }
  }
}

TEST_CASE("baseline_basepoint: uniform draws inside bounds, deterministic by seed") {
  basepoint::BaselineSpec spec;
  spec.method = basepoint::BaselineMethod::uniform;
  spec.bounds_lo = {-1.0, 2.0};
  spec.bounds_hi = {1.0, 5.0};
  spec.seed = 44;
  const num::Vector a = basepoint::baseline_basepoint(spec, {0.0, 3.0}, data::Dataset{});
  const num::Vector b = basepoint::baseline_basepoint(spec, {0.0, 3.0}, data::Dataset{});
  CHECK(a == b);
  CHECK(a[0] >= -1.0);
  CHECK(a[0] <= 1.0);
  CHECK(a[1] >= 2.0);
  CHECK(a[1] <= 5.0);

  spec.bounds_lo = {1.0, 2.0};
  spec.bounds_hi = {0.0, 5.0};
  CHECK_THROWS_AS(basepoint::baseline_basepoint(spec, {0.0, 3.0}, data::Dataset{}),
                  InvalidBounds);
}

TEST_CASE("alignment_energy: fully tangent attribution has zero energy") {
  const auto net = linear_model({1.0, 0.0});
  const auto tb = span_e1(2);
  // any alpha with alpha_2 = x_2: IG = ((x1-a1)*1, 0) lies in span{e1}
  CHECK(basepoint::alignment_energy({1.0, 0.5}, {-0.3, 0.5}, net, tb, 16, 0) ==
        doctest::Approx(0.0));
}

TEST_CASE("alignment_energy: unit normal attribution gives one half") {
  const auto net = linear_model({0.0, 1.0});
  const auto tb = span_e1(2);
  // IG = (0, 1): exactly the unit normal
  CHECK(basepoint::alignment_energy({0.0, 1.0}, {0.0, 0.0}, net, tb, 8, 0) ==
        doctest::Approx(0.5));
}

TEST_CASE("alignment_energy: hand-computed oblique case") {
  const auto net = linear_model({1.0, 1.0});
  const auto tb = span_e1(2);
  // IG = (1, -1), H = (0, -1), E = 1/2
  CHECK(basepoint::alignment_energy({1.0, 0.0}, {0.0, 1.0}, net, tb, 32, 0) ==
        doctest::Approx(0.5));
}

TEST_CASE("energy_gradient: zero at the minimum, +1 at the hand case") {
  const auto net = linear_model({1.0, 1.0});
  const auto tb = span_e1(2);
  const num::Vector x = {1.0, 0.0};

  const num::Vector at_min =
      basepoint::energy_gradient(x, {0.0, 0.0}, net, tb, 16, 0, 1e-4);
  CHECK(num::norm2(at_min) < 1e-8);

  // E(alpha) = alpha_2^2 / 2 here, so dE/dalpha_2 at (0,1) is 1
  const num::Vector g = basepoint::energy_gradient(x, {0.0, 1.0}, net, tb, 16, 0, 1e-4);
  CHECK(std::abs(g[0]) < 1e-6);
  CHECK(g[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("energy_gradient: halving h shrinks the error about fourfold") {
  std::mt19937_64 rng(26);
  const auto net = random_net(3, 8, 1, rng);
  const auto tb = span_e1(3);
  const num::Vector x = random_vector(3, rng);
  const num::Vector alpha = random_vector(3, rng);

  // reference from a much smaller step
  const num::Vector ref = basepoint::energy_gradient(x, alpha, net, tb, 16, 0, 1e-6);
  const num::Vector g1 = basepoint::energy_gradient(x, alpha, net, tb, 16, 0, 2e-2);
  const num::Vector g2 = basepoint::energy_gradient(x, alpha, net, tb, 16, 0, 1e-2);
  const double e1 = num::norm2(num::sub(g1, ref));
  const double e2 = num::norm2(num::sub(g2, ref));
  CHECK(e2 < e1 / 2.5);  // O(h^2): ideally ~4x
}

TEST_CASE("optimize_basepoint: converges on the analytic subspace/linear case") {
  const auto net = linear_model({1.0, 1.0});
  const auto tb = span_e1(2);
  const num::Vector x = {1.0, 0.0};

  basepoint::OptimizerConfig cfg;
  cfg.clip_lo = {-2.0, -2.0};
  cfg.clip_hi = {2.0, 2.0};
  cfg.quadrature_steps = 16;

  auto [alpha, trace] = basepoint::optimize_basepoint(x, net, tb, 0, cfg, {0.0, 1.0});
  CHECK(std::abs(alpha[1]) < 1e-3);
  CHECK(trace.status == basepoint::OptimizerStatus::converged);

  const attr::Attribution a = attr::integrated_gradients(net, x, alpha, 16, 0);
  CHECK(manifold::tangent_fraction(tb, a.values) >= 0.999);

  // E non-increasing over accepted iterates; separation respected throughout
  const double delta = cfg.separation_for_dim(2);
  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    CHECK(trace.rows[i].energy <= trace.rows[i - 1].energy);
    CHECK(trace.rows[i].separation >= delta);
  }
}

TEST_CASE("optimize_basepoint: immediate return when already converged") {
  const auto net = linear_model({1.0, 1.0});
  const auto tb = span_e1(2);
  basepoint::OptimizerConfig cfg;
  cfg.clip_lo = {-2.0, -2.0};
  cfg.clip_hi = {2.0, 2.0};
  // alpha already in the solution set (alpha_2 = 0, far from x)
  auto [alpha, trace] =
      basepoint::optimize_basepoint({1.0, 0.0}, net, tb, 0, cfg, {-1.0, 0.0});
  CHECK(trace.rows.size() == 1);
  CHECK(trace.status == basepoint::OptimizerStatus::converged);
  CHECK(alpha == num::Vector{-1.0, 0.0});
}

TEST_CASE("optimize_basepoint: alpha0 too close to x throws") {
  const auto net = linear_model({1.0, 1.0});
  const auto tb = span_e1(2);
  basepoint::OptimizerConfig cfg;
  CHECK_THROWS_AS(
      basepoint::optimize_basepoint({1.0, 0.0}, net, tb, 0, cfg, {1.0, 0.0}),
      InitTooCloseToInput);
}

TEST_CASE("necessary_condition_residuals: zero at aligned points, matches grad E") {
  const auto net = linear_model({1.0, 1.0});
  const auto tb = span_e1(2);
  const num::Vector x = {1.0, 0.0};

  const num::Vector at_zero =
      basepoint::necessary_condition_residuals(x, {0.0, 0.0}, net, tb, 16, 0, 1e-4);
  CHECK(num::norm2(at_zero) < 1e-10);

  const num::Vector r =
      basepoint::necessary_condition_residuals(x, {0.0, 1.0}, net, tb, 16, 0, 1e-4);
  CHECK(r[1] == doctest::Approx(1.0).epsilon(1e-6));

  // identity <H, d_i H> = d_i E, numerically, on smooth random nets
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 10; ++trial) {
    const auto rnet = random_net(3, 8, 1, rng);
    const auto rtb = span_e1(3);
    const num::Vector rx = random_vector(3, rng);
    const num::Vector ra = random_vector(3, rng);
    const num::Vector res =
        basepoint::necessary_condition_residuals(rx, ra, rnet, rtb, 8, 0, 1e-4);
    const num::Vector ge = basepoint::energy_gradient(rx, ra, rnet, rtb, 8, 0, 1e-4);
    CHECK(test_support::max_abs_diff(res, ge) < 1e-6);
  }
}

TEST_CASE("hessian_fd: quadratic energy gives the constant Hessian diag(0,1)") {
  const auto net = linear_model({1.0, 1.0});
  const auto tb = span_e1(2);
  const num::Matrix h =
      basepoint::hessian_fd({1.0, 0.0}, {0.0, 1.0}, net, tb, 16, 0, 1e-4);
  CHECK(std::abs(h(0, 0)) < 1e-4);
  CHECK(std::abs(h(0, 1)) < 1e-4);
  CHECK(h(1, 1) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(h(0, 1) == h(1, 0));  // symmetrized exactly
}

TEST_CASE("hessian_fd: dimension cap") {
  const auto net = linear_model(num::Vector(70, 1.0));
  manifold::TangentBasis tb = span_e1(70);
  CHECK_THROWS_AS(basepoint::hessian_fd(num::Vector(70, 0.5), num::Vector(70, 0.0), net,
                                        tb, 4, 0, 1e-4),
                  DimensionCapExceeded);
}

TEST_CASE("gershgorin_check: textbook verdicts") {
  num::Matrix pd(2, 2);
  pd(0, 0) = 2; pd(0, 1) = 1; pd(1, 0) = 1; pd(1, 1) = 2;
  CHECK(basepoint::gershgorin_check(pd) == basepoint::GershgorinVerdict::positive_definite);

  num::Matrix weak(2, 2);
  weak(0, 0) = 1; weak(0, 1) = 2; weak(1, 0) = 2; weak(1, 1) = 1;
  CHECK(basepoint::gershgorin_check(weak) == basepoint::GershgorinVerdict::inconclusive);

  num::Matrix eye(3, 3);
  for (int i = 0; i < 3; ++i) eye(std::size_t(i), std::size_t(i)) = 1.0;
  CHECK(basepoint::gershgorin_check(eye) == basepoint::GershgorinVerdict::positive_definite);

  num::Matrix asym(2, 2);
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(basepoint::gershgorin_check(asym), NotSymmetric);
}

TEST_CASE("gershgorin_check: positive verdicts always have positive spectra") {
  std::mt19937_64 rng(28);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int positives = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng() % 4;  // up to 5x5
    num::Matrix m(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i; j < k; ++j) {
        const double v = u(rng);
        m(i, j) = v;
        m(j, i) = v;
      }
    if (trial % 2) {
      // shift the diagonal so some trials become dominant
      for (std::size_t i = 0; i < k; ++i) m(i, i) += double(k) * 0.9;
    }
    if (basepoint::gershgorin_check(m) == basepoint::GershgorinVerdict::positive_definite) {
      ++positives;
      CHECK(min_eigenvalue(m) > 0.0);
    }
  }
  CHECK(positives > 20);  // the shifted half must actually exercise the verdict
}

TEST_CASE("diagnostics bundle reports energy, residuals and the verdict") {
  const auto net = linear_model({1.0, 1.0});
  const auto tb = span_e1(2);
  const auto diag =
      basepoint::compute_diagnostics({1.0, 0.0}, {0.0, 1.0}, net, tb, 16, 0, 1e-4);
  CHECK(diag.e_value == doctest::Approx(0.5));
  CHECK(diag.necessary_residuals[1] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(diag.hessian_available);
  // rank-deficient quadratic: Gershgorin cannot certify, by design
  CHECK(diag.gershgorin_verdict == basepoint::GershgorinVerdict::inconclusive);

  const std::string j = basepoint::diagnostics_to_json(diag);
  CHECK(j.find("\"e_value\"") != std::string::npos);
  CHECK(j.find("\"gershgorin_verdict\"") != std::string::npos);
  CHECK(j.find("inconclusive") != std::string::npos);
}

TEST_CASE("trace csv has the documented columns") {
  basepoint::OptimizerTrace trace;
  trace.rows.push_back({0, 0.5, 0.0, 1.0, 0.25});
  const std::string csv = basepoint::trace_to_csv(trace);
  CHECK(csv.rfind("iter,E,grad_norm,separation,mu\n", 0) == 0);
  CHECK(csv.find("0,0.5,0,1,0.25") != std::string::npos);
}
