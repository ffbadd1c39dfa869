#include <doctest.h>

#include <random>

#include "tangrad/errors.hpp"
#include "tangrad/numerics.hpp"
#include "test_support.hpp"

using namespace tangrad;
using test_support::random_vector;

namespace {

double max_gram_deviation(const num::OrthonormalBasis& q) {
  double worst = 0.0;
  for (std::size_t i = 0; i < q.count(); ++i)
    for (std::size_t j = 0; j < q.count(); ++j) {
      const double g = num::dot(q.vectors[i], q.vectors[j]);
      worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

double span_residual(const num::Vector& v, const std::vector<num::Vector>& basis) {
  num::Vector r = v;
  for (const num::Vector& b : basis) num::axpy(-num::dot(r, b), b, r);
  return num::norm2(r);
}

}  // namespace

TEST_CASE("orthonormalize: axis-aligned scaling") {
  const num::OrthonormalBasis q = num::orthonormalize({{2.0, 0.0}, {0.0, 3.0}});
  REQUIRE(q.count() == 2);
  CHECK(q.vectors[0][0] == doctest::Approx(1.0));
  CHECK(q.vectors[0][1] == doctest::Approx(0.0));
  CHECK(q.vectors[1][0] == doctest::Approx(0.0));
  CHECK(q.vectors[1][1] == doctest::Approx(1.0));
}

TEST_CASE("orthonormalize: near-duplicate column is dropped") {
  const num::OrthonormalBasis q = num::orthonormalize({{1.0, 0.0}, {1.0, 1e-15}});
  REQUIRE(q.count() == 1);
  CHECK(q.vectors[0][0] == doctest::Approx(1.0));
  CHECK(q.vectors[0][1] == doctest::Approx(0.0));
}

TEST_CASE("orthonormalize: oblique pair spans R^2 with identity Gram") {
  const num::OrthonormalBasis q = num::orthonormalize({{1.0, 1.0}, {1.0, 0.0}});
  REQUIRE(q.count() == 2);
  CHECK(max_gram_deviation(q) < 1e-10);
  // spans R^2: both standard vectors reconstruct
  CHECK(span_residual({1.0, 0.0}, q.vectors) < 1e-10);
  CHECK(span_residual({0.0, 1.0}, q.vectors) < 1e-10);
}

TEST_CASE("orthonormalize: all-degenerate input throws") {
  CHECK_THROWS_AS(num::orthonormalize({{0.0, 0.0}, {0.0, 0.0}}), AllColumnsDegenerate);
}

TEST_CASE("orthonormalize: Gram identity on random matrices") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 3 + rng() % 18;
    const std::size_t k = 1 + rng() % d;
    std::vector<num::Vector> cols;
    for (std::size_t c = 0; c < k; ++c) cols.push_back(random_vector(d, rng));
    const num::OrthonormalBasis q = num::orthonormalize(cols);
    CHECK(max_gram_deviation(q) < 1e-9);
    // span is preserved: original columns reconstruct from q
    for (const num::Vector& c : cols)
      CHECK(span_residual(c, q.vectors) < 1e-9 * std::max(1.0, num::norm2(c)));
  }
}

TEST_CASE("orthonormalize is idempotent up to span") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 4 + rng() % 12;
    std::vector<num::Vector> cols;
    for (std::size_t c = 0; c < 3; ++c) cols.push_back(random_vector(d, rng));
    const num::OrthonormalBasis q1 = num::orthonormalize(cols);
    const num::OrthonormalBasis q2 = num::orthonormalize(q1.vectors);
    REQUIRE(q2.count() == q1.count());
    for (const num::Vector& v : q1.vectors) CHECK(span_residual(v, q2.vectors) < 1e-9);
    for (const num::Vector& v : q2.vectors) CHECK(span_residual(v, q1.vectors) < 1e-9);
  }
}

TEST_CASE("null_space: single axis in R^3") {
  num::OrthonormalBasis b;
  b.ambient_dim = 3;
  b.vectors = {{1.0, 0.0, 0.0}};
  const num::OrthonormalBasis ns = num::null_space(b);
  REQUIRE(ns.count() == 2);
  for (const num::Vector& v : ns.vectors) CHECK(std::abs(v[0]) < 1e-10);
  CHECK(max_gram_deviation(ns) < 1e-10);
}

TEST_CASE("null_space: diagonal line in R^2 has the antidiagonal complement") {
  const double s = 1.0 / std::sqrt(2.0);
  num::OrthonormalBasis b;
  b.ambient_dim = 2;
  b.vectors = {{s, s}};
  const num::OrthonormalBasis ns = num::null_space(b);
  REQUIRE(ns.count() == 1);
  CHECK(std::abs(std::abs(ns.vectors[0][0]) - s) < 1e-12);
  CHECK(std::abs(ns.vectors[0][0] + ns.vectors[0][1]) < 1e-12);  // (1,-1)/sqrt2 up to sign
}

TEST_CASE("null_space: random 10-basis in R^64 completes to a full frame") {
  std::mt19937_64 rng(13);
  std::vector<num::Vector> cols;
  for (int c = 0; c < 10; ++c) cols.push_back(random_vector(64, rng));
  const num::OrthonormalBasis b = num::orthonormalize(cols);
  REQUIRE(b.count() == 10);
  const num::OrthonormalBasis ns = num::null_space(b);
  REQUIRE(ns.count() == 54);

  num::OrthonormalBasis combined;
  combined.ambient_dim = 64;
  combined.vectors = b.vectors;
  combined.vectors.insert(combined.vectors.end(), ns.vectors.begin(), ns.vectors.end());
  CHECK(max_gram_deviation(combined) < 1e-9);

  // completeness: random vectors reconstruct from the union
  for (int trial = 0; trial < 10; ++trial) {
    const num::Vector v = random_vector(64, rng);
    CHECK(span_residual(v, combined.vectors) < 1e-8);
  }
}

TEST_CASE("null_space: full-rank input throws") {
  num::OrthonormalBasis b;
  b.ambient_dim = 2;
  b.vectors = {{1.0, 0.0}, {0.0, 1.0}};
  CHECK_THROWS_AS(num::null_space(b), FullRankInput);
}

TEST_CASE("matvec and helpers validate dimensions") {
  num::Matrix m(2, 3);
  CHECK_THROWS_AS(num::matvec(m, {1.0, 2.0}), DimensionMismatch);
  CHECK_THROWS_AS(num::dot({1.0}, {1.0, 2.0}), DimensionMismatch);
  CHECK_THROWS_AS(num::hadamard({1.0}, {1.0, 2.0}), DimensionMismatch);
}
