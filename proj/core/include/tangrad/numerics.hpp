#pragma once

#include <cstddef>
#include <vector>

#include "tangrad/constants.hpp"

// Dense vector/matrix arithmetic, orthonormalization and null-space
// computation. All operations are pure; values are immutable once built and
// safe to share across threads.
namespace tangrad::num {

using Vector = std::vector<double>;

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> entries;  // rows * cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), entries(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return entries[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return entries[r * cols + c]; }

  Vector col(std::size_t c) const;
  static Matrix from_columns(const std::vector<Vector>& columns);
};

// k orthonormal vectors in R^d: <v_i, v_j> = delta_ij within kOrthoTol.
struct OrthonormalBasis {
  std::size_t ambient_dim = 0;
  std::vector<Vector> vectors;

  std::size_t count() const { return vectors.size(); }
};

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scaled(const Vector& a, double s);
Vector hadamard(const Vector& a, const Vector& b);
void axpy(double a, const Vector& x, Vector& y);  // y += a * x

Vector matvec(const Matrix& m, const Vector& v);

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

// Span-preserving orthonormalization (modified Gram-Schmidt with
// reorthogonalization). Columns whose residual norm falls below
// rank_tol * max column norm are dropped, so rank deficiency reduces the
// count. Throws AllColumnsDegenerate if nothing survives.
OrthonormalBasis orthonormalize(const Matrix& columns,
                                double rank_tol = defaults::kRankTol);
OrthonormalBasis orthonormalize(const std::vector<Vector>& columns,
                                double rank_tol = defaults::kRankTol);

// Orthonormal basis of the orthogonal complement, computed by extending the
// input with residuals of the standard basis (complete-then-filter).
// Throws FullRankInput when basis.count() == ambient_dim.
OrthonormalBasis null_space(const OrthonormalBasis& basis);

bool is_orthonormal(const OrthonormalBasis& basis,
                    double tol = defaults::kOrthoTol);

}  // namespace tangrad::num
