#include "tangrad/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "tangrad/errors.hpp"

namespace tangrad::num {

Vector Matrix::col(std::size_t c) const {
  Vector out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::from_columns(const std::vector<Vector>& columns) {
  if (columns.empty()) return {};
  Matrix m(columns.front().size(), columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != m.rows)
      throw DimensionMismatch("from_columns: ragged column lengths");
    for (std::size_t r = 0; r < m.rows; ++r) m(r, c) = columns[c][r];
  }
  return m;
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

Vector add(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("add: length mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector sub(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("sub: length mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scaled(const Vector& a, double s) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

Vector hadamard(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("hadamard: length mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

void axpy(double a, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw DimensionMismatch("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vector matvec(const Matrix& m, const Vector& v) {
  if (m.cols != v.size()) throw DimensionMismatch("matvec: shape mismatch");
  Vector out(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double s = 0.0;
    const double* row = &m.entries[r * m.cols];
    for (std::size_t c = 0; c < m.cols; ++c) s += row[c] * v[c];
    out[r] = s;
  }
  return out;
}

bool all_finite(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_finite(const Matrix& m) { return all_finite(m.entries); }

namespace {

// Two projection passes; the second pass cleans up the rounding the first
// leaves behind when the residual is small.
void project_out(const std::vector<Vector>& basis, Vector& v) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const Vector& q : basis) axpy(-dot(v, q), q, v);
  }
}

}  // namespace

OrthonormalBasis orthonormalize(const std::vector<Vector>& columns, double rank_tol) {
  if (columns.empty()) throw AllColumnsDegenerate("orthonormalize: no columns");
  const std::size_t dim = columns.front().size();

  double max_norm = 0.0;
  for (const Vector& c : columns) {
    if (c.size() != dim) throw DimensionMismatch("orthonormalize: ragged columns");
    max_norm = std::max(max_norm, norm2(c));
  }
  const double drop_below = rank_tol * max_norm;

  OrthonormalBasis out;
  out.ambient_dim = dim;
  for (const Vector& c : columns) {
    Vector v = c;
    project_out(out.vectors, v);
    const double n = norm2(v);
    if (n <= drop_below || n == 0.0) continue;
    out.vectors.push_back(scaled(v, 1.0 / n));
  }
  if (out.vectors.empty())
    throw AllColumnsDegenerate("orthonormalize: every column was dropped");
  return out;
}

OrthonormalBasis orthonormalize(const Matrix& columns, double rank_tol) {
  std::vector<Vector> cols;
  cols.reserve(columns.cols);
  for (std::size_t c = 0; c < columns.cols; ++c) cols.push_back(columns.col(c));
  return orthonormalize(cols, rank_tol);
}

OrthonormalBasis null_space(const OrthonormalBasis& basis) {
  const std::size_t d = basis.ambient_dim;
  const std::size_t n = basis.count();
  if (n >= d) throw FullRankInput("null_space: basis already spans the ambient space");

  // Extend with residuals of standard basis vectors until the complement is
  // complete. A full scan always finds at least one usable residual because
  // the standard basis spans R^d.
  std::vector<Vector> accepted = basis.vectors;
  OrthonormalBasis out;
  out.ambient_dim = d;
  const double accept_above = 1e-8;
  while (out.count() < d - n) {
    const std::size_t before = out.count();
    for (std::size_t i = 0; i < d && out.count() < d - n; ++i) {
      Vector v(d, 0.0);
      v[i] = 1.0;
      project_out(accepted, v);
      const double nv = norm2(v);
      if (nv <= accept_above) continue;
      Vector q = scaled(v, 1.0 / nv);
      accepted.push_back(q);
      out.vectors.push_back(std::move(q));
    }
    if (out.count() == before)
      throw NumericError("null_space: failed to complete the basis");
  }
  return out;
}

bool is_orthonormal(const OrthonormalBasis& basis, double tol) {
  for (std::size_t i = 0; i < basis.count(); ++i) {
    if (basis.vectors[i].size() != basis.ambient_dim) return false;
    for (std::size_t j = i; j < basis.count(); ++j) {
      const double g = dot(basis.vectors[i], basis.vectors[j]);
      const double want = (i == j) ? 1.0 : 0.0;
      if (std::abs(g - want) > tol) return false;
    }
  }
  return true;
}

}  // namespace tangrad::num
