#include "tangrad/manifold.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tangrad/errors.hpp"

namespace tangrad::manifold {

ManifoldProvider ManifoldProvider::subspace(const std::vector<num::Vector>& axes) {
  if (axes.empty()) throw InvalidSpec("subspace provider: no axes");
  num::OrthonormalBasis basis = num::orthonormalize(axes);
  if (basis.count() >= basis.ambient_dim)
    throw InvalidSpec("subspace provider: axes span the whole ambient space");
  return ManifoldProvider(Subspace{std::move(basis)});
}

ManifoldProvider ManifoldProvider::sphere(double radius) {
  if (!(radius > 0.0)) throw InvalidSpec("sphere provider: radius must be positive");
  return ManifoldProvider(Sphere{radius});
}

ManifoldProvider ManifoldProvider::decoder(nn::AutoencoderPair ae) {
  if (ae.encoder.layers.empty() || ae.decoder.layers.empty())
    throw InvalidSpec("decoder provider: empty autoencoder");
  if (ae.latent_dim() >= ae.decoder.output_dim())
    throw InvalidSpec("decoder provider: latent dim must be below ambient dim");
  return ManifoldProvider(Decoder{std::make_shared<const nn::AutoencoderPair>(std::move(ae))});
}

ManifoldProvider ManifoldProvider::from_file(const std::string& path) {
  num::OrthonormalBasis basis = load_tangent_basis(path);
  if (basis.count() >= basis.ambient_dim)
    throw FileFormatError("basis file: tangent dim must be below ambient dim");
  return ManifoldProvider(FileBasis{std::move(basis)});
}

TangentBasis ManifoldProvider::tangent_basis_at(const num::Vector& x) const {
  TangentBasis tb;
  tb.point = x;
  if (const auto* s = std::get_if<Subspace>(&impl_)) {
    if (x.size() != s->basis.ambient_dim)
      throw DimensionMismatch("tangent_basis_at: point dim mismatch");
    tb.basis = s->basis;
    return tb;
  }
  if (std::get_if<Sphere>(&impl_)) {
    const double r = num::norm2(x);
    if (r == 0.0)
      throw DegenerateJacobian("sphere provider: tangent plane undefined at the origin");
    num::OrthonormalBasis radial;
    radial.ambient_dim = x.size();
    radial.vectors.push_back(num::scaled(x, 1.0 / r));
    tb.basis = num::null_space(radial);
    return tb;
  }
  if (const auto* dprov = std::get_if<Decoder>(&impl_)) {
    const nn::AutoencoderPair& ae = *dprov->ae;
    const num::Vector z = nn::forward(ae.encoder, x);
    const num::Matrix jac = nn::decoder_jacobian(ae.decoder, z);
    try {
      tb.basis = num::orthonormalize(jac);
    } catch (const AllColumnsDegenerate&) {
      throw DegenerateJacobian("decoder provider: Jacobian has rank 0");
    }
    return tb;
  }
  const auto& f = std::get<FileBasis>(impl_);
  if (x.size() != f.basis.ambient_dim)
    throw DimensionMismatch("tangent_basis_at: point dim mismatch");
  tb.basis = f.basis;
  return tb;
}

std::string ManifoldProvider::kind() const {
  if (std::get_if<Subspace>(&impl_)) return "subspace";
  if (std::get_if<Sphere>(&impl_)) return "sphere";
  if (std::get_if<Decoder>(&impl_)) return "decoder";
  return "file";
}

num::Vector project_tangent(const TangentBasis& tb, const num::Vector& v) {
  if (v.size() != tb.ambient_dim())
    throw DimensionMismatch("project_tangent: vector dim mismatch");
  num::Vector out(v.size(), 0.0);
  for (const num::Vector& tau : tb.basis.vectors) num::axpy(num::dot(v, tau), tau, out);
  return out;
}

num::Vector project_normal(const TangentBasis& tb, const num::Vector& v) {
  return num::sub(v, project_tangent(tb, v));
}

double tangent_fraction(const TangentBasis& tb, const num::Vector& v) {
  const double vv = num::dot(v, v);
  if (vv == 0.0) throw ZeroVector("tangent_fraction: mu is undefined for the zero vector");
  double pp = 0.0;
  for (const num::Vector& tau : tb.basis.vectors) {
    const double c = num::dot(v, tau);
    pp += c * c;
  }
  const double mu = pp / vv;
  return mu < 0.0 ? 0.0 : (mu > 1.0 ? 1.0 : mu);
}

double norm_fraction(const TangentBasis& tb, const num::Vector& v) {
  return std::sqrt(tangent_fraction(tb, v));
}

void save_tangent_basis(const num::OrthonormalBasis& basis, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "TGTB " << basis.ambient_dim << " " << basis.count() << "\n";
  out.precision(17);
  for (const num::Vector& v : basis.vectors) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << " ";
      out << v[i];
    }
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

num::OrthonormalBasis load_tangent_basis(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string magic;
  std::size_t d = 0, n = 0;
  if (!(in >> magic >> d >> n)) throw FileFormatError("basis file: bad header");
  if (magic != "TGTB") throw BadMagic("basis file: expected TGTB header");
  if (d == 0 || n == 0 || n > d) throw FileFormatError("basis file: invalid dims");

  num::OrthonormalBasis basis;
  basis.ambient_dim = d;
  for (std::size_t r = 0; r < n; ++r) {
    num::Vector v(d);
    for (std::size_t c = 0; c < d; ++c) {
      if (!(in >> v[c]))
        throw FileFormatError("basis file: truncated at row " + std::to_string(r));
    }
    basis.vectors.push_back(std::move(v));
  }
  if (!num::all_finite(num::Matrix::from_columns(basis.vectors)))
    throw FileFormatError("basis file: non-finite entries");

  // Accept a slightly off-orthonormal file as-is; repair anything worse.
  if (!num::is_orthonormal(basis, defaults::kBasisRevalidateTol)) {
    num::OrthonormalBasis fixed = num::orthonormalize(basis.vectors);
    if (fixed.count() != n)
      throw FileFormatError("basis file: rows are not linearly independent");
    basis = std::move(fixed);
  }
  return basis;
}

}  // namespace tangrad::manifold
