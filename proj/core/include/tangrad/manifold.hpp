#pragma once

#include <memory>
#include <string>
#include <variant>

#include "tangrad/nn.hpp"
#include "tangrad/numerics.hpp"

// Tangent-space providers and the projection / alignment-measure machinery.
// Everything here is pure, immutable and thread-safe.
namespace tangrad::manifold {

// Orthonormal basis of the tangent space at a base point x.
struct TangentBasis {
  num::Vector point;
  num::OrthonormalBasis basis;

  std::size_t ambient_dim() const { return basis.ambient_dim; }
  std::size_t tangent_dim() const { return basis.count(); }
};

// Sources of tangent bases: a fixed linear subspace, the tangent plane of a
// centered sphere, a trained decoder's Jacobian span, or a basis file.
class ManifoldProvider {
 public:
  static ManifoldProvider subspace(const std::vector<num::Vector>& axes);
  static ManifoldProvider sphere(double radius);
  static ManifoldProvider decoder(nn::AutoencoderPair ae);
  static ManifoldProvider from_file(const std::string& path);

  TangentBasis tangent_basis_at(const num::Vector& x) const;
  std::string kind() const;

 private:
  struct Subspace { num::OrthonormalBasis basis; };
  struct Sphere { double radius; };
  struct Decoder { std::shared_ptr<const nn::AutoencoderPair> ae; };
  struct FileBasis { num::OrthonormalBasis basis; };

  using Impl = std::variant<Subspace, Sphere, Decoder, FileBasis>;
  explicit ManifoldProvider(Impl impl) : impl_(std::move(impl)) {}
  Impl impl_;
};

// pi_x(v) = sum_l <v, tau_l> tau_l
num::Vector project_tangent(const TangentBasis& tb, const num::Vector& v);

// v - pi_x(v)
num::Vector project_normal(const TangentBasis& tb, const num::Vector& v);

// mu_x(v) = |pi_x v|^2 / |v|^2 in [0,1]; throws ZeroVector when |v| = 0.
double tangent_fraction(const TangentBasis& tb, const num::Vector& v);

// |pi_x v| / |v| = sqrt(mu)
double norm_fraction(const TangentBasis& tb, const num::Vector& v);

// Text format: header "TGTB d n", then n lines of d space-separated decimals.
void save_tangent_basis(const num::OrthonormalBasis& basis, const std::string& path);
num::OrthonormalBasis load_tangent_basis(const std::string& path);

}  // namespace tangrad::manifold
