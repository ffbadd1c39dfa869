#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tangrad/attribution.hpp"
#include "tangrad/data.hpp"
#include "tangrad/manifold.hpp"
#include "tangrad/nn.hpp"

// Base-point selection: the four standard baselines, the tangential alignment
// energy E(alpha) = 1/2 |pi_normal IG(x, alpha)|^2, its finite-difference
// descent, and the first/second-order alignment diagnostics. Optimizing
// distinct points is embarrassingly parallel; one run is sequential.
namespace tangrad::basepoint {

enum class BaselineMethod { zero, max_distance, uniform, gaussian };

struct BaselineSpec {
  BaselineMethod method = BaselineMethod::zero;
  int p_norm = 2;          // max_distance: 1 or 2
  double sigma = 0.0;      // gaussian
  num::Vector bounds_lo;   // uniform range / gaussian clip; empty = unbounded
  num::Vector bounds_hi;
  std::uint64_t seed = 0;
};

struct OptimizerConfig {
  double learning_rate = defaults::kLearningRate;
  int max_iters = defaults::kMaxIters;
  double fd_step = defaults::kFdStep;          // h for central differences
  double min_separation = 0.0;                 // delta; 0 = use 1e-3 * sqrt(d)
  num::Vector clip_lo;                         // valid data range; empty = unclipped
  num::Vector clip_hi;
  int quadrature_steps = defaults::kQuadratureSteps;
  double tol = defaults::kEnergyTol;           // convergence threshold on E

  double separation_for_dim(std::size_t d) const;
};

enum class OptimizerStatus { converged, max_iters, separation_floor };

struct OptimizerTrace {
  struct Row {
    int iter = 0;
    double energy = 0.0;
    double grad_norm = 0.0;   // gradient used to reach this iterate; 0 on row 0
    double separation = 0.0;  // |alpha - x|
    double mu = 0.0;          // tangent fraction of the current IG attribution
  };
  std::vector<Row> rows;
  OptimizerStatus status = OptimizerStatus::max_iters;
};

enum class GershgorinVerdict { positive_definite, inconclusive };

struct AlignmentDiagnostics {
  double e_value = 0.0;
  num::Vector necessary_residuals;  // <H, d_i H> per coordinate
  GershgorinVerdict gershgorin_verdict = GershgorinVerdict::inconclusive;
  bool hessian_available = false;
};

num::Vector baseline_basepoint(const BaselineSpec& spec, const num::Vector& x,
                               const data::Dataset& data, std::mt19937_64& rng);
// Convenience overload seeding the generator from spec.seed.
num::Vector baseline_basepoint(const BaselineSpec& spec, const num::Vector& x,
                               const data::Dataset& data);

// E(alpha) = 1/2 |pi_normal IG(x, alpha, m, target)|^2
double alignment_energy(const num::Vector& x, const num::Vector& alpha,
                        const nn::DenseNetwork& net, const manifold::TangentBasis& tb,
                        int quadrature_steps, std::size_t target);

// Central finite differences of E with respect to alpha.
num::Vector energy_gradient(const num::Vector& x, const num::Vector& alpha,
                            const nn::DenseNetwork& net, const manifold::TangentBasis& tb,
                            int quadrature_steps, std::size_t target, double h);

// Projected gradient descent on E over alpha, keeping |alpha - x| >= delta
// and alpha inside the clip box. Returns the best-energy iterate.
std::pair<num::Vector, OptimizerTrace> optimize_basepoint(
    const num::Vector& x, const nn::DenseNetwork& net,
    const manifold::ManifoldProvider& provider, const OptimizerConfig& cfg,
    const num::Vector& alpha0);

// Variant for a precomputed tangent basis and explicit target.
std::pair<num::Vector, OptimizerTrace> optimize_basepoint(
    const num::Vector& x, const nn::DenseNetwork& net,
    const manifold::TangentBasis& tb, std::size_t target,
    const OptimizerConfig& cfg, const num::Vector& alpha0);

// Component i = <H(alpha), [H(alpha + h e_i) - H(alpha - h e_i)] / 2h>.
// Matches energy_gradient up to finite-difference error.
num::Vector necessary_condition_residuals(const num::Vector& x, const num::Vector& alpha,
                                          const nn::DenseNetwork& net,
                                          const manifold::TangentBasis& tb,
                                          int quadrature_steps, std::size_t target,
                                          double h);

// Symmetrized central-difference Hessian of E at alpha. O(d^2) energy
// evaluations; refuses d above dim_cap.
num::Matrix hessian_fd(const num::Vector& x, const num::Vector& alpha,
                       const nn::DenseNetwork& net, const manifold::TangentBasis& tb,
                       int quadrature_steps, std::size_t target, double h,
                       std::size_t dim_cap = defaults::kHessianDimCap);

// positive_definite iff every diagonal entry strictly dominates its
// off-diagonal absolute row sum. Sufficient, not necessary.
GershgorinVerdict gershgorin_check(const num::Matrix& m,
                                   double symmetry_tol = defaults::kSymmetryTol);

AlignmentDiagnostics compute_diagnostics(const num::Vector& x, const num::Vector& alpha,
                                         const nn::DenseNetwork& net,
                                         const manifold::TangentBasis& tb,
                                         int quadrature_steps, std::size_t target,
                                         double h,
                                         std::size_t dim_cap = defaults::kHessianDimCap);

std::string diagnostics_to_json(const AlignmentDiagnostics& diag);
std::string trace_to_csv(const OptimizerTrace& trace);
const char* status_name(OptimizerStatus s);
const char* verdict_name(GershgorinVerdict v);

}  // namespace tangrad::basepoint
