#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tangrad/constants.hpp"
#include "tangrad/nn.hpp"
#include "tangrad/numerics.hpp"

// Base-point attribution methods: integrated gradients, generalized path
// methods, and the three no-base-point gradient explainers. Pure given an
// immutable network; random generators are caller-seeded, never global.
namespace tangrad::attr {

struct Attribution {
  num::Vector values;                     // length d
  std::string method;                     // canonical method tag
  std::size_t target = 0;                 // output index explained
  std::optional<num::Vector> base_point;  // present iff the method is a BAM
  int quadrature_steps = 0;               // 0 for non-path methods
};

// Ordered samples gamma(t_0) .. gamma(t_m) with gamma(t_0) the base point and
// gamma(t_m) the input.
struct PathSpec {
  std::vector<num::Vector> samples;

  bool degenerate() const;  // all samples equal
};

// (x - base) ⊙ midpoint-rule estimate of ∫ ∇F(base + t(x-base)) dt.
Attribution integrated_gradients(const nn::DenseNetwork& net, const num::Vector& x,
                                 const num::Vector& base,
                                 int steps = defaults::kQuadratureSteps,
                                 std::size_t target = 0);

// Per-coordinate sum over segments of ∇F(midpoint) ⊙ Δgamma. Equals
// integrated_gradients on the straight-line path with the same step count.
Attribution path_attribution(const nn::DenseNetwork& net, const PathSpec& path,
                             std::size_t target = 0);

// Straight line from base to x with m segments.
PathSpec straight_line_path(const num::Vector& base, const num::Vector& x, int segments);

Attribution gradient_explainer(const nn::DenseNetwork& net, const num::Vector& x,
                               std::size_t target = 0);

// Mean of ∇F over n_samples Gaussian perturbations x + N(0, sigma^2 I).
Attribution smoothgrad(const nn::DenseNetwork& net, const num::Vector& x,
                       std::size_t target = 0,
                       double sigma = defaults::kSmoothgradSigma,
                       int n_samples = defaults::kSmoothgradSamples,
                       std::uint64_t seed = 0);

Attribution input_times_gradient(const nn::DenseNetwork& net, const num::Vector& x,
                                 std::size_t target = 0);

}  // namespace tangrad::attr
