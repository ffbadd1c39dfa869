#pragma once

#include <cstddef>

// Default tolerances and hyperparameters, collected in one place.
// Every public operation that uses one of these accepts an override.
namespace tangrad::defaults {

// numerics
inline constexpr double kRankTol = 1e-10;            // column drop, relative to largest column norm
inline constexpr double kOrthoTol = 1e-10;           // orthonormality validation
inline constexpr double kBasisRevalidateTol = 1e-8;  // file-loaded bases re-orthonormalized beyond this

// attribution
inline constexpr int kQuadratureSteps = 64;          // midpoint-rule samples for IG
inline constexpr double kSmoothgradSigma = 0.02;
inline constexpr int kSmoothgradSamples = 25;

// base-point optimizer
inline constexpr double kLearningRate = 0.1;
inline constexpr int kMaxIters = 200;
inline constexpr double kEnergyTol = 1e-8;           // convergence threshold on E
inline constexpr double kFdStep = 1e-4;              // central-difference step h
inline constexpr double kSeparationScale = 1e-3;     // min separation delta = scale * sqrt(d)
inline constexpr int kHessianDimCap = 64;            // hessian_fd refuses larger d
inline constexpr double kSymmetryTol = 1e-8;         // gershgorin_check symmetry requirement
inline constexpr int kStepHalvingsPerIter = 10;

// training
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// evaluation / reporting
inline constexpr int kHistogramBins = 40;
inline constexpr std::size_t kSampleSize = 200;

}  // namespace tangrad::defaults
