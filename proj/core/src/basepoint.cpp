#include "tangrad/basepoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tangrad/errors.hpp"

namespace tangrad::basepoint {

namespace {

void check_bounds(const num::Vector& lo, const num::Vector& hi, std::size_t d) {
  if (lo.size() != d || hi.size() != d)
    throw InvalidBounds("bounds must match the feature dimension");
  for (std::size_t i = 0; i < d; ++i)
    if (lo[i] > hi[i]) throw InvalidBounds("bounds with min > max at feature " + std::to_string(i));
}

num::Vector clipped(num::Vector v, const num::Vector& lo, const num::Vector& hi) {
  if (lo.empty()) return v;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
  return v;
}

double lp_distance(const num::Vector& a, const num::Vector& b, int p) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = std::abs(a[i] - b[i]);
    s += (p == 1) ? diff : diff * diff;
  }
  return (p == 1) ? s : std::sqrt(s);
}

}  // namespace

double OptimizerConfig::separation_for_dim(std::size_t d) const {
  return min_separation > 0.0 ? min_separation
                              : defaults::kSeparationScale * std::sqrt(double(d));
}

num::Vector baseline_basepoint(const BaselineSpec& spec, const num::Vector& x,
                               const data::Dataset& data, std::mt19937_64& rng) {
  const std::size_t d = x.size();
  switch (spec.method) {
    case BaselineMethod::zero:
      return num::Vector(d, 0.0);
    case BaselineMethod::max_distance: {
      if (data.points.empty())
        throw EmptyDataset("max_distance baseline needs a nonempty dataset");
      if (spec.p_norm != 1 && spec.p_norm != 2)
        throw InvalidSpec("max_distance baseline: p must be 1 or 2");
      std::size_t best = 0;
      double best_dist = -1.0;
      for (std::size_t i = 0; i < data.points.size(); ++i) {
        if (data.points[i].size() != d)
          throw DimensionMismatch("max_distance baseline: dataset dim mismatch");
        const double dist = lp_distance(x, data.points[i], spec.p_norm);
        if (dist > best_dist) {  // strict: first index wins ties
          best_dist = dist;
          best = i;
        }
      }
      return data.points[best];
    }
    case BaselineMethod::uniform: {
      check_bounds(spec.bounds_lo, spec.bounds_hi, d);
      num::Vector alpha(d);
      for (std::size_t i = 0; i < d; ++i) {
        std::uniform_real_distribution<double> u(spec.bounds_lo[i], spec.bounds_hi[i]);
        alpha[i] = u(rng);
      }
      return alpha;
    }
    case BaselineMethod::gaussian: {
      if (spec.sigma < 0.0) throw InvalidSpec("gaussian baseline: sigma must be >= 0");
      num::Vector alpha = x;
      if (spec.sigma > 0.0) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (double& v : alpha) v += spec.sigma * gauss(rng);
      }
      if (!spec.bounds_lo.empty()) {
        check_bounds(spec.bounds_lo, spec.bounds_hi, d);
        alpha = clipped(std::move(alpha), spec.bounds_lo, spec.bounds_hi);
      }
      return alpha;
    }
  }
  throw InvalidSpec("unknown baseline method");
}

num::Vector baseline_basepoint(const BaselineSpec& spec, const num::Vector& x,
                               const data::Dataset& data) {
  std::mt19937_64 rng(spec.seed);
  return baseline_basepoint(spec, x, data, rng);
}

double alignment_energy(const num::Vector& x, const num::Vector& alpha,
                        const nn::DenseNetwork& net, const manifold::TangentBasis& tb,
                        int quadrature_steps, std::size_t target) {
  const attr::Attribution a =
      attr::integrated_gradients(net, x, alpha, quadrature_steps, target);
  const num::Vector h = manifold::project_normal(tb, a.values);
  return 0.5 * num::dot(h, h);
}

num::Vector energy_gradient(const num::Vector& x, const num::Vector& alpha,
                            const nn::DenseNetwork& net, const manifold::TangentBasis& tb,
                            int quadrature_steps, std::size_t target, double h) {
  if (!(h > 0.0)) throw InvalidSpec("energy_gradient: h must be positive");
  num::Vector grad(alpha.size(), 0.0);
  num::Vector probe = alpha;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    probe[i] = alpha[i] + h;
    const double ep = alignment_energy(x, probe, net, tb, quadrature_steps, target);
    probe[i] = alpha[i] - h;
    const double em = alignment_energy(x, probe, net, tb, quadrature_steps, target);
    probe[i] = alpha[i];
    if (!std::isfinite(ep) || !std::isfinite(em))
      throw NonFiniteEnergy("energy_gradient: non-finite energy probe at coordinate " +
                            std::to_string(i));
    grad[i] = (ep - em) / (2.0 * h);
  }
  return grad;
}

namespace {

double safe_mu(const manifold::TangentBasis& tb, const num::Vector& v) {
  return num::dot(v, v) == 0.0 ? 0.0 : manifold::tangent_fraction(tb, v);
}

}  // namespace

std::pair<num::Vector, OptimizerTrace> optimize_basepoint(
    const num::Vector& x, const nn::DenseNetwork& net,
    const manifold::TangentBasis& tb, std::size_t target,
    const OptimizerConfig& cfg, const num::Vector& alpha0) {
  const std::size_t d = x.size();
  if (alpha0.size() != d) throw DimensionMismatch("optimize_basepoint: alpha0 dim mismatch");
  if (!(cfg.learning_rate > 0.0)) throw InvalidSpec("optimize_basepoint: learning_rate <= 0");
  const double delta = cfg.separation_for_dim(d);

  if (!cfg.clip_lo.empty()) {
    check_bounds(cfg.clip_lo, cfg.clip_hi, d);
    for (std::size_t i = 0; i < d; ++i)
      if (alpha0[i] < cfg.clip_lo[i] || alpha0[i] > cfg.clip_hi[i])
        throw InvalidBounds("optimize_basepoint: alpha0 outside the clip box");
  }
  if (num::norm2(num::sub(alpha0, x)) < delta)
    throw InitTooCloseToInput("optimize_basepoint: |alpha0 - x| below min separation " +
                              std::to_string(delta));

  num::Vector alpha = alpha0;

  // Push a candidate out of the forbidden ball around x, radially. When the
  // candidate lands exactly on x, reuse the previous iterate's direction
  // (always separated by at least delta).
  auto enforce_separation = [&](num::Vector cand, bool& floored) {
    num::Vector dir = num::sub(cand, x);
    double sep = num::norm2(dir);
    if (sep >= delta) return cand;
    floored = true;
    if (sep == 0.0) {
      dir = num::sub(alpha, x);
      sep = num::norm2(dir);
    }
    num::Vector out = x;
    num::axpy(delta * (1.0 + 1e-12) / sep, dir, out);
    return out;
  };

  auto energy_at = [&](const num::Vector& a) {
    const double e = alignment_energy(x, a, net, tb, cfg.quadrature_steps, target);
    if (!std::isfinite(e)) throw NonFiniteEnergy("optimize_basepoint: non-finite energy");
    return e;
  };

  double energy = energy_at(alpha);
  num::Vector best_alpha = alpha;
  double best_energy = energy;

  OptimizerTrace trace;
  auto record = [&](int iter, double grad_norm) {
    const attr::Attribution a =
        attr::integrated_gradients(net, x, alpha, cfg.quadrature_steps, target);
    trace.rows.push_back({iter, energy, grad_norm, num::norm2(num::sub(alpha, x)),
                          safe_mu(tb, a.values)});
  };
  record(0, 0.0);

  trace.status = OptimizerStatus::max_iters;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    if (best_energy < cfg.tol) {
      trace.status = OptimizerStatus::converged;
      break;
    }
    const num::Vector grad =
        energy_gradient(x, alpha, net, tb, cfg.quadrature_steps, target, cfg.fd_step);
    const double grad_norm = num::norm2(grad);

    double step = cfg.learning_rate;
    bool accepted = false;
    bool floored = false;
    for (int halving = 0; halving <= defaults::kStepHalvingsPerIter; ++halving) {
      num::Vector cand = alpha;
      num::axpy(-step, grad, cand);
      cand = clipped(std::move(cand), cfg.clip_lo, cfg.clip_hi);
      bool cand_floored = false;
      cand = enforce_separation(std::move(cand), cand_floored);
      const double cand_energy = energy_at(cand);
      if (cand_energy <= energy) {
        alpha = std::move(cand);
        energy = cand_energy;
        accepted = true;
        floored = cand_floored;
        break;
      }
      floored = cand_floored;
      step *= 0.5;
    }
    if (!accepted) {
      // No descent left at the smallest step: stalled, possibly on the
      // separation sphere around x.
      trace.status = floored ? OptimizerStatus::separation_floor : OptimizerStatus::max_iters;
      break;
    }
    record(iter, grad_norm);
    if (energy < best_energy) {
      best_energy = energy;
      best_alpha = alpha;
    }
    if (best_energy < cfg.tol) trace.status = OptimizerStatus::converged;
  }
  if (best_energy < cfg.tol) trace.status = OptimizerStatus::converged;

  return {best_alpha, trace};
}

std::pair<num::Vector, OptimizerTrace> optimize_basepoint(
    const num::Vector& x, const nn::DenseNetwork& net,
    const manifold::ManifoldProvider& provider, const OptimizerConfig& cfg,
    const num::Vector& alpha0) {
  const manifold::TangentBasis tb = provider.tangent_basis_at(x);
  const std::size_t target = nn::predicted_class(net, x);
  return optimize_basepoint(x, net, tb, target, cfg, alpha0);
}

num::Vector necessary_condition_residuals(const num::Vector& x, const num::Vector& alpha,
                                          const nn::DenseNetwork& net,
                                          const manifold::TangentBasis& tb,
                                          int quadrature_steps, std::size_t target,
                                          double h) {
  if (!(h > 0.0)) throw InvalidSpec("necessary_condition_residuals: h must be positive");

  auto normal_part = [&](const num::Vector& a) {
    const attr::Attribution att =
        attr::integrated_gradients(net, x, a, quadrature_steps, target);
    if (!num::all_finite(att.values))
      throw NonFiniteEnergy("necessary_condition_residuals: non-finite attribution");
    return manifold::project_normal(tb, att.values);
  };

  const num::Vector h0 = normal_part(alpha);
  num::Vector res(alpha.size(), 0.0);
  num::Vector probe = alpha;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    probe[i] = alpha[i] + h;
    const num::Vector hp = normal_part(probe);
    probe[i] = alpha[i] - h;
    const num::Vector hm = normal_part(probe);
    probe[i] = alpha[i];
    double s = 0.0;
    for (std::size_t j = 0; j < h0.size(); ++j) s += h0[j] * (hp[j] - hm[j]) / (2.0 * h);
    res[i] = s;
  }
  return res;
}

num::Matrix hessian_fd(const num::Vector& x, const num::Vector& alpha,
                       const nn::DenseNetwork& net, const manifold::TangentBasis& tb,
                       int quadrature_steps, std::size_t target, double h,
                       std::size_t dim_cap) {
  const std::size_t d = alpha.size();
  if (d > dim_cap)
    throw DimensionCapExceeded("hessian_fd: d=" + std::to_string(d) + " above cap " +
                               std::to_string(dim_cap));
  if (!(h > 0.0)) throw InvalidSpec("hessian_fd: h must be positive");

  auto energy_at = [&](const num::Vector& a) {
    const double e = alignment_energy(x, a, net, tb, quadrature_steps, target);
    if (!std::isfinite(e)) throw NonFiniteEnergy("hessian_fd: non-finite energy");
    return e;
  };

  const double e0 = energy_at(alpha);
  num::Matrix hess(d, d);
  num::Vector probe = alpha;
  for (std::size_t i = 0; i < d; ++i) {
    probe[i] = alpha[i] + h;
    const double ep = energy_at(probe);
    probe[i] = alpha[i] - h;
    const double em = energy_at(probe);
    probe[i] = alpha[i];
    hess(i, i) = (ep - 2.0 * e0 + em) / (h * h);
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      probe[i] = alpha[i] + h; probe[j] = alpha[j] + h;
      const double epp = energy_at(probe);
      probe[j] = alpha[j] - h;
      const double epm = energy_at(probe);
      probe[i] = alpha[i] - h; probe[j] = alpha[j] + h;
      const double emp = energy_at(probe);
      probe[j] = alpha[j] - h;
      const double emm = energy_at(probe);
      probe[i] = alpha[i]; probe[j] = alpha[j];
      const double v = (epp - epm - emp + emm) / (4.0 * h * h);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  // Symmetrize (exact for the off-diagonal stencil above, kept for clarity).
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const double s = 0.5 * (hess(i, j) + hess(j, i));
      hess(i, j) = s;
      hess(j, i) = s;
    }
  return hess;
}

GershgorinVerdict gershgorin_check(const num::Matrix& m, double symmetry_tol) {
  if (m.rows != m.cols) throw NotSymmetric("gershgorin_check: matrix is not square");
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = i + 1; j < m.cols; ++j)
      if (std::abs(m(i, j) - m(j, i)) > symmetry_tol)
        throw NotSymmetric("gershgorin_check: asymmetry above tolerance at (" +
                           std::to_string(i) + "," + std::to_string(j) + ")");

  for (std::size_t i = 0; i < m.rows; ++i) {
    double radius = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j)
      if (j != i) radius += std::abs(m(i, j));
    if (!(m(i, i) > radius)) return GershgorinVerdict::inconclusive;
  }
  return GershgorinVerdict::positive_definite;
}

AlignmentDiagnostics compute_diagnostics(const num::Vector& x, const num::Vector& alpha,
                                         const nn::DenseNetwork& net,
                                         const manifold::TangentBasis& tb,
                                         int quadrature_steps, std::size_t target,
                                         double h, std::size_t dim_cap) {
  AlignmentDiagnostics diag;
  diag.e_value = alignment_energy(x, alpha, net, tb, quadrature_steps, target);
  diag.necessary_residuals =
      necessary_condition_residuals(x, alpha, net, tb, quadrature_steps, target, h);
  if (alpha.size() <= dim_cap) {
    const num::Matrix hess =
        hessian_fd(x, alpha, net, tb, quadrature_steps, target, h, dim_cap);
    diag.gershgorin_verdict = gershgorin_check(hess, 1e-6);
    diag.hessian_available = true;
  }
  return diag;
}

std::string diagnostics_to_json(const AlignmentDiagnostics& diag) {
  nlohmann::json j;
  j["e_value"] = diag.e_value;
  j["necessary_residuals"] = diag.necessary_residuals;
  double max_abs = 0.0;
  for (double r : diag.necessary_residuals) max_abs = std::max(max_abs, std::abs(r));
  j["max_abs_residual"] = max_abs;
  j["gershgorin_verdict"] = verdict_name(diag.gershgorin_verdict);
  j["hessian_available"] = diag.hessian_available;
  return j.dump(2);
}

std::string trace_to_csv(const OptimizerTrace& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "iter,E,grad_norm,separation,mu\n";
  for (const auto& r : trace.rows)
    out << r.iter << "," << r.energy << "," << r.grad_norm << "," << r.separation << ","
        << r.mu << "\n";
  return out.str();
}

const char* status_name(OptimizerStatus s) {
  switch (s) {
    case OptimizerStatus::converged: return "converged";
    case OptimizerStatus::max_iters: return "max_iters";
    case OptimizerStatus::separation_floor: return "separation_floor";
  }
  return "max_iters";
}

const char* verdict_name(GershgorinVerdict v) {
  return v == GershgorinVerdict::positive_definite ? "positive_definite" : "inconclusive";
}

}  // namespace tangrad::basepoint
