#include "tangrad/attribution.hpp"

#include <random>

#include "tangrad/errors.hpp"

namespace tangrad::attr {

bool PathSpec::degenerate() const {
  if (samples.size() < 2) return true;
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i] != samples.front()) return false;
  return true;
}

Attribution integrated_gradients(const nn::DenseNetwork& net, const num::Vector& x,
                                 const num::Vector& base, int steps, std::size_t target) {
  if (x.size() != base.size() || x.size() != net.input_dim())
    throw DimensionMismatch("integrated_gradients: x/base/network dims disagree");
  if (steps < 1) throw InvalidSpec("integrated_gradients: steps must be >= 1");

  const num::Vector delta = num::sub(x, base);
  num::Vector integral(x.size(), 0.0);
  for (int k = 0; k < steps; ++k) {
    const double t = (k + 0.5) / double(steps);
    num::Vector p = base;
    num::axpy(t, delta, p);
    num::axpy(1.0, nn::input_gradient(net, p, target), integral);
  }
  for (double& g : integral) g /= double(steps);

  Attribution a;
  a.values = num::hadamard(delta, integral);
  a.method = "integrated_gradients";
  a.target = target;
  a.base_point = base;
  a.quadrature_steps = steps;
  return a;
}

Attribution path_attribution(const nn::DenseNetwork& net, const PathSpec& path,
                             std::size_t target) {
  if (path.samples.size() < 2)
    throw DegeneratePath("path_attribution: need at least 2 samples");
  if (path.degenerate())
    throw DegeneratePath("path_attribution: all path samples are equal");
  const std::size_t d = path.samples.front().size();
  if (d != net.input_dim())
    throw DimensionMismatch("path_attribution: path/network dims disagree");

  num::Vector values(d, 0.0);
  for (std::size_t k = 0; k + 1 < path.samples.size(); ++k) {
    const num::Vector& a = path.samples[k];
    const num::Vector& b = path.samples[k + 1];
    if (a.size() != d || b.size() != d)
      throw DimensionMismatch("path_attribution: ragged path samples");
    num::Vector mid(d);
    for (std::size_t i = 0; i < d; ++i) mid[i] = 0.5 * (a[i] + b[i]);
    const num::Vector g = nn::input_gradient(net, mid, target);
    for (std::size_t i = 0; i < d; ++i) values[i] += g[i] * (b[i] - a[i]);
  }

  Attribution out;
  out.values = std::move(values);
  out.method = "path";
  out.target = target;
  out.base_point = path.samples.front();
  out.quadrature_steps = int(path.samples.size()) - 1;
  return out;
}

PathSpec straight_line_path(const num::Vector& base, const num::Vector& x, int segments) {
  if (base.size() != x.size())
    throw DimensionMismatch("straight_line_path: endpoint dims disagree");
  if (segments < 1) throw InvalidSpec("straight_line_path: segments must be >= 1");
  PathSpec path;
  path.samples.reserve(std::size_t(segments) + 1);
  for (int k = 0; k <= segments; ++k) {
    const double t = double(k) / double(segments);
    num::Vector p = base;
    num::axpy(t, num::sub(x, base), p);
    path.samples.push_back(std::move(p));
  }
  return path;
}

Attribution gradient_explainer(const nn::DenseNetwork& net, const num::Vector& x,
                               std::size_t target) {
  Attribution a;
  a.values = nn::input_gradient(net, x, target);
  a.method = "gradient";
  a.target = target;
  return a;
}

Attribution smoothgrad(const nn::DenseNetwork& net, const num::Vector& x,
                       std::size_t target, double sigma, int n_samples,
                       std::uint64_t seed) {
  if (sigma < 0.0) throw InvalidSpec("smoothgrad: sigma must be >= 0");
  if (n_samples < 1) throw InvalidSpec("smoothgrad: n_samples must be >= 1");

  Attribution a;
  a.method = "smoothgrad";
  a.target = target;
  if (sigma == 0.0) {
    // All perturbations vanish; the mean is the plain gradient, bit for bit.
    a.values = nn::input_gradient(net, x, target);
    return a;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  num::Vector sum(x.size(), 0.0);
  for (int k = 0; k < n_samples; ++k) {
    num::Vector p = x;
    for (double& v : p) v += gauss(rng);
    num::axpy(1.0, nn::input_gradient(net, p, target), sum);
  }
  for (double& v : sum) v /= double(n_samples);
  a.values = std::move(sum);
  return a;
}

Attribution input_times_gradient(const nn::DenseNetwork& net, const num::Vector& x,
                                 std::size_t target) {
  Attribution a;
  a.values = num::hadamard(x, nn::input_gradient(net, x, target));
  a.method = "input_times_gradient";
  a.target = target;
  return a;
}

}  // namespace tangrad::attr
