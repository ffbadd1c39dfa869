#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "tangrad/nn.hpp"
#include "tangrad/numerics.hpp"

// Shared test helpers: independent finite-difference oracles, random
// generators and an IDX writer that does not share code with the loader.
namespace test_support {

using tangrad::num::Matrix;
using tangrad::num::Vector;

inline Vector random_vector(std::size_t d, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(d);
  for (double& x : v) x = u(rng);
  return v;
}

inline Vector random_unit(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(d);
  double n = 0.0;
  do {
    for (double& x : v) x = g(rng);
    n = tangrad::num::norm2(v);
  } while (n == 0.0);
  for (double& x : v) x /= n;
  return v;
}

inline tangrad::nn::DenseNetwork random_net(
    std::size_t in, std::size_t hidden, std::size_t out, std::mt19937_64& rng,
    tangrad::nn::Activation act = tangrad::nn::Activation::softplus) {
  return tangrad::nn::make_network(in, {hidden}, out, act,
                                   tangrad::nn::Activation::identity, rng);
}

// Central finite differences of F_target on the forward pass only.
inline Vector fd_input_gradient(const tangrad::nn::DenseNetwork& net, const Vector& x,
                                std::size_t target, double h = 1e-5) {
  Vector g(x.size(), 0.0);
  Vector p = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double fp = tangrad::nn::forward(net, p)[target];
    p[i] = x[i] - h;
    const double fm = tangrad::nn::forward(net, p)[target];
    p[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline Matrix fd_decoder_jacobian(const tangrad::nn::DenseNetwork& dec, const Vector& z,
                                  double h = 1e-5) {
  const std::size_t d = dec.output_dim();
  const std::size_t n = dec.input_dim();
  Matrix jac(d, n);
  Vector p = z;
  for (std::size_t j = 0; j < n; ++j) {
    p[j] = z[j] + h;
    const Vector fp = tangrad::nn::forward(dec, p);
    p[j] = z[j] - h;
    const Vector fm = tangrad::nn::forward(dec, p);
    p[j] = z[j];
    for (std::size_t r = 0; r < d; ++r) jac(r, j) = (fp[r] - fm[r]) / (2.0 * h);
  }
  return jac;
}

// Full orthonormal frame of R^d from a random Gaussian matrix.
inline tangrad::num::OrthonormalBasis random_rotation(std::size_t d,
                                                      std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vector> cols(d, Vector(d));
  for (auto& c : cols)
    for (double& v : c) v = g(rng);
  return tangrad::num::orthonormalize(cols);
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_error(const Vector& got, const Vector& want) {
  const double denom = std::max(tangrad::num::norm2(want), 1e-12);
  return tangrad::num::norm2(tangrad::num::sub(got, want)) / denom;
}

// ---- independent IDX writer (big-endian by hand) ---------------------------

inline void put_u32_be(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>((v >> 24) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>(v & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_idx_images(const std::string& path,
                             const std::vector<std::vector<std::uint8_t>>& images,
                             std::uint32_t rows, std::uint32_t cols,
                             std::uint32_t magic = 2051) {
  std::ofstream out(path, std::ios::binary);
  put_u32_be(out, magic);
  put_u32_be(out, std::uint32_t(images.size()));
  put_u32_be(out, rows);
  put_u32_be(out, cols);
  for (const auto& img : images)
    out.write(reinterpret_cast<const char*>(img.data()), std::streamsize(img.size()));
}

inline void write_idx_labels(const std::string& path,
                             const std::vector<std::uint8_t>& labels,
                             std::uint32_t magic = 2049) {
  std::ofstream out(path, std::ios::binary);
  put_u32_be(out, magic);
  put_u32_be(out, std::uint32_t(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), std::streamsize(labels.size()));
}

}  // namespace test_support
