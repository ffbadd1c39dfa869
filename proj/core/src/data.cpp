#include "tangrad/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "tangrad/errors.hpp"

namespace tangrad::data {

namespace {

constexpr std::uint32_t kImagesMagic = 2051;
constexpr std::uint32_t kLabelsMagic = 2049;

std::uint32_t read_u32_be(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw TruncatedFile("IDX: truncated while reading " + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  return in;
}

std::vector<int> load_idx_labels(const std::string& path) {
  std::ifstream in = open_binary(path);
  const std::uint32_t magic = read_u32_be(in, "label magic");
  if (magic != kLabelsMagic)
    throw BadMagic("IDX labels: expected magic 2049, got " + std::to_string(magic));
  const std::uint32_t count = read_u32_be(in, "label count");
  std::vector<int> labels(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    char b;
    if (!in.read(&b, 1)) throw TruncatedFile("IDX labels: truncated payload");
    labels[i] = static_cast<unsigned char>(b);
  }
  return labels;
}

}  // namespace

Dataset load_idx(const std::string& images_path,
                 const std::optional<std::string>& labels_path) {
  std::ifstream in = open_binary(images_path);
  const std::uint32_t magic = read_u32_be(in, "image magic");
  if (magic != kImagesMagic)
    throw BadMagic("IDX images: expected magic 2051, got " + std::to_string(magic));
  const std::uint32_t count = read_u32_be(in, "image count");
  const std::uint32_t rows = read_u32_be(in, "rows");
  const std::uint32_t cols = read_u32_be(in, "cols");
  const std::size_t d = std::size_t(rows) * cols;

  Dataset ds;
  ds.name = std::filesystem::path(images_path).stem().string();
  ds.points.reserve(count);
  std::vector<unsigned char> pix(d);
  for (std::uint32_t i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char*>(pix.data()), std::streamsize(d)))
      throw TruncatedFile("IDX images: truncated payload at image " + std::to_string(i));
    num::Vector p(d);
    for (std::size_t j = 0; j < d; ++j) p[j] = pix[j] / 255.0;
    ds.points.push_back(std::move(p));
  }
  ds.bounds_lo.assign(d, 0.0);
  ds.bounds_hi.assign(d, 1.0);

  if (labels_path) {
    std::vector<int> labels = load_idx_labels(*labels_path);
    if (labels.size() != ds.points.size())
      throw CountMismatch("IDX: " + std::to_string(ds.points.size()) + " images vs " +
                          std::to_string(labels.size()) + " labels");
    ds.labels = std::move(labels);
  }
  return ds;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  const std::size_t d = spec.ambient_dim;
  const std::size_t n = spec.intrinsic_dim;
  if (d == 0 || n == 0 || n >= d || spec.count == 0 || spec.noise < 0.0)
    throw InvalidSpec("generate_synthetic: need 0 < n < d, count >= 1, noise >= 0");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset ds;
  ds.points.reserve(spec.count);

  switch (spec.kind) {
    case SyntheticKind::subspace: {
      ds.name = "synthetic_subspace";
      for (std::size_t i = 0; i < spec.count; ++i) {
        num::Vector p(d, 0.0);
        for (std::size_t j = 0; j < n; ++j) p[j] = unit(rng);
        if (spec.noise > 0.0)
          for (std::size_t j = n; j < d; ++j) p[j] = spec.noise * gauss(rng);
        ds.points.push_back(std::move(p));
      }
      break;
    }
    case SyntheticKind::sphere: {
      ds.name = "synthetic_sphere";
      for (std::size_t i = 0; i < spec.count; ++i) {
        num::Vector p(d, 0.0);
        double s = 0.0;
        for (std::size_t j = 0; j <= n; ++j) {
          p[j] = gauss(rng);
          s += p[j] * p[j];
        }
        const double inv = 1.0 / std::sqrt(s);
        for (std::size_t j = 0; j <= n; ++j) p[j] *= inv;
        if (spec.noise > 0.0)
          for (std::size_t j = 0; j < d; ++j) p[j] += spec.noise * gauss(rng);
        ds.points.push_back(std::move(p));
      }
      break;
    }
    case SyntheticKind::gaussian_blobs: {
      ds.name = "synthetic_blobs";
      const std::size_t clusters = n;
      std::vector<num::Vector> centers(clusters);
      for (auto& c : centers) {
        c.resize(d);
        for (auto& v : c) v = 2.0 * unit(rng);
      }
      std::vector<int> labels;
      labels.reserve(spec.count);
      for (std::size_t i = 0; i < spec.count; ++i) {
        const std::size_t c = i % clusters;
        num::Vector p = centers[c];
        for (auto& v : p) v += spec.noise * gauss(rng);
        ds.points.push_back(std::move(p));
        labels.push_back(int(c));
      }
      ds.labels = std::move(labels);
      break;
    }
  }
  recompute_bounds(ds);
  return ds;
}

Dataset downscale(const Dataset& ds, std::size_t factor) {
  if (factor == 0) throw NotDivisible("downscale: factor must be positive");
  const std::size_t d = ds.dim();
  const auto side = std::size_t(std::lround(std::sqrt(double(d))));
  if (side * side != d)
    throw NotDivisible("downscale: dimension " + std::to_string(d) + " is not a square image");
  if (side % factor != 0)
    throw NotDivisible("downscale: side " + std::to_string(side) +
                       " not divisible by " + std::to_string(factor));

  const std::size_t out_side = side / factor;
  Dataset out;
  out.name = ds.name + "_ds" + std::to_string(factor);
  out.labels = ds.labels;
  out.points.reserve(ds.size());
  for (const num::Vector& p : ds.points) {
    num::Vector q(out_side * out_side, 0.0);
    for (std::size_t r = 0; r < out_side; ++r) {
      for (std::size_t c = 0; c < out_side; ++c) {
        double s = 0.0;
        for (std::size_t dr = 0; dr < factor; ++dr)
          for (std::size_t dc = 0; dc < factor; ++dc)
            s += p[(r * factor + dr) * side + (c * factor + dc)];
        q[r * out_side + c] = s / double(factor * factor);
      }
    }
    out.points.push_back(std::move(q));
  }
  // Block means stay inside the per-image value range.
  const double lo = *std::min_element(ds.bounds_lo.begin(), ds.bounds_lo.end());
  const double hi = *std::max_element(ds.bounds_hi.begin(), ds.bounds_hi.end());
  out.bounds_lo.assign(out_side * out_side, lo);
  out.bounds_hi.assign(out_side * out_side, hi);
  return out;
}

Dataset load_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest: " + manifest_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FileFormatError("manifest parse error: " + std::string(e.what()));
  }
  if (!j.contains("images")) throw FileFormatError("manifest: missing \"images\" key");

  const auto base = std::filesystem::path(manifest_path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  std::optional<std::string> labels;
  if (j.contains("labels")) labels = resolve(j["labels"].get<std::string>());
  Dataset ds = load_idx(resolve(j["images"].get<std::string>()), labels);
  if (j.contains("name")) ds.name = j["name"].get<std::string>();
  if (j.contains("d") && j["d"].get<std::size_t>() != ds.dim())
    throw CountMismatch("manifest: declared d=" + j["d"].dump() + " but images have d=" +
                        std::to_string(ds.dim()));
  if (j.contains("bounds")) {
    const auto& b = j["bounds"];
    if (!b.is_array() || b.size() != 2) throw FileFormatError("manifest: bounds must be [lo, hi]");
    ds.bounds_lo.assign(ds.dim(), b[0].get<double>());
    ds.bounds_hi.assign(ds.dim(), b[1].get<double>());
  }
  return ds;
}

void recompute_bounds(Dataset& ds) {
  const std::size_t d = ds.dim();
  ds.bounds_lo.assign(d, 0.0);
  ds.bounds_hi.assign(d, 0.0);
  if (ds.points.empty()) return;
  ds.bounds_lo = ds.points.front();
  ds.bounds_hi = ds.points.front();
  for (const num::Vector& p : ds.points) {
    for (std::size_t i = 0; i < d; ++i) {
      ds.bounds_lo[i] = std::min(ds.bounds_lo[i], p[i]);
      ds.bounds_hi[i] = std::max(ds.bounds_hi[i], p[i]);
    }
  }
}

}  // namespace tangrad::data
