#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tangrad/numerics.hpp"

// Dataset ingestion (IDX image files), synthetic manifold-structured data
// and normalization. Loading is single-threaded; datasets are immutable
// afterwards and safe to share.
namespace tangrad::data {

struct Dataset {
  std::vector<num::Vector> points;          // all of length dim()
  std::optional<std::vector<int>> labels;   // same length as points when present
  num::Vector bounds_lo;                    // per-feature lower bound
  num::Vector bounds_hi;                    // per-feature upper bound
  std::string name;

  std::size_t size() const { return points.size(); }
  std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }
};

enum class SyntheticKind { subspace, sphere, gaussian_blobs };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::subspace;
  std::size_t ambient_dim = 0;   // d
  std::size_t intrinsic_dim = 0; // n < d; for gaussian_blobs: number of clusters
  std::size_t count = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

// Big-endian IDX files: magic 2051 for images (count, rows, cols), 2049 for
// labels. Pixels are scaled to [0,1]; feature bounds are [0,1].
Dataset load_idx(const std::string& images_path,
                 const std::optional<std::string>& labels_path = std::nullopt);

Dataset generate_synthetic(const SyntheticSpec& spec);

// Block-average pooling of square images; side length must divide by factor.
Dataset downscale(const Dataset& ds, std::size_t factor);

// JSON manifest naming a dataset: {"name", "images", "labels"?, "d", "bounds"?}.
Dataset load_manifest(const std::string& manifest_path);

// Tight per-feature min/max over the points.
void recompute_bounds(Dataset& ds);

}  // namespace tangrad::data
