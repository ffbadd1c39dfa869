#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tangrad/basepoint.hpp"
#include "tangrad/data.hpp"
#include "tangrad/manifold.hpp"
#include "tangrad/nn.hpp"

// Experiment orchestration: per-method mu distributions, the sqrt(n/d)
// random-vector reference, attribution galleries, CSV/SVG emission. Work is
// deterministic given the config seed; CSV rows are ordered by point_id then
// method name so output never depends on scheduling.
namespace tangrad::eval {

enum class Metric { mu, norm_fraction };

struct DatasetSpec {
  std::string kind = "synthetic";  // synthetic | idx | manifest
  data::SyntheticSpec synthetic;
  std::string images_path;
  std::string labels_path;
  std::string manifest_path;
  std::size_t downscale_factor = 1;
};

struct ProviderSpec {
  std::string kind = "subspace";  // subspace | sphere | decoder | file
  std::size_t subspace_dim = 0;   // span of the leading coordinate axes
  double sphere_radius = 1.0;
  std::string basis_file;
  std::string encoder_path;  // decoder provider, pre-trained
  std::string decoder_path;
  bool train = false;        // decoder provider, train on the dataset
  std::size_t latent_dim = 0;
  nn::TrainConfig train_cfg;
};

struct ModelSpec {
  std::string kind = "linear";  // linear | load | train
  std::vector<num::Vector> linear_weights;  // rows = outputs; empty -> seeded
  std::uint64_t linear_seed = 0;
  std::string path;
  nn::TrainConfig train_cfg;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  ProviderSpec provider;
  ModelSpec model;
  std::vector<std::string> methods;  // ig_zero, ig_max_distance, ig_uniform,
                                     // ig_gaussian, ig_tangential, gradient,
                                     // smoothgrad, input_times_gradient, random
  std::size_t sample_size = defaults::kSampleSize;
  std::uint64_t seed = 0;
  int quadrature_steps = defaults::kQuadratureSteps;
  double smoothgrad_sigma = defaults::kSmoothgradSigma;
  int smoothgrad_samples = defaults::kSmoothgradSamples;
  double gaussian_sigma = 0.25;  // Eq-17 baseline noise scale
  int max_distance_p = 2;
  basepoint::OptimizerConfig optimizer;
  std::string out_dir = "out";
  Metric metric = Metric::mu;
  int histogram_bins = defaults::kHistogramBins;
  bool kde_overlay = false;
};

struct MetricsRecord {
  std::size_t point_id = 0;
  std::string method;
  std::size_t target = 0;
  double mu = 0.0;
  double norm_fraction = 0.0;
  std::optional<double> e_value;  // BAMs only
  double wall_time_ms = 0.0;      // not part of the deterministic CSV
};

struct AttributionRecord {
  MetricsRecord metrics;
  num::Vector values;
  std::optional<num::Vector> base_point;
};

struct SummaryRow {
  std::string method;
  std::size_t count = 0;
  double mean_mu = 0.0;
  double median_mu = 0.0;
  double mean_norm_fraction = 0.0;
  double median_norm_fraction = 0.0;
  double frac_above_reference = 0.0;  // share of points with norm_fraction > sqrt(n/d)
};

struct ReportBundle {
  std::string metrics_csv_path;
  std::string summary_csv_path;
  std::vector<std::string> histogram_svg_paths;
  std::vector<SummaryRow> summary;
  double reference = 0.0;  // sqrt(n/d)
  std::size_t tangent_dim = 0;
  std::size_t ambient_dim = 0;
};

// Materialized experiment: dataset loaded, model and provider built.
struct Workbench {
  data::Dataset dataset;
  nn::DenseNetwork model;
  std::optional<manifold::ManifoldProvider> provider;
  std::optional<nn::AutoencoderPair> autoencoder;  // when the provider trained one
};

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& base_dir);

Workbench materialize(const ExperimentConfig& cfg);

// One attribution + metrics row. Derives any randomness from
// (cfg.seed, point_id, method) so results are order-independent.
AttributionRecord compute_record(const Workbench& bench, const ExperimentConfig& cfg,
                                 std::size_t point_id, const std::string& method);

// Full pipeline: metrics CSV, summary CSV (recomputed from the CSV), one
// histogram SVG per metric, timing sidecar, meta.json with the reference.
ReportBundle run_comparison(const ExperimentConfig& cfg);

// metrics CSV schema: point_id,method,target,mu,norm_fraction,e_value
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_metrics_csv(const std::string& path);

std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& records,
                                  double reference);
std::string summary_to_csv(const std::vector<SummaryRow>& summary);

// Normalized histogram over [0,1] per method, vertical line at `reference`,
// axis labeled with the metric name. Throws EmptySelection when the filter
// matches nothing. Deterministic text output.
std::string render_histogram(const std::vector<MetricsRecord>& records,
                             const std::vector<std::string>& method_filter,
                             int bins, double reference, Metric metric,
                             bool kde_overlay = false);

// Grid of original image plus one attribution heatmap per method, each
// annotated with its mu. Points must be square images.
std::string gallery(const ExperimentConfig& cfg, const std::vector<std::size_t>& point_ids);
std::string gallery(const Workbench& bench, const ExperimentConfig& cfg,
                    const std::vector<std::size_t>& point_ids);

// Max-abs deviation between standard-basis IG and IG with the gradient
// integral decomposed into (and reassembled from) the given frame.
double frame_invariance_check(const nn::DenseNetwork& net, const num::Vector& x,
                              const num::Vector& base, int steps,
                              const num::OrthonormalBasis& frame,
                              std::size_t target = 0);

// Attribution export: point_id,method,target,mu,norm_fraction,v0..v{d-1}
void write_attributions_csv(const std::string& path,
                            const std::vector<AttributionRecord>& records,
                            std::size_t dim);

const char* metric_name(Metric m);

}  // namespace tangrad::eval
