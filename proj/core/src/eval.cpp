#include "tangrad/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tangrad/attribution.hpp"
#include "tangrad/errors.hpp"

namespace tangrad::eval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stable per-(point, method) stream so record computation order never
// affects the results.
std::uint64_t record_seed(std::uint64_t run_seed, std::size_t point_id,
                          const std::string& method) {
  return splitmix64(run_seed ^ splitmix64(point_id) ^ fnv1a(method));
}

nn::TrainConfig train_config_from_json(const json& j) {
  nn::TrainConfig cfg;
  if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<std::size_t>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("optimizer"))
    cfg.optimizer = j["optimizer"].get<std::string>() == "sgd" ? nn::OptimizerKind::sgd
                                                               : nn::OptimizerKind::adam;
  if (j.contains("hidden")) cfg.hidden = j["hidden"].get<std::vector<std::size_t>>();
  if (j.contains("activation"))
    cfg.hidden_act = nn::activation_from_name(j["activation"].get<std::string>());
  return cfg;
}

data::SyntheticKind synthetic_kind_from_string(const std::string& s) {
  if (s == "subspace") return data::SyntheticKind::subspace;
  if (s == "sphere") return data::SyntheticKind::sphere;
  if (s == "gaussian_blobs") return data::SyntheticKind::gaussian_blobs;
  throw InvalidSpec("unknown synthetic kind: " + s);
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty()) return path;
  fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base_dir) / p).string();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidSpec("config parse error: " + std::string(e.what()));
  }

  ExperimentConfig cfg;
  try {
    if (j.contains("dataset")) {
      const json& d = j["dataset"];
      cfg.dataset.kind = d.value("kind", std::string("synthetic"));
      if (d.contains("synthetic")) {
        const json& s = d["synthetic"];
        cfg.dataset.synthetic.kind =
            synthetic_kind_from_string(s.value("kind", std::string("subspace")));
        cfg.dataset.synthetic.ambient_dim = s.value("d", std::size_t(0));
        cfg.dataset.synthetic.intrinsic_dim = s.value("n", std::size_t(0));
        cfg.dataset.synthetic.count = s.value("count", std::size_t(0));
        cfg.dataset.synthetic.noise = s.value("noise", 0.0);
        cfg.dataset.synthetic.seed = s.value("seed", std::uint64_t(0));
      }
      cfg.dataset.images_path = resolve(d.value("images", std::string()), base_dir);
      cfg.dataset.labels_path = resolve(d.value("labels", std::string()), base_dir);
      cfg.dataset.manifest_path = resolve(d.value("manifest", std::string()), base_dir);
      cfg.dataset.downscale_factor = d.value("downscale", std::size_t(1));
    }
    if (j.contains("provider")) {
      const json& p = j["provider"];
      cfg.provider.kind = p.value("kind", std::string("subspace"));
      cfg.provider.subspace_dim = p.value("dim", std::size_t(0));
      cfg.provider.sphere_radius = p.value("radius", 1.0);
      cfg.provider.basis_file = resolve(p.value("path", std::string()), base_dir);
      cfg.provider.encoder_path = resolve(p.value("encoder", std::string()), base_dir);
      cfg.provider.decoder_path = resolve(p.value("decoder", std::string()), base_dir);
      if (p.contains("train")) {
        cfg.provider.train = true;
        cfg.provider.latent_dim = p["train"].value("latent", std::size_t(0));
        cfg.provider.train_cfg = train_config_from_json(p["train"]);
      }
    }
    if (j.contains("model")) {
      const json& m = j["model"];
      cfg.model.kind = m.value("kind", std::string("linear"));
      if (m.contains("weights")) {
        const json& w = m["weights"];
        if (!w.is_array()) throw InvalidSpec("model.weights must be an array");
        if (!w.empty() && w.front().is_array())
          cfg.model.linear_weights = w.get<std::vector<num::Vector>>();
        else
          cfg.model.linear_weights = {w.get<num::Vector>()};
      }
      cfg.model.linear_seed = m.value("seed", std::uint64_t(0));
      cfg.model.path = resolve(m.value("path", std::string()), base_dir);
      if (m.contains("train")) cfg.model.train_cfg = train_config_from_json(m["train"]);
    }
    if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
    cfg.sample_size = j.value("sample_size", defaults::kSampleSize);
    cfg.seed = j.value("seed", std::uint64_t(0));
    cfg.quadrature_steps = j.value("quadrature_steps", defaults::kQuadratureSteps);
    if (j.contains("smoothgrad")) {
      cfg.smoothgrad_sigma = j["smoothgrad"].value("sigma", defaults::kSmoothgradSigma);
      cfg.smoothgrad_samples = j["smoothgrad"].value("n", defaults::kSmoothgradSamples);
    }
    cfg.gaussian_sigma = j.value("gaussian_sigma", 0.25);
    cfg.max_distance_p = j.value("max_distance_p", 2);
    if (j.contains("optimizer")) {
      const json& o = j["optimizer"];
      cfg.optimizer.learning_rate = o.value("learning_rate", defaults::kLearningRate);
      cfg.optimizer.max_iters = o.value("max_iters", defaults::kMaxIters);
      cfg.optimizer.fd_step = o.value("fd_step", defaults::kFdStep);
      cfg.optimizer.min_separation = o.value("min_separation", 0.0);
      cfg.optimizer.quadrature_steps =
          o.value("quadrature_steps", defaults::kQuadratureSteps);
      cfg.optimizer.tol = o.value("tol", defaults::kEnergyTol);
      if (o.contains("clip")) {
        const json& c = o["clip"];
        if (!c.is_array() || c.size() != 2)
          throw InvalidSpec("optimizer.clip must be [lo, hi]");
        cfg.optimizer.clip_lo.assign(1, c[0].get<double>());  // broadcast later
        cfg.optimizer.clip_hi.assign(1, c[1].get<double>());
      }
    }
    cfg.out_dir = resolve(j.value("out_dir", std::string("out")), base_dir);
    const std::string metric = j.value("metric", std::string("mu"));
    if (metric == "mu")
      cfg.metric = Metric::mu;
    else if (metric == "norm_fraction")
      cfg.metric = Metric::norm_fraction;
    else
      throw InvalidSpec("metric must be mu or norm_fraction");
    cfg.histogram_bins = j.value("histogram_bins", defaults::kHistogramBins);
    cfg.kde_overlay = j.value("kde_overlay", false);
  } catch (const json::exception& e) {
    throw InvalidSpec("config field error: " + std::string(e.what()));
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpec("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), fs::path(path).parent_path().string());
}

Workbench materialize(const ExperimentConfig& cfg) {
  Workbench bench;

  // dataset
  if (cfg.dataset.kind == "synthetic") {
    bench.dataset = data::generate_synthetic(cfg.dataset.synthetic);
  } else if (cfg.dataset.kind == "idx") {
    std::optional<std::string> labels;
    if (!cfg.dataset.labels_path.empty()) labels = cfg.dataset.labels_path;
    bench.dataset = data::load_idx(cfg.dataset.images_path, labels);
  } else if (cfg.dataset.kind == "manifest") {
    bench.dataset = data::load_manifest(cfg.dataset.manifest_path);
  } else {
    throw InvalidSpec("dataset.kind must be synthetic, idx or manifest");
  }
  if (cfg.dataset.downscale_factor > 1)
    bench.dataset = data::downscale(bench.dataset, cfg.dataset.downscale_factor);
  if (bench.dataset.points.empty()) throw EmptyDataset("materialize: dataset is empty");
  const std::size_t d = bench.dataset.dim();

  // model
  if (cfg.model.kind == "linear") {
    std::vector<num::Vector> rows = cfg.model.linear_weights;
    if (rows.empty()) {
      std::mt19937_64 rng(cfg.model.linear_seed);
      std::uniform_real_distribution<double> mag(0.5, 1.5);
      std::bernoulli_distribution flip(0.5);
      num::Vector w(d);
      for (double& v : w) v = (flip(rng) ? -1.0 : 1.0) * mag(rng);
      rows.push_back(std::move(w));
    }
    nn::Layer layer;
    layer.weight = num::Matrix::from_columns([&] {
      // rows are stored as weight-matrix rows; build via transpose of columns
      std::vector<num::Vector> cols(rows.front().size(), num::Vector(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != d) throw InvalidSpec("linear model weights must have length d");
        for (std::size_t c = 0; c < d; ++c) cols[c][r] = rows[r][c];
      }
      return cols;
    }());
    layer.bias.assign(rows.size(), 0.0);
    layer.act = nn::Activation::identity;
    bench.model.layers.push_back(std::move(layer));
  } else if (cfg.model.kind == "load") {
    bench.model = nn::load_network(cfg.model.path);
  } else if (cfg.model.kind == "train") {
    if (!bench.dataset.labels)
      throw InvalidSpec("model.kind=train needs a labeled dataset");
    bench.model = nn::train_classifier(bench.dataset, *bench.dataset.labels,
                                       cfg.model.train_cfg);
  } else {
    throw InvalidSpec("model.kind must be linear, load or train");
  }
  if (bench.model.input_dim() != d)
    throw DimensionMismatch("model input dim " + std::to_string(bench.model.input_dim()) +
                            " vs dataset dim " + std::to_string(d));

  // provider
  if (cfg.provider.kind == "subspace") {
    const std::size_t n = cfg.provider.subspace_dim;
    if (n == 0 || n >= d) throw InvalidSpec("provider.dim must satisfy 0 < dim < d");
    std::vector<num::Vector> axes;
    for (std::size_t i = 0; i < n; ++i) {
      num::Vector e(d, 0.0);
      e[i] = 1.0;
      axes.push_back(std::move(e));
    }
    bench.provider = manifold::ManifoldProvider::subspace(axes);
  } else if (cfg.provider.kind == "sphere") {
    bench.provider = manifold::ManifoldProvider::sphere(cfg.provider.sphere_radius);
  } else if (cfg.provider.kind == "decoder") {
    nn::AutoencoderPair ae;
    if (cfg.provider.train) {
      ae = nn::train_autoencoder(bench.dataset, cfg.provider.latent_dim,
                                 cfg.provider.train_cfg);
    } else {
      ae.encoder = nn::load_network(cfg.provider.encoder_path);
      ae.decoder = nn::load_network(cfg.provider.decoder_path);
      if (ae.encoder.output_dim() != ae.decoder.input_dim() ||
          ae.decoder.output_dim() != d || ae.encoder.input_dim() != d)
        throw DimensionMismatch("autoencoder dims do not match the dataset");
    }
    bench.autoencoder = ae;
    bench.provider = manifold::ManifoldProvider::decoder(std::move(ae));
  } else if (cfg.provider.kind == "file") {
    bench.provider = manifold::ManifoldProvider::from_file(cfg.provider.basis_file);
  } else {
    throw InvalidSpec("provider.kind must be subspace, sphere, decoder or file");
  }
  return bench;
}

namespace {

num::Vector broadcast_bounds(const num::Vector& b, std::size_t d, double fallback) {
  if (b.empty()) return num::Vector(d, fallback);
  if (b.size() == 1) return num::Vector(d, b.front());
  if (b.size() != d) throw InvalidBounds("bounds length must be 1 or d");
  return b;
}

basepoint::OptimizerConfig optimizer_for_dataset(const ExperimentConfig& cfg,
                                                 const data::Dataset& ds) {
  basepoint::OptimizerConfig opt = cfg.optimizer;
  const std::size_t d = ds.dim();
  if (opt.clip_lo.empty()) {
    opt.clip_lo = ds.bounds_lo;
    opt.clip_hi = ds.bounds_hi;
  } else {
    opt.clip_lo = broadcast_bounds(opt.clip_lo, d, 0.0);
    opt.clip_hi = broadcast_bounds(opt.clip_hi, d, 0.0);
  }
  return opt;
}

num::Vector tangential_init(const num::Vector& x, const basepoint::OptimizerConfig& opt,
                            std::mt19937_64& rng) {
  const std::size_t d = x.size();
  const double delta = opt.separation_for_dim(d);
  num::Vector alpha0(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    alpha0[i] = std::clamp(0.0, opt.clip_lo[i], opt.clip_hi[i]);
  if (num::norm2(num::sub(alpha0, x)) >= delta) return alpha0;
  for (int tries = 0; tries < 64; ++tries) {
    for (std::size_t i = 0; i < d; ++i) {
      std::uniform_real_distribution<double> u(opt.clip_lo[i], opt.clip_hi[i]);
      alpha0[i] = u(rng);
    }
    if (num::norm2(num::sub(alpha0, x)) >= delta) return alpha0;
  }
  throw InvalidSpec("tangential init: could not find a start point separated from x");
}

template <typename Fn>
auto annotated(std::size_t point_id, const std::string& method, Fn&& fn) {
  const std::string where = "point " + std::to_string(point_id) + " / " + method + ": ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const DataError& e) {
    throw DataError(where + e.what());
  } catch (const NumericError& e) {
    throw NumericError(where + e.what());
  }
}

}  // namespace

AttributionRecord compute_record(const Workbench& bench, const ExperimentConfig& cfg,
                                 std::size_t point_id, const std::string& method) {
  return annotated(point_id, method, [&]() -> AttributionRecord {
    if (point_id >= bench.dataset.size())
      throw InvalidSpec("point id out of range: " + std::to_string(point_id));
    const num::Vector& x = bench.dataset.points[point_id];
    const manifold::TangentBasis tb = bench.provider->tangent_basis_at(x);
    const std::size_t target = nn::predicted_class(bench.model, x);
    std::mt19937_64 rng(record_seed(cfg.seed, point_id, method));

    const auto t0 = std::chrono::steady_clock::now();
    attr::Attribution a;
    if (method == "ig_zero" || method == "ig_max_distance" || method == "ig_uniform" ||
        method == "ig_gaussian") {
      basepoint::BaselineSpec spec;
      if (method == "ig_zero") spec.method = basepoint::BaselineMethod::zero;
      if (method == "ig_max_distance") {
        spec.method = basepoint::BaselineMethod::max_distance;
        spec.p_norm = cfg.max_distance_p;
      }
      if (method == "ig_uniform") spec.method = basepoint::BaselineMethod::uniform;
      if (method == "ig_gaussian") {
        spec.method = basepoint::BaselineMethod::gaussian;
        spec.sigma = cfg.gaussian_sigma;
      }
      spec.bounds_lo = bench.dataset.bounds_lo;
      spec.bounds_hi = bench.dataset.bounds_hi;
      const num::Vector base = basepoint::baseline_basepoint(spec, x, bench.dataset, rng);
      a = attr::integrated_gradients(bench.model, x, base, cfg.quadrature_steps, target);
      a.method = method;
    } else if (method == "ig_tangential") {
      const basepoint::OptimizerConfig opt = optimizer_for_dataset(cfg, bench.dataset);
      const num::Vector alpha0 = tangential_init(x, opt, rng);
      auto [alpha, trace] = basepoint::optimize_basepoint(x, bench.model, tb, target,
                                                          opt, alpha0);
      a = attr::integrated_gradients(bench.model, x, alpha, cfg.quadrature_steps, target);
      a.method = method;
    } else if (method == "gradient") {
      a = attr::gradient_explainer(bench.model, x, target);
    } else if (method == "smoothgrad") {
      a = attr::smoothgrad(bench.model, x, target, cfg.smoothgrad_sigma,
                           cfg.smoothgrad_samples, rng());
    } else if (method == "input_times_gradient") {
      a = attr::input_times_gradient(bench.model, x, target);
    } else if (method == "random") {
      // isotropic-noise control; its norm fraction should sit at sqrt(n/d)
      std::normal_distribution<double> gauss(0.0, 1.0);
      a.values.resize(x.size());
      for (double& v : a.values) v = gauss(rng);
      a.method = "random";
      a.target = target;
    } else {
      throw InvalidSpec("unknown method: " + method);
    }
    const auto t1 = std::chrono::steady_clock::now();

    AttributionRecord rec;
    rec.values = a.values;
    rec.base_point = a.base_point;
    rec.metrics.point_id = point_id;
    rec.metrics.method = method;
    rec.metrics.target = target;
    // mu is undefined for an exactly zero attribution; record 0 (no tangent
    // component) instead of failing the whole run.
    const double len2 = num::dot(a.values, a.values);
    rec.metrics.mu = len2 == 0.0 ? 0.0 : manifold::tangent_fraction(tb, a.values);
    rec.metrics.norm_fraction = std::sqrt(rec.metrics.mu);
    if (a.base_point) {
      const num::Vector h = manifold::project_normal(tb, a.values);
      rec.metrics.e_value = 0.5 * num::dot(h, h);
    }
    rec.metrics.wall_time_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    return rec;
  });
}

ReportBundle run_comparison(const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) throw InvalidSpec("run_comparison: methods list is empty");
  Workbench bench = materialize(cfg);
  if (cfg.sample_size > bench.dataset.size())
    throw InvalidSpec("run_comparison: sample_size exceeds dataset size");

  // seeded sample without replacement, reported in ascending point order
  std::vector<std::size_t> ids(bench.dataset.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::mt19937_64 rng(splitmix64(cfg.seed));
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(cfg.sample_size);
  std::sort(ids.begin(), ids.end());

  const manifold::TangentBasis tb0 =
      bench.provider->tangent_basis_at(bench.dataset.points[ids.front()]);
  const std::size_t n = tb0.tangent_dim();
  const std::size_t d = tb0.ambient_dim();
  const double reference = std::sqrt(double(n) / double(d));

  std::vector<MetricsRecord> records;
  records.reserve(ids.size() * cfg.methods.size());
  for (std::size_t id : ids)
    for (const std::string& method : cfg.methods)
      records.push_back(compute_record(bench, cfg, id, method).metrics);

  std::sort(records.begin(), records.end(), [](const MetricsRecord& a, const MetricsRecord& b) {
    return a.point_id != b.point_id ? a.point_id < b.point_id : a.method < b.method;
  });

  fs::create_directories(cfg.out_dir);
  ReportBundle bundle;
  bundle.reference = reference;
  bundle.tangent_dim = n;
  bundle.ambient_dim = d;
  bundle.metrics_csv_path = (fs::path(cfg.out_dir) / "metrics.csv").string();
  write_metrics_csv(bundle.metrics_csv_path, records);

  // The CSV is the single source of truth: everything below derives from a
  // re-parse of what was just written.
  const std::vector<MetricsRecord> parsed = read_metrics_csv(bundle.metrics_csv_path);
  bundle.summary = summarize(parsed, reference);
  bundle.summary_csv_path = (fs::path(cfg.out_dir) / "summary.csv").string();
  {
    std::ofstream out(bundle.summary_csv_path, std::ios::binary);
    out << summary_to_csv(bundle.summary);
  }
  for (Metric m : {Metric::mu, Metric::norm_fraction}) {
    const std::string path =
        (fs::path(cfg.out_dir) / (std::string("histogram_") + metric_name(m) + ".svg")).string();
    const std::string svg = render_histogram(parsed, {}, cfg.histogram_bins, reference, m,
                                             cfg.kde_overlay);
    std::ofstream out(path, std::ios::binary);
    out << svg;
    bundle.histogram_svg_paths.push_back(path);
  }
  {
    std::ofstream out(fs::path(cfg.out_dir) / "timings.csv", std::ios::binary);
    out << "point_id,method,wall_time_ms\n";
    for (const MetricsRecord& r : records)
      out << r.point_id << "," << r.method << "," << r.wall_time_ms << "\n";
  }
  {
    json meta;
    meta["reference"] = reference;
    meta["tangent_dim"] = n;
    meta["ambient_dim"] = d;
    meta["metric"] = metric_name(cfg.metric);
    std::ofstream out(fs::path(cfg.out_dir) / "meta.json", std::ios::binary);
    out << meta.dump(2) << "\n";
  }
  return bundle;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "point_id,method,target,mu,norm_fraction,e_value\n";
  for (const MetricsRecord& r : records) {
    out << r.point_id << "," << r.method << "," << r.target << "," << fmt17(r.mu) << ","
        << fmt17(r.norm_fraction) << ",";
    if (r.e_value) out << fmt17(*r.e_value);
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FileFormatError("metrics csv: empty file");
  if (line.rfind("point_id,method,target,mu,norm_fraction,e_value", 0) != 0)
    throw FileFormatError("metrics csv: unexpected header: " + line);

  std::vector<MetricsRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    MetricsRecord r;
    std::getline(ss, field, ',');
    r.point_id = std::stoull(field);
    std::getline(ss, r.method, ',');
    std::getline(ss, field, ',');
    r.target = std::stoull(field);
    std::getline(ss, field, ',');
    r.mu = std::stod(field);
    std::getline(ss, field, ',');
    r.norm_fraction = std::stod(field);
    if (std::getline(ss, field, ',') && !field.empty()) r.e_value = std::stod(field);
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& records,
                                  double reference) {
  std::map<std::string, std::vector<const MetricsRecord*>> groups;
  for (const MetricsRecord& r : records) groups[r.method].push_back(&r);

  std::vector<SummaryRow> rows;
  for (const auto& [method, group] : groups) {
    SummaryRow row;
    row.method = method;
    row.count = group.size();
    std::vector<double> mus, nfs;
    std::size_t above = 0;
    for (const MetricsRecord* r : group) {
      mus.push_back(r->mu);
      nfs.push_back(r->norm_fraction);
      if (r->norm_fraction > reference) ++above;
    }
    row.mean_mu = std::accumulate(mus.begin(), mus.end(), 0.0) / double(mus.size());
    row.median_mu = median_of(mus);
    row.mean_norm_fraction =
        std::accumulate(nfs.begin(), nfs.end(), 0.0) / double(nfs.size());
    row.median_norm_fraction = median_of(nfs);
    row.frac_above_reference = double(above) / double(group.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string summary_to_csv(const std::vector<SummaryRow>& summary) {
  std::ostringstream out;
  out << "method,count,mean_mu,median_mu,mean_norm_fraction,median_norm_fraction,"
         "frac_above_reference\n";
  for (const SummaryRow& r : summary)
    out << r.method << "," << r.count << "," << fmt17(r.mean_mu) << "," << fmt17(r.median_mu)
        << "," << fmt17(r.mean_norm_fraction) << "," << fmt17(r.median_norm_fraction) << ","
        << fmt17(r.frac_above_reference) << "\n";
  return out.str();
}

double frame_invariance_check(const nn::DenseNetwork& net, const num::Vector& x,
                              const num::Vector& base, int steps,
                              const num::OrthonormalBasis& frame, std::size_t target) {
  const std::size_t d = x.size();
  if (frame.ambient_dim != d || frame.count() != d)
    throw NotABasis("frame_invariance_check: frame must be a full basis of R^d");
  if (!num::is_orthonormal(frame, 1e-8))
    throw NotABasis("frame_invariance_check: frame is not orthonormal");
  if (base.size() != d || net.input_dim() != d)
    throw DimensionMismatch("frame_invariance_check: dims disagree");
  if (steps < 1) throw InvalidSpec("frame_invariance_check: steps must be >= 1");

  // Midpoint-rule gradient integral, identical sampling to IG.
  const num::Vector delta = num::sub(x, base);
  num::Vector integral(d, 0.0);
  for (int k = 0; k < steps; ++k) {
    const double t = (k + 0.5) / double(steps);
    num::Vector p = base;
    num::axpy(t, delta, p);
    num::axpy(1.0, nn::input_gradient(net, p, target), integral);
  }
  for (double& g : integral) g /= double(steps);

  const num::Vector standard = num::hadamard(delta, integral);

  // Express the integral in the frame and reassemble it, then weight.
  num::Vector reassembled(d, 0.0);
  for (const num::Vector& v : frame.vectors) num::axpy(num::dot(integral, v), v, reassembled);
  const num::Vector framed = num::hadamard(delta, reassembled);

  double max_abs = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    max_abs = std::max(max_abs, std::abs(framed[i] - standard[i]));
  return max_abs;
}

void write_attributions_csv(const std::string& path,
                            const std::vector<AttributionRecord>& records,
                            std::size_t dim) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "point_id,method,target,mu,norm_fraction";
  for (std::size_t i = 0; i < dim; ++i) out << ",v" << i;
  out << "\n";
  for (const AttributionRecord& r : records) {
    if (r.values.size() != dim)
      throw DimensionMismatch("write_attributions_csv: value length mismatch");
    out << r.metrics.point_id << "," << r.metrics.method << "," << r.metrics.target << ","
        << fmt17(r.metrics.mu) << "," << fmt17(r.metrics.norm_fraction);
    for (double v : r.values) out << "," << fmt17(v);
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

const char* metric_name(Metric m) { return m == Metric::mu ? "mu" : "norm_fraction"; }

}  // namespace tangrad::eval
