#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tangrad/basepoint.hpp"
#include "tangrad/errors.hpp"
#include "tangrad/eval.hpp"
#include "tangrad/nn.hpp"

// Command-line front end. Exit codes: 0 success, 2 configuration error,
// 3 data/file error, 4 numerical failure.
namespace {

namespace fs = std::filesystem;
using namespace tangrad;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> metric;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
  auto* opt = cmd->add_option("--config", flags.config_path, "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--out-dir", flags.out_dir, "override the config output directory");
  cmd->add_option("--metric", flags.metric, "mu or norm_fraction")
      ->check(CLI::IsMember({"mu", "norm_fraction"}));
}

eval::ExperimentConfig load_config(const CommonFlags& flags) {
  eval::ExperimentConfig cfg = eval::load_experiment_config(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out_dir) cfg.out_dir = *flags.out_dir;
  if (flags.metric)
    cfg.metric = *flags.metric == "mu" ? eval::Metric::mu : eval::Metric::norm_fraction;
  return cfg;
}

std::vector<std::size_t> parse_points(const std::string& csv) {
  std::vector<std::size_t> ids;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      ids.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw InvalidSpec("--points: not a point id: " + tok);
    }
  }
  if (ids.empty()) throw InvalidSpec("--points: no point ids given");
  return ids;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << text;
  if (!out) throw DataError("write failed: " + path);
}

int cmd_train_ae(const CommonFlags& flags) {
  eval::ExperimentConfig cfg = load_config(flags);
  if (!cfg.provider.train || cfg.provider.latent_dim == 0)
    throw InvalidSpec("train-ae needs provider.kind=decoder with a train block");
  eval::ExperimentConfig data_only = cfg;
  data_only.provider.kind = "subspace";  // skip provider construction
  data_only.provider.subspace_dim = 1;
  data_only.model.kind = "linear";
  const data::Dataset ds = eval::materialize(data_only).dataset;

  const nn::AutoencoderPair ae =
      nn::train_autoencoder(ds, cfg.provider.latent_dim, cfg.provider.train_cfg);
  fs::create_directories(cfg.out_dir);
  const std::string enc = (fs::path(cfg.out_dir) / "encoder.tgnn").string();
  const std::string dec = (fs::path(cfg.out_dir) / "decoder.tgnn").string();
  nn::save_network(ae.encoder, enc);
  nn::save_network(ae.decoder, dec);
  std::printf("trained autoencoder: latent=%zu mse=%.6g\n", ae.latent_dim(),
              nn::reconstruction_mse(ae, ds));
  std::printf("wrote %s\nwrote %s\n", enc.c_str(), dec.c_str());
  return 0;
}

int cmd_train_clf(const CommonFlags& flags) {
  eval::ExperimentConfig cfg = load_config(flags);
  eval::ExperimentConfig data_only = cfg;
  data_only.provider.kind = "subspace";
  data_only.provider.subspace_dim = 1;
  data_only.model.kind = "linear";
  const data::Dataset ds = eval::materialize(data_only).dataset;
  if (!ds.labels) throw InvalidSpec("train-clf needs a labeled dataset");

  const nn::DenseNetwork clf = nn::train_classifier(ds, *ds.labels, cfg.model.train_cfg);
  fs::create_directories(cfg.out_dir);
  const std::string path = (fs::path(cfg.out_dir) / "classifier.tgnn").string();
  nn::save_network(clf, path);
  std::printf("trained classifier: accuracy=%.4f\n",
              nn::classification_accuracy(clf, ds, *ds.labels));
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_explain(const CommonFlags& flags, const std::string& points_csv) {
  const eval::ExperimentConfig cfg = load_config(flags);
  const std::vector<std::size_t> ids = parse_points(points_csv);
  if (cfg.methods.empty()) throw InvalidSpec("explain: config lists no methods");

  const eval::Workbench bench = eval::materialize(cfg);
  std::vector<eval::AttributionRecord> records;
  for (std::size_t id : ids)
    for (const std::string& method : cfg.methods)
      records.push_back(eval::compute_record(bench, cfg, id, method));

  fs::create_directories(cfg.out_dir);
  const std::string path = (fs::path(cfg.out_dir) / "attributions.csv").string();
  eval::write_attributions_csv(path, records, bench.dataset.dim());
  std::printf("wrote %s (%zu rows)\n", path.c_str(), records.size());
  return 0;
}

int cmd_optimize(const CommonFlags& flags, std::size_t point_id) {
  const eval::ExperimentConfig cfg = load_config(flags);
  const eval::Workbench bench = eval::materialize(cfg);
  if (point_id >= bench.dataset.size())
    throw InvalidSpec("--point out of range (dataset has " +
                      std::to_string(bench.dataset.size()) + " points)");

  const num::Vector& x = bench.dataset.points[point_id];
  const manifold::TangentBasis tb = bench.provider->tangent_basis_at(x);
  const std::size_t target = nn::predicted_class(bench.model, x);

  basepoint::OptimizerConfig opt = cfg.optimizer;
  if (opt.clip_lo.empty()) {
    opt.clip_lo = bench.dataset.bounds_lo;
    opt.clip_hi = bench.dataset.bounds_hi;
  } else if (opt.clip_lo.size() == 1) {
    opt.clip_lo.assign(bench.dataset.dim(), opt.clip_lo.front());
    opt.clip_hi.assign(bench.dataset.dim(), opt.clip_hi.front());
  }

  num::Vector alpha0(x.size(), 0.0);
  for (std::size_t i = 0; i < alpha0.size(); ++i)
    alpha0[i] = std::clamp(0.0, opt.clip_lo[i], opt.clip_hi[i]);
  auto [alpha, trace] = basepoint::optimize_basepoint(x, bench.model, tb, target, opt, alpha0);

  fs::create_directories(cfg.out_dir);
  const std::string trace_path = (fs::path(cfg.out_dir) / "trace.csv").string();
  write_text(trace_path, basepoint::trace_to_csv(trace));

  const basepoint::AlignmentDiagnostics diag = basepoint::compute_diagnostics(
      x, alpha, bench.model, tb, cfg.quadrature_steps, target, cfg.optimizer.fd_step);
  std::string diag_json = basepoint::diagnostics_to_json(diag);
  // append the solution itself under documented keys
  {
    std::ostringstream alpha_json;
    alpha_json << ",\n  \"status\": \"" << basepoint::status_name(trace.status) << "\",\n";
    alpha_json << "  \"iterations\": " << (trace.rows.size() - 1) << ",\n";
    alpha_json << "  \"alpha\": [";
    alpha_json.precision(17);
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (i) alpha_json << ", ";
      alpha_json << alpha[i];
    }
    alpha_json << "]\n}";
    diag_json.replace(diag_json.rfind('\n'), std::string::npos, alpha_json.str());
  }
  const std::string diag_path = (fs::path(cfg.out_dir) / "diagnostics.json").string();
  write_text(diag_path, diag_json + "\n");

  std::printf("point %zu: status=%s E=%.6g iters=%zu\n", point_id,
              basepoint::status_name(trace.status), diag.e_value, trace.rows.size() - 1);
  std::printf("wrote %s\nwrote %s\n", trace_path.c_str(), diag_path.c_str());
  return 0;
}

int cmd_evaluate(const CommonFlags& flags) {
  const eval::ExperimentConfig cfg = load_config(flags);
  const eval::ReportBundle bundle = eval::run_comparison(cfg);
  std::printf("reference sqrt(n/d) = %.6f (n=%zu, d=%zu)\n", bundle.reference,
              bundle.tangent_dim, bundle.ambient_dim);
  std::printf("%-22s %6s %10s %10s %10s\n", "method", "count", "mean_mu", "median_mu",
              "frac>ref");
  for (const eval::SummaryRow& r : bundle.summary)
    std::printf("%-22s %6zu %10.4f %10.4f %10.4f\n", r.method.c_str(), r.count, r.mean_mu,
                r.median_mu, r.frac_above_reference);
  std::printf("wrote %s\n", bundle.metrics_csv_path.c_str());
  std::printf("wrote %s\n", bundle.summary_csv_path.c_str());
  for (const std::string& p : bundle.histogram_svg_paths) std::printf("wrote %s\n", p.c_str());
  return 0;
}

int cmd_report(const std::string& metrics_path, std::optional<double> reference,
               const std::string& metric, const std::string& out_dir, int bins) {
  const std::vector<eval::MetricsRecord> records = eval::read_metrics_csv(metrics_path);
  if (records.empty()) throw EmptySelection("report: metrics csv has no rows");

  double ref = reference.value_or(-1.0);
  if (!reference) {
    // try the meta.json evaluate leaves next to the csv
    const fs::path meta = fs::path(metrics_path).parent_path() / "meta.json";
    std::ifstream in(meta);
    if (in) {
      std::stringstream ss;
      ss << in.rdbuf();
      const std::string text = ss.str();
      const auto key = text.find("\"reference\"");
      if (key != std::string::npos) {
        const auto colon = text.find(':', key);
        ref = std::stod(text.substr(colon + 1));
      }
    }
  }

  fs::create_directories(out_dir);
  const auto rows = eval::summarize(records, ref);
  write_text((fs::path(out_dir) / "summary.csv").string(), eval::summary_to_csv(rows));
  const eval::Metric m = metric == "norm_fraction" ? eval::Metric::norm_fraction
                                                   : eval::Metric::mu;
  const std::string svg = eval::render_histogram(records, {}, bins, ref, m, false);
  const std::string svg_path =
      (fs::path(out_dir) / (std::string("histogram_") + metric + ".svg")).string();
  write_text(svg_path, svg);
  std::printf("wrote %s\nwrote %s\n", (fs::path(out_dir) / "summary.csv").string().c_str(),
              svg_path.c_str());
  return 0;
}

int cmd_gallery(const CommonFlags& flags, const std::string& points_csv) {
  const eval::ExperimentConfig cfg = load_config(flags);
  const std::vector<std::size_t> ids = parse_points(points_csv);
  const std::string svg = eval::gallery(cfg, ids);
  fs::create_directories(cfg.out_dir);
  const std::string path = (fs::path(cfg.out_dir) / "gallery.svg").string();
  write_text(path, svg);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tangent-space alignment analysis for gradient attributions"};
  app.require_subcommand(1);

  CommonFlags train_ae_flags, train_clf_flags, explain_flags, optimize_flags,
      evaluate_flags, gallery_flags;
  std::string explain_points, gallery_points;
  std::size_t optimize_point = 0;

  add_common(app.add_subcommand("train-ae", "train an autoencoder on the dataset"),
             train_ae_flags);
  add_common(app.add_subcommand("train-clf", "train a classifier on the dataset"),
             train_clf_flags);

  auto* explain = app.add_subcommand("explain", "export attributions for chosen points");
  add_common(explain, explain_flags);
  explain->add_option("--points", explain_points, "comma-separated point ids")->required();

  auto* optimize =
      app.add_subcommand("optimize-basepoint", "minimize the alignment energy for one point");
  add_common(optimize, optimize_flags);
  optimize->add_option("--point", optimize_point, "point id")->required();

  add_common(app.add_subcommand("evaluate", "run the full method comparison"),
             evaluate_flags);

  auto* report = app.add_subcommand("report", "re-derive summary and plots from a metrics CSV");
  std::string report_metrics, report_metric = "mu", report_out = "out";
  std::optional<double> report_reference;
  int report_bins = int(tangrad::defaults::kHistogramBins);
  report->add_option("--metrics", report_metrics, "metrics CSV from evaluate")->required();
  report->add_option("--reference", report_reference, "sqrt(n/d) reference line");
  report->add_option("--metric", report_metric, "mu or norm_fraction")
      ->check(CLI::IsMember({"mu", "norm_fraction"}));
  report->add_option("--out-dir", report_out, "output directory");
  report->add_option("--bins", report_bins, "histogram bins");

  auto* gal = app.add_subcommand("gallery", "render attribution heatmaps for chosen points");
  add_common(gal, gallery_flags);
  gal->add_option("--points", gallery_points, "comma-separated point ids")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("train-ae")) return cmd_train_ae(train_ae_flags);
    if (app.got_subcommand("train-clf")) return cmd_train_clf(train_clf_flags);
    if (app.got_subcommand("explain")) return cmd_explain(explain_flags, explain_points);
    if (app.got_subcommand("optimize-basepoint"))
      return cmd_optimize(optimize_flags, optimize_point);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(evaluate_flags);
    if (app.got_subcommand("report"))
      return cmd_report(report_metrics, report_reference, report_metric, report_out,
                        report_bins);
    if (app.got_subcommand("gallery")) return cmd_gallery(gallery_flags, gallery_points);
  } catch (const tangrad::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const tangrad::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const tangrad::NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 2;
}
