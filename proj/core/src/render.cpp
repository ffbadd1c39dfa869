#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tangrad/attribution.hpp"
#include "tangrad/errors.hpp"
#include "tangrad/eval.hpp"

// SVG emission for histograms and attribution galleries. All coordinates and
// labels are printed with fixed precision so identical inputs give identical
// bytes.
namespace tangrad::eval {

namespace {

std::string fmt(double v, int digits = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"};
constexpr int kPaletteSize = 10;

struct Canvas {
  std::ostringstream out;

  void open(int w, int h) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& color,
            double width = 1.0, bool dashed = false) {
    out << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
        << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << color << "\" stroke-width=\""
        << fmt(width, 1) << "\"";
    if (dashed) out << " stroke-dasharray=\"4 3\"";
    out << "/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                double width = 1.5) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
        << fmt(width, 1) << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) out << " ";
      out << fmt(pts[i].first) << "," << fmt(pts[i].second);
    }
    out << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill) {
    out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
        << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, int size = 11,
            const std::string& anchor = "start", const std::string& color = "#222222") {
    out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-family=\"monospace\""
        << " font-size=\"" << size << "\" text-anchor=\"" << anchor << "\" fill=\"" << color
        << "\">" << s << "</text>\n";
  }
  std::string close() {
    out << "</svg>\n";
    return out.str();
  }
};

std::string hex2(int v) {
  static const char* digits = "0123456789abcdef";
  std::string s(2, '0');
  s[0] = digits[(v >> 4) & 0xf];
  s[1] = digits[v & 0xf];
  return s;
}

std::string rgb(double r, double g, double b) {
  auto q = [](double c) {
    return std::clamp(int(std::lround(c * 255.0)), 0, 255);
  };
  return "#" + hex2(q(r)) + hex2(q(g)) + hex2(q(b));
}

// Diverging blue-white-red, symmetric about 0; t in [-1, 1].
std::string diverging_color(double t) {
  t = std::clamp(t, -1.0, 1.0);
  if (t < 0.0) {
    const double a = -t;  // toward blue #2166ac
    return rgb(1.0 + a * (0x21 / 255.0 - 1.0), 1.0 + a * (0x66 / 255.0 - 1.0),
               1.0 + a * (0xac / 255.0 - 1.0));
  }
  const double a = t;  // toward red #b2182b
  return rgb(1.0 + a * (0xb2 / 255.0 - 1.0), 1.0 + a * (0x18 / 255.0 - 1.0),
             1.0 + a * (0x2b / 255.0 - 1.0));
}

std::string gray_color(double v) { return rgb(v, v, v); }

double metric_value(const MetricsRecord& r, Metric m) {
  return m == Metric::mu ? r.mu : r.norm_fraction;
}

}  // namespace

std::string render_histogram(const std::vector<MetricsRecord>& records,
                             const std::vector<std::string>& method_filter,
                             int bins, double reference, Metric metric,
                             bool kde_overlay) {
  if (bins < 1) throw InvalidSpec("render_histogram: bins must be >= 1");

  // Group values by method, in sorted method order.
  std::map<std::string, std::vector<double>> groups;
  for (const MetricsRecord& r : records) {
    if (!method_filter.empty() &&
        std::find(method_filter.begin(), method_filter.end(), r.method) ==
            method_filter.end())
      continue;
    groups[r.method].push_back(metric_value(r, metric));
  }
  if (groups.empty()) throw EmptySelection("render_histogram: no records selected");

  const double width = 700, height = 420;
  const double ml = 60, mr = 160, mt = 30, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;
  const double bin_w = 1.0 / bins;

  // Densities per method over the fixed [0,1] domain.
  std::map<std::string, std::vector<double>> densities;
  double max_density = 0.0;
  for (const auto& [method, values] : groups) {
    std::vector<double> dens(std::size_t(bins), 0.0);
    for (double v : values) {
      int b = int(std::floor(v / bin_w));
      b = std::clamp(b, 0, bins - 1);
      dens[std::size_t(b)] += 1.0;
    }
    for (double& d : dens) d /= double(values.size()) * bin_w;
    max_density = std::max(max_density, *std::max_element(dens.begin(), dens.end()));
    densities[method] = std::move(dens);
  }
  if (max_density <= 0.0) max_density = 1.0;

  auto sx = [&](double v) { return ml + v * pw; };
  auto sy = [&](double dens) { return mt + ph - (dens / max_density) * ph; };

  Canvas c;
  c.open(int(width), int(height));

  // axes + ticks
  c.line(ml, mt + ph, ml + pw, mt + ph, "#000000");
  c.line(ml, mt, ml, mt + ph, "#000000");
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    c.line(sx(v), mt + ph, sx(v), mt + ph + 4, "#000000");
    c.text(sx(v), mt + ph + 18, fmt(v, 2), 11, "middle");
  }
  c.text(ml + pw / 2, height - 14, metric_name(metric), 12, "middle");
  c.text(16, mt + 10, "density", 12);
  c.text(16, mt + 24, "max " + fmt(max_density, 2), 10, "start", "#555555");

  // step outline per method
  int color_idx = 0;
  for (const auto& [method, dens] : densities) {
    const std::string color = kPalette[color_idx % kPaletteSize];
    std::vector<std::pair<double, double>> pts;
    pts.emplace_back(sx(0.0), sy(0.0));
    for (int b = 0; b < bins; ++b) {
      pts.emplace_back(sx(b * bin_w), sy(dens[std::size_t(b)]));
      pts.emplace_back(sx((b + 1) * bin_w), sy(dens[std::size_t(b)]));
    }
    pts.emplace_back(sx(1.0), sy(0.0));
    c.polyline(pts, color);

    if (kde_overlay) {
      const std::vector<double>& values = groups[method];
      const std::size_t nvals = values.size();
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= double(nvals);
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      var = nvals > 1 ? var / double(nvals - 1) : 0.0;
      std::vector<double> sorted = values;
      std::sort(sorted.begin(), sorted.end());
      const double q1 = sorted[std::size_t(0.25 * double(nvals - 1))];
      const double q3 = sorted[std::size_t(0.75 * double(nvals - 1))];
      const double sigma = std::min(std::sqrt(var), (q3 - q1) / 1.34);
      const double bw = 0.9 * sigma * std::pow(double(nvals), -0.2);  // Silverman
      if (bw > 0.0) {
        std::vector<std::pair<double, double>> kpts;
        const int samples = 200;
        for (int s = 0; s <= samples; ++s) {
          const double xq = double(s) / samples;
          double dens = 0.0;
          for (double v : values) {
            const double z = (xq - v) / bw;
            dens += std::exp(-0.5 * z * z);
          }
          dens /= double(nvals) * bw * std::sqrt(2.0 * 3.14159265358979323846);
          kpts.emplace_back(sx(xq), sy(std::min(dens, max_density)));
        }
        c.polyline(kpts, color, 0.8);
      }
    }
    ++color_idx;
  }

  // sqrt(n/d) reference line
  if (reference >= 0.0 && reference <= 1.0) {
    c.line(sx(reference), mt, sx(reference), mt + ph, "#333333", 1.2, true);
    c.text(sx(reference) + 4, mt + 12, "sqrt(n/d)=" + fmt(reference, 4), 10, "start",
           "#333333");
  }

  // legend
  double ly = mt + 8;
  color_idx = 0;
  for (const auto& [method, dens] : densities) {
    (void)dens;
    const std::string color = kPalette[color_idx % kPaletteSize];
    c.line(ml + pw + 10, ly, ml + pw + 30, ly, color, 2.0);
    c.text(ml + pw + 36, ly + 4, method, 11);
    ly += 18;
    ++color_idx;
  }

  return c.close();
}

std::string gallery(const Workbench& bench, const ExperimentConfig& cfg,
                    const std::vector<std::size_t>& point_ids) {
  if (point_ids.empty()) throw EmptySelection("gallery: no point ids given");
  if (cfg.methods.empty()) throw InvalidSpec("gallery: methods list is empty");
  const std::size_t d = bench.dataset.dim();
  const auto side = std::size_t(std::lround(std::sqrt(double(d))));
  if (side * side != d)
    throw NotAnImage("gallery: dataset dimension " + std::to_string(d) +
                     " is not a square image");

  const int cell = side >= 16 ? 4 : 8;
  const int tile = int(side) * cell;
  const int pad = 14, header = 34, label = 18;
  const int cols = int(cfg.methods.size()) + 1;
  const int rows = int(point_ids.size());
  const int width = pad + cols * (tile + pad);
  const int row_h = header + tile + label;
  const int height = pad + rows * row_h + pad;

  Canvas c;
  c.open(width, height);

  auto draw_image = [&](double ox, double oy, const num::Vector& img, bool diverging) {
    double maxabs = 0.0;
    if (diverging)
      for (double v : img) maxabs = std::max(maxabs, std::abs(v));
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t col = 0; col < side; ++col) {
        const double v = img[r * side + col];
        const std::string fill =
            diverging ? diverging_color(maxabs > 0.0 ? v / maxabs : 0.0)
                      : gray_color(std::clamp(v, 0.0, 1.0));
        c.rect(ox + double(col) * cell, oy + double(r) * cell, cell, cell, fill);
      }
    }
  };

  for (int row = 0; row < rows; ++row) {
    const std::size_t id = point_ids[std::size_t(row)];
    if (id >= bench.dataset.size())
      throw InvalidSpec("gallery: point id out of range: " + std::to_string(id));
    const double oy = pad + row * row_h + header;
    c.text(pad, oy - 10, "input #" + std::to_string(id), 11);
    draw_image(pad, oy, bench.dataset.points[id], false);

    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      const double ox = pad + double(m + 1) * (tile + pad);
      const AttributionRecord rec = compute_record(bench, cfg, id, cfg.methods[m]);
      c.text(ox, oy - 10, cfg.methods[m], 11);
      draw_image(ox, oy, rec.values, true);
      c.text(ox, oy + tile + 13, "mu=" + fmt(rec.metrics.mu, 4), 11);
    }
  }
  return c.close();
}

std::string gallery(const ExperimentConfig& cfg, const std::vector<std::size_t>& point_ids) {
  const Workbench bench = materialize(cfg);
  return gallery(bench, cfg, point_ids);
}

}  // namespace tangrad::eval
