#include "sscr/reporting.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace sscr {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out = open_out(path);
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::invalid_argument("write_csv: row width != header width");
    }
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

void write_curves_csv(const std::string& path, const std::vector<CurveRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.reserve(rows.size());
  for (const CurveRow& r : rows) {
    cells.push_back({std::to_string(r.iteration), format_double(r.l_g), format_double(r.l_d),
                     format_double(r.l_e), format_double(r.l_e_cf)});
  }
  write_csv(path, {"iteration", "l_g", "l_d", "l_e", "l_e_cf"}, cells);
}

MetricsReport make_metrics_report(const EvalResult& eval, const std::string& split,
                                  const std::string& mode, const std::string& checkpoint,
                                  std::uint64_t seed, double fraction) {
  MetricsReport r;
  r.split = split;
  r.mode = mode;
  r.checkpoint = checkpoint;
  r.seed = seed;
  r.fraction = fraction;
  r.objects = eval.objects;
  r.relsim = eval.relsim;
  r.episodes = eval.episodes;
  r.intermediate_scene_reads = eval.intermediate_scene_reads;
  r.per_episode = eval.per_episode;
  return r;
}

void write_metrics_report(const MetricsReport& report, const std::string& path) {
  json per = json::array();
  for (const EpisodeEval& e : report.per_episode) {
    per.push_back({{"id", e.id}, {"f1", e.f1}, {"relsim", e.relsim}});
  }
  json j{{"split", report.split},
         {"mode", report.mode},
         {"checkpoint", report.checkpoint},
         {"seed", report.seed},
         {"fraction", report.fraction},
         {"precision", report.objects.precision},
         {"recall", report.objects.recall},
         {"f1", report.objects.f1},
         {"relsim", report.relsim},
         {"episodes", report.episodes},
         {"intermediate_scene_reads", report.intermediate_scene_reads},
         {"per_episode", std::move(per)}};
  open_out(path) << j.dump(2) << "\n";
}

MetricsReport read_metrics_report(const std::string& path) {
  json j = read_json_file(path);
  MetricsReport r;
  r.split = j.at("split").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.checkpoint = j.at("checkpoint").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.fraction = j.at("fraction").get<double>();
  r.objects.precision = j.at("precision").get<double>();
  r.objects.recall = j.at("recall").get<double>();
  r.objects.f1 = j.at("f1").get<double>();
  r.relsim = j.at("relsim").get<double>();
  r.episodes = j.at("episodes").get<long>();
  r.intermediate_scene_reads = j.at("intermediate_scene_reads").get<long>();
  for (const json& e : j.at("per_episode")) {
    r.per_episode.push_back({e.at("id").get<int>(), e.at("f1").get<double>(),
                             e.at("relsim").get<double>()});
  }
  return r;
}

void write_explainer_report(const ExplainerReportFile& report, const std::string& path) {
  json j{{"ppl", report.quality.ppl},
         {"bleu", report.quality.bleu},
         {"token_accuracy", report.quality.token_accuracy},
         {"train_ppl_per_epoch", report.quality.train_ppl_per_epoch},
         {"seed", report.seed},
         {"fraction", report.fraction}};
  open_out(path) << j.dump(2) << "\n";
}

ExplainerReportFile read_explainer_report(const std::string& path) {
  json j = read_json_file(path);
  ExplainerReportFile r;
  r.quality.ppl = j.at("ppl").get<double>();
  r.quality.bleu = j.at("bleu").get<double>();
  r.quality.token_accuracy = j.at("token_accuracy").get<double>();
  r.quality.train_ppl_per_epoch = j.at("train_ppl_per_epoch").get<std::vector<double>>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.fraction = j.at("fraction").get<double>();
  return r;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty input");
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

PairedVerdict paired_verdict(const std::string& label, const std::vector<double>& a,
                             const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("paired_verdict: need equally sized, nonempty samples");
  }
  PairedVerdict v;
  v.label = label;
  v.mean_a = mean(a);
  v.mean_b = mean(b);
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) ++v.wins;
    else if (a[i] < b[i]) ++v.losses;
    else ++v.ties;
  }
  v.pass = v.mean_a > v.mean_b;
  return v;
}

std::string verdict_line(const PairedVerdict& v) {
  return v.label + ": " + (v.pass ? "PASS" : "FAIL") + " (mean " + format_double(v.mean_a) +
         " vs " + format_double(v.mean_b) + ", sign test " + std::to_string(v.wins) + "-" +
         std::to_string(v.losses) + "-" + std::to_string(v.ties) + " win-loss-tie)";
}

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<ChartSeries>& series) {
  constexpr int kW = 720, kH = 440;
  constexpr int kLeft = 70, kRight = 180, kTop = 50, kBottom = 55;
  const double plot_w = kW - kLeft - kRight;
  const double plot_h = kH - kTop - kBottom;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      if (std::isnan(y)) continue;
      if (!any) {
        xmin = xmax = x;
        ymin = ymax = y;
        any = true;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto sy = [&](double y) { return kTop + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h; };

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"};

  std::ofstream out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
      << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    double fx = xmin + (xmax - xmin) * i / 4.0;
    double fy = ymin + (ymax - ymin) * i / 4.0;
    out << "<line x1=\"" << sx(fx) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << sx(fx)
        << "\" y2=\"" << kTop + plot_h + 5 << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << sx(fx) << "\" y=\"" << kTop + plot_h + 20
        << "\" text-anchor=\"middle\" font-size=\"11\">" << format_double(fx) << "</text>\n";
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << sy(fy) << "\" x2=\"" << kLeft << "\" y2=\""
        << sy(fy) << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << kLeft - 9 << "\" y=\"" << sy(fy) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(fy) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << kTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << kTop + plot_h / 2 << ")\">" << y_label << "</text>\n";

  for (size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (auto [x, y] : series[i].points) {
      if (std::isnan(y)) continue;
      out << sx(x) << "," << sy(y) << " ";
    }
    out << "\"/>\n";
    for (auto [x, y] : series[i].points) {
      if (std::isnan(y)) continue;
      out << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"2.4\" fill=\"" << color
          << "\"/>\n";
    }
    const double ly = kTop + 16 + 20.0 * static_cast<double>(i);
    out << "<line x1=\"" << kLeft + plot_w + 14 << "\" y1=\"" << ly << "\" x2=\""
        << kLeft + plot_w + 38 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kLeft + plot_w + 44 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
        << series[i].name << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace sscr
