#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sscr/train.hpp"

namespace sscr {

// Shortest stable decimal rendering (printf %.10g); NaN renders as the empty
// string so re-runs stay byte-identical and gaps stay visibly blank.
std::string format_double(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Columns: iteration, l_g, l_d, l_e, l_e_cf.
void write_curves_csv(const std::string& path, const std::vector<CurveRow>& rows);

// Evaluation result plus the run identity it belongs to.
struct MetricsReport {
  std::string split;
  std::string mode;  // "baseline" / "ctc" / "sscr" / "oracle"
  std::string checkpoint;
  std::uint64_t seed = 0;
  double fraction = 1.0;
  F1Score objects;
  double relsim = 0.0;
  long episodes = 0;
  long intermediate_scene_reads = 0;
  std::vector<EpisodeEval> per_episode;
};

MetricsReport make_metrics_report(const EvalResult& eval, const std::string& split,
                                  const std::string& mode, const std::string& checkpoint,
                                  std::uint64_t seed, double fraction);
void write_metrics_report(const MetricsReport& report, const std::string& path);
MetricsReport read_metrics_report(const std::string& path);

struct ExplainerReportFile {
  ExplainerQuality quality;
  std::uint64_t seed = 0;
  double fraction = 1.0;
};
void write_explainer_report(const ExplainerReportFile& report, const std::string& path);
ExplainerReportFile read_explainer_report(const std::string& path);

double mean(const std::vector<double>& xs);
double sample_stddev(const std::vector<double>& xs);  // 0 for fewer than two points

// Paired per-seed comparison; `pass` when the mean strictly favors side a.
struct PairedVerdict {
  std::string label;
  double mean_a = 0.0;
  double mean_b = 0.0;
  int wins = 0;
  int losses = 0;
  int ties = 0;
  bool pass = false;
};
PairedVerdict paired_verdict(const std::string& label, const std::vector<double>& a,
                             const std::vector<double>& b);
std::string verdict_line(const PairedVerdict& v);

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;  // NaN y values are skipped
};

// Self-contained SVG line chart with axes, ticks and a legend.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<ChartSeries>& series);

}  // namespace sscr
