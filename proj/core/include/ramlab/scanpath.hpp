#pragma once

#include <string>
#include <vector>

namespace ramlab {

// Ordered glimpse positions of one episode, in pixels.
struct ScanPath {
  std::vector<std::pair<double, double>> points;  // (x, y)
  long image_id = 0;
  int label = -1;
  std::string model_tag;
};

struct FixationRun {
  int start = 0;   // index of the first glimpse in the run
  int length = 0;  // duration in glimpses
};

// Greedy run segmentation: consecutive points closer than `threshold`
// pixels extend the current fixation; a jump of >= threshold starts a new
// one. An empty path yields no runs.
std::vector<FixationRun> segment_fixations(const ScanPath& path, double threshold);

// Euclidean distances between consecutive points (T-1 values).
std::vector<double> saccade_distances(const ScanPath& path);

// Gaussian kernel density estimate on a fixed grid:
// f(x) = 1/(N h) * sum_i phi((x - s_i)/h)
std::vector<double> kde(const std::vector<double>& samples, double bandwidth,
                        const std::vector<double>& grid);

// 1.06 * sigma-hat * N^(-1/5), floored away from zero for degenerate samples
double kde_rule_of_thumb_bandwidth(const std::vector<double>& samples);

std::vector<double> linspace(double lo, double hi, int n);

struct DensityCurve {
  std::string series;
  std::vector<double> grid;
  std::vector<double> value;
};

struct FixationReport {
  std::vector<int> fixation_durations;     // pooled across paths
  std::vector<double> saccade_dists;       // pooled across paths
  DensityCurve duration_density;
  DensityCurve distance_density;
  // summary statistics
  double mean_duration = 0, median_duration = 0;
  double mean_distance = 0;
  double frac_fix_and_jump = 0;  // fraction of paths with a run >= 2 and a jump >= jump_px
  int paths = 0;
  int glimpses_per_path = 0;
  std::string model_tag;
};

struct AnalyzeOptions {
  double threshold = 6.0;
  double bandwidth = 0;    // <= 0: rule-of-thumb per series
  double jump_px = 8.0;    // "long saccade" cutoff for the summary fraction
  bool per_class = false;  // additionally split densities by label
  int grid_points = 256;
};

// Aggregates fixation durations and saccade distances over a trace log.
// Per-path invariants (durations sum to T, T-1 saccades) are enforced on
// every record. When per_class is set, extra density curves tagged
// "<model>/class<k>" are appended after the pooled ones.
struct AnalyzeResult {
  FixationReport report;
  std::vector<DensityCurve> extra_curves;
};

AnalyzeResult analyze_trace_log(const std::string& trace_log_path, const AnalyzeOptions& opt);

// Report emission: durations table, distances table, density-curve table,
// and a human-readable summary.
void write_duration_table(const std::string& path, const FixationReport& rep);
void write_distance_table(const std::string& path, const FixationReport& rep);
void write_density_table(const std::string& path, const FixationReport& rep,
                         const std::vector<DensityCurve>& extra);
std::string summary_text(const FixationReport& rep, const AnalyzeOptions& opt);

}  // namespace ramlab
