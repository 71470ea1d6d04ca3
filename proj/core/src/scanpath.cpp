#include "ramlab/scanpath.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "ramlab/data.hpp"
#include "ramlab/tracelog.hpp"

namespace ramlab {

namespace {
double dist(const std::pair<double, double>& a, const std::pair<double, double>& b) {
  return std::hypot(a.first - b.first, a.second - b.second);
}
}  // namespace

std::vector<FixationRun> segment_fixations(const ScanPath& path, double threshold) {
  if (threshold <= 0) throw std::invalid_argument("segment_fixations: threshold must be > 0");
  std::vector<FixationRun> runs;
  if (path.points.empty()) return runs;
  FixationRun cur{0, 1};
  for (size_t i = 1; i < path.points.size(); ++i) {
    if (dist(path.points[i - 1], path.points[i]) < threshold) {
      ++cur.length;
    } else {
      runs.push_back(cur);
      cur = {(int)i, 1};
    }
  }
  runs.push_back(cur);
  return runs;
}

std::vector<double> saccade_distances(const ScanPath& path) {
  std::vector<double> out;
  for (size_t i = 1; i < path.points.size(); ++i)
    out.push_back(dist(path.points[i - 1], path.points[i]));
  return out;
}

std::vector<double> kde(const std::vector<double>& samples, double bandwidth,
                        const std::vector<double>& grid) {
  if (samples.empty()) throw std::invalid_argument("kde: no samples");
  if (bandwidth <= 0) throw std::invalid_argument("kde: bandwidth must be > 0");
  const double norm = 1.0 / (samples.size() * bandwidth * std::sqrt(2.0 * M_PI));
  std::vector<double> out(grid.size(), 0.0);
  for (size_t i = 0; i < grid.size(); ++i) {
    double acc = 0;
    for (double s : samples) {
      double z = (grid[i] - s) / bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    out[i] = acc * norm;
  }
  return out;
}

double kde_rule_of_thumb_bandwidth(const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("bandwidth: no samples");
  double n = (double)samples.size();
  double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double var = 0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= n;
  double sigma = std::sqrt(var);
  double h = 1.06 * sigma * std::pow(n, -0.2);
  return h > 1e-9 ? h : 0.1;  // degenerate (constant) samples
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  return out;
}

namespace {

DensityCurve density_for(const std::vector<double>& samples, double bandwidth,
                         const std::string& series, int grid_points) {
  DensityCurve c;
  c.series = series;
  if (samples.empty()) return c;
  double h = bandwidth > 0 ? bandwidth : kde_rule_of_thumb_bandwidth(samples);
  auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  c.grid = linspace(*mn - 5 * h, *mx + 5 * h, grid_points);
  c.value = kde(samples, h, c.grid);
  return c;
}

}  // namespace

AnalyzeResult analyze_trace_log(const std::string& trace_log_path, const AnalyzeOptions& opt) {
  auto records = read_trace_log(trace_log_path);
  if (records.empty()) throw DataError(trace_log_path + ": no trace records");

  AnalyzeResult res;
  FixationReport& rep = res.report;
  rep.model_tag = records.front().model_tag;
  rep.paths = (int)records.size();
  rep.glimpses_per_path = (int)records.front().pixels.size();

  std::map<int, std::vector<double>> dur_by_class, dist_by_class;
  long both = 0;
  for (const auto& r : records) {
    ScanPath path{r.pixels, r.trace.image_id, r.trace.label, r.model_tag};
    auto runs = segment_fixations(path, opt.threshold);
    auto dists = saccade_distances(path);
    int total = 0;
    for (const auto& run : runs) total += run.length;
    if (total != (int)path.points.size())
      throw std::logic_error("fixation durations do not sum to the path length");
    if (dists.size() + 1 != path.points.size())
      throw std::logic_error("saccade count != T-1");
    bool has_fix = false, has_jump = false;
    for (const auto& run : runs) {
      rep.fixation_durations.push_back(run.length);
      if (opt.per_class) dur_by_class[r.trace.label].push_back((double)run.length);
      if (run.length >= 2) has_fix = true;
    }
    for (double d : dists) {
      rep.saccade_dists.push_back(d);
      if (opt.per_class) dist_by_class[r.trace.label].push_back(d);
      if (d >= opt.jump_px) has_jump = true;
    }
    if (has_fix && has_jump) ++both;
  }

  std::vector<double> durs(rep.fixation_durations.begin(), rep.fixation_durations.end());
  rep.mean_duration = std::accumulate(durs.begin(), durs.end(), 0.0) / durs.size();
  {
    std::vector<double> sorted = durs;
    std::sort(sorted.begin(), sorted.end());
    size_t n = sorted.size();
    rep.median_duration = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  }
  rep.mean_distance = rep.saccade_dists.empty()
                          ? 0.0
                          : std::accumulate(rep.saccade_dists.begin(), rep.saccade_dists.end(),
                                            0.0) / rep.saccade_dists.size();
  rep.frac_fix_and_jump = (double)both / rep.paths;

  rep.duration_density =
      density_for(durs, opt.bandwidth, rep.model_tag + "/durations", opt.grid_points);
  if (!rep.saccade_dists.empty())
    rep.distance_density =
        density_for(rep.saccade_dists, opt.bandwidth, rep.model_tag + "/distances",
                    opt.grid_points);

  if (opt.per_class) {
    for (auto& [cls, vals] : dur_by_class)
      res.extra_curves.push_back(density_for(
          vals, opt.bandwidth, rep.model_tag + "/class" + std::to_string(cls) + "/durations",
          opt.grid_points));
    for (auto& [cls, vals] : dist_by_class)
      res.extra_curves.push_back(density_for(
          vals, opt.bandwidth, rep.model_tag + "/class" + std::to_string(cls) + "/distances",
          opt.grid_points));
  }
  return res;
}

void write_duration_table(const std::string& path, const FixationReport& rep) {
  std::ofstream f(path);
  if (!f) throw DataError(path + ": cannot open for write");
  f << "series\tduration\n";
  for (int d : rep.fixation_durations) f << rep.model_tag << "\t" << d << "\n";
}

void write_distance_table(const std::string& path, const FixationReport& rep) {
  std::ofstream f(path);
  if (!f) throw DataError(path + ": cannot open for write");
  f << "series\tdistance\n";
  char buf[64];
  for (double d : rep.saccade_dists) {
    std::snprintf(buf, sizeof buf, "%.6f", d);
    f << rep.model_tag << "\t" << buf << "\n";
  }
}

void write_density_table(const std::string& path, const FixationReport& rep,
                         const std::vector<DensityCurve>& extra) {
  std::ofstream f(path);
  if (!f) throw DataError(path + ": cannot open for write");
  f << "series\tgrid\tdensity\n";
  char buf[96];
  auto emit = [&](const DensityCurve& c) {
    for (size_t i = 0; i < c.grid.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s\t%.6f\t%.9f", c.series.c_str(), c.grid[i], c.value[i]);
      f << buf << "\n";
    }
  };
  emit(rep.duration_density);
  emit(rep.distance_density);
  for (const auto& c : extra) emit(c);
}

std::string summary_text(const FixationReport& rep, const AnalyzeOptions& opt) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "model: %s\n"
                "paths: %d\n"
                "glimpses_per_path: %d\n"
                "fixation_threshold_px: %.3f\n"
                "fixation_runs: %zu\n"
                "mean_fixation_duration: %.4f\n"
                "median_fixation_duration: %.4f\n"
                "saccades: %zu\n"
                "mean_saccade_distance_px: %.4f\n"
                "frac_paths_with_fixation_and_jump: %.4f\n"
                "jump_cutoff_px: %.3f\n",
                rep.model_tag.c_str(), rep.paths, rep.glimpses_per_path, opt.threshold,
                rep.fixation_durations.size(), rep.mean_duration, rep.median_duration,
                rep.saccade_dists.size(), rep.mean_distance, rep.frac_fix_and_jump, opt.jump_px);
  return buf;
}

}  // namespace ramlab
