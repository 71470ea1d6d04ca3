#pragma once

#include <string>
#include <vector>

#include "ramlab/training.hpp"

namespace ramlab {

// Episode traces travel between tools as JSON-lines: one record per image,
//   {"image_id":..,"label":..,"prediction":..,"reward":..,"model":"..",
//    "image_size":..,"steps":[[t,loc_x,loc_y,pixel_x,pixel_y,baseline],..]}
// pixel coordinates are derived from the normalized ones at write time.
void write_trace_log(const std::string& path, const std::vector<EpisodeTrace>& traces,
                     const std::string& model_tag, bool append = false);

struct TraceRecord {
  EpisodeTrace trace;
  std::string model_tag;
  std::vector<std::pair<double, double>> pixels;  // (x, y) per step
};

std::vector<TraceRecord> read_trace_log(const std::string& path);

}  // namespace ramlab
