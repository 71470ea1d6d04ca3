#include "ramlab/tracelog.hpp"

#include <fstream>

#include <json.hpp>

#include "ramlab/data.hpp"
#include "ramlab/glimpse.hpp"

namespace ramlab {

using nlohmann::json;

void write_trace_log(const std::string& path, const std::vector<EpisodeTrace>& traces,
                     const std::string& model_tag, bool append) {
  std::ofstream f(path, append ? std::ios::app : std::ios::trunc);
  if (!f) throw DataError(path + ": cannot open for write");
  for (const auto& t : traces) {
    json steps = json::array();
    for (size_t i = 0; i < t.locations.size(); ++i) {
      auto [px, py] = to_pixel(t.locations[i], t.image_size);
      steps.push_back({(int)i + 1, t.locations[i].x, t.locations[i].y, px, py, t.baselines[i]});
    }
    json rec{{"image_id", t.image_id}, {"label", t.label},   {"prediction", t.prediction},
             {"reward", t.reward},     {"model", model_tag}, {"image_size", t.image_size},
             {"steps", steps}};
    f << rec.dump() << "\n";
  }
}

std::vector<TraceRecord> read_trace_log(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError(path + ": cannot open");
  std::vector<TraceRecord> out;
  std::string line;
  long line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    TraceRecord tr;
    tr.trace.image_id = rec.at("image_id").get<long>();
    tr.trace.label = rec.at("label").get<int>();
    tr.trace.prediction = rec.at("prediction").get<int>();
    tr.trace.reward = rec.at("reward").get<double>();
    tr.trace.image_size = rec.at("image_size").get<int>();
    tr.model_tag = rec.at("model").get<std::string>();
    for (const auto& s : rec.at("steps")) {
      tr.trace.locations.push_back({s.at(1).get<double>(), s.at(2).get<double>()});
      tr.pixels.emplace_back(s.at(3).get<double>(), s.at(4).get<double>());
      tr.trace.baselines.push_back(s.at(5).get<double>());
    }
    out.push_back(std::move(tr));
  }
  return out;
}

}  // namespace ramlab
