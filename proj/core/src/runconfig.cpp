#include "ramlab/runconfig.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ramlab/data.hpp"

namespace ramlab {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean for '" + key + "': " + v);
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("config file " + path + ": cannot open");
  RunConfig cfg;
  std::string line;
  long line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": expected key = value");
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "dataset") dataset = value;
  else if (key == "data_root") data_root = value;
  else if (key == "out") out_dir = value;
  else if (key == "variant") variant = value;
  else if (key == "glimpses") glimpses = std::stoi(value);
  else if (key == "patch") patch = std::stoi(value);
  else if (key == "scales") scales = std::stoi(value);
  else if (key == "scale_factor") scale_factor = std::stoi(value);
  else if (key == "baseline") baseline = value;
  else if (key == "context") context = parse_bool(value, key) ? 1 : 0;
  else if (key == "sigma") sigma = std::stod(value);
  else if (key == "hidden") hidden = std::stoi(value);
  else if (key == "alpha") alpha = std::stod(value);
  else if (key == "batch") batch = std::stoi(value);
  else if (key == "epochs") epochs = std::stoi(value);
  else if (key == "patience") patience = std::stoi(value);
  else if (key == "lr") lr = std::stod(value);
  else if (key == "lr_decay") lr_decay = std::stod(value);
  else if (key == "lr_patience") lr_patience = std::stoi(value);
  else if (key == "lr_floor") lr_floor = std::stod(value);
  else if (key == "clip") clip = std::stod(value);
  else if (key == "val_fraction") val_fraction = std::stod(value);
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "trace") trace = parse_bool(value, key);
  else if (key == "limit_train") limit_train = std::stoi(value);
  else
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

std::string RunConfig::resolved_baseline() const {
  if (baseline != "auto") return baseline;
  return variant == "mram" ? "hybrid" : "single";
}

bool RunConfig::resolved_context() const {
  if (context >= 0) return context != 0;
  return variant == "dram";
}

std::string RunConfig::serialize() const {
  std::ostringstream o;
  o << "dataset = " << dataset << "\n";
  o << "data_root = " << data_root << "\n";
  o << "out = " << out_dir << "\n";
  o << "variant = " << variant << "\n";
  o << "glimpses = " << glimpses << "\n";
  o << "patch = " << patch << "\n";
  o << "scales = " << scales << "\n";
  o << "scale_factor = " << scale_factor << "\n";
  o << "baseline = " << resolved_baseline() << "\n";
  o << "context = " << (resolved_context() ? 1 : 0) << "\n";
  o << "sigma = " << fmt(sigma) << "\n";
  o << "hidden = " << hidden << "\n";
  o << "alpha = " << fmt(alpha) << "\n";
  o << "batch = " << batch << "\n";
  o << "epochs = " << epochs << "\n";
  o << "patience = " << patience << "\n";
  o << "lr = " << fmt(lr) << "\n";
  o << "lr_decay = " << fmt(lr_decay) << "\n";
  o << "lr_patience = " << lr_patience << "\n";
  o << "lr_floor = " << fmt(lr_floor) << "\n";
  o << "clip = " << fmt(clip) << "\n";
  o << "val_fraction = " << fmt(val_fraction) << "\n";
  o << "seed = " << seed << "\n";
  o << "trace = " << (trace ? 1 : 0) << "\n";
  o << "limit_train = " << limit_train << "\n";
  return o.str();
}

std::string RunConfig::hash() const {
  // FNV-1a over the canonical snapshot, minus bookkeeping that does not
  // change the trained artifact (out dir, trace emission)
  std::string s = serialize();
  uint64_t h = 1469598103934665603ULL;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("out =", 0) == 0 || line.rfind("trace =", 0) == 0 ||
        line.rfind("data_root =", 0) == 0)
      continue;
    for (char c : line) {
      h ^= (unsigned char)c;
      h *= 1099511628211ULL;
    }
    h ^= (unsigned char)'\n';
    h *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

ModelSpec RunConfig::model_spec(int image_size, int num_classes) const {
  ModelSpec spec;
  spec.variant = variant_from_string(variant);
  spec.hidden = hidden;
  spec.num_glimpses = glimpses;
  spec.glimpse.patch_size = patch;
  spec.glimpse.num_scales = scales;
  spec.glimpse.scale_factor = scale_factor;
  spec.baseline = baseline_from_string(resolved_baseline());
  spec.context_cnn = resolved_context() && spec.variant == Variant::kDram;
  spec.num_classes = num_classes;
  spec.policy_sigma = sigma;
  spec.image_size = image_size;
  spec.validate();
  return spec;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.alpha = alpha;
  t.batch_size = batch;
  t.max_epochs = epochs;
  t.patience = patience;
  t.lr = lr;
  t.seed = seed;
  t.lr_decay = lr_decay;
  t.lr_patience = lr_patience;
  t.lr_floor = lr_floor;
  t.clip_norm = clip;
  t.val_fraction = val_fraction;
  t.validate();
  return t;
}

std::string RunConfig::model_tag() const {
  std::ostringstream o;
  o << variant << "-t" << glimpses << "-s" << scales;
  if (variant == "dram" && !resolved_context()) o << "-noctx";
  if (resolved_baseline() != (variant == "mram" ? "hybrid" : "single"))
    o << "-" << resolved_baseline();
  return o.str();
}

std::string resolve_data_root(const RunConfig& cfg) {
  if (cfg.data_root != "data" && !cfg.data_root.empty()) return cfg.data_root;
  if (const char* env = std::getenv("RAMLAB_DATA_ROOT"); env && *env) return env;
  return cfg.data_root;
}

}  // namespace ramlab
