// ramlab — train and probe recurrent hard-attention classifiers
// (RAM / DRAM / MRAM) and analyze the gaze policies they learn.
//
// Subcommands: train, eval, trace, analyze, compare.
// Exit codes: 0 ok, 64 usage, 65 data, 70 numeric/internal.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "ramlab/checkpoint.hpp"
#include "ramlab/data.hpp"
#include "ramlab/models.hpp"
#include "ramlab/runconfig.hpp"
#include "ramlab/scanpath.hpp"
#include "ramlab/tracelog.hpp"
#include "ramlab/training.hpp"

namespace fs = std::filesystem;
using namespace ramlab;

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitNumeric = 70;

struct LoadedData {
  Dataset train, val, test;
};

// mnist / fashion_mnist: IDX pairs under <root>/<name>/;
// fer2013: <root>/fer2013/fer2013.csv with PublicTest as validation and
// PrivateTest as test.
LoadedData load_dataset(const RunConfig& cfg) {
  std::string root = resolve_data_root(cfg);
  LoadedData out;
  if (cfg.dataset == "mnist" || cfg.dataset == "fashion_mnist") {
    std::string dir = root + "/" + cfg.dataset;
    Dataset full = load_idx(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte");
    out.test = load_idx(dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte");
    full.meta.name = cfg.dataset;
    out.test.meta.name = cfg.dataset + "/test";
    auto split = split_train_val(full, cfg.val_fraction, cfg.seed);
    out.train = std::move(split.train);
    out.val = std::move(split.val);
  } else if (cfg.dataset == "fer2013") {
    FerSplits fer = load_fer_csv(root + "/fer2013/fer2013.csv");
    out.train = std::move(fer.train);
    out.val = std::move(fer.public_test);
    out.test = std::move(fer.private_test);
  } else {
    throw std::invalid_argument("unknown dataset '" + cfg.dataset + "'");
  }
  if (cfg.limit_train > 0 && cfg.limit_train < out.train.size()) {
    std::vector<int> idx(cfg.limit_train);
    for (int i = 0; i < cfg.limit_train; ++i) idx[i] = i;
    out.train = out.train.slice(idx);
  }
  int classes = std::max(out.train.meta.num_classes, out.test.meta.num_classes);
  out.train.meta.num_classes = out.val.meta.num_classes = out.test.meta.num_classes = classes;
  normalize(out.train, {&out.val, &out.test});
  return out;
}

std::string timestamp_utc() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", std::gmtime(&t));
  return buf;
}

RunConfig config_from_cli(const std::string& config_path,
                          const std::vector<std::string>& sets) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = RunConfig::from_file(config_path);
  for (const auto& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw DataError(path + ": cannot open for write");
  f << text;
}

// Full-dataset classifier used as the parameter/accuracy reference point.
struct LenetRun {
  LeNet<float> net;
  AdamState<float> adam;
  std::vector<Parameter<float>*> params;

  LenetRun(int image_size, int classes, double lr) : net("lenet", image_size, classes) {
    net.collect(params);
    adam.lr = (float)lr;
    adam.attach(params);
  }

  std::pair<double, double> train_epoch(const Dataset& data, const TrainConfig& cfg, int epoch) {
    Rng shuffle = Rng::substream(cfg.seed, {kStreamShuffle, (uint64_t)epoch});
    auto batches = epoch_batches(data.size(), cfg.batch_size, shuffle);
    double loss_sum = 0;
    long correct = 0;
    for (const auto& idx : batches) {
      const int B = (int)idx.size();
      RowMat<float> images(B, data.images.cols());
      std::vector<int> labels(B);
      for (int i = 0; i < B; ++i) {
        images.row(i) = data.images.row(idx[i]);
        labels[i] = data.labels[idx[i]];
      }
      for (auto* p : params) p->zero_grad();
      Graph<float> g;
      int logits = net.forward(g, images);
      int loss = g.mean_all(g.pick_nll(g.log_softmax_rows(logits), labels));
      g.backward(loss);
      clip_grad_norm(params, cfg.clip_norm);
      adam_update(params, adam);
      loss_sum += (double)g.value(loss)(0, 0) * B;
      const auto& lg = g.value(logits);
      for (int i = 0; i < B; ++i) {
        int pred = 0;
        for (int c = 1; c < (int)lg.cols(); ++c)
          if (lg(i, c) > lg(i, pred)) pred = c;
        if (pred == labels[i]) ++correct;
      }
    }
    return {loss_sum / data.size(), (double)correct / data.size()};
  }

  double accuracy(const Dataset& data) {
    long correct = 0;
    for (int at = 0; at < data.size(); at += 512) {
      int B = std::min(512, data.size() - at);
      RowMat<float> images(B, data.images.cols());
      for (int i = 0; i < B; ++i) images.row(i) = data.images.row(at + i);
      Graph<float> g;
      int logits = net.forward(g, images);
      const auto& lg = g.value(logits);
      for (int i = 0; i < B; ++i) {
        int pred = 0;
        for (int c = 1; c < (int)lg.cols(); ++c)
          if (lg(i, c) > lg(i, pred)) pred = c;
        if (pred == data.labels[at + i]) ++correct;
      }
    }
    return (double)correct / data.size();
  }

  long param_count() const {
    long n = 0;
    for (auto* p : params) n += p->size();
    return n;
  }
};

int cmd_train(const RunConfig& cfg, std::string run_dir, bool resume) {
  LoadedData data = load_dataset(cfg);
  ModelSpec spec = cfg.model_spec(data.train.meta.height, data.train.meta.num_classes);
  TrainConfig tc = cfg.train_config();

  if (run_dir.empty())
    run_dir = cfg.out_dir + "/" + timestamp_utc() + "-" + cfg.hash();
  fs::create_directories(run_dir);
  write_file(run_dir + "/config.txt", cfg.serialize());
  std::printf("run dir: %s\n", run_dir.c_str());
  std::printf("dataset: %s (train %d / val %d / test %d, %dx%d, %d classes)\n",
              cfg.dataset.c_str(), data.train.size(), data.val.size(), data.test.size(),
              data.train.meta.height, data.train.meta.width, data.train.meta.num_classes);

  std::string metrics_path = run_dir + "/metrics.tsv";
  std::string best_path = run_dir + "/best.ckpt";
  std::string last_path = run_dir + "/last.ckpt";

  if (cfg.variant == "lenet") {
    LenetRun run(spec.image_size, spec.num_classes, tc.lr);
    Rng init = Rng::substream(tc.seed, {kStreamInit});
    run.net.init(init);
    std::printf("lenet parameters: %ld\n", run.param_count());
    std::ofstream mf(metrics_path, std::ios::trunc);
    double best = -1;
    int best_epoch = -1, flat = 0, lr_flat = 0;
    for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
      auto t0 = std::chrono::steady_clock::now();
      auto [loss, acc] = run.train_epoch(data.train, tc, epoch);
      double val = run.accuracy(data.val);
      EpochStats st{epoch, loss, acc, val, (double)run.adam.lr,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
      mf << metric_line(st) << "\n";
      mf.flush();
      std::printf("%s\n", metric_line(st).c_str());
      std::fflush(stdout);
      if (val > best) {
        best = val;
        best_epoch = epoch;
        flat = lr_flat = 0;
        std::ofstream bf(run_dir + "/lenet_best.bin", std::ios::binary);
        for (auto* p : run.params)
          bf.write(reinterpret_cast<const char*>(p->value.data()),
                   (std::streamsize)(p->value.size() * sizeof(float)));
      } else {
        ++flat;
        ++lr_flat;
        if (lr_flat >= tc.lr_patience) {
          run.adam.lr = (float)std::max((double)run.adam.lr * tc.lr_decay, tc.lr_floor);
          lr_flat = 0;
        }
      }
      if (flat >= tc.patience) break;
    }
    // restore best weights and report test accuracy
    {
      std::ifstream bf(run_dir + "/lenet_best.bin", std::ios::binary);
      if (bf)
        for (auto* p : run.params)
          bf.read(reinterpret_cast<char*>(p->value.data()),
                  (std::streamsize)(p->value.size() * sizeof(float)));
    }
    auto t0 = std::chrono::steady_clock::now();
    double test = run.accuracy(data.test);
    double ms = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() *
                1000.0 / data.test.size();
    std::printf("best val %.4f (epoch %d), test %.4f, %.3f ms/image\n", best, best_epoch, test,
                ms);
    write_file(run_dir + "/result.txt",
               "best_val_acc: " + std::to_string(best) + "\ntest_acc: " + std::to_string(test) +
                   "\nparams: " + std::to_string(run.param_count()) +
                   "\nms_per_image: " + std::to_string(ms) + "\n");
    return 0;
  }

  AttentionModel<float> model(spec);
  Trainer<float> trainer(model, tc);
  FitState fstate;
  std::unique_ptr<std::ofstream> mf;
  if (resume && fs::exists(last_path)) {
    auto loaded = load_checkpoint(last_path);
    if (spec_to_json(loaded.spec) != spec_to_json(spec))
      throw DataError("resume: checkpoint spec differs from config");
    auto params = model.parameters();
    auto lparams = loaded.model->parameters();
    for (size_t i = 0; i < params.size(); ++i) params[i]->value = lparams[i]->value;
    if (loaded.has_adam) {
      trainer.adam = loaded.adam;
      trainer.adam.attach(params);
      auto lp = loaded.model->parameters();
      trainer.adam.m = loaded.adam.m;
      trainer.adam.v = loaded.adam.v;
    }
    fstate.epoch = loaded.train.epoch;
    fstate.best_val_acc = loaded.train.best_val_acc;
    fstate.best_epoch = loaded.train.best_epoch;
    fstate.flat_epochs = loaded.train.flat_epochs;
    fstate.lr_flat_epochs = loaded.train.lr_flat_epochs;
    mf = std::make_unique<std::ofstream>(metrics_path, std::ios::app);
    std::printf("resuming after epoch %d (best val %.4f @ %d)\n", fstate.epoch,
                fstate.best_val_acc, fstate.best_epoch);
  } else {
    Rng init = Rng::substream(tc.seed, {kStreamInit});
    model.init(init);
    mf = std::make_unique<std::ofstream>(metrics_path, std::ios::trunc);
  }
  std::printf("model: %s, %ld parameters (%.3fM)\n", cfg.model_tag().c_str(),
              model.param_count(), model.param_count() / 1e6);
  std::fflush(stdout);

  auto on_epoch = [&](const EpochStats& st) {
    *mf << metric_line(st) << "\n";
    mf->flush();
    std::printf("%s\n", metric_line(st).c_str());
    std::fflush(stdout);
    TrainState ts{fstate.epoch, fstate.best_val_acc, fstate.best_epoch, fstate.flat_epochs,
                  fstate.lr_flat_epochs};
    save_checkpoint(last_path, model, &trainer.adam, &ts);
  };
  auto on_best = [&](int epoch, double val) {
    TrainState ts{epoch, val, epoch, 0, 0};
    save_checkpoint(best_path, model, nullptr, &ts);
  };

  FitResult res = fit(trainer, data.train, data.val, on_epoch, on_best, &fstate);
  std::printf("finished after %d epochs; best val %.4f at epoch %d%s\n", res.epochs_run,
              res.best_val_acc, res.best_epoch, res.early_stopped ? " (early stop)" : "");

  // test accuracy of the retained best checkpoint
  auto best = load_checkpoint(best_path);
  EvalReport rep = evaluate(*best.model, data.test, tc.seed);
  std::printf("test accuracy %.4f, %.3f ms/image, %ld params\n", rep.accuracy, rep.ms_per_image,
              rep.param_count);
  write_file(run_dir + "/result.txt",
             "best_val_acc: " + std::to_string(res.best_val_acc) +
                 "\nbest_epoch: " + std::to_string(res.best_epoch) +
                 "\nepochs_run: " + std::to_string(res.epochs_run) +
                 "\ntest_acc: " + std::to_string(rep.accuracy) +
                 "\nparams: " + std::to_string(rep.param_count) +
                 "\nms_per_image: " + std::to_string(rep.ms_per_image) + "\n");

  if (cfg.trace) {
    std::vector<EpisodeTrace> traces;
    Trainer<float> btr(*best.model, tc);
    for (int at = 0; at < data.test.size(); at += 256) {
      int B = std::min(256, data.test.size() - at);
      RowMat<float> images(B, data.test.images.cols());
      std::vector<int> labels(B);
      std::vector<long> ids(B);
      std::vector<Rng> streams;
      for (int i = 0; i < B; ++i) {
        images.row(i) = data.test.images.row(at + i);
        labels[i] = data.test.labels[at + i];
        ids[i] = at + i;
        streams.push_back(Rng::substream(tc.seed, {kStreamEval, (uint64_t)(at + i)}));
      }
      Graph<float> g;
      auto br = rollout_batch(g, *best.model, images, labels, ids, streams, tc.alpha, false);
      for (auto& t : br.traces) traces.push_back(std::move(t));
    }
    write_trace_log(run_dir + "/traces.jsonl", traces, cfg.model_tag());
    std::printf("wrote %zu trace records\n", traces.size());
  }
  return 0;
}

int cmd_eval(const std::string& run_dir, const std::string& split, const std::string& ckpt_name) {
  RunConfig cfg = RunConfig::from_file(run_dir + "/config.txt");
  LoadedData data = load_dataset(cfg);
  const Dataset& ds = split == "val" ? data.val : (split == "train" ? data.train : data.test);
  auto loaded = load_checkpoint(run_dir + "/" + ckpt_name);
  EvalReport rep = evaluate(*loaded.model, ds, cfg.seed);
  long count = param_count<float>(loaded.spec);
  std::printf("checkpoint: %s\nsplit: %s\nimages: %d\naccuracy: %.4f\nparams: %ld (%.3fM)\n"
              "ms_per_image: %.3f\n",
              (run_dir + "/" + ckpt_name).c_str(), split.c_str(), rep.images, rep.accuracy,
              count, count / 1e6, rep.ms_per_image);
  if (count != rep.param_count) {
    std::fprintf(stderr, "param_count mismatch: spec %ld vs model %ld\n", count,
                 rep.param_count);
    return kExitNumeric;
  }
  return 0;
}

int cmd_trace(const std::string& run_dir, const std::string& split, int n_images,
              std::string out_path, const std::string& ckpt_name) {
  RunConfig cfg = RunConfig::from_file(run_dir + "/config.txt");
  LoadedData data = load_dataset(cfg);
  const Dataset& ds = split == "val" ? data.val : (split == "train" ? data.train : data.test);
  auto loaded = load_checkpoint(run_dir + "/" + ckpt_name);
  TrainConfig tc = cfg.train_config();
  int n = n_images > 0 ? std::min(n_images, ds.size()) : ds.size();
  if (out_path.empty()) out_path = run_dir + "/traces.jsonl";

  std::vector<EpisodeTrace> traces;
  for (int at = 0; at < n; at += 256) {
    int B = std::min(256, n - at);
    RowMat<float> images(B, ds.images.cols());
    std::vector<int> labels(B);
    std::vector<long> ids(B);
    std::vector<Rng> streams;
    for (int i = 0; i < B; ++i) {
      images.row(i) = ds.images.row(at + i);
      labels[i] = ds.labels[at + i];
      ids[i] = at + i;
      streams.push_back(Rng::substream(tc.seed, {kStreamEval, (uint64_t)(at + i)}));
    }
    Graph<float> g;
    auto br = rollout_batch(g, *loaded.model, images, labels, ids, streams, tc.alpha, false);
    for (auto& t : br.traces) traces.push_back(std::move(t));
  }
  write_trace_log(out_path, traces, cfg.model_tag());
  std::printf("wrote %zu trace records to %s\n", traces.size(), out_path.c_str());
  return 0;
}

int cmd_analyze(const std::string& trace_path, double threshold, double bandwidth,
                double jump_px, bool per_class, std::string out_dir) {
  AnalyzeOptions opt;
  opt.threshold = threshold;
  opt.bandwidth = bandwidth;
  opt.jump_px = jump_px;
  opt.per_class = per_class;
  AnalyzeResult res = analyze_trace_log(trace_path, opt);
  if (out_dir.empty()) out_dir = fs::path(trace_path).parent_path().string();
  if (out_dir.empty()) out_dir = ".";
  fs::create_directories(out_dir);
  write_duration_table(out_dir + "/durations.tsv", res.report);
  write_distance_table(out_dir + "/distances.tsv", res.report);
  write_density_table(out_dir + "/density.tsv", res.report, res.extra_curves);
  std::string summary = summary_text(res.report, opt);
  write_file(out_dir + "/summary.txt", summary);
  std::printf("%s", summary.c_str());
  return 0;
}

struct CompareCell {
  RunConfig cfg;
  std::string tag;
};

int cmd_compare(const std::string& base_config, const std::string& cells_path,
                const std::string& out_path, bool train_missing,
                const std::vector<std::string>& sets) {
  RunConfig base = config_from_cli(base_config, sets);
  std::ifstream f(cells_path);
  if (!f) throw DataError(cells_path + ": cannot open");
  std::vector<CompareCell> cells;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    CompareCell cell{base, ""};
    std::istringstream in(line);
    std::string kv;
    while (std::getline(in, kv, ',')) {
      auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument(cells_path + ": expected key=value items, got '" + kv + "'");
      std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
      if (key == "tag") cell.tag = value;
      else cell.cfg.set(key, value);
    }
    if (cell.tag.empty()) cell.tag = cell.cfg.model_tag();
    cells.push_back(std::move(cell));
  }

  std::ofstream out(out_path);
  if (!out) throw DataError(out_path + ": cannot open for write");
  out << "tag\tvariant\tglimpses\tscales\tparams_m\tinfer_ms_per_image\taccuracy\n";
  for (auto& cell : cells) {
    std::string run_dir = cell.cfg.out_dir + "/cell-" + cell.cfg.hash();
    if (!fs::exists(run_dir + "/best.ckpt") && cell.cfg.variant != "lenet") {
      if (!train_missing) {
        std::printf("[%s] missing %s (pass --train-missing to train)\n", cell.tag.c_str(),
                    run_dir.c_str());
        continue;
      }
      std::printf("[%s] training into %s\n", cell.tag.c_str(), run_dir.c_str());
      cmd_train(cell.cfg, run_dir, /*resume=*/fs::exists(run_dir + "/last.ckpt"));
    } else if (cell.cfg.variant == "lenet" && !fs::exists(run_dir + "/result.txt")) {
      if (!train_missing) {
        std::printf("[%s] missing %s (pass --train-missing to train)\n", cell.tag.c_str(),
                    run_dir.c_str());
        continue;
      }
      cmd_train(cell.cfg, run_dir, false);
    } else {
      std::printf("[%s] using cached %s\n", cell.tag.c_str(), run_dir.c_str());
    }

    LoadedData data = load_dataset(cell.cfg);
    if (cell.cfg.variant == "lenet") {
      // lenet rows read the recorded result (weights live in its own format)
      std::ifstream rf(run_dir + "/result.txt");
      double acc = 0, ms = 0;
      long params = 0;
      std::string k;
      while (rf >> k) {
        if (k == "test_acc:") rf >> acc;
        else if (k == "params:") rf >> params;
        else if (k == "ms_per_image:") rf >> ms;
        else rf.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
      }
      char row[256];
      std::snprintf(row, sizeof row, "%s\t%s\t%d\t%d\t%.3f\t%.3f\t%.4f", cell.tag.c_str(),
                    cell.cfg.variant.c_str(), cell.cfg.glimpses, cell.cfg.scales, params / 1e6,
                    ms, acc);
      out << row << "\n";
      continue;
    }
    auto loaded = load_checkpoint(run_dir + "/best.ckpt");
    EvalReport rep = evaluate(*loaded.model, data.test, cell.cfg.seed);
    char row[256];
    std::snprintf(row, sizeof row, "%s\t%s\t%d\t%d\t%.3f\t%.3f\t%.4f", cell.tag.c_str(),
                  cell.cfg.variant.c_str(), cell.cfg.glimpses, cell.cfg.scales,
                  rep.param_count / 1e6, rep.ms_per_image, rep.accuracy);
    out << row << "\n";
    out.flush();
  }
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recurrent hard-attention laboratory"};
  app.require_subcommand(1);

  std::string config_path, run_dir, split = "test", ckpt = "best.ckpt", out_path, trace_path;
  std::vector<std::string> sets;
  bool resume = false, train_missing = false, per_class = false;
  int n_images = 0;
  double threshold = 6.0, bandwidth = 0.0, jump_px = 8.0;
  std::string cells_path, table_path = "compare.tsv";

  auto* tr = app.add_subcommand("train", "train a model per config");
  tr->add_option("--config", config_path, "config file (key = value lines)");
  tr->add_option("--set", sets, "override config entries, key=value")->take_all();
  tr->add_option("--run-dir", run_dir, "run directory (default: <out>/<stamp>-<hash>)");
  tr->add_flag("--resume", resume, "resume from <run-dir>/last.ckpt if present");

  auto* ev = app.add_subcommand("eval", "evaluate a run's checkpoint");
  ev->add_option("--run", run_dir, "run directory")->required();
  ev->add_option("--split", split, "train | val | test (default test)");
  ev->add_option("--ckpt", ckpt, "checkpoint file name (default best.ckpt)");

  auto* tc = app.add_subcommand("trace", "write an episode trace log");
  tc->add_option("--run", run_dir, "run directory")->required();
  tc->add_option("--split", split, "train | val | test (default test)");
  tc->add_option("--n", n_images, "number of images (default: whole split)");
  tc->add_option("--out", out_path, "output path (default <run>/traces.jsonl)");
  tc->add_option("--ckpt", ckpt, "checkpoint file name (default best.ckpt)");

  auto* an = app.add_subcommand("analyze", "fixation/saccade statistics of a trace log");
  an->add_option("--trace", trace_path, "trace log (jsonl)")->required();
  an->add_option("--threshold", threshold, "fixation threshold in pixels (default 6)");
  an->add_option("--bandwidth", bandwidth, "KDE bandwidth (default: rule of thumb)");
  an->add_option("--jump-px", jump_px, "long-saccade cutoff for the summary (default 8)");
  an->add_flag("--per-class", per_class, "also emit per-class density curves");
  an->add_option("--out-dir", out_path, "report directory (default: alongside the log)");

  auto* cp = app.add_subcommand("compare", "run/evaluate a matrix of model cells");
  cp->add_option("--config", config_path, "base config file");
  cp->add_option("--set", sets, "base config overrides")->take_all();
  cp->add_option("--cells", cells_path, "cell list, one comma-separated key=value row per line")
      ->required();
  cp->add_option("--out", table_path, "output table (tsv)");
  cp->add_flag("--train-missing", train_missing, "train cells with no cached checkpoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (tr->parsed()) return cmd_train(config_from_cli(config_path, sets), run_dir, resume);
    if (ev->parsed()) return cmd_eval(run_dir, split, ckpt);
    if (tc->parsed()) return cmd_trace(run_dir, split, n_images, out_path, ckpt);
    if (an->parsed()) return cmd_analyze(trace_path, threshold, bandwidth, jump_px, per_class,
                                         out_path);
    if (cp->parsed()) return cmd_compare(config_path, cells_path, table_path, train_missing,
                                         sets);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
  return kExitUsage;
}
