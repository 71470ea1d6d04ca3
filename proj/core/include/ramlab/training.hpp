#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramlab/data.hpp"
#include "ramlab/models.hpp"
#include "ramlab/nn.hpp"
#include "ramlab/rng.hpp"

namespace ramlab {

// Everything observed during one image's episode: the sampled locations,
// their log-densities, the per-step reward estimates, and the terminal
// classification.
struct EpisodeTrace {
  long image_id = 0;
  int label = 0;
  int prediction = 0;
  double reward = 0;                // 1 if prediction == label else 0
  std::vector<Location> locations;  // T clamped policy samples
  std::vector<double> log_probs;    // T, evaluated pre-clamp
  std::vector<double> baselines;    // T
  std::vector<double> logits;       // final-step class scores
  int image_size = 0;
};

inline double cross_entropy_of(const std::vector<double>& logits, int label) {
  if (label < 0 || label >= (int)logits.size())
    throw std::out_of_range("cross_entropy: label out of range");
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double lse = 0;
  for (double v : logits) lse += std::exp(v - m);
  return -(logits[label] - m - std::log(lse));
}

// -sum_t (R - b_t) * log_prob_t, with b_t as recorded (a constant here)
inline double reinforce_loss(const EpisodeTrace& t) {
  double L = 0;
  for (size_t i = 0; i < t.log_probs.size(); ++i)
    L -= (t.reward - t.baselines[i]) * t.log_probs[i];
  return L;
}

// mean squared error of the reward estimates: sum_t (b_t - R)^2 / T
inline double baseline_loss(const EpisodeTrace& t) {
  double L = 0;
  for (double b : t.baselines) L += (b - t.reward) * (b - t.reward);
  return L / (double)t.baselines.size();
}

inline double total_loss(const EpisodeTrace& t, double alpha) {
  return cross_entropy_of(t.logits, t.label) + baseline_loss(t) + alpha * reinforce_loss(t);
}

struct TrainConfig {
  double alpha = 0.01;
  int batch_size = 128;
  int max_epochs = 300;
  int patience = 50;         // early stop after this many epochs without val gain
  double lr = 3e-4;
  uint64_t seed = 1;
  double lr_decay = 0.5;     // multiply lr by this after lr_patience flat epochs
  int lr_patience = 20;
  double lr_floor = 1e-5;
  double clip_norm = 5.0;
  double val_fraction = 0.1;

  void validate() const {
    if (alpha < 0) throw std::invalid_argument("train: alpha must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (patience >= max_epochs)
      throw std::invalid_argument("train: patience must be < max_epochs");
  }
};

template <typename S>
struct BatchRollout {
  std::vector<EpisodeTrace> traces;
  int logits = -1;          // node [B, C]
  int loss_ce = -1;         // scalar nodes (batch means)
  int loss_baseline = -1;
  int loss_reinforce = -1;
  int loss_total = -1;
  int correct = 0;
};

// Rolls a batch of episodes through the model, building the loss graph as
// it goes. Each row consumes randomness only from its own stream, so a
// batched rollout and a batch-1 rollout of the same image with the same
// stream produce identical episodes.
template <typename S>
BatchRollout<S> rollout_batch(Graph<S>& g, AttentionModel<S>& model, const RowMat<S>& images,
                              const std::vector<int>& labels, const std::vector<long>& image_ids,
                              std::vector<Rng>& streams, double alpha, bool build_loss = true,
                              bool greedy = false) {
  const ModelSpec& spec = model.spec();
  const int B = (int)images.rows();
  const int T = spec.num_glimpses;
  const int rdim = spec.glimpse.retina_dim();
  const int side = spec.image_size;
  if ((int)labels.size() != B || (int)streams.size() != B)
    throw std::invalid_argument("rollout: labels/streams must match the batch");

  BatchRollout<S> out;
  out.traces.resize(B);
  for (int i = 0; i < B; ++i) {
    out.traces[i].image_id = image_ids.empty() ? i : image_ids[i];
    out.traces[i].label = labels[i];
    out.traces[i].image_size = side;
    out.traces[i].locations.reserve(T);
    out.traces[i].log_probs.reserve(T);
    out.traces[i].baselines.reserve(T);
  }

  // first glimpse location: uniform in [-1,1]^2 from each row's stream
  Mat<S> loc(B, 2);
  for (int i = 0; i < B; ++i) {
    loc(i, 0) = (S)streams[i].uniform(-1, 1);
    loc(i, 1) = (S)streams[i].uniform(-1, 1);
  }

  CoreNodes state = model.initial_state(g, images);
  RowMat<S> retina(B, rdim);
  std::vector<int> log_prob_nodes(T), baseline_nodes(T);
  int action_h = -1;

  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < B; ++i) {
      Location li{(double)loc(i, 0), (double)loc(i, 1)};
      build_retina(images.row(i).data(), side, side, li, spec.glimpse, retina.row(i).data());
    }
    StepNodes step = model.step(g, g.leaf(retina), g.leaf(loc), state);
    state = step.state;
    action_h = step.action_h;
    if (!g.all_finite(step.state.h1) ||
        (spec.two_layer() && !g.all_finite(step.state.h2)))
      throw std::runtime_error("rollout: non-finite activation at step " + std::to_string(t + 1));

    PolicySample<S> ps = sample_locations(g, step.loc_mean, spec.policy_sigma, streams, greedy);
    log_prob_nodes[t] = ps.log_prob;
    baseline_nodes[t] = step.baseline;
    for (int i = 0; i < B; ++i) {
      out.traces[i].locations.push_back({(double)ps.sample(i, 0), (double)ps.sample(i, 1)});
      out.traces[i].log_probs.push_back((double)g.value(ps.log_prob)(i, 0));
      out.traces[i].baselines.push_back((double)g.value(step.baseline)(i, 0));
    }
    loc = ps.sample;
  }

  out.logits = model.action_logits(g, action_h);
  const Mat<S>& lg = g.value(out.logits);
  Mat<S> reward(B, 1);
  for (int i = 0; i < B; ++i) {
    int pred = 0;
    for (int c = 1; c < spec.num_classes; ++c)
      if (lg(i, c) > lg(i, pred)) pred = c;
    out.traces[i].prediction = pred;
    out.traces[i].logits.assign(lg.row(i).begin(), lg.row(i).end());
    out.traces[i].reward = pred == labels[i] ? 1.0 : 0.0;
    reward(i, 0) = (S)out.traces[i].reward;
    if (pred == labels[i]) ++out.correct;
  }

  if (build_loss) {
    int logp = g.log_softmax_rows(out.logits);
    out.loss_ce = g.mean_all(g.pick_nll(logp, labels));

    int r_leaf = g.leaf(reward);
    int base_acc = -1, reinf_acc = -1;
    for (int t = 0; t < T; ++t) {
      int d = g.sub(baseline_nodes[t], r_leaf);
      int sq = g.mul(d, d);
      base_acc = t == 0 ? sq : g.add(base_acc, sq);
      // (R - b_t) enters the policy term as a constant: no gradient may
      // flow through the advantage
      Mat<S> w = reward - g.value(baseline_nodes[t]);
      int term = g.cmul(log_prob_nodes[t], std::move(w));
      reinf_acc = t == 0 ? term : g.add(reinf_acc, term);
    }
    out.loss_baseline = g.mean_all(g.axpb(base_acc, S(1.0 / T), S(0)));
    out.loss_reinforce = g.mean_all(g.axpb(reinf_acc, S(-1), S(0)));
    out.loss_total =
        g.add(out.loss_ce, g.add(out.loss_baseline, g.axpb(out.loss_reinforce, S(alpha), S(0))));
  }
  return out;
}

// Convenience single-image rollout used by tests and the trace tool.
template <typename S>
EpisodeTrace rollout(AttentionModel<S>& model, const RowMat<S>& image, int label, long image_id,
                     Rng stream, double alpha = 0.01, bool greedy = false) {
  Graph<S> g;
  std::vector<Rng> streams{stream};
  std::vector<int> labels{label};
  std::vector<long> ids{image_id};
  auto br = rollout_batch(g, model, image, labels, ids, streams, alpha, true, greedy);
  return br.traces[0];
}

struct EpochStats {
  int epoch = 0;
  double train_loss = 0;
  double train_acc = 0;
  double val_acc = 0;
  double lr = 0;
  double seconds = 0;
};

// Canonical metrics line. The first five fields are a pure function of
// (config, seed, data); wall-clock is appended last so reproducibility
// checks can strip it.
inline std::string metric_line(const EpochStats& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d\t%.6f\t%.6f\t%.6f\t%.8g\t%.3f", e.epoch, e.train_loss,
                e.train_acc, e.val_acc, e.lr, e.seconds);
  return buf;
}

inline std::string metric_line_deterministic(const std::string& line) {
  auto pos = line.rfind('\t');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

template <typename S>
struct Trainer {
  AttentionModel<S>& model;
  TrainConfig cfg;
  AdamState<S> adam;
  std::vector<Parameter<S>*> params;

  Trainer(AttentionModel<S>& m, const TrainConfig& c) : model(m), cfg(c) {
    cfg.validate();
    params = model.parameters();
    adam.lr = (S)cfg.lr;
    adam.attach(params);
  }

  // One pass over the dataset: seeded shuffle, one Adam step per batch
  // with a global-norm clip. Returns mean per-image loss and accuracy.
  std::pair<double, double> train_epoch(const Dataset& data, int epoch) {
    Rng shuffle = Rng::substream(cfg.seed, {kStreamShuffle, (uint64_t)epoch});
    auto batches = epoch_batches(data.size(), cfg.batch_size, shuffle);
    double loss_sum = 0;
    long correct = 0;
    for (const auto& idx : batches) {
      const int B = (int)idx.size();
      RowMat<S> images(B, data.images.cols());
      std::vector<int> labels(B);
      std::vector<long> ids(B);
      std::vector<Rng> streams;
      streams.reserve(B);
      for (int i = 0; i < B; ++i) {
        images.row(i) = data.images.row(idx[i]).template cast<S>();
        labels[i] = data.labels[idx[i]];
        ids[i] = idx[i];
        streams.push_back(
            Rng::substream(cfg.seed, {kStreamRollout, (uint64_t)epoch, (uint64_t)idx[i]}));
      }
      for (auto* p : params) p->zero_grad();
      Graph<S> g;
      auto br = rollout_batch(g, model, images, labels, ids, streams, cfg.alpha);
      g.backward(br.loss_total);
      clip_grad_norm(params, cfg.clip_norm);
      adam_update(params, adam);
      loss_sum += (double)g.value(br.loss_total)(0, 0) * B;
      correct += br.correct;
    }
    return {loss_sum / data.size(), (double)correct / data.size()};
  }

  // Accuracy under the per-image evaluation protocol: one stochastic
  // rollout per image with its seeded stream, argmax prediction.
  double accuracy(const Dataset& data, uint64_t stream_kind = kStreamEval, int eval_batch = 256) {
    long correct = 0;
    for (int at = 0; at < data.size(); at += eval_batch) {
      int B = std::min(eval_batch, data.size() - at);
      RowMat<S> images(B, data.images.cols());
      std::vector<int> labels(B);
      std::vector<long> ids(B);
      std::vector<Rng> streams;
      streams.reserve(B);
      for (int i = 0; i < B; ++i) {
        images.row(i) = data.images.row(at + i).template cast<S>();
        labels[i] = data.labels[at + i];
        ids[i] = at + i;
        streams.push_back(Rng::substream(cfg.seed, {stream_kind, (uint64_t)(at + i)}));
      }
      Graph<S> g;
      auto br = rollout_batch(g, model, images, labels, ids, streams, cfg.alpha, false);
      correct += br.correct;
    }
    return (double)correct / data.size();
  }
};

struct FitResult {
  std::vector<EpochStats> history;
  double best_val_acc = -1;
  int best_epoch = -1;
  int epochs_run = 0;
  bool early_stopped = false;
};

// Loop bookkeeping that survives a checkpoint/resume cycle. Epochs are the
// unit of resumption: all per-epoch randomness is derived from
// (seed, epoch), so continuing from a saved epoch boundary replays the
// exact run a single process would have produced.
struct FitState {
  int epoch = 0;  // last completed
  double best_val_acc = -1;
  int best_epoch = -1;
  int flat_epochs = 0;
  int lr_flat_epochs = 0;
};

// Full training protocol: early stop after `patience` epochs without a new
// best validation accuracy, learning rate halved after `lr_patience` flat
// epochs (floored), best-validation parameters retained via on_best.
template <typename S>
FitResult fit(Trainer<S>& tr, const Dataset& train, const Dataset& val,
              const std::function<void(const EpochStats&)>& on_epoch = nullptr,
              const std::function<void(int, double)>& on_best = nullptr,
              FitState* state = nullptr) {
  FitState local;
  FitState& fs = state ? *state : local;
  FitResult res;
  res.best_val_acc = fs.best_val_acc;
  res.best_epoch = fs.best_epoch;
  for (int epoch = fs.epoch + 1; epoch <= tr.cfg.max_epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    auto [loss, acc] = tr.train_epoch(train, epoch);
    double val_acc = tr.accuracy(val);
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss;
    st.train_acc = acc;
    st.val_acc = val_acc;
    st.lr = (double)tr.adam.lr;
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.history.push_back(st);
    res.epochs_run = epoch;
    fs.epoch = epoch;
    if (val_acc > fs.best_val_acc) {
      fs.best_val_acc = val_acc;
      fs.best_epoch = epoch;
      res.best_val_acc = val_acc;
      res.best_epoch = epoch;
      fs.flat_epochs = 0;
      fs.lr_flat_epochs = 0;
      if (on_best) on_best(epoch, val_acc);
    } else {
      ++fs.flat_epochs;
      ++fs.lr_flat_epochs;
      if (fs.lr_flat_epochs >= tr.cfg.lr_patience) {
        tr.adam.lr = (S)std::max((double)tr.adam.lr * tr.cfg.lr_decay, tr.cfg.lr_floor);
        fs.lr_flat_epochs = 0;
      }
    }
    if (on_epoch) on_epoch(st);
    if (fs.flat_epochs >= tr.cfg.patience) {
      res.early_stopped = true;
      break;
    }
  }
  return res;
}

struct EvalReport {
  double accuracy = 0;
  double ms_per_image = 0;
  long param_count = 0;
  int images = 0;
};

template <typename S>
EvalReport evaluate(AttentionModel<S>& model, const Dataset& data, uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  Trainer<S> tr(model, cfg);
  auto t0 = std::chrono::steady_clock::now();
  double acc = tr.accuracy(data);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EvalReport rep;
  rep.accuracy = acc;
  rep.ms_per_image = secs * 1000.0 / data.size();
  rep.param_count = model.param_count();
  rep.images = data.size();
  return rep;
}

}  // namespace ramlab
