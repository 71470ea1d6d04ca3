#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramlab/glimpse.hpp"
#include "ramlab/graph.hpp"
#include "ramlab/nn.hpp"
#include "ramlab/rng.hpp"

namespace ramlab {

enum class Variant { kRam, kDram, kMram, kLenet };
enum class BaselineMode { kSingle, kHybrid };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::kRam: return "ram";
    case Variant::kDram: return "dram";
    case Variant::kMram: return "mram";
    case Variant::kLenet: return "lenet";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "ram") return Variant::kRam;
  if (s == "dram") return Variant::kDram;
  if (s == "mram") return Variant::kMram;
  if (s == "lenet") return Variant::kLenet;
  throw std::invalid_argument("unknown model variant '" + s + "'");
}

inline std::string to_string(BaselineMode m) {
  return m == BaselineMode::kSingle ? "single" : "hybrid";
}

inline BaselineMode baseline_from_string(const std::string& s) {
  if (s == "single") return BaselineMode::kSingle;
  if (s == "hybrid") return BaselineMode::kHybrid;
  throw std::invalid_argument("unknown baseline mode '" + s + "'");
}

struct ModelSpec {
  Variant variant = Variant::kMram;
  int hidden = 256;
  int num_glimpses = 10;
  GlimpseConfig glimpse;
  BaselineMode baseline = BaselineMode::kHybrid;
  bool context_cnn = false;
  int num_classes = 10;
  double policy_sigma = 0.1;
  int image_size = 28;
  int what_width = 128;
  int where_width = 128;

  bool two_layer() const { return variant == Variant::kDram || variant == Variant::kMram; }

  void validate() const {
    if (variant == Variant::kLenet) return;
    glimpse.validate();
    if (num_glimpses < 1) throw std::invalid_argument("model: num_glimpses must be >= 1");
    if (hidden < 1) throw std::invalid_argument("model: hidden must be >= 1");
    if (num_classes < 2) throw std::invalid_argument("model: num_classes must be >= 2");
    if (policy_sigma <= 0) throw std::invalid_argument("model: policy_sigma must be > 0");
    if (baseline == BaselineMode::kHybrid && !two_layer())
      throw std::invalid_argument("model: hybrid baseline requires a two-layer variant");
    if (context_cnn && variant != Variant::kDram)
      throw std::invalid_argument("model: context_cnn is a DRAM-only option");
  }
};

// Whole-image CNN that initializes the gaze-controlling layer of DRAM.
template <typename S>
struct ContextCnn {
  int image_size = 28, hidden = 256;
  ConvShape s1, s2, s3;
  Parameter<S> w1, b1, w2, b2, w3, b3;
  Dense<S> proj;

  ContextCnn() = default;
  ContextCnn(const std::string& name, int img, int hid)
      : image_size(img),
        hidden(hid),
        s1{1, img, img, 3, 16, 1},
        s2{16, img / 2, img / 2, 3, 32, 1},
        s3{32, img / 4, img / 4, 3, 64, 1},
        w1(name + ".conv1.w", 9, 16), b1(name + ".conv1.b", 1, 16),
        w2(name + ".conv2.w", 16 * 9, 32), b2(name + ".conv2.b", 1, 32),
        w3(name + ".conv3.w", 32 * 9, 64), b3(name + ".conv3.b", 1, 64),
        proj(name + ".proj", (img / 4) * (img / 4) * 64, hid) {}

  void init(Rng& rng) {
    init_fan_in_uniform(w1, rng); b1.value.setZero();
    init_fan_in_uniform(w2, rng); b2.value.setZero();
    init_fan_in_uniform(w3, rng); b3.value.setZero();
    proj.init(rng);
  }

  // images: [B, H*W] constant leaf; returns [B, hidden] in (-1,1)
  int forward(Graph<S>& g, int images) {
    int x = g.relu(g.conv2d(images, g.param(w1), g.param(b1), s1));
    x = g.maxpool2(x, 16, image_size, image_size);
    x = g.relu(g.conv2d(x, g.param(w2), g.param(b2), s2));
    x = g.maxpool2(x, 32, image_size / 2, image_size / 2);
    x = g.relu(g.conv2d(x, g.param(w3), g.param(b3), s3));
    return g.tanh_(proj.forward(g, x));
  }

  void collect(std::vector<Parameter<S>*>& out) {
    out.push_back(&w1); out.push_back(&b1);
    out.push_back(&w2); out.push_back(&b2);
    out.push_back(&w3); out.push_back(&b3);
    proj.collect(out);
  }
};

// Classic conv-pool-conv-pool-dense-dense-dense reference classifier.
// Inputs smaller than 32 px are zero-padded up to 32 (its canonical input
// size); larger inputs pass through unchanged.
template <typename S>
struct LeNet {
  int image_size = 28, padded = 32, num_classes = 10;
  ConvShape s1, s2;
  Parameter<S> w1, b1, w2, b2;
  Dense<S> fc1, fc2, fc3;

  LeNet() = default;
  LeNet(const std::string& name, int img, int classes)
      : image_size(img),
        padded(img < 32 ? 32 : img),
        num_classes(classes),
        s1{1, padded, padded, 5, 6, 0},
        s2{6, (padded - 4) / 2, (padded - 4) / 2, 5, 16, 0},
        w1(name + ".conv1.w", 25, 6), b1(name + ".conv1.b", 1, 6),
        w2(name + ".conv2.w", 6 * 25, 16), b2(name + ".conv2.b", 1, 16),
        fc1(name + ".fc1", flat_dim(), 120),
        fc2(name + ".fc2", 120, 84),
        fc3(name + ".fc3", 84, classes) {}

  int flat_dim() const {
    int a = (padded - 4) / 2;       // after conv1 + pool
    int b = (a - 4) / 2;            // after conv2 + pool
    return 16 * b * b;
  }

  void init(Rng& rng) {
    init_fan_in_uniform(w1, rng); b1.value.setZero();
    init_fan_in_uniform(w2, rng); b2.value.setZero();
    fc1.init(rng);
    fc2.init(rng);
    fc3.init(rng);
  }

  // images: [B, image_size^2] raw batch; returns logits node [B, classes]
  int forward(Graph<S>& g, const RowMat<S>& images) {
    int img = g.leaf(pad(images));
    int x = g.relu(g.conv2d(img, g.param(w1), g.param(b1), s1));
    x = g.maxpool2(x, 6, padded - 4, padded - 4);
    x = g.relu(g.conv2d(x, g.param(w2), g.param(b2), s2));
    x = g.maxpool2(x, 16, s2.out_height(), s2.out_width());
    x = g.relu(fc1.forward(g, x));
    x = g.relu(fc2.forward(g, x));
    return fc3.forward(g, x);
  }

  Mat<S> pad(const RowMat<S>& images) const {
    if (padded == image_size) return Mat<S>(images);
    int off = (padded - image_size) / 2;
    Mat<S> out = Mat<S>::Zero(images.rows(), padded * padded);
    for (Eigen::Index i = 0; i < images.rows(); ++i)
      for (int r = 0; r < image_size; ++r)
        for (int c = 0; c < image_size; ++c)
          out(i, (r + off) * padded + (c + off)) = images(i, r * image_size + c);
    return out;
  }

  void collect(std::vector<Parameter<S>*>& out) {
    out.push_back(&w1); out.push_back(&b1);
    out.push_back(&w2); out.push_back(&b2);
    fc1.collect(out);
    fc2.collect(out);
    fc3.collect(out);
  }
};

// Recurrent-core node ids within one rollout graph.
struct CoreNodes {
  int h1 = -1, c1 = -1, h2 = -1, c2 = -1;
};

struct StepNodes {
  CoreNodes state;
  int policy_h = -1;   // state that drives the location head
  int action_h = -1;   // state that feeds the action head at the last step
  int loc_mean = -1;   // [B,2], tanh-bounded
  int baseline = -1;   // [B,1], reads detached states
};

// The three attention variants share one parameter layout and differ only
// in wiring:
//   RAM   - one core; location, action and baseline all read it.
//   DRAM  - lower core feeds the action head, upper core (fed by the lower)
//           drives the location head; optional context CNN initializes the
//           upper state from the full image.
//   MRAM  - lower core drives the location head, upper core feeds the
//           action head.
template <typename S>
class AttentionModel {
public:
  explicit AttentionModel(ModelSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    glimpse_net_ = GlimpseNet<S>("glimpse", spec_.glimpse, spec_.what_width,
                                 spec_.where_width, spec_.hidden);
    core1_ = LstmCell<S>("core1", spec_.hidden, spec_.hidden);
    if (spec_.two_layer()) core2_ = LstmCell<S>("core2", spec_.hidden, spec_.hidden);
    loc_head_ = Dense<S>("loc_head", spec_.hidden, 2);
    action_head_ = Dense<S>("action_head", spec_.hidden, spec_.num_classes);
    int bwidth = spec_.baseline == BaselineMode::kHybrid ? 2 * spec_.hidden : spec_.hidden;
    baseline_head_ = Dense<S>("baseline_head", bwidth, 1);
    if (spec_.context_cnn)
      context_ = ContextCnn<S>("context", spec_.image_size, spec_.hidden);
  }

  const ModelSpec& spec() const { return spec_; }

  void init(Rng& rng) {
    glimpse_net_.init(rng);
    core1_.init(rng);
    if (core2_) core2_->init(rng);
    loc_head_.init(rng);
    action_head_.init(rng);
    baseline_head_.init(rng);
    if (context_) context_->init(rng);
  }

  std::vector<Parameter<S>*> parameters() {
    std::vector<Parameter<S>*> out;
    glimpse_net_.collect(out);
    core1_.collect(out);
    if (core2_) core2_->collect(out);
    loc_head_.collect(out);
    action_head_.collect(out);
    baseline_head_.collect(out);
    if (context_) context_->collect(out);
    return out;
  }

  long param_count() {
    long n = 0;
    for (auto* p : parameters()) n += p->size();
    return n;
  }

  // Zero initial states; DRAM with context derives the upper h from the
  // image batch instead.
  CoreNodes initial_state(Graph<S>& g, const RowMat<S>& images) {
    int batch = (int)images.rows();
    Mat<S> z = Mat<S>::Zero(batch, spec_.hidden);
    CoreNodes st;
    st.h1 = g.leaf(z);
    st.c1 = g.leaf(z);
    if (spec_.two_layer()) {
      st.h2 = context_ ? context_->forward(g, g.leaf(Mat<S>(images))) : g.leaf(z);
      st.c2 = g.leaf(z);
    }
    return st;
  }

  // One glimpse step. retina: [B, retina_dim] leaf; loc: [B,2] leaf.
  StepNodes step(Graph<S>& g, int retina, int loc, const CoreNodes& prev) {
    StepNodes out;
    int gfeat = glimpse_net_.forward(g, retina, loc);
    auto [h1, c1] = core1_.step(g, gfeat, prev.h1, prev.c1);
    out.state.h1 = h1;
    out.state.c1 = c1;
    if (spec_.two_layer()) {
      auto [h2, c2] = core2_->step(g, h1, prev.h2, prev.c2);
      out.state.h2 = h2;
      out.state.c2 = c2;
    }
    switch (spec_.variant) {
      case Variant::kRam:
        out.policy_h = h1;
        out.action_h = h1;
        break;
      case Variant::kMram:
        out.policy_h = out.state.h1;   // lower layer governs the gaze
        out.action_h = out.state.h2;   // upper layer accumulates for the label
        break;
      case Variant::kDram:
        out.policy_h = out.state.h2;   // roles swapped relative to MRAM
        out.action_h = out.state.h1;
        break;
      case Variant::kLenet:
        throw std::logic_error("step() not defined for the CNN variant");
    }
    out.loc_mean = g.tanh_(loc_head_.forward(g, out.policy_h));
    out.baseline = baseline_node(g, out.state);
    return out;
  }

  int action_logits(Graph<S>& g, int action_h) { return action_head_.forward(g, action_h); }

  // Reward-estimate head. Inputs are detached: the critic trains against
  // the reward without pushing gradients into the recurrent stack.
  int baseline_node(Graph<S>& g, const CoreNodes& st) {
    if (spec_.baseline == BaselineMode::kHybrid) {
      if (!spec_.two_layer())
        throw std::invalid_argument("hybrid baseline on a single-layer variant");
      int both = g.concat_cols(g.detach(st.h1), g.detach(st.h2));
      return baseline_head_.forward(g, both);
    }
    int h = spec_.variant == Variant::kDram ? st.h2 : st.h1;
    return baseline_head_.forward(g, g.detach(h));
  }

  GlimpseNet<S>& glimpse_net() { return glimpse_net_; }
  LstmCell<S>& core1() { return core1_; }
  LstmCell<S>& core2() { return *core2_; }
  Dense<S>& loc_head() { return loc_head_; }
  Dense<S>& action_head() { return action_head_; }
  Dense<S>& baseline_head() { return baseline_head_; }
  bool has_context() const { return context_.has_value(); }
  ContextCnn<S>& context() { return *context_; }

private:
  ModelSpec spec_;
  GlimpseNet<S> glimpse_net_;
  LstmCell<S> core1_;
  std::optional<LstmCell<S>> core2_;
  Dense<S> loc_head_;
  Dense<S> action_head_;
  Dense<S> baseline_head_;
  std::optional<ContextCnn<S>> context_;
};

// Scalar count of every learnable entry for a spec, including the CNN
// reference model.
template <typename S = float>
long param_count(const ModelSpec& spec) {
  if (spec.variant == Variant::kLenet) {
    LeNet<S> net("lenet", spec.image_size, spec.num_classes);
    std::vector<Parameter<S>*> ps;
    net.collect(ps);
    long n = 0;
    for (auto* p : ps) n += p->size();
    return n;
  }
  AttentionModel<S> m(spec);
  return m.param_count();
}

// Gaussian location policy around a tanh-bounded mean.
template <typename S>
struct PolicySample {
  Mat<S> mean;        // [B,2] numeric copy of the mean node
  Mat<S> sample_pre;  // pre-clamp draws; the density is evaluated here
  Mat<S> sample;      // clamped to [-1,1]^2; the next glimpse location
  int log_prob = -1;  // node [B,1]
};

// Draws one location per row using that row's stream; `greedy` forces
// sample == mean (the density is still evaluated, giving the closed-form
// peak value -ln(2*pi*sigma^2)).
template <typename S>
PolicySample<S> sample_locations(Graph<S>& g, int loc_mean, double sigma,
                                 std::vector<Rng>& streams, bool greedy = false) {
  const Mat<S>& mv = g.value(loc_mean);
  const int batch = (int)mv.rows();
  PolicySample<S> out;
  out.mean = mv;
  out.sample_pre.resize(batch, 2);
  out.sample.resize(batch, 2);
  for (int i = 0; i < batch; ++i) {
    if (greedy) {
      out.sample_pre(i, 0) = mv(i, 0);
      out.sample_pre(i, 1) = mv(i, 1);
    } else {
      auto [z0, z1] = streams[i].normal_pair();
      out.sample_pre(i, 0) = mv(i, 0) + S(sigma) * S(z0);
      out.sample_pre(i, 1) = mv(i, 1) + S(sigma) * S(z1);
    }
    out.sample(i, 0) = std::clamp(out.sample_pre(i, 0), S(-1), S(1));
    out.sample(i, 1) = std::clamp(out.sample_pre(i, 1), S(-1), S(1));
  }
  // log N(s | mean, sigma^2 I_2) = -ln(2 pi sigma^2) - |s - mean|^2 / (2 sigma^2)
  int s_leaf = g.leaf(out.sample_pre);
  int diff = g.sub(s_leaf, loc_mean);
  int sq = g.mul(diff, diff);
  int rs = g.row_sum(sq);
  out.log_prob = g.axpb(rs, S(-1.0 / (2.0 * sigma * sigma)),
                        S(-std::log(2.0 * M_PI * sigma * sigma)));
  return out;
}

}  // namespace ramlab
