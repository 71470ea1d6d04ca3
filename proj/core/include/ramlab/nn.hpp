#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ramlab/graph.hpp"
#include "ramlab/rng.hpp"

namespace ramlab {

// uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], fan_in = rows of a
// [in, out] weight matrix
template <typename S>
void init_fan_in_uniform(Parameter<S>& p, Rng& rng) {
  double bound = 1.0 / std::sqrt((double)p.value.rows());
  for (Eigen::Index c = 0; c < p.value.cols(); ++c)
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      p.value(r, c) = (S)rng.uniform(-bound, bound);
}

template <typename S>
struct Dense {
  Parameter<S> w, b;

  Dense() = default;
  Dense(const std::string& name, int in, int out)
      : w(name + ".w", in, out), b(name + ".b", 1, out) {}

  void init(Rng& rng) {
    init_fan_in_uniform(w, rng);
    b.value.setZero();
  }

  int forward(Graph<S>& g, int x) { return g.affine(x, g.param(w), g.param(b)); }

  void collect(std::vector<Parameter<S>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

template <typename S>
struct LstmState {
  Mat<S> h, c;  // each [B, hidden]
  static LstmState zero(int batch, int hidden) {
    return {Mat<S>::Zero(batch, hidden), Mat<S>::Zero(batch, hidden)};
  }
};

// Fused-gate LSTM cell. One [in+hidden, 4*hidden] weight; gate order
// i, f, g, o along the columns. Forget-gate bias starts at 1.
template <typename S>
struct LstmCell {
  int input = 0, hidden = 0;
  Parameter<S> w, b;

  LstmCell() = default;
  LstmCell(const std::string& name, int in, int hid)
      : input(in), hidden(hid), w(name + ".w", in + hid, 4 * hid), b(name + ".b", 1, 4 * hid) {}

  void init(Rng& rng) {
    init_fan_in_uniform(w, rng);
    b.value.setZero();
    b.value.middleCols(hidden, hidden).setConstant(S(1));
  }

  // (h', c') from graph nodes x:[B,in], h:[B,hid], c:[B,hid]
  std::pair<int, int> step(Graph<S>& g, int x, int h, int c) {
    if (g.value(x).cols() != input)
      throw std::invalid_argument("lstm step: input width " + std::to_string(g.value(x).cols()) +
                                  " != expected " + std::to_string(input));
    int xh = g.concat_cols(x, h);
    int pre = g.affine(xh, g.param(w), g.param(b));
    int gi = g.sigmoid_(g.slice_cols(pre, 0, hidden));
    int gf = g.sigmoid_(g.slice_cols(pre, hidden, hidden));
    int gg = g.tanh_(g.slice_cols(pre, 2 * hidden, hidden));
    int go = g.sigmoid_(g.slice_cols(pre, 3 * hidden, hidden));
    int c_new = g.add(g.mul(gf, c), g.mul(gi, gg));
    int h_new = g.mul(go, g.tanh_(c_new));
    return {h_new, c_new};
  }

  void collect(std::vector<Parameter<S>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

// Single-step convenience used by tests: runs one cell step on a batch-1
// state outside any surrounding graph.
template <typename S>
LstmState<S> lstm_step(LstmCell<S>& cell, const Mat<S>& x, const LstmState<S>& st) {
  Graph<S> g;
  int xn = g.leaf(x);
  auto [h, c] = cell.step(g, xn, g.leaf(st.h), g.leaf(st.c));
  return {g.value(h), g.value(c)};
}

template <typename S>
struct AdamState {
  S lr = S(3e-4);
  S beta1 = S(0.9), beta2 = S(0.999), eps = S(1e-8);
  long step = 0;
  std::vector<Mat<S>> m, v;

  void attach(const std::vector<Parameter<S>*>& params) {
    m.clear();
    v.clear();
    for (auto* p : params) {
      m.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      v.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  bool attached() const { return !m.empty(); }
};

// Bias-corrected Adam step over an aligned parameter list. Throws on a
// non-finite gradient, naming the offending parameter.
template <typename S>
void adam_update(const std::vector<Parameter<S>*>& params, AdamState<S>& st) {
  if (st.m.size() != params.size())
    throw std::invalid_argument("adam_update: state not attached to this parameter list");
  for (size_t i = 0; i < params.size(); ++i)
    if (!params[i]->grad.allFinite())
      throw std::runtime_error("adam_update: non-finite gradient in parameter '" +
                               params[i]->name + "' at step " + std::to_string(st.step + 1));
  st.step += 1;
  S bc1 = S(1) - (S)std::pow((double)st.beta1, (double)st.step);
  S bc2 = S(1) - (S)std::pow((double)st.beta2, (double)st.step);
  for (size_t i = 0; i < params.size(); ++i) {
    auto& m = st.m[i];
    auto& v = st.v[i];
    const auto& grd = params[i]->grad;
    m = st.beta1 * m + (S(1) - st.beta1) * grd;
    v = (st.beta2 * v.array() + (S(1) - st.beta2) * grd.array().square()).matrix();
    auto m_hat = m.array() / bc1;
    auto v_hat = v.array() / bc2;
    params[i]->value.array() -= st.lr * m_hat / (v_hat.sqrt() + st.eps);
  }
}

// Global-norm gradient clip; returns the pre-clip norm.
template <typename S>
double clip_grad_norm(const std::vector<Parameter<S>*>& params, double max_norm) {
  double sq = 0;
  for (auto* p : params) sq += (double)p->grad.squaredNorm();
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    S scale = S(max_norm / norm);
    for (auto* p : params) p->grad *= scale;
  }
  return norm;
}

}  // namespace ramlab
