#include <doctest.h>

#include <cmath>

#include "ramlab/gradcheck.hpp"
#include "ramlab/graph.hpp"
#include "ramlab/nn.hpp"
#include "ramlab/rng.hpp"

using namespace ramlab;

namespace {

Mat<double> random_mat(int r, int c, Rng& rng, double lo = -1, double hi = 1) {
  Mat<double> m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("linear: identity weights pass the input through") {
  Graph<double> g;
  Parameter<double> w("w", 3, 3), b("b", 1, 3);
  w.value.setIdentity();
  b.value.setZero();
  Mat<double> x(1, 3);
  x << 0.5, -2.0, 3.25;
  int y = g.affine(g.leaf(x), g.param(w), g.param(b));
  CHECK(g.value(y).isApprox(x));
}

TEST_CASE("linear: zero weights yield the bias") {
  Graph<double> g;
  Parameter<double> w("w", 4, 2), b("b", 1, 2);
  b.value << -1.5, 2.0;
  Mat<double> x = Mat<double>::Constant(1, 4, 7.0);
  int y = g.affine(g.leaf(x), g.param(w), g.param(b));
  CHECK(g.value(y)(0, 0) == doctest::Approx(-1.5));
  CHECK(g.value(y)(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("linear: dimension mismatch names the operands") {
  Graph<double> g;
  Parameter<double> w("w", 5, 2), b("b", 1, 2);
  Mat<double> x = Mat<double>::Zero(1, 4);
  CHECK_THROWS_WITH_AS(g.affine(g.leaf(x), g.param(w), g.param(b)),
                       doctest::Contains("4 vs 5"), std::invalid_argument);
}

TEST_CASE("linear: analytic gradients match central differences") {
  Rng rng(42);
  Parameter<double> w("w", 4, 3), b("b", 1, 3);
  w.value = random_mat(4, 3, rng);
  b.value = random_mat(1, 3, rng);
  Mat<double> x = random_mat(2, 4, rng);
  auto loss = [&]() {
    Graph<double> g;
    int y = g.affine(g.leaf(x), g.param(w), g.param(b));
    int s = g.sum_all(g.mul(y, y));
    g.backward(s);
    return g.value(s)(0, 0);
  };
  auto rep = grad_check<double>(loss, {&w, &b});
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("activations: pinned values") {
  Graph<double> g;
  Mat<double> x(1, 4);
  x << -1.0, 2.0, 0.0, 1000.0;
  CHECK(g.value(g.relu(g.leaf(x)))(0, 0) == 0.0);
  CHECK(g.value(g.relu(g.leaf(x)))(0, 1) == 2.0);
  CHECK(g.value(g.tanh_(g.leaf(x)))(0, 2) == 0.0);
  Mat<double> zero = Mat<double>::Zero(1, 1);
  CHECK(g.value(g.sigmoid_(g.leaf(zero)))(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("log_softmax: uniform logits, shift invariance, stabilization") {
  Graph<double> g;
  Mat<double> u = Mat<double>::Zero(1, 10);
  int ls = g.log_softmax_rows(g.leaf(u));
  for (int c = 0; c < 10; ++c)
    CHECK(g.value(ls)(0, c) == doctest::Approx(-std::log(10.0)).epsilon(1e-12));

  Rng rng(7);
  Mat<double> v = random_mat(3, 5, rng, -2, 2);
  Mat<double> shifted = v.array() + 123.5;
  int a = g.log_softmax_rows(g.leaf(v));
  int b = g.log_softmax_rows(g.leaf(shifted));
  CHECK(g.value(a).isApprox(g.value(b), 1e-9));

  Mat<double> big(1, 2);
  big << 1000.0, 0.0;
  int c = g.log_softmax_rows(g.leaf(big));
  CHECK(g.value(c).allFinite());

  // exp of outputs sums to one
  for (int r = 0; r < 3; ++r)
    CHECK(g.value(a).row(r).array().exp().sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cross entropy: uniform logits give ln C; confident logits give ~0") {
  Graph<double> g;
  Mat<double> u = Mat<double>::Zero(1, 10);
  int nll = g.pick_nll(g.log_softmax_rows(g.leaf(u)), {3});
  CHECK(g.value(nll)(0, 0) == doctest::Approx(std::log(10.0)).epsilon(1e-12));

  Mat<double> conf = Mat<double>::Zero(1, 10);
  conf(0, 3) = 50.0;
  int nll2 = g.pick_nll(g.log_softmax_rows(g.leaf(conf)), {3});
  CHECK(g.value(nll2)(0, 0) < 1e-9);

  CHECK_THROWS_AS(g.pick_nll(g.leaf(u), {10}), std::out_of_range);
  CHECK_THROWS_AS(g.pick_nll(g.leaf(u), {-1}), std::out_of_range);
}

TEST_CASE("cross entropy: gradient equals softmax minus one-hot and passes FD") {
  Rng rng(99);
  Parameter<double> w("w", 6, 4), b("b", 1, 4);
  w.value = random_mat(6, 4, rng);
  b.value = random_mat(1, 4, rng);
  Mat<double> x = random_mat(3, 6, rng);
  std::vector<int> labels{1, 3, 0};
  auto loss = [&]() {
    Graph<double> g;
    int logits = g.affine(g.leaf(x), g.param(w), g.param(b));
    int l = g.mean_all(g.pick_nll(g.log_softmax_rows(logits), labels));
    g.backward(l);
    return g.value(l)(0, 0);
  };
  auto rep = grad_check<double>(loss, {&w, &b});
  CHECK(rep.max_rel_err < 1e-4);

  // direct check of d loss / d logits on one row
  Graph<double> g;
  Mat<double> logits = random_mat(1, 4, rng);
  Parameter<double> lp("logits", 1, 4);
  lp.value = logits;
  int node = g.pick_nll(g.log_softmax_rows(g.param(lp)), {2});
  g.backward(node);
  Eigen::ArrayXd soft = (logits.row(0).array() - logits.maxCoeff()).exp();
  soft /= soft.sum();
  for (int c = 0; c < 4; ++c) {
    double expect = soft(c) - (c == 2 ? 1.0 : 0.0);
    CHECK(lp.grad(0, c) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("lstm: zero everything stays zero, h is bounded, FD check passes") {
  LstmCell<double> cell("cell", 8, 8);
  Mat<double> x = Mat<double>::Zero(1, 8);
  auto st = LstmState<double>::zero(1, 8);
  auto next = lstm_step(cell, x, st);
  CHECK(next.h.cwiseAbs().maxCoeff() == 0.0);
  CHECK(next.c.cwiseAbs().maxCoeff() == 0.0);

  Rng rng(5);
  cell.init(rng);
  Mat<double> xr = random_mat(2, 8, rng, -2, 2);
  auto st2 = LstmState<double>::zero(2, 8);
  st2.h = random_mat(2, 8, rng, -0.9, 0.9);
  st2.c = random_mat(2, 8, rng, -1, 1);
  auto out = lstm_step(cell, xr, st2);
  CHECK(out.h.cwiseAbs().maxCoeff() < 1.0);

  auto loss = [&]() {
    Graph<double> g;
    auto [h, c] = cell.step(g, g.leaf(xr), g.leaf(st2.h), g.leaf(st2.c));
    int s = g.sum_all(h);
    g.backward(s);
    return g.value(s)(0, 0);
  };
  auto rep = grad_check<double>(loss, {&cell.w, &cell.b});
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("lstm: input width mismatch throws a dimension error") {
  LstmCell<double> cell("cell", 8, 8);
  Graph<double> g;
  Mat<double> x = Mat<double>::Zero(1, 5);
  auto st = LstmState<double>::zero(1, 8);
  CHECK_THROWS_AS(cell.step(g, g.leaf(x), g.leaf(st.h), g.leaf(st.c)), std::invalid_argument);
}

TEST_CASE("adam: zero gradient is a fixed point, step increments") {
  Parameter<float> p("p", 2, 2);
  p.value << 1, 2, 3, 4;
  p.zero_grad();
  AdamState<float> st;
  st.attach({&p});
  Mat<float> before = p.value;
  adam_update<float>({&p}, st);
  CHECK(st.step == 1);
  CHECK(p.value.isApprox(before));
}

TEST_CASE("adam: first step moves by ~lr*sign(g)") {
  Parameter<double> p("p", 1, 3);
  p.value << 0.0, 1.0, -1.0;
  p.grad.resize(1, 3);
  p.grad << 0.3, -2.0, 10.0;
  AdamState<double> st;
  st.lr = 1e-3;
  st.attach({&p});
  adam_update<double>({&p}, st);
  CHECK(p.value(0, 0) == doctest::Approx(-1e-3).epsilon(1e-4));
  CHECK(p.value(0, 1) == doctest::Approx(1.0 + 1e-3).epsilon(1e-4));
  CHECK(p.value(0, 2) == doctest::Approx(-1.0 - 1e-3).epsilon(1e-4));
}

TEST_CASE("adam: two steps reproduce a hand-rolled scalar trace") {
  // scalar reference: lr=0.1, b1=0.9, b2=0.999, eps=1e-8, grads 0.5 then -0.25
  double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double theta = 2.0, m = 0, v = 0;
  double grads[2] = {0.5, -0.25};
  for (int t = 1; t <= 2; ++t) {
    double grd = grads[t - 1];
    m = b1 * m + (1 - b1) * grd;
    v = b2 * v + (1 - b2) * grd * grd;
    double mh = m / (1 - std::pow(b1, t));
    double vh = v / (1 - std::pow(b2, t));
    theta -= lr * mh / (std::sqrt(vh) + eps);
  }

  Parameter<double> p("p", 1, 1);
  p.value << 2.0;
  AdamState<double> st;
  st.lr = lr;
  st.attach({&p});
  for (int t = 0; t < 2; ++t) {
    p.grad.resize(1, 1);
    p.grad << grads[t];
    adam_update<double>({&p}, st);
  }
  CHECK(p.value(0, 0) == doctest::Approx(theta).epsilon(1e-12));
}

TEST_CASE("adam: non-finite gradient aborts with the parameter name") {
  Parameter<float> p("theta_block", 1, 1);
  p.grad.resize(1, 1);
  p.grad << std::numeric_limits<float>::quiet_NaN();
  AdamState<float> st;
  st.attach({&p});
  CHECK_THROWS_WITH_AS(adam_update<float>({&p}, st), doctest::Contains("theta_block"),
                       std::runtime_error);
}

TEST_CASE("clip_grad_norm scales only when above the threshold") {
  Parameter<double> p("p", 1, 2);
  p.grad.resize(1, 2);
  p.grad << 3.0, 4.0;  // norm 5
  double n = clip_grad_norm<double>({&p}, 10.0);
  CHECK(n == doctest::Approx(5.0));
  CHECK(p.grad(0, 0) == doctest::Approx(3.0));
  n = clip_grad_norm<double>({&p}, 1.0);
  CHECK(n == doctest::Approx(5.0));
  CHECK(p.grad.norm() == doctest::Approx(1.0));
}

TEST_CASE("forward passes are pure: same inputs give bitwise identical outputs") {
  Rng rng(11);
  LstmCell<float> cell("cell", 16, 16);
  cell.init(rng);
  Mat<float> x(4, 16);
  Rng xr(3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 16; ++j) x(i, j) = (float)xr.uniform(-1, 1);
  auto st = LstmState<float>::zero(4, 16);
  auto a = lstm_step(cell, x, st);
  auto b = lstm_step(cell, x, st);
  CHECK(memcmp(a.h.data(), b.h.data(), sizeof(float) * 64) == 0);
  CHECK(memcmp(a.c.data(), b.c.data(), sizeof(float) * 64) == 0);
}

TEST_CASE("conv2d and maxpool2 pass finite-difference checks") {
  Rng rng(21);
  ConvShape cs{2, 5, 5, 3, 4, 1};
  Parameter<double> w("w", 2 * 9, 4), b("b", 1, 4);
  w.value = random_mat(18, 4, rng, -0.5, 0.5);
  b.value = random_mat(1, 4, rng, -0.5, 0.5);
  Mat<double> x = random_mat(2, 2 * 25, rng);
  auto loss = [&]() {
    Graph<double> g;
    int y = g.conv2d(g.leaf(x), g.param(w), g.param(b), cs);
    int p = g.maxpool2(g.relu(y), 4, cs.out_height(), cs.out_width());
    int s = g.sum_all(g.mul(p, p));
    g.backward(s);
    return g.value(s)(0, 0);
  };
  auto rep = grad_check<double>(loss, {&w, &b});
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("detach blocks gradient flow") {
  Parameter<double> w("w", 2, 2), b("b", 1, 2);
  w.value.setRandom();
  b.value.setRandom();
  Mat<double> x = Mat<double>::Ones(1, 2);
  Graph<double> g;
  int h = g.affine(g.leaf(x), g.param(w), g.param(b));
  int s = g.sum_all(g.detach(h));
  g.backward(s);
  CHECK(w.grad.cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.grad.cwiseAbs().maxCoeff() == 0.0);
}
