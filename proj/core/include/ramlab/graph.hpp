#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ramlab {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// Row-major layout for image batches, so one image's pixels are contiguous.
template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A named tensor with learnable values and an accumulated gradient.
// Storage lives outside any graph so parameters persist across batches.
template <typename S>
struct Parameter {
  std::string name;
  Mat<S> value;
  Mat<S> grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Mat<S>::Zero(rows, cols)), grad(Mat<S>::Zero(rows, cols)) {}

  Eigen::Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
};

struct ConvShape {
  int channels, height, width;   // input planes
  int kernel, out_channels, pad; // square kernel, zero padding
  int out_height() const { return height + 2 * pad - kernel + 1; }
  int out_width() const { return width + 2 * pad - kernel + 1; }
};

// Reverse-mode tape over 2D matrices [batch, features]. Built eagerly:
// each op computes its value immediately and records a closure for the
// backward sweep. Only the op set the attention models need is provided;
// this is not a general autodiff framework.
template <typename S>
class Graph {
public:
  using M = Mat<S>;

  int leaf(M v) { return push(std::move(v), false); }

  int param(Parameter<S>& p) {
    int id = push(p.value, true);
    bindings_.push_back({id, &p});
    return id;
  }

  // y = x, but gradients stop here
  int detach(int a) { return push(nodes_[a].value, false); }

  int matmul(int a, int b) {
    int id = push(nodes_[a].value * nodes_[b].value, any_grad({a, b}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, b, id](Graph& g) {
        if (g.nodes_[a].needs_grad)
          g.grad_buf(a).noalias() += g.nodes_[id].grad * g.nodes_[b].value.transpose();
        if (g.nodes_[b].needs_grad)
          g.grad_buf(b).noalias() += g.nodes_[a].value.transpose() * g.nodes_[id].grad;
      };
    }
    return id;
  }

  // y = x*W + 1*b with x:[B,in], W:[in,out], b:[1,out]
  int affine(int x, int w, int b) {
    check_cols(x, w, "affine");
    M v = nodes_[x].value * nodes_[w].value;
    v.rowwise() += nodes_[b].value.row(0);
    int id = push(std::move(v), any_grad({x, w, b}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [x, w, b, id](Graph& g) {
        const M& dy = g.nodes_[id].grad;
        if (g.nodes_[x].needs_grad) g.grad_buf(x).noalias() += dy * g.nodes_[w].value.transpose();
        if (g.nodes_[w].needs_grad) g.grad_buf(w).noalias() += g.nodes_[x].value.transpose() * dy;
        if (g.nodes_[b].needs_grad) g.grad_buf(b).row(0) += dy.colwise().sum();
      };
    }
    return id;
  }

  int add(int a, int b) {
    int id = push(nodes_[a].value + nodes_[b].value, any_grad({a, b}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, b, id](Graph& g) {
        if (g.nodes_[a].needs_grad) g.grad_buf(a) += g.nodes_[id].grad;
        if (g.nodes_[b].needs_grad) g.grad_buf(b) += g.nodes_[id].grad;
      };
    }
    return id;
  }

  int sub(int a, int b) {
    int id = push(nodes_[a].value - nodes_[b].value, any_grad({a, b}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, b, id](Graph& g) {
        if (g.nodes_[a].needs_grad) g.grad_buf(a) += g.nodes_[id].grad;
        if (g.nodes_[b].needs_grad) g.grad_buf(b) -= g.nodes_[id].grad;
      };
    }
    return id;
  }

  int mul(int a, int b) {
    int id = push(nodes_[a].value.cwiseProduct(nodes_[b].value), any_grad({a, b}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, b, id](Graph& g) {
        if (g.nodes_[a].needs_grad)
          g.grad_buf(a) += g.nodes_[id].grad.cwiseProduct(g.nodes_[b].value);
        if (g.nodes_[b].needs_grad)
          g.grad_buf(b) += g.nodes_[id].grad.cwiseProduct(g.nodes_[a].value);
      };
    }
    return id;
  }

  // y = k*x + c elementwise
  int axpb(int a, S k, S c) {
    int id = push((nodes_[a].value.array() * k + c).matrix(), any_grad({a}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, k, id](Graph& g) { g.grad_buf(a) += k * g.nodes_[id].grad; };
    }
    return id;
  }

  // hadamard with a constant matrix (no gradient into the constant)
  int cmul(int a, M weights) {
    auto w = std::make_shared<M>(std::move(weights));
    int id = push(nodes_[a].value.cwiseProduct(*w), any_grad({a}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, w, id](Graph& g) {
        g.grad_buf(a) += g.nodes_[id].grad.cwiseProduct(*w);
      };
    }
    return id;
  }

  int relu(int a) {
    int id = push(nodes_[a].value.cwiseMax(S(0)), any_grad({a}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, id](Graph& g) {
        g.grad_buf(a).array() +=
            g.nodes_[id].grad.array() * (g.nodes_[a].value.array() > S(0)).template cast<S>();
      };
    }
    return id;
  }

  int tanh_(int a) {
    int id = push(nodes_[a].value.array().tanh().matrix(), any_grad({a}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, id](Graph& g) {
        const auto& y = g.nodes_[id].value.array();
        g.grad_buf(a).array() += g.nodes_[id].grad.array() * (S(1) - y * y);
      };
    }
    return id;
  }

  int sigmoid_(int a) {
    M v = (S(1) / (S(1) + (-nodes_[a].value.array()).exp())).matrix();
    int id = push(std::move(v), any_grad({a}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, id](Graph& g) {
        const auto& y = g.nodes_[id].value.array();
        g.grad_buf(a).array() += g.nodes_[id].grad.array() * y * (S(1) - y);
      };
    }
    return id;
  }

  int concat_cols(int a, int b) {
    const M& va = nodes_[a].value;
    const M& vb = nodes_[b].value;
    M v(va.rows(), va.cols() + vb.cols());
    v << va, vb;
    int id = push(std::move(v), any_grad({a, b}));
    if (nodes_[id].needs_grad) {
      auto ca = va.cols();
      nodes_[id].back = [a, b, ca, id](Graph& g) {
        const M& dy = g.nodes_[id].grad;
        if (g.nodes_[a].needs_grad) g.grad_buf(a) += dy.leftCols(ca);
        if (g.nodes_[b].needs_grad) g.grad_buf(b) += dy.rightCols(dy.cols() - ca);
      };
    }
    return id;
  }

  int slice_cols(int a, Eigen::Index c0, Eigen::Index n) {
    int id = push(nodes_[a].value.middleCols(c0, n), any_grad({a}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, c0, n, id](Graph& g) {
        g.grad_buf(a).middleCols(c0, n) += g.nodes_[id].grad;
      };
    }
    return id;
  }

  // rowwise log-softmax, stabilized by subtracting the row max
  int log_softmax_rows(int a) {
    const M& x = nodes_[a].value;
    M v(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      S m = x.row(r).maxCoeff();
      S lse = std::log((x.row(r).array() - m).exp().sum());
      v.row(r) = (x.row(r).array() - m - lse).matrix();
    }
    int id = push(std::move(v), any_grad({a}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, id](Graph& g) {
        const M& y = g.nodes_[id].value;
        const M& dy = g.nodes_[id].grad;
        M p = y.array().exp().matrix();
        Mat<S> rs = dy.rowwise().sum();
        g.grad_buf(a) += dy - p.cwiseProduct(rs.replicate(1, y.cols()));
      };
    }
    return id;
  }

  // per-row negative picked entry: out[r,0] = -x[r, labels[r]]
  int pick_nll(int a, std::vector<int> labels) {
    const M& x = nodes_[a].value;
    if ((Eigen::Index)labels.size() != x.rows())
      throw std::invalid_argument("pick_nll: label count != batch rows");
    for (size_t r = 0; r < labels.size(); ++r)
      if (labels[r] < 0 || labels[r] >= x.cols())
        throw std::out_of_range("pick_nll: label " + std::to_string(labels[r]) +
                                " out of range for " + std::to_string(x.cols()) + " classes");
    M v(x.rows(), 1);
    for (Eigen::Index r = 0; r < x.rows(); ++r) v(r, 0) = -x(r, labels[r]);
    auto lab = std::make_shared<std::vector<int>>(std::move(labels));
    int id = push(std::move(v), any_grad({a}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, lab, id](Graph& g) {
        M& da = g.grad_buf(a);
        const M& dy = g.nodes_[id].grad;
        for (Eigen::Index r = 0; r < da.rows(); ++r) da(r, (*lab)[r]) -= dy(r, 0);
      };
    }
    return id;
  }

  int row_sum(int a) {
    int id = push(nodes_[a].value.rowwise().sum(), any_grad({a}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, id](Graph& g) {
        g.grad_buf(a) += g.nodes_[id].grad.replicate(1, g.nodes_[a].value.cols());
      };
    }
    return id;
  }

  int sum_all(int a) {
    M v(1, 1);
    v(0, 0) = nodes_[a].value.sum();
    int id = push(std::move(v), any_grad({a}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, id](Graph& g) {
        g.grad_buf(a).array() += g.nodes_[id].grad(0, 0);
      };
    }
    return id;
  }

  int mean_all(int a) {
    S n = S(nodes_[a].value.size());
    M v(1, 1);
    v(0, 0) = nodes_[a].value.sum() / n;
    int id = push(std::move(v), any_grad({a}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [a, n, id](Graph& g) {
        g.grad_buf(a).array() += g.nodes_[id].grad(0, 0) / n;
      };
    }
    return id;
  }

  // Batched conv via im2col + one GEMM. x rows are images laid out
  // channel-major (c*H*W + y*W + x); w is [C*K*K, OC], b is [1, OC];
  // output rows are [OC*OH*OW].
  int conv2d(int x, int w, int b, const ConvShape& cs) {
    const M& xv = nodes_[x].value;
    const int B = (int)xv.rows();
    const int oh = cs.out_height(), ow = cs.out_width();
    const int ckk = cs.channels * cs.kernel * cs.kernel;
    if (xv.cols() != cs.channels * cs.height * cs.width)
      throw std::invalid_argument("conv2d: input cols != C*H*W");
    auto col = std::make_shared<M>(B * oh * ow, ckk);
    im2col(xv, cs, *col);
    M prod = *col * nodes_[w].value;          // [B*OH*OW, OC]
    prod.rowwise() += nodes_[b].value.row(0);
    M v(B, cs.out_channels * oh * ow);
    for (int i = 0; i < B; ++i)
      for (int oc = 0; oc < cs.out_channels; ++oc)
        for (int p = 0; p < oh * ow; ++p)
          v(i, oc * oh * ow + p) = prod(i * oh * ow + p, oc);
    int id = push(std::move(v), any_grad({x, w, b}));
    if (nodes_[id].needs_grad) {
      nodes_[id].back = [x, w, b, cs, col, id](Graph& g) {
        const M& dy = g.nodes_[id].grad;
        const int Bn = (int)dy.rows();
        const int oh2 = cs.out_height(), ow2 = cs.out_width();
        M dprod(Bn * oh2 * ow2, cs.out_channels);
        for (int i = 0; i < Bn; ++i)
          for (int oc = 0; oc < cs.out_channels; ++oc)
            for (int p = 0; p < oh2 * ow2; ++p)
              dprod(i * oh2 * ow2 + p, oc) = dy(i, oc * oh2 * ow2 + p);
        if (g.nodes_[w].needs_grad) g.grad_buf(w).noalias() += col->transpose() * dprod;
        if (g.nodes_[b].needs_grad) g.grad_buf(b).row(0) += dprod.colwise().sum();
        if (g.nodes_[x].needs_grad) {
          M dcol = dprod * g.nodes_[w].value.transpose();
          col2im(dcol, cs, g.grad_buf(x));
        }
      };
    }
    return id;
  }

  // 2x2 max pooling, stride 2, floor semantics on odd extents
  int maxpool2(int x, int channels, int height, int width) {
    const M& xv = nodes_[x].value;
    const int B = (int)xv.rows();
    const int oh = height / 2, ow = width / 2;
    M v(B, channels * oh * ow);
    auto arg = std::make_shared<std::vector<int32_t>>((size_t)B * channels * oh * ow);
    for (int i = 0; i < B; ++i) {
      for (int c = 0; c < channels; ++c) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            int best = -1;
            S bv = -std::numeric_limits<S>::infinity();
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                int idx = c * height * width + (2 * oy + dy) * width + (2 * ox + dx);
                if (xv(i, idx) > bv) { bv = xv(i, idx); best = idx; }
              }
            int o = c * oh * ow + oy * ow + ox;
            v(i, o) = bv;
            (*arg)[(size_t)i * channels * oh * ow + o] = best;
          }
        }
      }
    }
    int id = push(std::move(v), any_grad({x}));
    if (nodes_[id].needs_grad) {
      int per = channels * oh * ow;
      nodes_[id].back = [x, arg, per, id](Graph& g) {
        const M& dy = g.nodes_[id].grad;
        M& dx = g.grad_buf(x);
        for (Eigen::Index i = 0; i < dy.rows(); ++i)
          for (int o = 0; o < per; ++o)
            dx(i, (*arg)[(size_t)i * per + o]) += dy(i, o);
      };
    }
    return id;
  }

  void backward(int root) {
    if (nodes_[root].value.size() != 1)
      throw std::invalid_argument("backward: root must be a scalar node");
    for (auto& n : nodes_)
      if (n.needs_grad && n.grad.size() == 0) {
        n.grad = M::Zero(n.value.rows(), n.value.cols());
      }
    nodes_[root].grad(0, 0) = S(1);
    for (int i = root; i >= 0; --i)
      if (nodes_[i].back) nodes_[i].back(*this);
    for (auto& [id, p] : bindings_) p->grad += nodes_[id].grad;
  }

  const M& value(int id) const { return nodes_[id].value; }
  const M& grad(int id) const { return nodes_[id].grad; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  size_t size() const { return nodes_.size(); }

  bool all_finite(int id) const { return nodes_[id].value.allFinite(); }

private:
  struct Node {
    M value;
    M grad;
    bool needs_grad = false;
    std::function<void(Graph&)> back;
  };

  int push(M v, bool needs) {
    nodes_.push_back(Node{std::move(v), M(), needs, nullptr});
    return (int)nodes_.size() - 1;
  }

  bool any_grad(std::initializer_list<int> ids) const {
    for (int i : ids)
      if (nodes_[i].needs_grad) return true;
    return false;
  }

  M& grad_buf(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = M::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  void check_cols(int x, int w, const char* op) const {
    if (nodes_[x].value.cols() != nodes_[w].value.rows())
      throw std::invalid_argument(std::string(op) + ": inner dimensions " +
                                  std::to_string(nodes_[x].value.cols()) + " vs " +
                                  std::to_string(nodes_[w].value.rows()) + " do not match");
  }

  static void im2col(const M& x, const ConvShape& cs, M& col) {
    const int B = (int)x.rows();
    const int oh = cs.out_height(), ow = cs.out_width();
    for (int i = 0; i < B; ++i) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          int row = i * oh * ow + oy * ow + ox;
          int k = 0;
          for (int c = 0; c < cs.channels; ++c)
            for (int ky = 0; ky < cs.kernel; ++ky)
              for (int kx = 0; kx < cs.kernel; ++kx, ++k) {
                int sy = oy + ky - cs.pad, sx = ox + kx - cs.pad;
                col(row, k) = (sy >= 0 && sy < cs.height && sx >= 0 && sx < cs.width)
                                  ? x(i, c * cs.height * cs.width + sy * cs.width + sx)
                                  : S(0);
              }
        }
      }
    }
  }

  static void col2im(const M& dcol, const ConvShape& cs, M& dx) {
    const int oh = cs.out_height(), ow = cs.out_width();
    const int B = (int)dx.rows();
    for (int i = 0; i < B; ++i) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          int row = i * oh * ow + oy * ow + ox;
          int k = 0;
          for (int c = 0; c < cs.channels; ++c)
            for (int ky = 0; ky < cs.kernel; ++ky)
              for (int kx = 0; kx < cs.kernel; ++kx, ++k) {
                int sy = oy + ky - cs.pad, sx = ox + kx - cs.pad;
                if (sy >= 0 && sy < cs.height && sx >= 0 && sx < cs.width)
                  dx(i, c * cs.height * cs.width + sy * cs.width + sx) += dcol(row, k);
              }
        }
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<std::pair<int, Parameter<S>*>> bindings_;
};

}  // namespace ramlab
