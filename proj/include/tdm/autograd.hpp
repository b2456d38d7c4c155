#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <vector>

#include "tdm/common.hpp"

namespace tdm {

// Minimal reverse-mode differentiation over dense matrices. A Tape is built
// per forward pass (define-by-run); backward() replays the recorded ops in
// reverse order. Every adjoint is hand-derived and checked against central
// finite differences in the test suite.
//
// Matrices are row-major with rows = positions/samples, cols = features.
template <typename Scalar>
class Tape {
 public:
  using Mat = MatX<Scalar>;
  using Id = int;

  Id input(Mat value) {
    nodes_.push_back(Node{std::move(value), Mat()});
    Node& n = nodes_.back();
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return static_cast<Id>(nodes_.size() - 1);
  }

  const Mat& value(Id id) const { return nodes_[id].value; }
  const Mat& grad(Id id) const { return nodes_[id].grad; }

  Id matmul(Id a, Id b) {
    const Id out = input(value(a) * value(b));
    ops_.push_back([this, a, b, out] {
      nodes_[a].grad.noalias() += nodes_[out].grad * nodes_[b].value.transpose();
      nodes_[b].grad.noalias() += nodes_[a].value.transpose() * nodes_[out].grad;
    });
    return out;
  }

  // A @ B^T, for attention scores.
  Id matmul_nt(Id a, Id b) {
    const Id out = input(value(a) * value(b).transpose());
    ops_.push_back([this, a, b, out] {
      nodes_[a].grad.noalias() += nodes_[out].grad * nodes_[b].value;
      nodes_[b].grad.noalias() += nodes_[out].grad.transpose() * nodes_[a].value;
    });
    return out;
  }

  Id add(Id a, Id b) {
    const Id out = input(value(a) + value(b));
    ops_.push_back([this, a, b, out] {
      nodes_[a].grad += nodes_[out].grad;
      nodes_[b].grad += nodes_[out].grad;
    });
    return out;
  }

  // Broadcast a 1 x C bias over every row.
  Id add_row(Id a, Id bias) {
    Mat v = value(a);
    v.rowwise() += value(bias).row(0);
    const Id out = input(std::move(v));
    ops_.push_back([this, a, bias, out] {
      nodes_[a].grad += nodes_[out].grad;
      nodes_[bias].grad.row(0) += nodes_[out].grad.colwise().sum();
    });
    return out;
  }

  Id scale(Id a, Scalar s) {
    const Id out = input(value(a) * s);
    ops_.push_back([this, a, out, s] { nodes_[a].grad += nodes_[out].grad * s; });
    return out;
  }

  Id slice_cols(Id a, int c0, int width) {
    const Id out = input(value(a).middleCols(c0, width));
    ops_.push_back([this, a, out, c0, width] {
      nodes_[a].grad.middleCols(c0, width) += nodes_[out].grad;
    });
    return out;
  }

  Id concat_cols(const std::vector<Id>& parts) {
    int cols = 0;
    for (Id p : parts) cols += static_cast<int>(value(p).cols());
    Mat v(value(parts[0]).rows(), cols);
    int c = 0;
    for (Id p : parts) {
      v.middleCols(c, value(p).cols()) = value(p);
      c += static_cast<int>(value(p).cols());
    }
    const Id out = input(std::move(v));
    ops_.push_back([this, parts, out] {
      int c0 = 0;
      for (Id p : parts) {
        const int w = static_cast<int>(nodes_[p].value.cols());
        nodes_[p].grad += nodes_[out].grad.middleCols(c0, w);
        c0 += w;
      }
    });
    return out;
  }

  // Per-row normalization with learned gain/bias (both 1 x C).
  Id layer_norm(Id x, Id gain, Id bias, Scalar eps) {
    const Mat& xv = value(x);
    const int rows = static_cast<int>(xv.rows());
    const int cols = static_cast<int>(xv.cols());
    Mat xhat(rows, cols);
    VecX<Scalar> inv_std(rows);
    for (int r = 0; r < rows; ++r) {
      const Scalar mean = xv.row(r).mean();
      const Scalar var = (xv.row(r).array() - mean).square().sum() / Scalar(cols);
      const Scalar is = Scalar(1) / std::sqrt(var + eps);
      inv_std[r] = is;
      xhat.row(r) = (xv.row(r).array() - mean) * is;
    }
    Mat v = xhat.array().rowwise() * value(gain).row(0).array();
    v.rowwise() += value(bias).row(0);
    const Id out = input(std::move(v));
    ops_.push_back([this, x, gain, bias, out, xhat = std::move(xhat),
                    inv_std = std::move(inv_std)] {
      const Mat& g = nodes_[out].grad;
      const int cols = static_cast<int>(g.cols());
      nodes_[bias].grad.row(0) += g.colwise().sum();
      nodes_[gain].grad.row(0) += (g.array() * xhat.array()).colwise().sum().matrix();
      // dxhat = g * gain; dx = (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat)) * inv_std
      for (int r = 0; r < g.rows(); ++r) {
        Eigen::Array<Scalar, 1, Eigen::Dynamic> dxhat =
            g.row(r).array() * nodes_[gain].value.row(0).array();
        const Scalar m1 = dxhat.sum() / Scalar(cols);
        const Scalar m2 = (dxhat * xhat.row(r).array()).sum() / Scalar(cols);
        nodes_[x].grad.row(r).array() +=
            (dxhat - m1 - xhat.row(r).array() * m2) * inv_std[r];
      }
    });
    return out;
  }

  // tanh-form gelu; smooth everywhere so finite differences behave.
  Id gelu(Id x) {
    const Mat& xv = value(x);
    constexpr Scalar k = Scalar(0.7978845608028654);  // sqrt(2/pi)
    constexpr Scalar c3 = Scalar(0.044715);
    Mat t = (k * (xv.array() + c3 * xv.array().cube())).tanh();
    Mat v = Scalar(0.5) * xv.array() * (Scalar(1) + t.array());
    const Id out = input(std::move(v));
    ops_.push_back([this, x, out, t = std::move(t)] {
      const Mat& xv2 = nodes_[x].value;
      constexpr Scalar kk = Scalar(0.7978845608028654);
      constexpr Scalar cc3 = Scalar(0.044715);
      auto sech2 = (Scalar(1) - t.array().square());
      auto inner = kk * (Scalar(1) + Scalar(3) * cc3 * xv2.array().square());
      auto dydx = Scalar(0.5) * (Scalar(1) + t.array()) +
                  Scalar(0.5) * xv2.array() * sech2 * inner;
      nodes_[x].grad.array() += nodes_[out].grad.array() * dydx;
    });
    return out;
  }

  // Row-wise softmax over the causal prefix: row i attends to columns 0..i.
  // Masked entries are exactly zero, so logits at position i never read keys
  // from positions > i.
  Id causal_softmax(Id scores) {
    const Mat& s = value(scores);
    const int q = static_cast<int>(s.rows());
    Mat p = Mat::Zero(q, s.cols());
    for (int i = 0; i < q; ++i) {
      const int w = i + 1;
      const Scalar mx = s.row(i).head(w).maxCoeff();
      Eigen::Array<Scalar, 1, Eigen::Dynamic> e = (s.row(i).head(w).array() - mx).exp();
      p.row(i).head(w) = e / e.sum();
    }
    const Id out = input(std::move(p));
    ops_.push_back([this, scores, out] {
      const Mat& pv = nodes_[out].value;
      const Mat& g = nodes_[out].grad;
      for (int i = 0; i < pv.rows(); ++i) {
        const int w = i + 1;
        const Scalar dot = (g.row(i).head(w).array() * pv.row(i).head(w).array()).sum();
        nodes_[scores].grad.row(i).head(w).array() +=
            pv.row(i).head(w).array() * (g.row(i).head(w).array() - dot);
      }
    });
    return out;
  }

  // Gathers table rows by token id and adds a constant positional table.
  Id embed(Id table, const std::vector<int>& ids, const Mat& positional) {
    Mat v(static_cast<int>(ids.size()), value(table).cols());
    for (std::size_t i = 0; i < ids.size(); ++i)
      v.row(static_cast<int>(i)) =
          value(table).row(ids[i]) + positional.row(static_cast<int>(i));
    const Id out = input(std::move(v));
    ops_.push_back([this, table, ids, out] {
      for (std::size_t i = 0; i < ids.size(); ++i)
        nodes_[table].grad.row(ids[i]) += nodes_[out].grad.row(static_cast<int>(i));
    });
    return out;
  }

  // Per row: sum of table rows selected by that row's ids (slot-wise token
  // embeddings, summed).
  Id embed_bag(Id table, const std::vector<std::vector<int>>& ids) {
    Mat v = Mat::Zero(static_cast<int>(ids.size()), value(table).cols());
    for (std::size_t r = 0; r < ids.size(); ++r)
      for (int id : ids[r]) v.row(static_cast<int>(r)) += value(table).row(id);
    const Id out = input(std::move(v));
    ops_.push_back([this, table, ids, out] {
      for (std::size_t r = 0; r < ids.size(); ++r)
        for (int id : ids[r])
          nodes_[table].grad.row(id) += nodes_[out].grad.row(static_cast<int>(r));
    });
    return out;
  }

  // 0.5 * sum((pred - target)^2), target constant.
  Id squared_error_sum(Id pred, const Mat& target) {
    Mat diff = value(pred) - target;
    Mat v(1, 1);
    v(0, 0) = Scalar(0.5) * diff.array().square().sum();
    const Id out = input(std::move(v));
    ops_.push_back([this, pred, out, diff = std::move(diff)] {
      nodes_[pred].grad += nodes_[out].grad(0, 0) * diff;
    });
    return out;
  }

  // Rows hold `groups` independent categorical distributions of `bins` logits
  // each; targets(r, g) is the class for group g of row r. Returns the summed
  // cross entropy.
  Id grouped_xent_sum(Id logits, const std::vector<std::vector<int>>& targets, int bins) {
    const Mat& lv = value(logits);
    const int groups = static_cast<int>(lv.cols()) / bins;
    Scalar total = 0;
    Mat probs(lv.rows(), lv.cols());
    for (int r = 0; r < lv.rows(); ++r) {
      for (int g = 0; g < groups; ++g) {
        const auto seg = lv.row(r).segment(g * bins, bins);
        const Scalar mx = seg.maxCoeff();
        Eigen::Array<Scalar, 1, Eigen::Dynamic> e = (seg.array() - mx).exp();
        const Scalar z = e.sum();
        probs.row(r).segment(g * bins, bins) = e / z;
        total += std::log(z) + mx - seg[targets[r][g]];
      }
    }
    Mat v(1, 1);
    v(0, 0) = total;
    const Id out = input(std::move(v));
    ops_.push_back([this, logits, targets, out, bins, groups, probs = std::move(probs)] {
      const Scalar up = nodes_[out].grad(0, 0);
      for (int r = 0; r < probs.rows(); ++r)
        for (int g = 0; g < groups; ++g) {
          nodes_[logits].grad.row(r).segment(g * bins, bins) +=
              up * probs.row(r).segment(g * bins, bins);
          nodes_[logits].grad(r, g * bins + targets[r][g]) -= up;
        }
    });
    return out;
  }

  // Sum over rows of -log softmax(logits.row(i))[targets[i]]. targets.size()
  // may be smaller than the number of rows; trailing rows carry no loss.
  Id cross_entropy_sum(Id logits, const std::vector<int>& targets) {
    const Mat& lv = value(logits);
    Scalar total = 0;
    Mat probs(static_cast<int>(targets.size()), lv.cols());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const int r = static_cast<int>(i);
      const Scalar mx = lv.row(r).maxCoeff();
      Eigen::Array<Scalar, 1, Eigen::Dynamic> e = (lv.row(r).array() - mx).exp();
      const Scalar z = e.sum();
      probs.row(r) = e / z;
      total += std::log(z) + mx - lv(r, targets[i]);
    }
    Mat v(1, 1);
    v(0, 0) = total;
    const Id out = input(std::move(v));
    ops_.push_back([this, logits, targets, out, probs = std::move(probs)] {
      const Scalar up = nodes_[out].grad(0, 0);
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const int r = static_cast<int>(i);
        nodes_[logits].grad.row(r) += up * probs.row(r);
        nodes_[logits].grad(r, targets[i]) -= up;
      }
    });
    return out;
  }

  void backward(Id loss) {
    require(value(loss).size() == 1, "backward: loss must be scalar");
    nodes_[loss].grad(0, 0) = Scalar(1);
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
  };
  std::deque<Node> nodes_;
  std::vector<std::function<void()>> ops_;
};

}  // namespace tdm
