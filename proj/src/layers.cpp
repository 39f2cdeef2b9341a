#include "cgnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cgnn::nn {

AttentionGraph::AttentionGraph(const Network& network) {
  const auto n = network.num_nodes();
  offsets_.assign(n + 1, 0);
  targets_.reserve(network.adjacency().size() + n);
  for (NodeId i = 0; i < n; ++i) {
    const auto nbrs = network.neighbors(i);
    auto pos = std::lower_bound(nbrs.begin(), nbrs.end(), i);
    targets_.insert(targets_.end(), nbrs.begin(), pos);
    targets_.push_back(i);
    targets_.insert(targets_.end(), pos, nbrs.end());
    offsets_[i + 1] = targets_.size();
  }
}

AttentionScores compute_attention(const Matrix& hw, const Matrix& a, const AttentionGraph& graph,
                                  double leaky_slope) {
  const auto d = hw.cols();
  if (a.rows() != 2 * d || a.cols() != 1) {
    throw DimensionError("attention vector must be (2 d_out) x 1");
  }
  if (static_cast<std::size_t>(hw.rows()) != graph.num_nodes()) {
    throw DimensionError("attention input rows do not match node count");
  }
  const Vector src = hw * a.topRows(d);
  const Vector dst = hw * a.bottomRows(d);
  const auto& off = graph.offsets();
  const auto& tgt = graph.targets();
  AttentionScores out;
  out.pre_activation.resize(tgt.size());
  out.scores.resize(tgt.size());
  out.alpha.resize(tgt.size());
  for (std::size_t i = 0; i + 1 < off.size(); ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      const double s = src[static_cast<Eigen::Index>(i)] + dst[tgt[k]];
      const double e = s > 0.0 ? s : leaky_slope * s;
      out.pre_activation[k] = s;
      out.scores[k] = e;
      row_max = std::max(row_max, e);
    }
    double denom = 0.0;
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      out.alpha[k] = std::exp(out.scores[k] - row_max);
      denom += out.alpha[k];
    }
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      out.alpha[k] /= denom;
    }
  }
  return out;
}

Var attention_aggregate(Var hw, Var a, const AttentionGraph& graph, double leaky_slope,
                        AttentionMonitor* monitor) {
  if (hw.tape != a.tape) {
    throw Error("operands recorded on different tapes");
  }
  const Matrix& h = hw.value();
  AttentionScores sc = compute_attention(h, a.value(), graph, leaky_slope);
  const auto& off = graph.offsets();
  const auto& tgt = graph.targets();

  Matrix out = Matrix::Zero(h.rows(), h.cols());
  for (std::size_t i = 0; i + 1 < off.size(); ++i) {
    double row_sum = 0.0;
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      out.row(static_cast<Eigen::Index>(i)) += sc.alpha[k] * h.row(tgt[k]);
      row_sum += sc.alpha[k];
    }
    if (monitor) {
      monitor->max_row_sum_error = std::max(monitor->max_row_sum_error, std::abs(row_sum - 1.0));
      ++monitor->rows_checked;
    }
  }
  if (monitor) {
    ++monitor->passes;
  }

  return hw.tape->record(
      std::move(out),
      [hw, a, &graph, leaky_slope, alpha = std::move(sc.alpha),
       pre = std::move(sc.pre_activation)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const Matrix& h = t.value(hw.id);
        const Matrix& av = t.value(a.id);
        const auto d = h.cols();
        const auto& off = graph.offsets();
        const auto& tgt = graph.targets();

        Matrix dh = Matrix::Zero(h.rows(), d);
        Vector dsrc = Vector::Zero(h.rows());
        Vector ddst = Vector::Zero(h.rows());
        for (std::size_t i = 0; i + 1 < off.size(); ++i) {
          const auto gi = g.row(static_cast<Eigen::Index>(i));
          double weighted = 0.0;
          for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
            weighted += alpha[k] * gi.dot(h.row(tgt[k]));
          }
          for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
            const NodeId j = tgt[k];
            const double dalpha = gi.dot(h.row(j));
            const double de = alpha[k] * (dalpha - weighted);
            const double ds = de * (pre[k] > 0.0 ? 1.0 : leaky_slope);
            dsrc[static_cast<Eigen::Index>(i)] += ds;
            ddst[j] += ds;
            dh.row(j) += alpha[k] * gi;
          }
        }
        dh += dsrc * av.topRows(d).transpose() + ddst * av.bottomRows(d).transpose();
        Matrix da(2 * d, 1);
        da.topRows(d) = h.transpose() * dsrc;
        da.bottomRows(d) = h.transpose() * ddst;
        t.accumulate(hw.id, dh);
        t.accumulate(a.id, da);
      });
}

Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      m(i, k) = u(rng);
    }
  }
  return m;
}

AttentionLayer::AttentionLayer(const std::string& name, Eigen::Index d_in, Eigen::Index d_out,
                               Rng& rng, double slope, bool with_residual)
    : weight(name + ".W", glorot_uniform(d_in, d_out, rng)),
      attention(name + ".a", glorot_uniform(2 * d_out, 1, rng)),
      leaky_slope(slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw InvalidValueError("leaky_slope must lie in (0, 1)");
  }
  if (with_residual) {
    residual = Parameter(name + ".R", glorot_uniform(d_in, d_out, rng));
  }
}

Var AttentionLayer::forward(Tape& tape, Var h, const AttentionGraph& graph,
                            AttentionMonitor* monitor) {
  Var hw = matmul(h, tape.parameter(weight));
  Var mixed = attention_aggregate(hw, tape.parameter(attention), graph, leaky_slope, monitor);
  if (has_residual()) {
    mixed = add(mixed, matmul(h, tape.parameter(residual)));
  }
  return elu(mixed);
}

AttentionScores AttentionLayer::scores(const Matrix& h, const AttentionGraph& graph) const {
  return compute_attention(h * weight.value, attention.value, graph, leaky_slope);
}

DenseLayer::DenseLayer(const std::string& name, Eigen::Index d_in, Eigen::Index d_out, Rng& rng)
    : weight(name + ".W", glorot_uniform(d_in, d_out, rng)),
      bias(name + ".b", Matrix::Zero(1, d_out), false) {}

Var DenseLayer::forward(Tape& tape, Var h) {
  return add_row(matmul(h, tape.parameter(weight)), tape.parameter(bias));
}

}  // namespace cgnn::nn
