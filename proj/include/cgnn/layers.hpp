#pragma once

#include <vector>

#include "cgnn/autodiff.hpp"
#include "cgnn/graph.hpp"
#include "cgnn/random.hpp"

namespace cgnn::nn {

/// Attention neighborhoods: N(i) plus i itself, sorted ascending, in CSR form.
/// The self entry keeps isolated nodes well defined (they attend to themselves).
class AttentionGraph {
public:
  AttentionGraph() = default;
  explicit AttentionGraph(const Network& network);

  std::size_t num_nodes() const noexcept { return offsets_.size() - 1; }
  const std::vector<std::size_t>& offsets() const noexcept { return offsets_; }
  const std::vector<NodeId>& targets() const noexcept { return targets_; }

private:
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> targets_;
};

/// Tracks the worst softmax normalisation error seen by any attention pass.
struct AttentionMonitor {
  double max_row_sum_error{0.0};
  std::size_t rows_checked{0};
  std::size_t passes{0};
};

/// Raw scores e_ij and normalised weights alpha_ij, aligned with the
/// AttentionGraph CSR slots.
struct AttentionScores {
  std::vector<double> pre_activation;  // a^T [Wh_i || Wh_j]
  std::vector<double> scores;          // e_ij after LeakyReLU
  std::vector<double> alpha;
};

/// e_ij = LeakyReLU(a_src . hw_i + a_dst . hw_j); alpha = softmax over the
/// attention neighborhood, with the row maximum subtracted first.
AttentionScores compute_attention(const Matrix& hw, const Matrix& a, const AttentionGraph& graph,
                                  double leaky_slope);

/// Differentiable out_i = sum_j alpha_ij hw_j. `graph` must outlive the tape.
Var attention_aggregate(Var hw, Var a, const AttentionGraph& graph, double leaky_slope,
                        AttentionMonitor* monitor = nullptr);

/// Glorot-uniform matrix, limit sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Single-head graph attention layer: H' = ELU(sum_j alpha_ij W h_j), or
/// H' = ELU(sum_j alpha_ij W h_j + h_i R) with the residual projection enabled.
struct AttentionLayer {
  Parameter weight;     // d_in x d_out
  Parameter attention;  // 2 d_out x 1
  Parameter residual;   // d_in x d_out, empty when disabled
  double leaky_slope{0.2};

  AttentionLayer() = default;
  AttentionLayer(const std::string& name, Eigen::Index d_in, Eigen::Index d_out, Rng& rng,
                 double leaky_slope = 0.2, bool residual = false);

  bool has_residual() const noexcept { return residual.value.size() > 0; }

  Var forward(Tape& tape, Var h, const AttentionGraph& graph,
              AttentionMonitor* monitor = nullptr);
  /// Inference-only scores for inspection.
  AttentionScores scores(const Matrix& h, const AttentionGraph& graph) const;
};

struct DenseLayer {
  Parameter weight;  // d_in x d_out
  Parameter bias;    // 1 x d_out, not regularised

  DenseLayer() = default;
  DenseLayer(const std::string& name, Eigen::Index d_in, Eigen::Index d_out, Rng& rng);

  Var forward(Tape& tape, Var h);
};

}  // namespace cgnn::nn
