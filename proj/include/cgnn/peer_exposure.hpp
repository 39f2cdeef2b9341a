#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "cgnn/graph.hpp"

namespace cgnn {

inline constexpr double kDefaultSmoothing = 1e-3;

/// Per-node feature distributions, one row per node:
/// P_i(k) = (max(x_ik, 0) + s) / sum_k (max(x_ik, 0) + s).
/// Every entry is strictly positive for s > 0.
Matrix feature_distributions(const FeatureMatrix& features, double smoothing = kDefaultSmoothing);

/// KL(p || q) with natural logarithm. Both inputs must be strictly positive.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Peer weight w_ij = 1 / (1 + KL(P_i || P_j)), in (0, 1].
double peer_weight(std::span<const double> p_i, std::span<const double> p_j);

/// Directed weights w_ij for every ordered adjacent pair, laid out in the
/// network's CSR order: row i holds w_{i, N(i)[k]} at position k.
class PeerWeights {
public:
  PeerWeights() = default;
  PeerWeights(const Network& network, std::vector<double> weights);

  std::span<const double> row(NodeId i) const {
    return {weights_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  /// w_ij; throws if i and j are not adjacent.
  double weight(const Network& network, NodeId i, NodeId j) const;
  const std::vector<double>& values() const noexcept { return weights_; }
  std::size_t num_nodes() const noexcept { return offsets_.size() - 1; }

private:
  std::vector<std::size_t> offsets_{0};
  std::vector<double> weights_;
};

PeerWeights compute_peer_weights(const Network& network, const FeatureMatrix& features,
                                 double smoothing = kDefaultSmoothing);

/// z_i = sum_{j in N(i)} w_ij * t_j. Treatments may be real-valued
/// (predicted propensities). Summation follows the sorted neighbor order.
Vector exposure(const Network& network, const PeerWeights& weights, const Vector& treatments);

/// CSV dump of (i, j, w_ij) triples for every ordered adjacent pair.
void write_peer_weights_csv(const std::filesystem::path& path, const Network& network,
                            const PeerWeights& weights);

}  // namespace cgnn
