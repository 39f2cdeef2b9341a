#include "cgnn/peer_exposure.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "cgnn/io.hpp"

namespace cgnn {

Matrix feature_distributions(const FeatureMatrix& features, double smoothing) {
  if (!(smoothing > 0.0)) {
    throw InvalidValueError("smoothing must be positive");
  }
  if (features.dim() == 0) {
    throw DimensionError("feature_distributions: zero-dimensional features");
  }
  Matrix p = features.values().cwiseMax(0.0).array() + smoothing;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw DimensionError("kl_divergence: length mismatch");
  }
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!(p[k] > 0.0) || !(q[k] > 0.0)) {
      throw InvalidValueError("kl_divergence: distributions must be strictly positive");
    }
    kl += p[k] * std::log(p[k] / q[k]);
  }
  // Gibbs' inequality; rounding can push identical inputs a hair below zero.
  return kl < 0.0 ? 0.0 : kl;
}

double peer_weight(std::span<const double> p_i, std::span<const double> p_j) {
  const double w = 1.0 / (1.0 + kl_divergence(p_i, p_j));
  if (!std::isfinite(w)) {
    throw NumericalError("peer_weight: non-finite result");
  }
  return w;
}

PeerWeights::PeerWeights(const Network& network, std::vector<double> weights)
    : offsets_(network.offsets()), weights_(std::move(weights)) {
  if (weights_.size() != network.adjacency().size()) {
    throw DimensionError("PeerWeights: one weight per ordered adjacent pair expected");
  }
  for (double w : weights_) {
    if (!(w > 0.0 && w <= 1.0)) {
      throw InvalidValueError("PeerWeights: weight " + format_double(w) + " outside (0, 1]");
    }
  }
}

double PeerWeights::weight(const Network& network, NodeId i, NodeId j) const {
  const auto slot = network.edge_slot(i, j);
  if (slot == Network::npos) {
    throw GraphError("nodes " + std::to_string(i) + " and " + std::to_string(j) +
                     " are not adjacent");
  }
  return weights_[slot];
}

PeerWeights compute_peer_weights(const Network& network, const FeatureMatrix& features,
                                 double smoothing) {
  if (features.num_nodes() != network.num_nodes()) {
    throw DimensionError("compute_peer_weights: feature rows do not match node count");
  }
  // Row-major copy so each distribution is a contiguous span.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> p =
      feature_distributions(features, smoothing);
  const auto d = static_cast<std::size_t>(p.cols());
  auto dist = [&](NodeId i) { return std::span<const double>(p.data() + i * d, d); };

  std::vector<double> w(network.adjacency().size());
  for (NodeId i = 0; i < network.num_nodes(); ++i) {
    const auto begin = network.offsets()[i];
    const auto row = network.neighbors(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      w[begin + k] = peer_weight(dist(i), dist(row[k]));
    }
  }
  return {network, std::move(w)};
}

Vector exposure(const Network& network, const PeerWeights& weights, const Vector& treatments) {
  const auto n = network.num_nodes();
  if (static_cast<std::size_t>(treatments.size()) != n || weights.num_nodes() != n) {
    throw DimensionError("exposure: treatments/weights do not match node count");
  }
  Vector z = Vector::Zero(static_cast<Eigen::Index>(n));
  for (NodeId i = 0; i < n; ++i) {
    const auto nbrs = network.neighbors(i);
    const auto w = weights.row(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      acc += w[k] * treatments[nbrs[k]];
    }
    z[i] = acc;
  }
  return z;
}

void write_peer_weights_csv(const std::filesystem::path& path, const Network& network,
                            const PeerWeights& weights) {
  std::vector<double> src;
  std::vector<double> dst;
  std::vector<double> w;
  for (NodeId i = 0; i < network.num_nodes(); ++i) {
    const auto nbrs = network.neighbors(i);
    const auto row = weights.row(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      src.push_back(i);
      dst.push_back(nbrs[k]);
      w.push_back(row[k]);
    }
  }
  write_csv(path, {"i", "j", "w_ij"}, {src, dst, w}, {"i", "j"});
}

}  // namespace cgnn
