#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "cgnn/common.hpp"

namespace cgnn {

/// Unordered node pair, stored with u < v.
struct Edge {
  NodeId u{0};
  NodeId v{0};

  auto operator<=>(const Edge&) const = default;
};

/// Immutable undirected, unweighted graph with a sorted CSR neighbor index.
///
/// Construction rejects self-loops, duplicate edges (in either orientation)
/// and endpoints outside [0, n_nodes). Neighbor lists are sorted ascending,
/// so every traversal visits neighbors in a fixed order.
class Network {
public:
  Network() = default;
  Network(std::size_t n_nodes, std::vector<Edge> edges);

  std::size_t num_nodes() const noexcept { return n_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  /// Canonical edge list, sorted, u < v.
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  std::span<const NodeId> neighbors(NodeId i) const;
  std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }
  bool has_edge(NodeId i, NodeId j) const;

  /// CSR offsets; neighbors of i live at [offsets()[i], offsets()[i+1]).
  const std::vector<std::size_t>& offsets() const noexcept { return offsets_; }
  const std::vector<NodeId>& adjacency() const noexcept { return adjacency_; }

  /// Position of j inside the CSR row of i, or npos if not adjacent.
  std::size_t edge_slot(NodeId i, NodeId j) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  friend bool operator==(const Network& a, const Network& b) {
    return a.n_nodes_ == b.n_nodes_ && a.edges_ == b.edges_;
  }

private:
  std::size_t n_nodes_{0};
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adjacency_;
};

/// Dense n_nodes x d_x feature matrix; every entry finite.
class FeatureMatrix {
public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  std::size_t num_nodes() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.cols()); }

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
           a.values_ == b.values_;
  }

private:
  Matrix values_;
};

/// The observed tuple (V, X, A, T, Y).
///
/// Treatments and outcomes may both be empty, which marks a dataset loaded
/// without a treatment/outcome file (features and topology only).
class ObservationalDataset {
public:
  ObservationalDataset() = default;
  ObservationalDataset(Network network, FeatureMatrix features, Vector treatments, Vector outcomes);
  ObservationalDataset(Network network, FeatureMatrix features);

  const Network& network() const noexcept { return network_; }
  const FeatureMatrix& features() const noexcept { return features_; }
  const Vector& treatments() const noexcept { return treatments_; }
  const Vector& outcomes() const noexcept { return outcomes_; }
  std::size_t num_nodes() const noexcept { return network_.num_nodes(); }
  bool has_outcomes() const noexcept { return treatments_.size() > 0; }

  /// Same topology and features with new treatments/outcomes.
  ObservationalDataset with_observations(Vector treatments, Vector outcomes) const;

  friend bool operator==(const ObservationalDataset& a, const ObservationalDataset& b);

private:
  Network network_;
  FeatureMatrix features_;
  Vector treatments_;
  Vector outcomes_;
};

/// Erdos-Renyi G(n, p). Each of the C(n,2) pairs is visited in (i, j>i)
/// order and kept with probability edge_prob; the result depends only on seed.
Network generate_random_network(std::size_t n_nodes, double edge_prob, std::uint64_t seed);

/// Uniformly random graph with the same node and edge counts as `network`.
/// Serves as the structure-free null for instrument-relevance checks.
Network shuffle_edges(const Network& network, std::uint64_t seed);

/// Graph with the same node count and no edges.
Network empty_network(std::size_t n_nodes);

struct NodeSplit {
  std::vector<NodeId> train;
  std::vector<NodeId> test;
};

/// Seeded random partition; round(train_frac * n) nodes go to train.
/// Both parts are returned sorted. Throws if either part would be empty.
NodeSplit split_nodes(const Network& network, double train_frac, std::uint64_t seed);

/// Splits an arbitrary node list the same way (used for validation holdouts).
NodeSplit split_node_list(const std::vector<NodeId>& nodes, double train_frac, std::uint64_t seed);

std::vector<NodeId> all_nodes(std::size_t n_nodes);

}  // namespace cgnn
