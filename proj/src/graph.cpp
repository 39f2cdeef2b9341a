#include "cgnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include "cgnn/random.hpp"

namespace cgnn {

Network::Network(std::size_t n_nodes, std::vector<Edge> edges) : n_nodes_(n_nodes) {
  for (auto& e : edges) {
    if (e.u >= n_nodes || e.v >= n_nodes) {
      throw GraphError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                       ") has an endpoint outside [0, " + std::to_string(n_nodes) + ")");
    }
    if (e.u == e.v) {
      throw GraphError("self-loop on node " + std::to_string(e.u));
    }
    if (e.u > e.v) {
      std::swap(e.u, e.v);
    }
  }
  std::sort(edges.begin(), edges.end());
  auto dup = std::adjacent_find(edges.begin(), edges.end());
  if (dup != edges.end()) {
    throw GraphError("duplicate edge (" + std::to_string(dup->u) + ", " + std::to_string(dup->v) +
                     ")");
  }
  edges_ = std::move(edges);

  std::vector<std::size_t> degree(n_nodes_, 0);
  for (const auto& e : edges_) {
    ++degree[e.u];
    ++degree[e.v];
  }
  offsets_.assign(n_nodes_ + 1, 0);
  for (std::size_t i = 0; i < n_nodes_; ++i) {
    offsets_[i + 1] = offsets_[i] + degree[i];
  }
  adjacency_.resize(offsets_.back());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    adjacency_[cursor[e.u]++] = e.v;
    adjacency_[cursor[e.v]++] = e.u;
  }
  for (std::size_t i = 0; i < n_nodes_; ++i) {
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
  }
}

std::span<const NodeId> Network::neighbors(NodeId i) const {
  return {adjacency_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

std::size_t Network::edge_slot(NodeId i, NodeId j) const {
  auto row = neighbors(i);
  auto it = std::lower_bound(row.begin(), row.end(), j);
  if (it == row.end() || *it != j) {
    return npos;
  }
  return offsets_[i] + static_cast<std::size_t>(it - row.begin());
}

bool Network::has_edge(NodeId i, NodeId j) const {
  return i < n_nodes_ && j < n_nodes_ && edge_slot(i, j) != npos;
}

FeatureMatrix::FeatureMatrix(Matrix values) : values_(std::move(values)) {
  if (!values_.allFinite()) {
    throw InvalidValueError("feature matrix contains non-finite entries");
  }
}

ObservationalDataset::ObservationalDataset(Network network, FeatureMatrix features, Vector treatments,
                                           Vector outcomes)
    : network_(std::move(network)),
      features_(std::move(features)),
      treatments_(std::move(treatments)),
      outcomes_(std::move(outcomes)) {
  const auto n = static_cast<Eigen::Index>(network_.num_nodes());
  if (static_cast<Eigen::Index>(features_.num_nodes()) != n) {
    throw DimensionError("feature matrix has " + std::to_string(features_.num_nodes()) +
                         " rows but the network has " + std::to_string(n) + " nodes");
  }
  if (treatments_.size() != n || outcomes_.size() != n) {
    throw DimensionError("treatments/outcomes length does not match node count " +
                         std::to_string(n));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (treatments_[i] != 0.0 && treatments_[i] != 1.0) {
      throw InvalidValueError("treatment of node " + std::to_string(i) + " is " +
                              std::to_string(treatments_[i]) + ", expected 0 or 1");
    }
  }
  if (!outcomes_.allFinite()) {
    throw InvalidValueError("outcomes contain non-finite entries");
  }
}

ObservationalDataset::ObservationalDataset(Network network, FeatureMatrix features)
    : network_(std::move(network)), features_(std::move(features)) {
  if (features_.num_nodes() != network_.num_nodes()) {
    throw DimensionError("feature matrix has " + std::to_string(features_.num_nodes()) +
                         " rows but the network has " + std::to_string(network_.num_nodes()) +
                         " nodes");
  }
}

ObservationalDataset ObservationalDataset::with_observations(Vector treatments,
                                                             Vector outcomes) const {
  return {network_, features_, std::move(treatments), std::move(outcomes)};
}

bool operator==(const ObservationalDataset& a, const ObservationalDataset& b) {
  return a.network_ == b.network_ && a.features_ == b.features_ &&
         a.treatments_.size() == b.treatments_.size() && a.treatments_ == b.treatments_ &&
         a.outcomes_.size() == b.outcomes_.size() && a.outcomes_ == b.outcomes_;
}

Network generate_random_network(std::size_t n_nodes, double edge_prob, std::uint64_t seed) {
  if (n_nodes < 1) {
    throw InvalidValueError("generate_random_network: n_nodes must be >= 1");
  }
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) {
    throw InvalidValueError("generate_random_network: edge_prob must lie in [0, 1]");
  }
  auto rng = make_rng(seed, 0x67726170ULL);
  std::bernoulli_distribution keep(edge_prob);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    for (std::size_t j = i + 1; j < n_nodes; ++j) {
      if (keep(rng)) {
        edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
      }
    }
  }
  return {n_nodes, std::move(edges)};
}

Network shuffle_edges(const Network& network, std::uint64_t seed) {
  const std::size_t n = network.num_nodes();
  const std::size_t m = network.num_edges();
  if (n < 2 || m == 0) {
    return network;
  }
  auto rng = make_rng(seed, 0x73687566ULL);
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));
  std::set<Edge> chosen;
  while (chosen.size() < m) {
    NodeId a = pick(rng);
    NodeId b = pick(rng);
    if (a == b) {
      continue;
    }
    chosen.insert({std::min(a, b), std::max(a, b)});
  }
  return {n, std::vector<Edge>(chosen.begin(), chosen.end())};
}

Network empty_network(std::size_t n_nodes) { return {n_nodes, {}}; }

std::vector<NodeId> all_nodes(std::size_t n_nodes) {
  std::vector<NodeId> nodes(n_nodes);
  std::iota(nodes.begin(), nodes.end(), NodeId{0});
  return nodes;
}

NodeSplit split_node_list(const std::vector<NodeId>& nodes, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw InvalidValueError("train_frac must lie strictly between 0 and 1");
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(nodes.size())));
  if (n_train == 0 || n_train >= nodes.size()) {
    throw InvalidValueError("degenerate split: train_frac " + std::to_string(train_frac) + " on " +
                            std::to_string(nodes.size()) + " nodes leaves an empty part");
  }
  std::vector<NodeId> order = nodes;
  auto rng = make_rng(seed, 0x73706c74ULL);
  std::shuffle(order.begin(), order.end(), rng);
  NodeSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

NodeSplit split_nodes(const Network& network, double train_frac, std::uint64_t seed) {
  return split_node_list(all_nodes(network.num_nodes()), train_frac, seed);
}

}  // namespace cgnn
