#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cgnn/graph.hpp"

namespace cgnn {

namespace fs = std::filesystem;

// File formats
//
//   edges:    one edge per line, two whitespace-separated 0-based node ids.
//             Lines starting with '#' are comments. A comment of the form
//             "# nodes: N" fixes the node count; otherwise it is max id + 1.
//   features: CSV, row i is node i, all numeric. A single header row is
//             accepted and detected by the presence of a non-numeric field.
//   treatment/outcome: CSV with columns node,treatment,outcome (header
//             optional). Every node must appear exactly once.

struct EdgeList {
  std::optional<std::size_t> declared_nodes;
  std::vector<Edge> edges;
  std::size_t max_node_plus_one{0};
};

EdgeList read_edge_file(const fs::path& path);
Matrix read_feature_file(const fs::path& path);

struct TreatmentOutcome {
  Vector treatments;
  Vector outcomes;
};

TreatmentOutcome read_treatment_outcome_file(const fs::path& path, std::size_t n_nodes);

/// Loads and validates a dataset. Self-loops and duplicate edges are parse
/// errors carrying the offending line number.
ObservationalDataset load_dataset(const fs::path& edge_file, const fs::path& feature_file,
                                  const std::optional<fs::path>& treatment_outcome_file = {});

void write_edge_file(const fs::path& path, const Network& network);
void write_feature_file(const fs::path& path, const FeatureMatrix& features);
void write_treatment_outcome_file(const fs::path& path, const Vector& treatments,
                                  const Vector& outcomes);

/// Writes edges.txt, features.csv and (when present) treatment_outcome.csv.
void write_dataset(const fs::path& directory, const ObservationalDataset& dataset);
ObservationalDataset load_dataset_dir(const fs::path& directory);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

/// Column-oriented CSV writer used for every numeric table the library emits.
void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns,
               const std::vector<std::string>& integer_columns = {});

/// Numeric CSV with an optional single header row (detected when the first
/// row has a non-numeric field).
Matrix read_numeric_csv(const fs::path& path);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, const std::string& content);

}  // namespace cgnn
