#include "cgnn/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

namespace cgnn {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
      ++i;
    }
    const auto start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
      ++i;
    }
    if (i > start) {
      out.push_back(line.substr(start, i - start));
    }
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) {
    return false;
  }
  if (s.front() == '+') {
    s.remove_prefix(1);
  }
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

bool parse_index(std::string_view s, std::uint64_t& out) {
  if (s.empty()) {
    return false;
  }
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  return in;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) {
    throw Error("failed to format double");
  }
  return {buf.data(), ptr};
}

std::string read_text_file(const fs::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
  auto out = open_output(path);
  out << content;
}

EdgeList read_edge_file(const fs::path& path) {
  auto in = open_input(path);
  const std::string name = path.string();
  EdgeList list;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<Edge, std::size_t>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) {
      continue;
    }
    if (body.front() == '#') {
      auto rest = trim(body.substr(1));
      constexpr std::string_view key = "nodes:";
      if (rest.substr(0, key.size()) == key) {
        std::uint64_t n = 0;
        if (!parse_index(trim(rest.substr(key.size())), n)) {
          throw ParseError(name, line_no, "malformed node-count comment");
        }
        list.declared_nodes = n;
      }
      continue;
    }
    const auto fields = split_whitespace(body);
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    if (fields.size() != 2 || !parse_index(fields[0], a) || !parse_index(fields[1], b)) {
      throw ParseError(name, line_no, "expected two non-negative integer node ids");
    }
    if (a == b) {
      throw ParseError(name, line_no, "self-loop on node " + std::to_string(a));
    }
    if (a > 0xFFFFFFFEULL || b > 0xFFFFFFFEULL) {
      throw ParseError(name, line_no, "node id out of range");
    }
    Edge e{static_cast<NodeId>(std::min(a, b)), static_cast<NodeId>(std::max(a, b))};
    list.edges.push_back(e);
    seen.emplace_back(e, line_no);
    list.max_node_plus_one = std::max<std::size_t>(list.max_node_plus_one, std::max(a, b) + 1);
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t k = 1; k < seen.size(); ++k) {
    if (seen[k].first == seen[k - 1].first) {
      throw ParseError(name, std::max(seen[k].second, seen[k - 1].second),
                       "duplicate edge (" + std::to_string(seen[k].first.u) + ", " +
                           std::to_string(seen[k].first.v) + ")");
    }
  }
  return list;
}

Matrix read_numeric_csv(const fs::path& path) {
  auto in = open_input(path);
  const std::string name = path.string();
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) {
      continue;
    }
    const auto fields = split_fields(body, ',');
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (!parse_double(fields[k], row[k])) {
        numeric = false;
        break;
      }
    }
    if (first_content) {
      first_content = false;
      if (!numeric) {
        // single optional header row
        width = fields.size();
        continue;
      }
    }
    if (!numeric) {
      throw ParseError(name, line_no, "non-numeric field");
    }
    if (width == 0) {
      width = row.size();
    }
    if (row.size() != width) {
      throw ParseError(name, line_no,
                       "expected " + std::to_string(width) + " fields, found " +
                           std::to_string(row.size()));
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw ParseError(name, line_no, "non-finite value");
      }
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < width; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return m;
}

Matrix read_feature_file(const fs::path& path) {
  Matrix m = read_numeric_csv(path);
  if (m.cols() == 0) {
    throw ParseError(path.string(), 0, "feature file has no columns");
  }
  return m;
}

TreatmentOutcome read_treatment_outcome_file(const fs::path& path, std::size_t n_nodes) {
  Matrix m = read_numeric_csv(path);
  const std::string name = path.string();
  if (m.rows() > 0 && m.cols() != 3) {
    throw ParseError(name, 0, "expected columns node,treatment,outcome");
  }
  if (static_cast<std::size_t>(m.rows()) != n_nodes) {
    throw DimensionError(name + ": " + std::to_string(m.rows()) + " rows for " +
                         std::to_string(n_nodes) + " nodes");
  }
  TreatmentOutcome out{Vector::Zero(static_cast<Eigen::Index>(n_nodes)),
                       Vector::Zero(static_cast<Eigen::Index>(n_nodes))};
  std::vector<bool> filled(n_nodes, false);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double node = m(r, 0);
    if (node < 0 || node != std::floor(node) || node >= static_cast<double>(n_nodes)) {
      throw DimensionError(name + ": node id " + format_double(node) + " out of range");
    }
    const auto i = static_cast<std::size_t>(node);
    if (filled[i]) {
      throw InvalidValueError(name + ": node " + std::to_string(i) + " listed twice");
    }
    filled[i] = true;
    const double t = m(r, 1);
    if (t != 0.0 && t != 1.0) {
      throw InvalidValueError(name + ": treatment of node " + std::to_string(i) + " is " +
                              format_double(t) + ", expected 0 or 1");
    }
    out.treatments[static_cast<Eigen::Index>(i)] = t;
    out.outcomes[static_cast<Eigen::Index>(i)] = m(r, 2);
  }
  return out;
}

ObservationalDataset load_dataset(const fs::path& edge_file, const fs::path& feature_file,
                                  const std::optional<fs::path>& treatment_outcome_file) {
  EdgeList edges = read_edge_file(edge_file);
  Matrix x = read_feature_file(feature_file);
  const std::size_t n = edges.declared_nodes.value_or(edges.max_node_plus_one);
  if (edges.max_node_plus_one > n) {
    throw DimensionError(edge_file.string() + ": node id " +
                         std::to_string(edges.max_node_plus_one - 1) +
                         " exceeds declared node count " + std::to_string(n));
  }
  if (static_cast<std::size_t>(x.rows()) != n) {
    throw DimensionError("feature file has " + std::to_string(x.rows()) +
                         " rows but the edge file describes " + std::to_string(n) + " nodes");
  }
  Network network(n, std::move(edges.edges));
  FeatureMatrix features(std::move(x));
  if (!treatment_outcome_file) {
    return {std::move(network), std::move(features)};
  }
  auto to = read_treatment_outcome_file(*treatment_outcome_file, n);
  return {std::move(network), std::move(features), std::move(to.treatments), std::move(to.outcomes)};
}

void write_edge_file(const fs::path& path, const Network& network) {
  auto out = open_output(path);
  out << "# nodes: " << network.num_nodes() << '\n';
  for (const auto& e : network.edges()) {
    out << e.u << ' ' << e.v << '\n';
  }
}

void write_feature_file(const fs::path& path, const FeatureMatrix& features) {
  auto out = open_output(path);
  const Matrix& x = features.values();
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    out << (k ? "," : "") << 'x' << k;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      out << (k ? "," : "") << format_double(x(i, k));
    }
    out << '\n';
  }
}

void write_treatment_outcome_file(const fs::path& path, const Vector& treatments,
                                  const Vector& outcomes) {
  auto out = open_output(path);
  out << "node,treatment,outcome\n";
  for (Eigen::Index i = 0; i < treatments.size(); ++i) {
    out << i << ',' << static_cast<int>(treatments[i]) << ',' << format_double(outcomes[i]) << '\n';
  }
}

void write_dataset(const fs::path& directory, const ObservationalDataset& dataset) {
  fs::create_directories(directory);
  write_edge_file(directory / "edges.txt", dataset.network());
  write_feature_file(directory / "features.csv", dataset.features());
  if (dataset.has_outcomes()) {
    write_treatment_outcome_file(directory / "treatment_outcome.csv", dataset.treatments(),
                                 dataset.outcomes());
  }
}

ObservationalDataset load_dataset_dir(const fs::path& directory) {
  std::optional<fs::path> to;
  if (fs::exists(directory / "treatment_outcome.csv")) {
    to = directory / "treatment_outcome.csv";
  }
  return load_dataset(directory / "edges.txt", directory / "features.csv", to);
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns,
               const std::vector<std::string>& integer_columns) {
  if (header.size() != columns.size()) {
    throw DimensionError("write_csv: header/column count mismatch");
  }
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != rows) {
      throw DimensionError("write_csv: ragged columns");
    }
  }
  std::vector<bool> is_int(header.size(), false);
  for (std::size_t k = 0; k < header.size(); ++k) {
    is_int[k] = std::find(integer_columns.begin(), integer_columns.end(), header[k]) !=
                integer_columns.end();
  }
  auto out = open_output(path);
  for (std::size_t k = 0; k < header.size(); ++k) {
    out << (k ? "," : "") << header[k];
  }
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      out << (k ? "," : "");
      if (is_int[k]) {
        out << static_cast<long long>(columns[k][r]);
      } else {
        out << format_double(columns[k][r]);
      }
    }
    out << '\n';
  }
}

}  // namespace cgnn
