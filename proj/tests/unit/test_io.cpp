#include <doctest.h>

#include <fstream>

#include "cgnn/io.hpp"
#include "support.hpp"

using namespace cgnn;

namespace {

void put(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("edge and feature files load into a dataset") {
  testing::TempDir dir("io_load");
  put(dir / "edges.txt", "0 1\n1 2\n");
  put(dir / "features.csv", "1,2\n3,4\n5,6\n");
  const ObservationalDataset ds = load_dataset(dir / "edges.txt", dir / "features.csv");
  CHECK(ds.num_nodes() == 3);
  CHECK(ds.network().num_edges() == 2);
  CHECK(ds.features().dim() == 2);
  CHECK_FALSE(ds.has_outcomes());
}

TEST_CASE("edge file errors carry the line number") {
  testing::TempDir dir("io_errors");
  put(dir / "loop.txt", "# comment\n0 1\n5 5\n");
  try {
    read_edge_file(dir / "loop.txt");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  put(dir / "dup.txt", "0 1\n1 0\n");
  CHECK_THROWS_AS(read_edge_file(dir / "dup.txt"), ParseError);
  put(dir / "junk.txt", "0 x\n");
  CHECK_THROWS_AS(read_edge_file(dir / "junk.txt"), ParseError);
  CHECK_THROWS_AS(read_edge_file(dir / "missing.txt"), Error);
}

TEST_CASE("feature row count must match the node count") {
  testing::TempDir dir("io_rows");
  put(dir / "edges.txt", "0 1\n1 2\n");
  put(dir / "features.csv", "1,2\n3,4\n5,6\n7,8\n");
  CHECK_THROWS_AS(load_dataset(dir / "edges.txt", dir / "features.csv"), DimensionError);
}

TEST_CASE("declared node count keeps trailing isolated nodes") {
  testing::TempDir dir("io_nodes");
  put(dir / "edges.txt", "# nodes: 4\n0 1\n");
  put(dir / "features.csv", "x0\n1\n2\n3\n4\n");
  const ObservationalDataset ds = load_dataset(dir / "edges.txt", dir / "features.csv");
  CHECK(ds.num_nodes() == 4);
  CHECK(ds.network().degree(3) == 0);
}

TEST_CASE("treatment file checks") {
  testing::TempDir dir("io_to");
  put(dir / "to.csv", "node,treatment,outcome\n0,1,0.5\n1,0,0.25\n");
  const TreatmentOutcome to = read_treatment_outcome_file(dir / "to.csv", 2);
  CHECK(to.treatments[0] == 1.0);
  CHECK(to.outcomes[1] == 0.25);
  put(dir / "bad.csv", "0,2,0.5\n1,0,0.25\n");
  CHECK_THROWS_AS(read_treatment_outcome_file(dir / "bad.csv", 2), Error);
  put(dir / "short.csv", "0,1,0.5\n");
  CHECK_THROWS_AS(read_treatment_outcome_file(dir / "short.csv", 2), Error);
}

TEST_CASE("dataset round trip is exact") {
  testing::TempDir dir("io_roundtrip");
  Vector t(6), y(6);
  t << 1, 0, 1, 0, 0, 1;
  y << 0.1, 1.0 / 3.0, -2.5e-7, 7.0, 1e10, -0.0;
  const ObservationalDataset ds(testing::small_network(), FeatureMatrix(testing::small_features()),
                                t, y);
  write_dataset(dir.path(), ds);
  CHECK(load_dataset_dir(dir.path()) == ds);
}

TEST_CASE("shortest round-trip formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
