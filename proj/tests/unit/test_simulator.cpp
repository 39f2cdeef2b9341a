#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cgnn/io.hpp"
#include "cgnn/simulator.hpp"
#include "support.hpp"

using namespace cgnn;

namespace {

SimulationSettings small_settings() {
  SimulationSettings s;
  s.n_nodes = 120;
  s.edge_prob = 0.05;
  return s;
}

double column_variance(const Matrix& m, Eigen::Index k) {
  const double mean = m.col(k).mean();
  return (m.col(k).array() - mean).square().sum() / static_cast<double>(m.rows() - 1);
}

}  // namespace

TEST_CASE("default settings") {
  const SimulationSettings s;
  CHECK(s.mu == 20.0);
  CHECK(s.d_u == 10);
  CHECK(s.alpha == std::array<double, 3>{1.0, 0.5, 0.1});
  CHECK(s.sigma_t == 0.01);
  CHECK(s.sigma_y == 0.1);
  SimulationSettings bad;
  bad.mu = -1;
  CHECK_THROWS_AS(bad.validate(), InvalidValueError);
}

TEST_CASE("confounder variance") {
  SimulationSettings s;
  const SimulationParams p = draw_params(s, 3);
  const Matrix u = sample_confounders(5000, p);
  CHECK(u.cols() == 10);
  for (Eigen::Index k = 0; k < u.cols(); ++k) {
    CHECK(std::abs(column_variance(u, k) - 20.0) < 0.2 * 20.0);
  }
  CHECK(sample_confounders(5000, p) == u);
  s.mu = 0.0;
  CHECK_THROWS_AS(draw_params(s, 3), InvalidValueError);
}

TEST_CASE("feature synthesis") {
  SimulationSettings s = small_settings();
  SimulationParams p = draw_params(s, 5);
  const Matrix u = sample_confounders(s.n_nodes, p);
  const Matrix base = Matrix::Random(static_cast<Eigen::Index>(s.n_nodes), 16);

  p.settings.sigma_x = 0.0;
  SimulationParams no_leak = p;
  no_leak.psi.setZero();
  CHECK(synthesize_features(FeatureMatrix(base), u, no_leak).values() == base);
  const Matrix zero = Matrix::Zero(base.rows(), base.cols());
  CHECK(synthesize_features(FeatureMatrix(zero), u, p).values().isApprox(u * p.psi, 1e-14));

  SimulationSettings big = s;
  big.n_nodes = 4000;
  SimulationParams q = draw_params(big, 5);
  const Matrix ub = sample_confounders(big.n_nodes, q);
  const Matrix xb = Matrix::Zero(4000, 16);
  const Matrix noise = synthesize_features(FeatureMatrix(xb), ub, q).values() - ub * q.psi;
  const double var = noise.array().square().mean();
  CHECK(var == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("propensities") {
  SimulationSettings s = small_settings();
  SimulationParams p = draw_params(s, 8);
  const Network g = generate_random_network(s.n_nodes, s.edge_prob, 8);
  const Matrix u = sample_confounders(s.n_nodes, p);
  const FeatureMatrix x(Matrix::Random(static_cast<Eigen::Index>(s.n_nodes), 16));
  const PeerWeights w = compute_peer_weights(g, x);

  SimulationParams zero = p;
  zero.w0.setZero();
  zero.w1.setZero();
  zero.w2.setZero();
  const Vector eps = Vector::Zero(static_cast<Eigen::Index>(s.n_nodes));
  const Vector logits = treatment_logits(x, u, g, w, zero, eps);
  CHECK(logits.isZero());
  CHECK(sigmoid(logits[0]) == 0.5);

  p.settings.hidden_confounding = false;
  const Matrix permuted = u.colwise().reverse();
  CHECK(treatment_logits(x, u, g, w, p, eps) == treatment_logits(x, permuted, g, w, p, eps));
  p.settings.hidden_confounding = true;
  CHECK_FALSE(treatment_logits(x, u, g, w, p, eps) == treatment_logits(x, permuted, g, w, p, eps));
}

TEST_CASE("treated fraction tracks mean propensity") {
  SimulationSettings s;
  s.n_nodes = 3000;
  s.edge_prob = 0.003;
  const SimulatedInstance inst = simulate(s, 11);
  const double n = static_cast<double>(s.n_nodes);
  const double mean_p = inst.propensities.mean();
  const double se = std::sqrt((inst.propensities.array() * (1.0 - inst.propensities.array())).sum()) / n;
  CHECK(std::abs(inst.dataset.treatments().mean() - mean_p) <= 3.0 * se);
  CHECK(inst.propensities.minCoeff() > 0.0);
  CHECK(inst.propensities.maxCoeff() < 1.0);
}

TEST_CASE("outcome oracle") {
  const SimulatedInstance inst = simulate(small_settings(), 4);
  const auto n = static_cast<Eigen::Index>(inst.num_nodes());
  const Vector z_obs = inst.observed_exposure();
  const Vector& t = inst.dataset.treatments();

  CHECK(oracle_outcome(inst, t, z_obs, true) == inst.dataset.outcomes());
  CHECK((oracle_outcome(inst, t, z_obs, false) + inst.eps_y).isApprox(inst.dataset.outcomes(), 1e-15));

  const Vector ones = Vector::Ones(n), zeros = Vector::Zero(n);
  const Vector dt = oracle_outcome(inst, ones, z_obs, false) - oracle_outcome(inst, zeros, z_obs, false);
  CHECK((dt.array() - inst.params.beta[2]).abs().maxCoeff() < 1e-12);
  const Vector dz = oracle_outcome(inst, t, z_obs, false) - oracle_outcome(inst, t, zeros, false);
  CHECK((dz - inst.params.beta[3] * z_obs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ground truth effects") {
  const SimulatedInstance inst = simulate(small_settings(), 6);
  const EvalPairs pairs = evaluation_pairs(inst.network(), inst.peer_weights, inst.dataset.treatments());
  const GroundTruthEffects g = ground_truth_effects(inst, pairs);
  const double b2 = inst.params.beta[2], b3 = inst.params.beta[3];
  for (Eigen::Index i = 0; i < g.me.size(); ++i) {
    REQUIRE(g.me[i] == b2);
    REQUIRE(g.pe[i] == b3 * pairs.z_contrast[i]);
    REQUIRE(g.te[i] == b2 + b3 * pairs.z_contrast[i]);
  }
  CHECK((g.outcomes.main_effect().array() - b2).abs().maxCoeff() < 1e-12);
  CHECK((g.outcomes.total_effect() - g.te).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("clean regime removes the confounder from treatment and outcome") {
  SimulationSettings s = small_settings();
  s.hidden_confounding = false;
  const SimulatedInstance a = simulate(s, 9);
  CHECK(a.params.alpha(2) == 0.0);
  CHECK(a.params.beta_k(4) == 0.0);
  SimulatedInstance shuffled = a;
  shuffled.confounders.setRandom();
  const Vector t = a.dataset.treatments(), z = a.observed_exposure();
  CHECK(oracle_outcome(a, t, z, false) == oracle_outcome(shuffled, t, z, false));
}

TEST_CASE("instances are bit-reproducible per seed") {
  const SimulatedInstance a = simulate(small_settings(), 21);
  const SimulatedInstance b = simulate(small_settings(), 21);
  CHECK(a.dataset == b.dataset);
  CHECK(a.confounders == b.confounders);
  CHECK(a.peer_weights.values() == b.peer_weights.values());
  CHECK(a.params.psi == b.params.psi);
  CHECK(a.params.beta == b.params.beta);
  const SimulatedInstance c = simulate(small_settings(), 22);
  CHECK_FALSE(a.dataset == c.dataset);
}

TEST_CASE("flip treatments") {
  SimulationSettings s = small_settings();
  s.n_nodes = 100;
  const SimulatedInstance inst = simulate(s, 2);
  const Vector& t = inst.dataset.treatments();

  const Counterfactual none = flip_treatments(inst, 0.0, 1);
  CHECK(none.flipped.empty());
  CHECK(none.treatments == t);
  CHECK(none.exposure == inst.observed_exposure());
  CHECK(none.outcomes == oracle_outcome(inst, t, inst.observed_exposure(), false));

  const Counterfactual all = flip_treatments(inst, 1.0, 1);
  CHECK(all.flipped.size() == 100);
  CHECK((all.treatments + t).isOnes());

  const Counterfactual half = flip_treatments(inst, 0.5, 3);
  CHECK(half.flipped.size() == 50);
  CHECK((half.treatments - t).cwiseAbs().sum() == 50.0);

  // incremental exposure update agrees with recomputation
  Vector z = inst.observed_exposure();
  for (NodeId i : half.flipped) {
    const double delta = half.treatments[i] - t[i];
    const auto nb = inst.network().neighbors(i);
    for (NodeId j : nb) {
      z[j] += inst.peer_weights.weight(inst.network(), j, i) * delta;
    }
  }
  CHECK((z - half.exposure).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(flip_treatments(inst, 0.5, 3).flipped == half.flipped);
  CHECK_THROWS_AS(flip_treatments(inst, 1.5, 3), InvalidValueError);
}

TEST_CASE("instance directory round trip") {
  testing::TempDir dir("sim_roundtrip");
  const SimulatedInstance inst = simulate(small_settings(), 13);
  write_instance(dir.path(), inst);
  for (const char* f : {"edges.txt", "features.csv", "treatment_outcome.csv", "params.json",
                        "latent.csv", "ground_truth.csv"}) {
    CHECK(fs::exists(dir / f));
  }
  const SimulatedInstance back = load_instance(dir.path());
  CHECK(back.dataset == inst.dataset);
  CHECK(back.confounders == inst.confounders);
  CHECK(back.eps_y == inst.eps_y);
  CHECK(back.params.w5 == inst.params.w5);
  CHECK(back.params.beta == inst.params.beta);
  CHECK(back.peer_weights.values() == inst.peer_weights.values());

  const Matrix truth = read_numeric_csv(dir / "ground_truth.csv");
  CHECK(truth.cols() == 5);
  CHECK(truth(0, 1) == inst.params.beta[2]);
}

TEST_CASE("semi-synthetic instance on a given graph") {
  const Network g = testing::small_network();
  SimulationSettings s;
  s.n_nodes = 6;
  s.d_x = 3;
  const SimulatedInstance inst = simulate(g, FeatureMatrix(testing::small_features()), draw_params(s, 1));
  CHECK(inst.network() == g);
  CHECK(inst.base_features.values() == testing::small_features());
  CHECK_THROWS_AS(simulate(g, FeatureMatrix(Matrix::Zero(6, 4)), draw_params(s, 1)), DimensionError);
}
