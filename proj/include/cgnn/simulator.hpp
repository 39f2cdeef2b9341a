#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "cgnn/graph.hpp"
#include "cgnn/peer_exposure.hpp"
#include "json.hpp"

namespace cgnn {

/// Knobs of the semi-synthetic generator. Defaults follow the benchmark
/// protocol: mu = 20, d_u = 10, alpha = (1, 0.5, 0.1), sigma_t = 0.01,
/// sigma_y = 0.1.
struct SimulationSettings {
  std::size_t n_nodes{500};
  double edge_prob{0.02};
  std::size_t d_x{16};
  std::size_t d_u{10};
  double mu{20.0};
  std::array<double, 3> alpha{1.0, 0.5, 0.1};
  double sigma_t{0.01};
  double sigma_y{0.1};
  double sigma_x{0.1};
  double smoothing{kDefaultSmoothing};
  /// false forces alpha_2 = beta_4 = 0: U then reaches neither T nor Y.
  bool hidden_confounding{true};

  void validate() const;
};

/// Settings plus every randomly drawn generating constant.
struct SimulationParams {
  SimulationSettings settings;
  std::uint64_t seed{0};
  std::array<double, 5> beta{};  // beta_k ~ U(0, 1)
  Vector w0, w1, w3, w4;         // d_x, entries N(0, 1/d_x)
  Vector w2, w5;                 // d_u, entries N(0, 1/d_u)
  Matrix psi;                    // d_u x d_x, entries N(0, 1/d_u); X = x + U psi + eps_x

  double alpha(std::size_t k) const;
  double beta_k(std::size_t k) const;
};

nlohmann::json settings_to_json(const SimulationSettings& settings);
/// Overrides the fields of `base` present in `j`.
SimulationSettings settings_from_json(const nlohmann::json& j, SimulationSettings base = {});

/// Draws beta, w0..w5 and psi for a seed. Confounding switches do not
/// change the draws; they zero alpha_2/beta_4 at use.
SimulationParams draw_params(const SimulationSettings& settings, std::uint64_t seed);

/// U_i ~ N(0, mu I_{d_u}), one row per node.
Matrix sample_confounders(std::size_t n, const SimulationParams& params);

/// X = x_base + U psi + eps_x with eps_x ~ N(0, sigma_x^2).
FeatureMatrix synthesize_features(const FeatureMatrix& x_base, const Matrix& confounders,
                                  const SimulationParams& params);

/// Treatment logits before the sigmoid, given the realised eps_t.
Vector treatment_logits(const FeatureMatrix& features, const Matrix& confounders,
                        const Network& network, const PeerWeights& weights,
                        const SimulationParams& params, const Vector& eps_t);

struct TreatmentDraw {
  Vector treatments;
  Vector propensities;
  Vector eps_t;
};

TreatmentDraw assign_treatments(const FeatureMatrix& features, const Matrix& confounders,
                                const Network& network, const PeerWeights& weights,
                                const SimulationParams& params);

struct SimulatedInstance {
  ObservationalDataset dataset;
  FeatureMatrix base_features;
  Matrix confounders;
  PeerWeights peer_weights;
  SimulationParams params;
  Vector propensities;
  Vector eps_t;
  Vector eps_y;

  const Network& network() const { return dataset.network(); }
  std::size_t num_nodes() const { return dataset.num_nodes(); }
  /// Exposure of the observed treatments.
  Vector observed_exposure() const;
};

/// Generates an instance on a given topology and base feature matrix.
SimulatedInstance simulate(const Network& network, const FeatureMatrix& x_base,
                           const SimulationParams& params);

/// Fully synthetic instance: Erdos-Renyi topology and x_base ~ N(0, 1).
SimulatedInstance simulate(const SimulationSettings& settings, std::uint64_t seed);

/// Outcome function
///   Y_i = s(b0 w3.X_i) + s(b1 sum_j w_ij w4.X_j) + b2 t_i + b3 z_i + b4 w5.U_i [+ eps_y_i]
/// evaluated at arbitrary (t, z); the noise term uses the recorded eps_y.
Vector oracle_outcome(const SimulatedInstance& instance, const Vector& t, const Vector& z,
                      bool include_noise);

/// Contrast points shared by ground truth and estimator:
///   ME: (1, 0) vs (0, 0);  PE: (0, z_obs) vs (0, 0);  TE: (1, z_obs) vs (0, 0).
struct EvalPairs {
  Vector z_contrast;
};

EvalPairs evaluation_pairs(const Network& network, const PeerWeights& weights,
                           const Vector& observed_treatments);

/// Potential outcomes at the four contrast points, and the derived effects.
struct PotentialOutcomes {
  Vector y00, y10, y0z, y1z;

  Vector main_effect() const { return y10 - y00; }
  Vector peer_effect() const { return y0z - y00; }
  Vector total_effect() const { return y1z - y00; }
};

struct GroundTruthEffects {
  Vector me, pe, te;
  Vector z_obs;
  PotentialOutcomes outcomes;
};

GroundTruthEffects ground_truth_effects(const SimulatedInstance& instance, const EvalPairs& pairs);

struct Counterfactual {
  Vector treatments;
  Vector exposure;
  Vector outcomes;  // noiseless
  std::vector<NodeId> flipped;
};

/// Inverts the treatment of exactly round(flip_rate * n) uniformly chosen
/// nodes, recomputes exposure and evaluates the noiseless oracle.
Counterfactual flip_treatments(const SimulatedInstance& instance, double flip_rate,
                               std::uint64_t seed);

/// Directory layout: edges.txt, features.csv, treatment_outcome.csv,
/// params.json, latent.csv (propensity, eps_t, eps_y, base features, U) and
/// ground_truth.csv (node, me, pe, te, z_obs).
void write_instance(const std::filesystem::path& directory, const SimulatedInstance& instance);
SimulatedInstance load_instance(const std::filesystem::path& directory);

}  // namespace cgnn
