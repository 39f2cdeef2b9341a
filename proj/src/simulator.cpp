#include "cgnn/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "cgnn/io.hpp"
#include "cgnn/random.hpp"
#include "json.hpp"

namespace cgnn {

namespace {

enum Stream : std::uint64_t {
  kBaseFeatures = 1,
  kParams = 2,
  kConfounders = 3,
  kFeatureNoise = 4,
  kTreatmentNoise = 5,
  kTreatmentDraw = 6,
  kOutcomeNoise = 7,
  kFlip = 8,
};

Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  Matrix m = Matrix::Zero(rows, cols);
  if (stddev <= 0.0) {
    return m;
  }
  std::normal_distribution<double> normal(0.0, stddev);
  // Row-major fill order keeps node i's draws contiguous in the stream.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      m(i, k) = normal(rng);
    }
  }
  return m;
}

Vector gaussian_vector(Rng& rng, Eigen::Index n, double stddev) {
  return gaussian_matrix(rng, n, 1, stddev).col(0);
}

void check_rows(const char* what, Eigen::Index got, std::size_t expected) {
  if (static_cast<std::size_t>(got) != expected) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(expected) +
                         " rows, got " + std::to_string(got));
  }
}

/// sum_j w_ij * s_j over N(i) for a per-node scalar s.
Vector neighbor_weighted_sum(const Network& network, const PeerWeights& weights, const Vector& s) {
  return exposure(network, weights, s);
}

}  // namespace

void SimulationSettings::validate() const {
  if (n_nodes < 1) {
    throw InvalidValueError("n_nodes must be >= 1");
  }
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) {
    throw InvalidValueError("edge_prob must lie in [0, 1]");
  }
  if (d_x < 1 || d_u < 1) {
    throw InvalidValueError("d_x and d_u must be >= 1");
  }
  if (!(mu > 0.0)) {
    throw InvalidValueError("mu must be positive");
  }
  if (sigma_t < 0.0 || sigma_y < 0.0 || sigma_x < 0.0) {
    throw InvalidValueError("noise scales must be non-negative");
  }
  if (!(smoothing > 0.0)) {
    throw InvalidValueError("smoothing must be positive");
  }
  for (double a : alpha) {
    if (!std::isfinite(a)) {
      throw InvalidValueError("alpha must be finite");
    }
  }
}

double SimulationParams::alpha(std::size_t k) const {
  if (k == 2 && !settings.hidden_confounding) {
    return 0.0;
  }
  return settings.alpha.at(k);
}

double SimulationParams::beta_k(std::size_t k) const {
  if (k == 4 && !settings.hidden_confounding) {
    return 0.0;
  }
  return beta.at(k);
}

SimulationParams draw_params(const SimulationSettings& settings, std::uint64_t seed) {
  settings.validate();
  SimulationParams p;
  p.settings = settings;
  p.seed = seed;
  auto rng = make_rng(seed, kParams);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& b : p.beta) {
    b = unit(rng);
  }
  const auto dx = static_cast<Eigen::Index>(settings.d_x);
  const auto du = static_cast<Eigen::Index>(settings.d_u);
  const double sx = 1.0 / std::sqrt(static_cast<double>(dx));
  const double su = 1.0 / std::sqrt(static_cast<double>(du));
  p.w0 = gaussian_vector(rng, dx, sx);
  p.w1 = gaussian_vector(rng, dx, sx);
  p.w2 = gaussian_vector(rng, du, su);
  p.w3 = gaussian_vector(rng, dx, sx);
  p.w4 = gaussian_vector(rng, dx, sx);
  p.w5 = gaussian_vector(rng, du, su);
  p.psi = gaussian_matrix(rng, du, dx, su);
  return p;
}

Matrix sample_confounders(std::size_t n, const SimulationParams& params) {
  auto rng = make_rng(params.seed, kConfounders);
  return gaussian_matrix(rng, static_cast<Eigen::Index>(n),
                         static_cast<Eigen::Index>(params.settings.d_u), 1.0) *
         std::sqrt(params.settings.mu);
}

FeatureMatrix synthesize_features(const FeatureMatrix& x_base, const Matrix& confounders,
                                  const SimulationParams& params) {
  check_rows("synthesize_features: confounders", confounders.rows(), x_base.num_nodes());
  if (confounders.cols() != params.psi.rows() ||
      static_cast<Eigen::Index>(x_base.dim()) != params.psi.cols()) {
    throw DimensionError("synthesize_features: psi shape does not conform");
  }
  auto rng = make_rng(params.seed, kFeatureNoise);
  Matrix noise = gaussian_matrix(rng, confounders.rows(), params.psi.cols(), params.settings.sigma_x);
  return FeatureMatrix(x_base.values() + confounders * params.psi + noise);
}

Vector treatment_logits(const FeatureMatrix& features, const Matrix& confounders,
                        const Network& network, const PeerWeights& weights,
                        const SimulationParams& params, const Vector& eps_t) {
  const auto n = network.num_nodes();
  check_rows("treatment_logits: features", features.values().rows(), n);
  check_rows("treatment_logits: confounders", confounders.rows(), n);
  check_rows("treatment_logits: eps_t", eps_t.size(), n);
  const Matrix& x = features.values();
  const Vector own = x * params.w0;
  const Vector peer = neighbor_weighted_sum(network, weights, x * params.w1);
  const Vector hidden = confounders * params.w2;
  return params.alpha(0) * own + params.alpha(1) * peer + params.alpha(2) * hidden + eps_t;
}

TreatmentDraw assign_treatments(const FeatureMatrix& features, const Matrix& confounders,
                                const Network& network, const PeerWeights& weights,
                                const SimulationParams& params) {
  const auto n = static_cast<Eigen::Index>(network.num_nodes());
  auto noise_rng = make_rng(params.seed, kTreatmentNoise);
  TreatmentDraw draw;
  draw.eps_t = gaussian_vector(noise_rng, n, params.settings.sigma_t);
  const Vector logits = treatment_logits(features, confounders, network, weights, params, draw.eps_t);
  draw.propensities = logits.unaryExpr([](double v) { return sigmoid(v); });
  draw.treatments.resize(n);
  auto coin_rng = make_rng(params.seed, kTreatmentDraw);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    draw.treatments[i] = unit(coin_rng) < draw.propensities[i] ? 1.0 : 0.0;
  }
  return draw;
}

Vector SimulatedInstance::observed_exposure() const {
  return exposure(network(), peer_weights, dataset.treatments());
}

Vector oracle_outcome(const SimulatedInstance& instance, const Vector& t, const Vector& z,
                      bool include_noise) {
  const auto n = instance.num_nodes();
  check_rows("oracle_outcome: t", t.size(), n);
  check_rows("oracle_outcome: z", z.size(), n);
  const auto& p = instance.params;
  const Matrix& x = instance.dataset.features().values();
  const Vector own = (p.beta_k(0) * (x * p.w3)).unaryExpr([](double v) { return sigmoid(v); });
  const Vector peer_x = neighbor_weighted_sum(instance.network(), instance.peer_weights, x * p.w4);
  const Vector peer = (p.beta_k(1) * peer_x).unaryExpr([](double v) { return sigmoid(v); });
  Vector y = own + peer + p.beta_k(2) * t + p.beta_k(3) * z +
             p.beta_k(4) * (instance.confounders * p.w5);
  if (include_noise) {
    y += instance.eps_y;
  }
  return y;
}

SimulatedInstance simulate(const Network& network, const FeatureMatrix& x_base,
                           const SimulationParams& params) {
  params.settings.validate();
  const auto n = network.num_nodes();
  check_rows("simulate: base features", x_base.values().rows(), n);
  if (x_base.dim() != params.settings.d_x) {
    throw DimensionError("simulate: base features have " + std::to_string(x_base.dim()) +
                         " columns, settings.d_x is " + std::to_string(params.settings.d_x));
  }

  SimulatedInstance inst;
  inst.params = params;
  inst.base_features = x_base;
  inst.confounders = sample_confounders(n, params);
  FeatureMatrix x = synthesize_features(x_base, inst.confounders, params);
  inst.peer_weights = compute_peer_weights(network, x, params.settings.smoothing);

  auto draw = assign_treatments(x, inst.confounders, network, inst.peer_weights, params);
  inst.propensities = std::move(draw.propensities);
  inst.eps_t = std::move(draw.eps_t);

  auto noise_rng = make_rng(params.seed, kOutcomeNoise);
  inst.eps_y = gaussian_vector(noise_rng, static_cast<Eigen::Index>(n), params.settings.sigma_y);

  // Outcomes need the dataset's features and weights in place first.
  inst.dataset = ObservationalDataset(network, std::move(x));
  const Vector z = exposure(network, inst.peer_weights, draw.treatments);
  Vector y = oracle_outcome(inst, draw.treatments, z, true);
  inst.dataset = inst.dataset.with_observations(std::move(draw.treatments), std::move(y));
  return inst;
}

SimulatedInstance simulate(const SimulationSettings& settings, std::uint64_t seed) {
  settings.validate();
  Network network = generate_random_network(settings.n_nodes, settings.edge_prob, seed);
  auto rng = make_rng(seed, kBaseFeatures);
  FeatureMatrix x_base(gaussian_matrix(rng, static_cast<Eigen::Index>(settings.n_nodes),
                                       static_cast<Eigen::Index>(settings.d_x), 1.0));
  return simulate(network, x_base, draw_params(settings, seed));
}

EvalPairs evaluation_pairs(const Network& network, const PeerWeights& weights,
                           const Vector& observed_treatments) {
  return {exposure(network, weights, observed_treatments)};
}

GroundTruthEffects ground_truth_effects(const SimulatedInstance& instance, const EvalPairs& pairs) {
  const auto n = static_cast<Eigen::Index>(instance.num_nodes());
  const Vector zeros = Vector::Zero(n);
  const Vector ones = Vector::Ones(n);
  GroundTruthEffects g;
  g.z_obs = pairs.z_contrast;
  g.outcomes.y00 = oracle_outcome(instance, zeros, zeros, false);
  g.outcomes.y10 = oracle_outcome(instance, ones, zeros, false);
  g.outcomes.y0z = oracle_outcome(instance, zeros, pairs.z_contrast, false);
  g.outcomes.y1z = oracle_outcome(instance, ones, pairs.z_contrast, false);
  // Contrasts in closed form: only b2 t + b3 z differs between the points.
  const auto& p = instance.params;
  g.me = Vector::Constant(n, p.beta_k(2));
  g.pe = p.beta_k(3) * pairs.z_contrast;
  g.te = (p.beta_k(3) * pairs.z_contrast).array() + p.beta_k(2);
  return g;
}

Counterfactual flip_treatments(const SimulatedInstance& instance, double flip_rate,
                               std::uint64_t seed) {
  if (!(flip_rate >= 0.0 && flip_rate <= 1.0)) {
    throw InvalidValueError("flip_rate must lie in [0, 1]");
  }
  const auto n = instance.num_nodes();
  const auto count = static_cast<std::size_t>(std::llround(flip_rate * static_cast<double>(n)));
  std::vector<NodeId> order = all_nodes(n);
  auto rng = make_rng(seed, kFlip);
  std::shuffle(order.begin(), order.end(), rng);
  Counterfactual cf;
  cf.flipped.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(cf.flipped.begin(), cf.flipped.end());
  cf.treatments = instance.dataset.treatments();
  for (NodeId i : cf.flipped) {
    cf.treatments[i] = 1.0 - cf.treatments[i];
  }
  cf.exposure = exposure(instance.network(), instance.peer_weights, cf.treatments);
  cf.outcomes = oracle_outcome(instance, cf.treatments, cf.exposure, false);
  return cf;
}

// --- serialization ---------------------------------------------------------

namespace {

using nlohmann::json;

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(vec_json(m.row(i).transpose()));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix json_mat(const json& j) {
  const auto r = j.at("rows").get<Eigen::Index>();
  const auto c = j.at("cols").get<Eigen::Index>();
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto row = j.at("data").at(static_cast<std::size_t>(i)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != c) {
      throw DimensionError("params.json: ragged matrix");
    }
    for (Eigen::Index k = 0; k < c; ++k) {
      m(i, k) = row[static_cast<std::size_t>(k)];
    }
  }
  return m;
}

}  // namespace

nlohmann::json settings_to_json(const SimulationSettings& s) {
  return {{"n_nodes", s.n_nodes},         {"edge_prob", s.edge_prob}, {"d_x", s.d_x},
          {"d_u", s.d_u},                 {"mu", s.mu},               {"alpha", s.alpha},
          {"sigma_t", s.sigma_t},         {"sigma_y", s.sigma_y},     {"sigma_x", s.sigma_x},
          {"smoothing", s.smoothing},     {"hidden_confounding", s.hidden_confounding}};
}

SimulationSettings settings_from_json(const nlohmann::json& j, SimulationSettings s) {
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      j.at(key).get_to(field);
    }
  };
  take("n_nodes", s.n_nodes);
  take("edge_prob", s.edge_prob);
  take("d_x", s.d_x);
  take("d_u", s.d_u);
  take("mu", s.mu);
  take("alpha", s.alpha);
  take("sigma_t", s.sigma_t);
  take("sigma_y", s.sigma_y);
  take("sigma_x", s.sigma_x);
  take("smoothing", s.smoothing);
  take("hidden_confounding", s.hidden_confounding);
  return s;
}

void write_instance(const std::filesystem::path& directory, const SimulatedInstance& instance) {
  write_dataset(directory, instance.dataset);
  const auto& p = instance.params;
  json params = {
      {"format", "cgnn-instance-v1"},
      {"seed", p.seed},
      {"settings", settings_to_json(p.settings)},
      {"beta", p.beta},
      {"effective_alpha", {p.alpha(0), p.alpha(1), p.alpha(2)}},
      {"effective_beta", {p.beta_k(0), p.beta_k(1), p.beta_k(2), p.beta_k(3), p.beta_k(4)}},
      {"w0", vec_json(p.w0)},
      {"w1", vec_json(p.w1)},
      {"w2", vec_json(p.w2)},
      {"w3", vec_json(p.w3)},
      {"w4", vec_json(p.w4)},
      {"w5", vec_json(p.w5)},
      {"psi", mat_json(p.psi)},
  };
  write_text_file(directory / "params.json", params.dump(2) + "\n");

  const auto n = instance.num_nodes();
  std::vector<std::string> header{"node", "propensity", "eps_t", "eps_y"};
  std::vector<std::vector<double>> cols;
  std::vector<double> node(n);
  std::iota(node.begin(), node.end(), 0.0);
  cols.push_back(node);
  cols.emplace_back(instance.propensities.data(), instance.propensities.data() + n);
  cols.emplace_back(instance.eps_t.data(), instance.eps_t.data() + n);
  cols.emplace_back(instance.eps_y.data(), instance.eps_y.data() + n);
  for (Eigen::Index k = 0; k < instance.base_features.values().cols(); ++k) {
    header.push_back("x_base" + std::to_string(k));
    const Vector c = instance.base_features.values().col(k);
    cols.emplace_back(c.data(), c.data() + n);
  }
  for (Eigen::Index k = 0; k < instance.confounders.cols(); ++k) {
    header.push_back("u" + std::to_string(k));
    const Vector c = instance.confounders.col(k);
    cols.emplace_back(c.data(), c.data() + n);
  }
  write_csv(directory / "latent.csv", header, cols, {"node"});

  const auto truth = ground_truth_effects(instance, evaluation_pairs(instance.network(),
                                                                     instance.peer_weights,
                                                                     instance.dataset.treatments()));
  auto col = [n](const Vector& v) { return std::vector<double>(v.data(), v.data() + n); };
  write_csv(directory / "ground_truth.csv", {"node", "me", "pe", "te", "z_obs"},
            {node, col(truth.me), col(truth.pe), col(truth.te), col(truth.z_obs)}, {"node"});
}

SimulatedInstance load_instance(const std::filesystem::path& directory) {
  SimulatedInstance inst;
  ObservationalDataset ds = load_dataset_dir(directory);
  if (!ds.has_outcomes()) {
    throw Error(directory.string() + ": instance has no treatment_outcome.csv");
  }
  const json j = json::parse(read_text_file(directory / "params.json"));
  if (j.value("format", "") != "cgnn-instance-v1") {
    throw Error(directory.string() + "/params.json: unrecognised format tag");
  }
  auto& p = inst.params;
  p.settings = settings_from_json(j.at("settings"), {});
  p.seed = j.at("seed").get<std::uint64_t>();
  j.at("beta").get_to(p.beta);
  p.w0 = json_vec(j.at("w0"));
  p.w1 = json_vec(j.at("w1"));
  p.w2 = json_vec(j.at("w2"));
  p.w3 = json_vec(j.at("w3"));
  p.w4 = json_vec(j.at("w4"));
  p.w5 = json_vec(j.at("w5"));
  p.psi = json_mat(j.at("psi"));

  const Matrix latent = read_numeric_csv(directory / "latent.csv");
  const auto n = static_cast<Eigen::Index>(ds.num_nodes());
  const auto dx = static_cast<Eigen::Index>(p.settings.d_x);
  const auto du = static_cast<Eigen::Index>(p.settings.d_u);
  if (latent.rows() != n || latent.cols() != 4 + dx + du) {
    throw DimensionError(directory.string() + "/latent.csv: unexpected shape");
  }
  inst.propensities = latent.col(1);
  inst.eps_t = latent.col(2);
  inst.eps_y = latent.col(3);
  inst.base_features = FeatureMatrix(latent.middleCols(4, dx));
  inst.confounders = latent.middleCols(4 + dx, du);
  inst.peer_weights = compute_peer_weights(ds.network(), ds.features(), p.settings.smoothing);
  inst.dataset = std::move(ds);
  return inst;
}

}  // namespace cgnn
