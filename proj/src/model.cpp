#include "cgnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cgnn/io.hpp"
#include "cgnn/metrics.hpp"
#include "cgnn/optimizer.hpp"

namespace cgnn {

using nlohmann::json;

namespace {

constexpr std::uint64_t kStageOneInit = 11;
constexpr std::uint64_t kStageTwoInit = 12;
constexpr std::uint64_t kValidationSplit = 0x76616cULL;

Vector gather(const Vector& v, const std::vector<NodeId>& nodes) {
  Vector out(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = v[nodes[k]];
  }
  return out;
}

void check_nodes(const std::vector<NodeId>& nodes, std::size_t n, const char* what) {
  if (nodes.empty()) {
    throw InvalidValueError(std::string(what) + ": node set is empty");
  }
  for (NodeId i : nodes) {
    if (i >= n) {
      throw DimensionError(std::string(what) + ": node id " + std::to_string(i) + " out of range");
    }
  }
}

/// Splits training nodes into a fit set and an early-stopping holdout.
NodeSplit fit_validation_split(const std::vector<NodeId>& train_nodes, const TrainConfig& cfg) {
  const auto n_val = static_cast<std::size_t>(
      std::llround(cfg.validation_frac * static_cast<double>(train_nodes.size())));
  if (cfg.validation_frac <= 0.0 || n_val == 0 || n_val >= train_nodes.size()) {
    return {train_nodes, {}};
  }
  return split_node_list(train_nodes, 1.0 - cfg.validation_frac, cfg.seed ^ kValidationSplit);
}

double subset_mse(const Matrix& pred, const Vector& target, const std::vector<NodeId>& rows) {
  double acc = 0.0;
  for (NodeId i : rows) {
    const double r = pred(i, 0) - target[i];
    acc += r * r;
  }
  return acc / static_cast<double>(rows.size());
}

/// Full-batch Adam on mean squared error over the fit nodes plus the L2
/// penalty, keeping the parameters with the best holdout error.
template <class Forward>
void fit_full_batch(const std::vector<nn::Parameter*>& params, Forward&& forward,
                    const Vector& target, const std::vector<NodeId>& train_nodes,
                    const TrainConfig& cfg, TrainingLog& log) {
  const NodeSplit split = fit_validation_split(train_nodes, cfg);
  const auto& fit_nodes = split.train;
  const auto& val_nodes = split.test;

  nn::Adam adam({.learning_rate = cfg.learning_rate});
  std::vector<Matrix> best;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    nn::zero_grads(params);
    nn::Tape tape;
    nn::Var pred = forward(tape, &log.attention);
    nn::Var loss = nn::masked_mse(pred, target, fit_nodes);
    if (cfg.lambda > 0.0) {
      for (auto* p : params) {
        if (p->regularized) {
          loss = nn::add(loss, nn::scale(nn::sum_squares(tape.parameter(*p)), cfg.lambda));
        }
      }
    }
    const double loss_value = loss.scalar();
    if (!std::isfinite(loss_value)) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                           " (loss is not finite)");
    }
    const double val = val_nodes.empty() ? subset_mse(pred.value(), target, fit_nodes)
                                         : subset_mse(pred.value(), target, val_nodes);
    log.loss.push_back(loss_value);
    log.validation_loss.push_back(val);
    log.epochs_run = epoch + 1;

    if (val < best_val) {
      best_val = val;
      log.best_epoch = epoch;
      since_best = 0;
      best.clear();
      for (const auto* p : params) {
        best.push_back(p->value);
      }
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }

    tape.backward(loss);
    adam.step(params);
  }
  for (std::size_t k = 0; k < params.size() && k < best.size(); ++k) {
    params[k]->value = best[k];
    params[k]->zero_grad();
  }
}

Matrix signals(const Vector& t, const Vector& z) {
  Matrix tz(t.size(), 2);
  tz.col(0) = t;
  tz.col(1) = z;
  return tz;
}

}  // namespace

// --- config ------------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs < 1) {
    throw InvalidValueError("epochs must be >= 1");
  }
  if (!(learning_rate > 0.0)) {
    throw InvalidValueError("learning_rate must be positive");
  }
  if (!(lambda >= 0.0)) {
    throw InvalidValueError("lambda must be >= 0");
  }
  if (hidden < 1 || layers < 1 || head_hidden < 1) {
    throw InvalidValueError("hidden, layers and head_hidden must be >= 1");
  }
  if (!(validation_frac >= 0.0 && validation_frac < 1.0)) {
    throw InvalidValueError("validation_frac must lie in [0, 1)");
  }
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    throw InvalidValueError("leaky_slope must lie in (0, 1)");
  }
}

std::string to_string(OutcomeHead head) { return head == OutcomeHead::Mlp ? "mlp" : "linear"; }

std::string to_string(TreatmentSource source) {
  return source == TreatmentSource::Instrumented ? "instrumented" : "observed";
}

OutcomeHead outcome_head_from_string(const std::string& s) {
  if (s == "mlp") return OutcomeHead::Mlp;
  if (s == "linear") return OutcomeHead::Linear;
  throw InvalidValueError("unknown outcome head '" + s + "' (expected mlp or linear)");
}

TreatmentSource treatment_source_from_string(const std::string& s) {
  if (s == "instrumented") return TreatmentSource::Instrumented;
  if (s == "observed") return TreatmentSource::Observed;
  throw InvalidValueError("unknown treatment source '" + s +
                          "' (expected instrumented or observed)");
}

json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"lambda", c.lambda},
          {"hidden", c.hidden},
          {"layers", c.layers},
          {"head_hidden", c.head_hidden},
          {"seed", c.seed},
          {"patience", c.patience},
          {"validation_frac", c.validation_frac},
          {"leaky_slope", c.leaky_slope},
          {"residual", c.residual},
          {"head", to_string(c.head)},
          {"treatment_source", to_string(c.treatment_source)}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      j.at(key).get_to(field);
    }
  };
  take("epochs", c.epochs);
  take("learning_rate", c.learning_rate);
  take("lambda", c.lambda);
  take("hidden", c.hidden);
  take("layers", c.layers);
  take("head_hidden", c.head_hidden);
  take("seed", c.seed);
  take("patience", c.patience);
  take("validation_frac", c.validation_frac);
  take("leaky_slope", c.leaky_slope);
  take("residual", c.residual);
  if (j.contains("head")) {
    c.head = outcome_head_from_string(j.at("head").get<std::string>());
  }
  if (j.contains("treatment_source")) {
    c.treatment_source = treatment_source_from_string(j.at("treatment_source").get<std::string>());
  }
  c.validate();
  return c;
}

// --- scaler / encoder ----------------------------------------------------------

FeatureScaler FeatureScaler::fit(const Matrix& x) {
  FeatureScaler s;
  s.mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - s.mean;
  const double denom = std::max<double>(1.0, static_cast<double>(x.rows() - 1));
  s.scale = (centered.colwise().squaredNorm() / denom).cwiseSqrt();
  for (Eigen::Index k = 0; k < s.scale.size(); ++k) {
    if (!(s.scale[k] > 1e-12)) {
      s.scale[k] = 1.0;
    }
  }
  return s;
}

Matrix FeatureScaler::transform(const Matrix& x) const {
  if (x.cols() != mean.size()) {
    throw DimensionError("FeatureScaler: feature dimension differs from the fitted one");
  }
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

AttentionEncoder::AttentionEncoder(const std::string& prefix, std::size_t d_in,
                                   const TrainConfig& config, Rng& rng) {
  auto in = static_cast<Eigen::Index>(d_in);
  const auto width = static_cast<Eigen::Index>(config.hidden);
  for (std::size_t l = 0; l < config.layers; ++l) {
    layers.emplace_back(prefix + ".gat" + std::to_string(l), in, width, rng, config.leaky_slope,
                        config.residual);
    in = width;
  }
}

nn::Var AttentionEncoder::forward(nn::Tape& tape, nn::Var x, const nn::AttentionGraph& graph,
                                  nn::AttentionMonitor* monitor) {
  for (auto& layer : layers) {
    x = layer.forward(tape, x, graph, monitor);
  }
  return x;
}

void AttentionEncoder::collect(std::vector<nn::Parameter*>& out) {
  for (auto& layer : layers) {
    out.push_back(&layer.weight);
    out.push_back(&layer.attention);
    if (layer.has_residual()) {
      out.push_back(&layer.residual);
    }
  }
}

// --- stage 1 -------------------------------------------------------------------

StageOneModel::StageOneModel(std::size_t d_x, const TrainConfig& cfg) : config(cfg) {
  config.validate();
  auto rng = make_rng(config.seed, kStageOneInit);
  encoder = AttentionEncoder("stage1", d_x, config, rng);
  head = nn::DenseLayer("stage1.head", static_cast<Eigen::Index>(config.hidden), 1, rng);
  scaler.mean = RowVector::Zero(static_cast<Eigen::Index>(d_x));
  scaler.scale = RowVector::Ones(static_cast<Eigen::Index>(d_x));
}

nn::Var StageOneModel::forward(nn::Tape& tape, const Matrix& scaled_x,
                               const nn::AttentionGraph& graph, nn::AttentionMonitor* monitor) {
  nn::Var h = encoder.forward(tape, tape.constant(scaled_x), graph, monitor);
  return nn::sigmoid(head.forward(tape, h));
}

std::vector<nn::Parameter*> StageOneModel::parameters() {
  std::vector<nn::Parameter*> out;
  encoder.collect(out);
  out.push_back(&head.weight);
  out.push_back(&head.bias);
  return out;
}

std::vector<const nn::Parameter*> StageOneModel::parameters() const {
  auto mut = const_cast<StageOneModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

Vector StageOneModel::predict(const FeatureMatrix& features, const Network& network) const {
  if (features.num_nodes() != network.num_nodes()) {
    throw DimensionError("stage 1 predict: feature rows do not match node count");
  }
  StageOneModel frozen = *this;
  nn::AttentionGraph graph(network);
  nn::Tape tape;
  return frozen.forward(tape, scaler.transform(features.values()), graph, nullptr).value().col(0);
}

StageOneModel train_stage1(const ObservationalDataset& dataset,
                           const std::vector<NodeId>& train_nodes, const TrainConfig& config) {
  if (!dataset.has_outcomes()) {
    throw InvalidValueError("train_stage1: dataset has no treatments");
  }
  check_nodes(train_nodes, dataset.num_nodes(), "train_stage1");
  StageOneModel model(dataset.features().dim(), config);
  model.scaler = FeatureScaler::fit(dataset.features().values());
  const Matrix x = model.scaler.transform(dataset.features().values());
  const nn::AttentionGraph graph(dataset.network());
  const Vector& t = dataset.treatments();

  const double mean_t = std::clamp(gather(t, train_nodes).mean(), 0.01, 0.99);
  model.head.bias.value(0, 0) = std::log(mean_t / (1.0 - mean_t));

  fit_full_batch(
      model.parameters(),
      [&](nn::Tape& tape, nn::AttentionMonitor* monitor) {
        return model.forward(tape, x, graph, monitor);
      },
      t, train_nodes, model.config, model.log);
  return model;
}

// --- stage 2 -------------------------------------------------------------------

StageTwoInputs instrumented_inputs(const StageOneModel& stage1, const FeatureMatrix& features,
                                   const Network& network, const PeerWeights& weights) {
  StageTwoInputs in;
  in.treatment = stage1.predict(features, network);
  in.exposure = exposure(network, weights, in.treatment);
  return in;
}

StageTwoModel::StageTwoModel(std::size_t d_x, const TrainConfig& cfg) : config(cfg) {
  config.validate();
  auto rng = make_rng(config.seed, kStageTwoInit);
  encoder = AttentionEncoder("stage2", d_x, config, rng);
  const auto width = static_cast<Eigen::Index>(config.hidden);
  const auto head_width = static_cast<Eigen::Index>(config.head_hidden);
  if (config.head == OutcomeHead::Mlp) {
    hidden = nn::DenseLayer("stage2.hidden", width + 2, head_width, rng);
    output = nn::DenseLayer("stage2.out", head_width, 1, rng);
  } else {
    output = nn::DenseLayer("stage2.out", width, 1, rng);
    signal_coef = nn::Parameter("stage2.signal", nn::glorot_uniform(2, 1, rng));
  }
  scaler.mean = RowVector::Zero(static_cast<Eigen::Index>(d_x));
  scaler.scale = RowVector::Ones(static_cast<Eigen::Index>(d_x));
}

nn::Var StageTwoModel::forward(nn::Tape& tape, const Matrix& scaled_x,
                               const nn::AttentionGraph& graph, const Vector& t, const Vector& z,
                               nn::AttentionMonitor* monitor) {
  if (t.size() != scaled_x.rows() || z.size() != scaled_x.rows()) {
    throw DimensionError("stage 2: treatment/exposure signals must have one entry per node");
  }
  nn::Var emb = encoder.forward(tape, tape.constant(scaled_x), graph, monitor);
  nn::Var tz = tape.constant(signals(t, z));
  if (config.head == OutcomeHead::Mlp) {
    nn::Var h = nn::elu(hidden.forward(tape, nn::concat_cols(emb, tz)));
    return output.forward(tape, h);
  }
  return nn::add(output.forward(tape, emb), nn::matmul(tz, tape.parameter(signal_coef)));
}

std::vector<nn::Parameter*> StageTwoModel::parameters() {
  std::vector<nn::Parameter*> out;
  encoder.collect(out);
  if (config.head == OutcomeHead::Mlp) {
    out.push_back(&hidden.weight);
    out.push_back(&hidden.bias);
    out.push_back(&output.weight);
    out.push_back(&output.bias);
  } else {
    out.push_back(&output.weight);
    out.push_back(&output.bias);
    out.push_back(&signal_coef);
  }
  return out;
}

std::vector<const nn::Parameter*> StageTwoModel::parameters() const {
  auto mut = const_cast<StageTwoModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

Vector StageTwoModel::predict(const FeatureMatrix& features, const Network& network,
                              const Vector& t, const Vector& z) const {
  if (features.num_nodes() != network.num_nodes()) {
    throw DimensionError("stage 2 predict: feature rows do not match node count");
  }
  StageTwoModel frozen = *this;
  nn::AttentionGraph graph(network);
  nn::Tape tape;
  return frozen.forward(tape, scaler.transform(features.values()), graph, t, z, nullptr)
      .value()
      .col(0);
}

StageTwoModel train_stage2(const ObservationalDataset& dataset,
                           const std::vector<NodeId>& train_nodes, const StageOneModel& stage1,
                           const PeerWeights& weights, const TrainConfig& config) {
  if (!dataset.has_outcomes()) {
    throw InvalidValueError("train_stage2: dataset has no outcomes");
  }
  check_nodes(train_nodes, dataset.num_nodes(), "train_stage2");
  StageTwoModel model(dataset.features().dim(), config);
  model.scaler = FeatureScaler::fit(dataset.features().values());

  if (config.treatment_source == TreatmentSource::Instrumented) {
    model.training_inputs =
        instrumented_inputs(stage1, dataset.features(), dataset.network(), weights);
  } else {
    // No-IV ablation: the observed treatments and their exposure.
    model.training_inputs.treatment = dataset.treatments();
    model.training_inputs.exposure = exposure(dataset.network(), weights, dataset.treatments());
  }

  const Matrix x = model.scaler.transform(dataset.features().values());
  const nn::AttentionGraph graph(dataset.network());
  const Vector& y = dataset.outcomes();
  model.output.bias.value(0, 0) = gather(y, train_nodes).mean();

  const Vector t_in = model.training_inputs.treatment;
  const Vector z_in = model.training_inputs.exposure;
  fit_full_batch(
      model.parameters(),
      [&](nn::Tape& tape, nn::AttentionMonitor* monitor) {
        return model.forward(tape, x, graph, t_in, z_in, monitor);
      },
      y, train_nodes, model.config, model.log);
  return model;
}

Vector predict_counterfactual(const StageTwoModel& model, const FeatureMatrix& features,
                              const Network& network, const Vector& t_override,
                              const Vector& z_override) {
  const auto n = static_cast<Eigen::Index>(network.num_nodes());
  if (t_override.size() != n || z_override.size() != n) {
    throw DimensionError("predict_counterfactual: overrides must have one entry per node");
  }
  return model.predict(features, network, t_override, z_override);
}

// --- effects -------------------------------------------------------------------

EffectSummary EffectReport::recompute_summary() const {
  if (!truth) {
    throw InvalidValueError("effect report has no ground truth");
  }
  EffectSummary s;
  s.n = nodes.size();
  s.pehe_me = pehe(as_span(me_hat), as_span(truth->me), EffectKind::Main).value;
  s.pehe_pe = pehe(as_span(pe_hat), as_span(truth->pe), EffectKind::Peer).value;
  s.pehe_te = pehe(as_span(te_hat), as_span(truth->te), EffectKind::Total).value;
  const auto m = static_cast<Eigen::Index>(nodes.size());
  Vector pred(4 * m);
  Vector real(4 * m);
  pred << predicted.y00, predicted.y10, predicted.y0z, predicted.y1z;
  real << truth->outcomes.y00, truth->outcomes.y10, truth->outcomes.y0z, truth->outcomes.y1z;
  s.mse = mse(as_span(pred), as_span(real)).value;
  return s;
}

namespace {

GroundTruthEffects restrict_truth(const GroundTruthEffects& g, const std::vector<NodeId>& nodes) {
  GroundTruthEffects r;
  r.me = gather(g.me, nodes);
  r.pe = gather(g.pe, nodes);
  r.te = gather(g.te, nodes);
  r.z_obs = gather(g.z_obs, nodes);
  r.outcomes.y00 = gather(g.outcomes.y00, nodes);
  r.outcomes.y10 = gather(g.outcomes.y10, nodes);
  r.outcomes.y0z = gather(g.outcomes.y0z, nodes);
  r.outcomes.y1z = gather(g.outcomes.y1z, nodes);
  return r;
}

}  // namespace

EffectReport estimate_effects(const StageTwoModel& model, const FeatureMatrix& features,
                              const Network& network, const EvalPairs& pairs,
                              const std::vector<NodeId>& nodes,
                              const std::optional<GroundTruthEffects>& truth, std::string label) {
  const auto n = static_cast<Eigen::Index>(network.num_nodes());
  check_nodes(nodes, network.num_nodes(), "estimate_effects");
  if (pairs.z_contrast.size() != n) {
    throw DimensionError("estimate_effects: contrast exposure must have one entry per node");
  }
  const Vector zeros = Vector::Zero(n);
  const Vector ones = Vector::Ones(n);
  EffectReport r;
  r.label = std::move(label);
  r.nodes = nodes;
  r.predicted.y00 = gather(predict_counterfactual(model, features, network, zeros, zeros), nodes);
  r.predicted.y10 = gather(predict_counterfactual(model, features, network, ones, zeros), nodes);
  r.predicted.y0z =
      gather(predict_counterfactual(model, features, network, zeros, pairs.z_contrast), nodes);
  r.predicted.y1z =
      gather(predict_counterfactual(model, features, network, ones, pairs.z_contrast), nodes);
  r.me_hat = r.predicted.main_effect();
  r.pe_hat = r.predicted.peer_effect();
  r.te_hat = r.predicted.total_effect();
  if (truth) {
    if (truth->me.size() != n) {
      throw DimensionError("estimate_effects: ground truth must cover every node");
    }
    r.truth = restrict_truth(*truth, nodes);
    r.summary = r.recompute_summary();
  }
  return r;
}

void write_effect_report_csv(const std::filesystem::path& path, const EffectReport& report) {
  auto col = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  std::vector<double> node(report.nodes.begin(), report.nodes.end());
  std::vector<std::string> header{"node", "me_hat", "pe_hat", "te_hat"};
  std::vector<std::vector<double>> cols{node, col(report.me_hat), col(report.pe_hat),
                                        col(report.te_hat)};
  if (report.truth) {
    header.insert(header.end(), {"me_true", "pe_true", "te_true"});
    cols.push_back(col(report.truth->me));
    cols.push_back(col(report.truth->pe));
    cols.push_back(col(report.truth->te));
  }
  write_csv(path, header, cols, {"node"});
}

// --- diagnostics -----------------------------------------------------------------

double r_squared(const Vector& observed, const Vector& predicted,
                 const std::vector<NodeId>& nodes) {
  check_nodes(nodes, static_cast<std::size_t>(observed.size()), "r_squared");
  const Vector o = gather(observed, nodes);
  const Vector p = gather(predicted, nodes);
  const double ss_tot = (o.array() - o.mean()).square().sum();
  const double ss_res = (o - p).squaredNorm();
  if (ss_tot == 0.0) {
    return ss_res == 0.0 ? 1.0 : 0.0;
  }
  return 1.0 - ss_res / ss_tot;
}

double correlation(const Vector& a, const Vector& b, const std::vector<NodeId>& nodes) {
  check_nodes(nodes, static_cast<std::size_t>(a.size()), "correlation");
  const Vector x = gather(a, nodes);
  const Vector y = gather(b, nodes);
  const Vector xc = x.array() - x.mean();
  const Vector yc = y.array() - y.mean();
  const double denom = std::sqrt(xc.squaredNorm() * yc.squaredNorm());
  return denom > 0.0 ? xc.dot(yc) / denom : 0.0;
}

IvDiagnostics iv_diagnostics(const StageOneModel& stage1, const ObservationalDataset& dataset,
                             const std::vector<NodeId>& train_nodes,
                             const std::vector<NodeId>& eval_nodes) {
  if (!dataset.has_outcomes()) {
    throw InvalidValueError("iv_diagnostics: dataset has no treatments/outcomes");
  }
  check_nodes(eval_nodes, dataset.num_nodes(), "iv_diagnostics");
  const Vector& t = dataset.treatments();
  const Vector t_hat = stage1.predict(dataset.features(), dataset.network());

  const ObservationalDataset structure_free(empty_network(dataset.num_nodes()), dataset.features(),
                                            t, dataset.outcomes());
  const StageOneModel baseline = train_stage1(structure_free, train_nodes, stage1.config);
  const Vector t_free = baseline.predict(structure_free.features(), structure_free.network());

  IvDiagnostics d;
  d.n = eval_nodes.size();
  d.r2_graph = r_squared(t, t_hat, eval_nodes);
  d.r2_structure_free = r_squared(t, t_free, eval_nodes);
  d.relevance_gap = d.r2_graph - d.r2_structure_free;
  d.residual_outcome_correlation = correlation(t - t_hat, dataset.outcomes(), eval_nodes);
  return d;
}

// --- checkpoints -----------------------------------------------------------------

namespace {

json row_json(const RowVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

RowVector json_row(const json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<RowVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json checkpoint(const char* kind, const TrainConfig& config, const FeatureScaler& scaler,
                const std::vector<const nn::Parameter*>& params) {
  return {{"format", nn::kCheckpointMagic},
          {"kind", kind},
          {"meta",
           {{"config", train_config_to_json(config)},
            {"d_x", scaler.mean.size()},
            {"scaler", {{"mean", row_json(scaler.mean)}, {"scale", row_json(scaler.scale)}}}}},
          {"params", nn::params_to_json(params)}};
}

json read_checkpoint(const std::filesystem::path& path, const char* kind) {
  json j = json::parse(read_text_file(path));
  if (j.value("format", "") != nn::kCheckpointMagic) {
    throw Error(path.string() + ": not a " + std::string(nn::kCheckpointMagic) + " file");
  }
  if (j.value("kind", "") != kind) {
    throw Error(path.string() + ": expected a " + kind + " checkpoint");
  }
  return j;
}

FeatureScaler scaler_from(const json& meta) {
  return {json_row(meta.at("scaler").at("mean")), json_row(meta.at("scaler").at("scale"))};
}

}  // namespace

void save_stage1(const std::filesystem::path& path, const StageOneModel& model) {
  write_text_file(path, checkpoint("stage1", model.config, model.scaler, model.parameters()).dump() +
                            "\n");
}

StageOneModel load_stage1(const std::filesystem::path& path) {
  const json j = read_checkpoint(path, "stage1");
  const json& meta = j.at("meta");
  StageOneModel model(meta.at("d_x").get<std::size_t>(), train_config_from_json(meta.at("config")));
  model.scaler = scaler_from(meta);
  nn::params_from_json(j.at("params"), model.parameters());
  return model;
}

void save_stage2(const std::filesystem::path& path, const StageTwoModel& model) {
  json j = checkpoint("stage2", model.config, model.scaler, model.parameters());
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  j["meta"]["training_inputs"] = {{"treatment", vec(model.training_inputs.treatment)},
                                  {"exposure", vec(model.training_inputs.exposure)}};
  write_text_file(path, j.dump() + "\n");
}

StageTwoModel load_stage2(const std::filesystem::path& path) {
  const json j = read_checkpoint(path, "stage2");
  const json& meta = j.at("meta");
  StageTwoModel model(meta.at("d_x").get<std::size_t>(), train_config_from_json(meta.at("config")));
  model.scaler = scaler_from(meta);
  nn::params_from_json(j.at("params"), model.parameters());
  if (meta.contains("training_inputs")) {
    auto t = meta.at("training_inputs").at("treatment").get<std::vector<double>>();
    auto z = meta.at("training_inputs").at("exposure").get<std::vector<double>>();
    model.training_inputs.treatment = Eigen::Map<Vector>(t.data(), static_cast<Eigen::Index>(t.size()));
    model.training_inputs.exposure = Eigen::Map<Vector>(z.data(), static_cast<Eigen::Index>(z.size()));
  }
  return model;
}

}  // namespace cgnn
