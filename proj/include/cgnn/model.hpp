#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cgnn/graph.hpp"
#include "cgnn/checkpoint.hpp"
#include "cgnn/layers.hpp"
#include "cgnn/peer_exposure.hpp"
#include "cgnn/simulator.hpp"

namespace cgnn {

enum class OutcomeHead {
  /// concat(embedding, t, z) -> dense -> ELU -> dense
  Mlp,
  /// dense(embedding) + c_t t + c_z z; effects are exactly additive.
  Linear,
};

enum class TreatmentSource {
  /// Stage 2 sees stage-1 propensities and the exposure they induce.
  Instrumented,
  /// Ablation: stage 2 sees observed treatments and observed exposure.
  Observed,
};

struct TrainConfig {
  std::size_t epochs{300};
  double learning_rate{0.01};
  double lambda{1e-4};
  std::size_t hidden{32};
  std::size_t layers{2};
  std::size_t head_hidden{32};
  std::uint64_t seed{0};
  /// Epochs without validation improvement before stopping; 0 disables.
  std::size_t patience{50};
  /// Fraction of training nodes held out for early stopping.
  double validation_frac{0.1};
  double leaky_slope{0.2};
  /// Adds a per-layer projection of the node's own input, h_i R, before the
  /// activation, so a node's features are not diluted by its neighborhood.
  bool residual{true};
  OutcomeHead head{OutcomeHead::Mlp};
  TreatmentSource treatment_source{TreatmentSource::Instrumented};

  void validate() const;
};

std::string to_string(OutcomeHead head);
std::string to_string(TreatmentSource source);
OutcomeHead outcome_head_from_string(const std::string& s);
TreatmentSource treatment_source_from_string(const std::string& s);

/// Column-wise standardisation fitted on the full feature matrix.
struct FeatureScaler {
  RowVector mean;
  RowVector scale;

  static FeatureScaler fit(const Matrix& x);
  Matrix transform(const Matrix& x) const;
};

struct TrainingLog {
  std::vector<double> loss;             // full objective on the fit nodes, per epoch
  std::vector<double> validation_loss;  // MSE on the held-out nodes, per epoch
  std::size_t best_epoch{0};
  std::size_t epochs_run{0};
  nn::AttentionMonitor attention;
};

/// Stack of attention layers d_x -> hidden -> ... -> hidden.
struct AttentionEncoder {
  std::vector<nn::AttentionLayer> layers;

  AttentionEncoder() = default;
  AttentionEncoder(const std::string& prefix, std::size_t d_in, const TrainConfig& config,
                   Rng& rng);

  nn::Var forward(nn::Tape& tape, nn::Var x, const nn::AttentionGraph& graph,
                  nn::AttentionMonitor* monitor);
  void collect(std::vector<nn::Parameter*>& out);
};

/// Treatment model: attention encoder over X and the graph, sigmoid head.
class StageOneModel {
public:
  StageOneModel() = default;
  StageOneModel(std::size_t d_x, const TrainConfig& config);

  /// Propensities T_hat in (0, 1) for every node.
  Vector predict(const FeatureMatrix& features, const Network& network) const;

  nn::Var forward(nn::Tape& tape, const Matrix& scaled_x, const nn::AttentionGraph& graph,
                  nn::AttentionMonitor* monitor);
  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;

  TrainConfig config;
  FeatureScaler scaler;
  AttentionEncoder encoder;
  nn::DenseLayer head;
  TrainingLog log;
};

/// The (treatment, exposure) signals fed to the stage-2 outcome head.
struct StageTwoInputs {
  Vector treatment;
  Vector exposure;
};

/// T_hat from stage 1 and z_hat_i = sum_j w_ij T_hat_j. Takes no observed
/// treatments or outcomes.
StageTwoInputs instrumented_inputs(const StageOneModel& stage1, const FeatureMatrix& features,
                                   const Network& network, const PeerWeights& weights);

/// Outcome model: fresh attention encoder over X, head over (embedding, t, z).
class StageTwoModel {
public:
  StageTwoModel() = default;
  StageTwoModel(std::size_t d_x, const TrainConfig& config);

  /// Outcome predictions with (t, z) substituted into the head. The only
  /// node-level inputs are features, topology and the two signals.
  Vector predict(const FeatureMatrix& features, const Network& network, const Vector& t,
                 const Vector& z) const;

  nn::Var forward(nn::Tape& tape, const Matrix& scaled_x, const nn::AttentionGraph& graph,
                  const Vector& t, const Vector& z, nn::AttentionMonitor* monitor);
  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;

  TrainConfig config;
  FeatureScaler scaler;
  AttentionEncoder encoder;
  nn::DenseLayer hidden;      // Mlp head
  nn::DenseLayer output;      // Mlp head: head_hidden -> 1; Linear head: hidden -> 1
  nn::Parameter signal_coef;  // Linear head: 2 x 1 coefficients on (t, z)
  /// The (t, z) signals stage 2 was trained on.
  StageTwoInputs training_inputs;
  TrainingLog log;
};

/// Fits stage 1 by minimising mean (T_i - T_hat_i)^2 + lambda ||W_T||^2 over
/// the training nodes (full batch, Adam, early stopping on a holdout).
StageOneModel train_stage1(const ObservationalDataset& dataset,
                           const std::vector<NodeId>& train_nodes, const TrainConfig& config);

/// Fits stage 2 by minimising mean (Y_i - Y_hat_i)^2 + lambda ||W_Y||^2.
/// With TreatmentSource::Instrumented the head sees (T_hat, z_hat) from the
/// frozen stage 1; observed treatments are read only under the Observed
/// ablation.
StageTwoModel train_stage2(const ObservationalDataset& dataset,
                           const std::vector<NodeId>& train_nodes, const StageOneModel& stage1,
                           const PeerWeights& weights, const TrainConfig& config);

Vector predict_counterfactual(const StageTwoModel& model, const FeatureMatrix& features,
                              const Network& network, const Vector& t_override,
                              const Vector& z_override);

struct EffectSummary {
  double pehe_me{0.0};
  double pehe_pe{0.0};
  double pehe_te{0.0};
  double mse{0.0};
  std::size_t n{0};
};

/// Per-node effect estimates over a node subset, with paired ground truth
/// when available.
struct EffectReport {
  std::string label;
  std::vector<NodeId> nodes;
  Vector me_hat, pe_hat, te_hat;
  PotentialOutcomes predicted;  // restricted to `nodes`
  std::optional<GroundTruthEffects> truth;  // restricted to `nodes`
  std::optional<EffectSummary> summary;

  /// Recomputes the summary from the per-node columns.
  EffectSummary recompute_summary() const;
};

/// ME = Y(1,0) - Y(0,0), PE = Y(0,z) - Y(0,0), TE = Y(1,z) - Y(0,0) with
/// z = pairs.z_contrast, on the listed nodes (full-graph message passing).
EffectReport estimate_effects(const StageTwoModel& model, const FeatureMatrix& features,
                              const Network& network, const EvalPairs& pairs,
                              const std::vector<NodeId>& nodes,
                              const std::optional<GroundTruthEffects>& truth = {},
                              std::string label = {});

void write_effect_report_csv(const std::filesystem::path& path, const EffectReport& report);

struct IvDiagnostics {
  double r2_graph{0.0};
  double r2_structure_free{0.0};
  double relevance_gap{0.0};
  double residual_outcome_correlation{0.0};
  std::size_t n{0};
};

/// Relevance proxy: out-of-sample R^2 of stage 1 against a structure-free
/// stage 1 (empty graph, same config and training nodes). Residual check:
/// correlation between T - T_hat and Y on the evaluation nodes.
IvDiagnostics iv_diagnostics(const StageOneModel& stage1, const ObservationalDataset& dataset,
                             const std::vector<NodeId>& train_nodes,
                             const std::vector<NodeId>& eval_nodes);

double r_squared(const Vector& observed, const Vector& predicted, const std::vector<NodeId>& nodes);
double correlation(const Vector& a, const Vector& b, const std::vector<NodeId>& nodes);

nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

void save_stage1(const std::filesystem::path& path, const StageOneModel& model);
StageOneModel load_stage1(const std::filesystem::path& path);
void save_stage2(const std::filesystem::path& path, const StageTwoModel& model);
StageTwoModel load_stage2(const std::filesystem::path& path);

}  // namespace cgnn
