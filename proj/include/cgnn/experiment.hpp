#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cgnn/metrics.hpp"
#include "cgnn/model.hpp"
#include "cgnn/simulator.hpp"

namespace cgnn {

struct FlipRow {
  double flip_rate{0.0};
  MeanStd mse;
  std::vector<double> per_seed;
};

/// For each rate and seed: flip treatments, recompute exposure and the
/// noiseless counterfactual outcome, predict it with (t', z') overrides and
/// record the MSE over `eval_nodes`. Rows are aggregated over seeds.
std::vector<FlipRow> run_flip_experiment(const StageTwoModel& model,
                                         const SimulatedInstance& instance,
                                         const std::vector<double>& flip_rates,
                                         const std::vector<std::uint64_t>& seeds,
                                         const std::vector<NodeId>& eval_nodes);

void write_flip_table_csv(const std::filesystem::path& path, const std::vector<FlipRow>& rows);

struct ExperimentConfig {
  SimulationSettings simulation;
  TrainConfig train;
  std::vector<double> flip_rates{0.25, 0.5, 0.75, 1.0};
  std::size_t flip_seeds{5};
  std::size_t repetitions{5};
  double train_frac{0.8};
  std::uint64_t seed_base{0};
  /// Also train the no-IV ablation (stage 2 fed observed T) for comparison.
  bool compare_no_iv{false};
  /// Semi-synthetic mode: simulate on a user-supplied graph and base features.
  std::optional<std::filesystem::path> edge_file;
  std::optional<std::filesystem::path> feature_file;

  std::string regime() const;
  void validate() const;
};

nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
/// Reads {"simulation": {...}, "train": {...}, "experiment": {...}}; absent
/// keys keep the values already in `base`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        ExperimentConfig base = {});

/// Simulated instance for one repetition (fully synthetic or on loaded data).
SimulatedInstance make_instance(const ExperimentConfig& config, std::uint64_t seed);

/// Flip-experiment seeds derived from a run seed.
std::vector<std::uint64_t> flip_seeds_for(std::uint64_t run_seed, std::size_t count);

struct RunResult {
  std::size_t index{0};
  std::uint64_t seed{0};
  bool ok{false};
  std::string error;
  EffectSummary within;
  EffectSummary out_of_sample;
  std::optional<EffectSummary> no_iv_within;
  std::optional<EffectSummary> no_iv_out_of_sample;
  std::vector<FlipRow> flip;
};

struct PipelineResult {
  std::string regime;
  std::vector<RunResult> runs;
  std::size_t failures{0};
  nlohmann::json summary;
};

/// One repetition: simulate, split, train both stages, evaluate within- and
/// out-of-sample, run the flip experiment. Artifacts go to `run_dir` when set.
RunResult run_single(const ExperimentConfig& config, std::size_t index,
                     const std::optional<std::filesystem::path>& run_dir);

/// All repetitions with seeds seed_base + r, then mean/std summaries.
/// Writes config.json, run_XXX/ directories, runs.csv and summary.json
/// under `output_dir` when given. A failing repetition is recorded in its
/// run directory (error.json) and excluded from the aggregates.
PipelineResult run_pipeline(const ExperimentConfig& config,
                            const std::optional<std::filesystem::path>& output_dir);

nlohmann::json summary_to_json(const EffectSummary& s);

}  // namespace cgnn
