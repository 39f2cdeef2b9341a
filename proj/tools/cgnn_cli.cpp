// cgnn: simulate instances, train the two-stage estimator, evaluate effects.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cgnn/experiment.hpp"
#include "cgnn/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cgnn;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> config;
  std::optional<fs::path> out;
};

struct UsageError : Error {
  using Error::Error;
  std::string kind() const override { return "usage_error"; }
};

/// Dataset plus peer weights; the simulated instance when the directory has
/// generator parameters (needed for ground truth).
struct Loaded {
  ObservationalDataset dataset;
  PeerWeights weights;
  std::optional<SimulatedInstance> instance;
};

Loaded load_input(const fs::path& dir, double smoothing) {
  if (fs::exists(dir / "params.json")) {
    SimulatedInstance inst = load_instance(dir);
    Loaded l{inst.dataset, inst.peer_weights, std::nullopt};
    l.instance = std::move(inst);
    return l;
  }
  ObservationalDataset ds = load_dataset_dir(dir);
  PeerWeights w = compute_peer_weights(ds.network(), ds.features(), smoothing);
  return {std::move(ds), std::move(w), std::nullopt};
}

fs::path require_out(const Globals& g) {
  if (!g.out) {
    throw UsageError("--out is required for this command");
  }
  fs::create_directories(*g.out);
  return *g.out;
}

ExperimentConfig base_config(const Globals& g) {
  ExperimentConfig c = g.config ? load_experiment_config(*g.config) : ExperimentConfig{};
  if (g.seed) {
    c.seed_base = *g.seed;
    c.train.seed = *g.seed;
  }
  return c;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

json split_to_json(const NodeSplit& s) { return {{"train", s.train}, {"test", s.test}}; }

NodeSplit read_split(const fs::path& checkpoints) {
  const json j = json::parse(read_text_file(checkpoints / "split.json"));
  return {j.at("train").get<std::vector<NodeId>>(), j.at("test").get<std::vector<NodeId>>()};
}

void write_loss_csv(const fs::path& path, const TrainingLog& log) {
  std::vector<double> epoch;
  for (std::size_t i = 0; i < log.loss.size(); ++i) {
    epoch.push_back(static_cast<double>(i));
  }
  write_csv(path, {"epoch", "loss", "validation_loss"}, {epoch, log.loss, log.validation_loss},
            {"epoch"});
}

// --- commands ------------------------------------------------------------------

struct SimulateArgs {
  std::optional<std::size_t> nodes;
  std::optional<double> edge_prob;
  bool no_confounding{false};
  std::optional<fs::path> edge_file, feature_file, dump_weights;
};

void cmd_simulate(const Globals& g, const SimulateArgs& a) {
  ExperimentConfig c = base_config(g);
  if (a.nodes) c.simulation.n_nodes = *a.nodes;
  if (a.edge_prob) c.simulation.edge_prob = *a.edge_prob;
  if (a.no_confounding) c.simulation.hidden_confounding = false;
  if (a.edge_file || a.feature_file) {
    if (!a.edge_file || !a.feature_file) {
      throw UsageError("--edges and --features must be given together");
    }
    c.edge_file = a.edge_file;
    c.feature_file = a.feature_file;
  }
  c.validate();
  const fs::path out = require_out(g);
  const SimulatedInstance inst = make_instance(c, c.seed_base);
  write_instance(out, inst);
  if (a.dump_weights) {
    write_peer_weights_csv(*a.dump_weights, inst.network(), inst.peer_weights);
  }
  print_json({{"status", "ok"},
              {"out", out.string()},
              {"seed", c.seed_base},
              {"regime", c.regime()},
              {"nodes", inst.num_nodes()},
              {"edges", inst.network().num_edges()},
              {"treated_fraction", inst.dataset.treatments().mean()}});
}

struct TrainArgs {
  fs::path instance;
  double train_frac{0.8};
  std::optional<std::size_t> epochs;
  std::string head;
  bool no_iv{false};
};

void cmd_train(const Globals& g, const TrainArgs& a) {
  ExperimentConfig c = base_config(g);
  if (a.epochs) c.train.epochs = *a.epochs;
  if (!a.head.empty()) c.train.head = outcome_head_from_string(a.head);
  if (a.no_iv) c.train.treatment_source = TreatmentSource::Observed;
  c.train.validate();
  const fs::path out = require_out(g);
  const Loaded in = load_input(a.instance, c.simulation.smoothing);
  if (!in.dataset.has_outcomes()) {
    throw InvalidValueError(a.instance.string() + ": training needs treatment_outcome.csv");
  }
  const NodeSplit split = split_nodes(in.dataset.network(), a.train_frac, c.train.seed);
  const StageOneModel s1 = train_stage1(in.dataset, split.train, c.train);
  const StageTwoModel s2 = train_stage2(in.dataset, split.train, s1, in.weights, c.train);
  save_stage1(out / "stage1.json", s1);
  save_stage2(out / "stage2.json", s2);
  json split_json = split_to_json(split);
  split_json["seed"] = c.train.seed;
  split_json["train_frac"] = a.train_frac;
  write_text_file(out / "split.json", split_json.dump() + "\n");
  write_loss_csv(out / "loss_stage1.csv", s1.log);
  write_loss_csv(out / "loss_stage2.csv", s2.log);
  print_json({{"status", "ok"},
              {"out", out.string()},
              {"stage1", {{"epochs_run", s1.log.epochs_run}, {"best_epoch", s1.log.best_epoch}}},
              {"stage2", {{"epochs_run", s2.log.epochs_run}, {"best_epoch", s2.log.best_epoch}}},
              {"max_attention_row_error",
               std::max(s1.log.attention.max_row_sum_error, s2.log.attention.max_row_sum_error)}});
}

struct EvalArgs {
  fs::path instance;
  fs::path checkpoints;
};

void cmd_evaluate(const Globals& g, const EvalArgs& a) {
  const ExperimentConfig c = base_config(g);
  const fs::path out = require_out(g);
  const Loaded in = load_input(a.instance, c.simulation.smoothing);
  const StageTwoModel s2 = load_stage2(a.checkpoints / "stage2.json");
  const NodeSplit split = read_split(a.checkpoints);
  if (!in.dataset.has_outcomes()) {
    throw InvalidValueError(a.instance.string() + ": evaluation needs observed treatments");
  }
  const auto& ds = in.dataset;
  const EvalPairs pairs = evaluation_pairs(ds.network(), in.weights, ds.treatments());
  std::optional<GroundTruthEffects> truth;
  if (in.instance) {
    truth = ground_truth_effects(*in.instance, pairs);
  }
  json summary = {{"status", "ok"}, {"seed", c.seed_base}, {"config", train_config_to_json(s2.config)}};
  for (const auto& [label, nodes] :
       {std::pair{std::string("within"), split.train}, std::pair{std::string("out_of_sample"), split.test}}) {
    const EffectReport report =
        estimate_effects(s2, ds.features(), ds.network(), pairs, nodes, truth, label);
    write_effect_report_csv(out / ("effects_" + label + ".csv"), report);
    json part = {{"n", nodes.size()},
                 {"mean_me_hat", report.me_hat.mean()},
                 {"mean_pe_hat", report.pe_hat.mean()},
                 {"mean_te_hat", report.te_hat.mean()}};
    if (report.summary) {
      part.update(summary_to_json(*report.summary));
    }
    summary[label] = part;
  }
  write_text_file(out / "effects_summary.json", summary.dump(2) + "\n");
  print_json(summary);
}

struct FlipArgs {
  fs::path instance;
  fs::path checkpoints;
  std::vector<double> rates;
  std::optional<std::size_t> seeds;
};

void cmd_flip(const Globals& g, const FlipArgs& a) {
  ExperimentConfig c = base_config(g);
  if (!a.rates.empty()) c.flip_rates = a.rates;
  if (a.seeds) c.flip_seeds = *a.seeds;
  c.validate();
  const fs::path out = require_out(g);
  const SimulatedInstance inst = load_instance(a.instance);
  const StageTwoModel s2 = load_stage2(a.checkpoints / "stage2.json");
  const NodeSplit split = read_split(a.checkpoints);
  const auto rows = run_flip_experiment(s2, inst, c.flip_rates,
                                        flip_seeds_for(c.seed_base, c.flip_seeds), split.test);
  write_flip_table_csv(out / "flip.csv", rows);
  json table = json::array();
  for (const auto& r : rows) {
    table.push_back({{"flip_rate", r.flip_rate}, {"mse_mean", r.mse.mean}, {"mse_std", r.mse.std}});
  }
  print_json({{"status", "ok"}, {"flip", table}});
}

struct PipelineArgs {
  std::optional<std::size_t> repetitions;
  std::optional<std::size_t> nodes;
  std::optional<std::size_t> epochs;
  bool no_confounding{false};
  bool compare_no_iv{false};
};

void cmd_pipeline(const Globals& g, const PipelineArgs& a) {
  ExperimentConfig c = base_config(g);
  if (a.repetitions) c.repetitions = *a.repetitions;
  if (a.nodes) c.simulation.n_nodes = *a.nodes;
  if (a.epochs) c.train.epochs = *a.epochs;
  if (a.no_confounding) c.simulation.hidden_confounding = false;
  if (a.compare_no_iv) c.compare_no_iv = true;
  c.validate();
  const fs::path out = require_out(g);
  const PipelineResult r = run_pipeline(c, out);
  print_json({{"status", r.failures == 0 ? "ok" : "partial"},
              {"out", out.string()},
              {"regime", r.regime},
              {"failures", r.failures},
              {"metrics", r.summary.at("metrics")}});
  if (r.failures == r.runs.size()) {
    throw Error("every repetition failed; see run_*/error.json");
  }
}

struct DiagnoseArgs {
  fs::path instance;
  fs::path checkpoints;
};

void cmd_diagnose(const Globals& g, const DiagnoseArgs& a) {
  const ExperimentConfig c = base_config(g);
  const Loaded in = load_input(a.instance, c.simulation.smoothing);
  const StageOneModel s1 = load_stage1(a.checkpoints / "stage1.json");
  const NodeSplit split = read_split(a.checkpoints);
  const IvDiagnostics d = iv_diagnostics(s1, in.dataset, split.train, split.test);
  const json j = {{"status", "ok"},
                  {"r2_graph", d.r2_graph},
                  {"r2_structure_free", d.r2_structure_free},
                  {"relevance_gap", d.relevance_gap},
                  {"residual_outcome_correlation", d.residual_outcome_correlation},
                  {"n", d.n}};
  if (g.out) {
    fs::create_directories(*g.out);
    write_text_file(*g.out / "diagnostics.json", j.dump(2) + "\n");
  }
  print_json(j);
}

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"status", "error"}, {"error", {{"kind", kind}, {"message", message}}}}.dump()
            << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage graph-attention IV estimation of main and peer effects"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Random seed (instance seed / base seed for repetitions)");
  app.add_option("--config", g.config, "Configuration file (.json or .toml)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a semi-synthetic instance directory");
  simulate->add_option("--nodes", sim.nodes, "Number of nodes (random graph)");
  simulate->add_option("--edge-prob", sim.edge_prob, "Edge probability (random graph)");
  simulate->add_flag("--no-confounding", sim.no_confounding, "Set alpha_2 = beta_4 = 0");
  simulate->add_option("--edges", sim.edge_file, "Edge list to simulate on")->check(CLI::ExistingFile);
  simulate->add_option("--features", sim.feature_file, "Base feature CSV")->check(CLI::ExistingFile);
  simulate->add_option("--dump-weights", sim.dump_weights, "Write (i, j, w_ij) CSV to this path");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train both stages on an instance");
  train->add_option("--instance", tr.instance, "Instance or dataset directory")->required();
  train->add_option("--train-frac", tr.train_frac, "Fraction of nodes used for training");
  train->add_option("--epochs", tr.epochs, "Epochs per stage");
  train->add_option("--head", tr.head, "Outcome head: mlp or linear");
  train->add_flag("--no-iv", tr.no_iv, "Ablation: feed observed T and z to stage 2");

  EvalArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Estimate ME/PE/TE and score against ground truth");
  evaluate->add_option("--instance", ev.instance, "Instance or dataset directory")->required();
  evaluate->add_option("--checkpoints", ev.checkpoints, "Directory written by train")->required();

  FlipArgs fl;
  auto* flip = app.add_subcommand("flip-exp", "Counterfactual MSE under random treatment flips");
  flip->add_option("--instance", fl.instance, "Simulated instance directory")->required();
  flip->add_option("--checkpoints", fl.checkpoints, "Directory written by train")->required();
  flip->add_option("--rates", fl.rates, "Flip rates")->delimiter(',');
  flip->add_option("--flip-seeds", fl.seeds, "Number of flip seeds");

  PipelineArgs pl;
  auto* pipeline = app.add_subcommand("pipeline", "Full protocol over repeated seeds");
  pipeline->add_option("--repetitions", pl.repetitions, "Number of repetitions");
  pipeline->add_option("--nodes", pl.nodes, "Number of nodes (random graph)");
  pipeline->add_option("--epochs", pl.epochs, "Epochs per stage");
  pipeline->add_flag("--no-confounding", pl.no_confounding, "Set alpha_2 = beta_4 = 0");
  pipeline->add_flag("--compare-no-iv", pl.compare_no_iv, "Also train the no-IV ablation");

  DiagnoseArgs dg;
  auto* diagnose = app.add_subcommand("diagnose", "Instrument relevance and residual diagnostics");
  diagnose->add_option("--instance", dg.instance, "Instance or dataset directory")->required();
  diagnose->add_option("--checkpoints", dg.checkpoints, "Directory written by train")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage_error", e.what(), 2);
  }

  try {
    if (*simulate) cmd_simulate(g, sim);
    if (*train) cmd_train(g, tr);
    if (*evaluate) cmd_evaluate(g, ev);
    if (*flip) cmd_flip(g, fl);
    if (*pipeline) cmd_pipeline(g, pl);
    if (*diagnose) cmd_diagnose(g, dg);
  } catch (const UsageError& e) {
    return fail(e.kind(), e.what(), 2);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), 1);
  } catch (const json::exception& e) {
    return fail("parse_error", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal_error", e.what(), 1);
  }
  return EXIT_SUCCESS;
}
