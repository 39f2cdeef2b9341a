#include "cgnn/experiment.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include <toml.hpp>

#include "cgnn/io.hpp"

namespace cgnn {

using nlohmann::json;

namespace {

Vector gather(const Vector& v, const std::vector<NodeId>& nodes) {
  Vector out(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = v[nodes[k]];
  }
  return out;
}

std::string run_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03zu", index);
  return buf;
}

json flip_to_json(const std::vector<FlipRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"flip_rate", r.flip_rate},
                   {"mse_mean", r.mse.mean},
                   {"mse_std", r.mse.std},
                   {"n_seeds", r.mse.n},
                   {"per_seed", r.per_seed}});
  }
  return out;
}

}  // namespace

std::vector<FlipRow> run_flip_experiment(const StageTwoModel& model,
                                         const SimulatedInstance& instance,
                                         const std::vector<double>& flip_rates,
                                         const std::vector<std::uint64_t>& seeds,
                                         const std::vector<NodeId>& eval_nodes) {
  if (seeds.empty()) {
    throw InvalidValueError("run_flip_experiment: at least one seed is required");
  }
  const auto& features = instance.dataset.features();
  const auto& network = instance.network();
  std::vector<FlipRow> rows;
  for (double rate : flip_rates) {
    FlipRow row;
    row.flip_rate = rate;
    for (auto seed : seeds) {
      const Counterfactual cf = flip_treatments(instance, rate, seed);
      const Vector y_hat =
          predict_counterfactual(model, features, network, cf.treatments, cf.exposure);
      row.per_seed.push_back(
          mse(as_span(gather(y_hat, eval_nodes)), as_span(gather(cf.outcomes, eval_nodes))).value);
    }
    row.mse = mean_std(row.per_seed);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_flip_table_csv(const std::filesystem::path& path, const std::vector<FlipRow>& rows) {
  std::vector<double> rate, mean, sd, n;
  for (const auto& r : rows) {
    rate.push_back(r.flip_rate);
    mean.push_back(r.mse.mean);
    sd.push_back(r.mse.std);
    n.push_back(static_cast<double>(r.mse.n));
  }
  write_csv(path, {"flip_rate", "mse_mean", "mse_std", "n_seeds"}, {rate, mean, sd, n},
            {"n_seeds"});
}

// --- config ------------------------------------------------------------------

std::string ExperimentConfig::regime() const {
  return simulation.hidden_confounding ? "confounded" : "confounder-free";
}

void ExperimentConfig::validate() const {
  simulation.validate();
  train.validate();
  if (repetitions < 1) {
    throw InvalidValueError("repetitions must be >= 1");
  }
  if (flip_seeds < 1) {
    throw InvalidValueError("flip_seeds must be >= 1");
  }
  for (double r : flip_rates) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw InvalidValueError("flip rates must lie in [0, 1]");
    }
  }
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw InvalidValueError("train_frac must lie strictly between 0 and 1");
  }
  if (edge_file.has_value() != feature_file.has_value()) {
    throw InvalidValueError("edge_file and feature_file must be given together");
  }
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json exp = {{"flip_rates", c.flip_rates},   {"flip_seeds", c.flip_seeds},
              {"repetitions", c.repetitions}, {"train_frac", c.train_frac},
              {"seed_base", c.seed_base},     {"compare_no_iv", c.compare_no_iv}};
  if (c.edge_file) {
    exp["edge_file"] = c.edge_file->string();
    exp["feature_file"] = c.feature_file->string();
  }
  return {{"simulation", settings_to_json(c.simulation)},
          {"train", train_config_to_json(c.train)},
          {"experiment", exp}};
}

ExperimentConfig experiment_config_from_json(const json& j, ExperimentConfig c) {
  if (j.contains("simulation")) {
    c.simulation = settings_from_json(j.at("simulation"), c.simulation);
  }
  if (j.contains("train")) {
    c.train = train_config_from_json(j.at("train"), c.train);
  }
  if (j.contains("experiment")) {
    const json& e = j.at("experiment");
    auto take = [&](const char* key, auto& field) {
      if (e.contains(key)) {
        e.at(key).get_to(field);
      }
    };
    take("flip_rates", c.flip_rates);
    take("flip_seeds", c.flip_seeds);
    take("repetitions", c.repetitions);
    take("train_frac", c.train_frac);
    take("seed_base", c.seed_base);
    take("compare_no_iv", c.compare_no_iv);
    if (e.contains("edge_file")) {
      c.edge_file = e.at("edge_file").get<std::string>();
    }
    if (e.contains("feature_file")) {
      c.feature_file = e.at("feature_file").get<std::string>();
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, ExperimentConfig base) {
  const std::string text = read_text_file(path);
  json j;
  if (path.extension() == ".toml") {
    try {
      std::ostringstream as_json;
      as_json << toml::json_formatter{toml::parse(text, path.string())};
      j = json::parse(as_json.str());
    } catch (const toml::parse_error& e) {
      throw ParseError(path.string(), static_cast<std::size_t>(e.source().begin.line),
                       std::string(e.description()));
    }
  } else {
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string(), 0, e.what());
    }
  }
  return experiment_config_from_json(j, std::move(base));
}

SimulatedInstance make_instance(const ExperimentConfig& config, std::uint64_t seed) {
  if (!config.edge_file) {
    return simulate(config.simulation, seed);
  }
  const ObservationalDataset base = load_dataset(*config.edge_file, *config.feature_file);
  SimulationSettings settings = config.simulation;
  settings.n_nodes = base.num_nodes();
  settings.d_x = base.features().dim();
  return simulate(base.network(), base.features(), draw_params(settings, seed));
}

std::vector<std::uint64_t> flip_seeds_for(std::uint64_t run_seed, std::size_t count) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < count; ++k) {
    seeds.push_back(run_seed * 1000003ULL + 7919ULL * (k + 1));
  }
  return seeds;
}

json summary_to_json(const EffectSummary& s) {
  return {{"pehe_me", s.pehe_me},
          {"pehe_pe", s.pehe_pe},
          {"pehe_te", s.pehe_te},
          {"mse", s.mse},
          {"n", s.n}};
}

// --- pipeline ----------------------------------------------------------------

RunResult run_single(const ExperimentConfig& config, std::size_t index,
                     const std::optional<std::filesystem::path>& run_dir) {
  RunResult result;
  result.index = index;
  result.seed = config.seed_base + index;

  const SimulatedInstance inst = make_instance(config, result.seed);
  const ObservationalDataset& ds = inst.dataset;
  const NodeSplit split = split_nodes(ds.network(), config.train_frac, result.seed);

  TrainConfig train = config.train;
  train.seed = result.seed;
  train.treatment_source = TreatmentSource::Instrumented;
  const StageOneModel stage1 = train_stage1(ds, split.train, train);
  const StageTwoModel stage2 = train_stage2(ds, split.train, stage1, inst.peer_weights, train);

  const EvalPairs pairs = evaluation_pairs(ds.network(), inst.peer_weights, ds.treatments());
  const GroundTruthEffects truth = ground_truth_effects(inst, pairs);
  const EffectReport within =
      estimate_effects(stage2, ds.features(), ds.network(), pairs, split.train, truth, "within");
  const EffectReport out =
      estimate_effects(stage2, ds.features(), ds.network(), pairs, split.test, truth, "out");
  result.within = *within.summary;
  result.out_of_sample = *out.summary;
  result.flip = run_flip_experiment(stage2, inst, config.flip_rates,
                                    flip_seeds_for(result.seed, config.flip_seeds), split.test);

  std::optional<EffectReport> ablation_within, ablation_out;
  if (config.compare_no_iv) {
    TrainConfig ablation = train;
    ablation.treatment_source = TreatmentSource::Observed;
    const StageTwoModel no_iv = train_stage2(ds, split.train, stage1, inst.peer_weights, ablation);
    ablation_within =
        estimate_effects(no_iv, ds.features(), ds.network(), pairs, split.train, truth, "within");
    ablation_out =
        estimate_effects(no_iv, ds.features(), ds.network(), pairs, split.test, truth, "out");
    result.no_iv_within = ablation_within->summary;
    result.no_iv_out_of_sample = ablation_out->summary;
  }
  result.ok = true;

  if (run_dir) {
    write_instance(*run_dir / "instance", inst);
    save_stage1(*run_dir / "checkpoints" / "stage1.json", stage1);
    save_stage2(*run_dir / "checkpoints" / "stage2.json", stage2);
    write_effect_report_csv(*run_dir / "effects_within.csv", within);
    write_effect_report_csv(*run_dir / "effects_out_of_sample.csv", out);
    write_flip_table_csv(*run_dir / "flip.csv", result.flip);
    if (ablation_within) {
      write_effect_report_csv(*run_dir / "no_iv_effects_within.csv", *ablation_within);
      write_effect_report_csv(*run_dir / "no_iv_effects_out_of_sample.csv", *ablation_out);
    }
    std::vector<double> train_nodes(split.train.begin(), split.train.end());
    std::vector<double> test_nodes(split.test.begin(), split.test.end());
    json run = {{"run", index},
                {"seed", result.seed},
                {"regime", config.regime()},
                {"status", "ok"},
                {"within", summary_to_json(result.within)},
                {"out_of_sample", summary_to_json(result.out_of_sample)},
                {"flip", flip_to_json(result.flip)},
                {"stage1", {{"epochs_run", stage1.log.epochs_run}, {"best_epoch", stage1.log.best_epoch}}},
                {"stage2", {{"epochs_run", stage2.log.epochs_run}, {"best_epoch", stage2.log.best_epoch}}},
                {"split", {{"train", split.train}, {"test", split.test}}}};
    if (result.no_iv_within) {
      run["no_iv"] = {{"within", summary_to_json(*result.no_iv_within)},
                      {"out_of_sample", summary_to_json(*result.no_iv_out_of_sample)}};
    }
    write_text_file(*run_dir / "summary.json", run.dump(2) + "\n");
  }
  return result;
}

PipelineResult run_pipeline(const ExperimentConfig& config,
                            const std::optional<std::filesystem::path>& output_dir) {
  config.validate();
  PipelineResult result;
  result.regime = config.regime();
  if (output_dir) {
    std::filesystem::create_directories(*output_dir);
    write_text_file(*output_dir / "config.json", experiment_config_to_json(config).dump(2) + "\n");
  }

  for (std::size_t r = 0; r < config.repetitions; ++r) {
    std::optional<std::filesystem::path> run_dir;
    if (output_dir) {
      run_dir = *output_dir / run_name(r);
    }
    try {
      result.runs.push_back(run_single(config, r, run_dir));
    } catch (const std::exception& e) {
      RunResult failed;
      failed.index = r;
      failed.seed = config.seed_base + r;
      failed.error = e.what();
      ++result.failures;
      if (run_dir) {
        const auto* err = dynamic_cast<const Error*>(&e);
        write_text_file(*run_dir / "error.json",
                        json{{"run", r},
                             {"seed", failed.seed},
                             {"status", "failed"},
                             {"kind", err ? err->kind() : "exception"},
                             {"message", failed.error}}
                                .dump(2) +
                            "\n");
      }
      result.runs.push_back(std::move(failed));
    }
  }

  // mean/std per metric across successful runs
  std::map<std::string, std::vector<double>> series;
  auto push = [&](const std::string& prefix, const EffectSummary& s) {
    series[prefix + ".pehe_me"].push_back(s.pehe_me);
    series[prefix + ".pehe_pe"].push_back(s.pehe_pe);
    series[prefix + ".pehe_te"].push_back(s.pehe_te);
    series[prefix + ".mse"].push_back(s.mse);
  };
  std::vector<double> idx, seed, ok, w_me, w_pe, w_te, w_mse, o_me, o_pe, o_te, o_mse;
  for (const auto& run : result.runs) {
    idx.push_back(static_cast<double>(run.index));
    seed.push_back(static_cast<double>(run.seed));
    ok.push_back(run.ok ? 1.0 : 0.0);
    w_me.push_back(run.ok ? run.within.pehe_me : std::nan(""));
    w_pe.push_back(run.ok ? run.within.pehe_pe : std::nan(""));
    w_te.push_back(run.ok ? run.within.pehe_te : std::nan(""));
    w_mse.push_back(run.ok ? run.within.mse : std::nan(""));
    o_me.push_back(run.ok ? run.out_of_sample.pehe_me : std::nan(""));
    o_pe.push_back(run.ok ? run.out_of_sample.pehe_pe : std::nan(""));
    o_te.push_back(run.ok ? run.out_of_sample.pehe_te : std::nan(""));
    o_mse.push_back(run.ok ? run.out_of_sample.mse : std::nan(""));
    if (!run.ok) {
      continue;
    }
    push("within", run.within);
    push("out_of_sample", run.out_of_sample);
    if (run.no_iv_within) {
      push("no_iv.within", *run.no_iv_within);
      push("no_iv.out_of_sample", *run.no_iv_out_of_sample);
    }
    for (const auto& row : run.flip) {
      series["flip." + format_double(row.flip_rate)].push_back(row.mse.mean);
    }
  }

  json metrics = json::object();
  for (const auto& [key, values] : series) {
    const MeanStd ms = mean_std(values);
    metrics[key] = {{"mean", ms.mean}, {"std", ms.std}, {"n", ms.n}};
  }
  result.summary = {{"regime", result.regime},
                    {"repetitions", config.repetitions},
                    {"failures", result.failures},
                    {"seed_base", config.seed_base},
                    {"metrics", metrics},
                    {"config", experiment_config_to_json(config)}};

  if (output_dir) {
    write_csv(*output_dir / "runs.csv",
              {"run", "seed", "ok", "within_pehe_me", "within_pehe_pe", "within_pehe_te",
               "within_mse", "out_pehe_me", "out_pehe_pe", "out_pehe_te", "out_mse"},
              {idx, seed, ok, w_me, w_pe, w_te, w_mse, o_me, o_pe, o_te, o_mse},
              {"run", "seed", "ok"});
    write_text_file(*output_dir / "summary.json", result.summary.dump(2) + "\n");
  }
  return result;
}

}  // namespace cgnn
