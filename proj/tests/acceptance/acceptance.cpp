// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cgnn/experiment.hpp"
#include "cgnn/io.hpp"
#include "gradcheck.hpp"

using namespace cgnn;
namespace fs = std::filesystem;

namespace {

// Tolerances
constexpr double kGradStep = 1e-5;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradSeconds = 10.0;
constexpr double kSoftmaxTol = 1e-9;
constexpr double kMetricTol = 1e-12;
constexpr double kCleanPeheMax = 0.1;
constexpr double kRunSecondsMax = 300.0;
constexpr int kSeeds = 5;
constexpr int kMinWins = 4;
// 1 / (1 + KL) with KL = 0.5 ln 2 + 0.5 ln(2/3), summed by hand
constexpr double kWeightExample = 0.874247;
constexpr double kWeightTol = 1e-5;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass{false};
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- 1 ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  const Network g(8, {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {1, 6}});
  SimulationSettings s;
  s.n_nodes = 8;
  s.d_x = 4;
  Rng rng = make_rng(1, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(8, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  const SimulatedInstance inst = simulate(g, FeatureMatrix(x), draw_params(s, 1));
  const Matrix scaled = FeatureScaler::fit(inst.dataset.features().values())
                            .transform(inst.dataset.features().values());
  const nn::AttentionGraph graph(g);
  const std::vector<NodeId> rows{0, 1, 2, 3, 4, 5, 6, 7};
  const Vector& t = inst.dataset.treatments();
  const Vector& y = inst.dataset.outcomes();
  const Vector z = inst.observed_exposure();

  TrainConfig cfg;
  cfg.hidden = 3;
  cfg.head_hidden = 3;
  cfg.lambda = 1e-2;
  cfg.seed = 3;

  auto penalised = [&](nn::Var loss, const std::vector<nn::Parameter*>& params, nn::Tape& tape) {
    for (auto* p : params) {
      if (p->regularized) loss = nn::add(loss, nn::scale(nn::sum_squares(tape.parameter(*p)), cfg.lambda));
    }
    return loss;
  };

  double worst = 0.0;
  std::string worst_name;
  std::size_t entries = 0;
  std::vector<std::string> classes;
  auto absorb = [&](const testing::GradCheck& r, const std::vector<nn::Parameter*>& params) {
    entries += r.entries;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_name = r.worst_param;
    }
    for (auto* p : params) classes.push_back(p->name);
  };

  StageOneModel s1(4, cfg);
  s1.head.bias.value(0, 0) = 0.2;
  auto p1 = s1.parameters();
  absorb(testing::check_gradients(
             p1,
             [&](nn::Tape& tape) {
               return penalised(nn::masked_mse(s1.forward(tape, scaled, graph, nullptr), t, rows), p1, tape);
             },
             kGradStep),
         p1);

  for (OutcomeHead head : {OutcomeHead::Mlp, OutcomeHead::Linear}) {
    TrainConfig c2 = cfg;
    c2.head = head;
    StageTwoModel s2(4, c2);
    auto p2 = s2.parameters();
    for (auto* p : p2) {
      if (!p->regularized) p->value.setConstant(0.1);
    }
    const Vector t_hat = s1.predict(inst.dataset.features(), g);
    absorb(testing::check_gradients(
               p2,
               [&](nn::Tape& tape) {
                 return penalised(
                     nn::masked_mse(s2.forward(tape, scaled, graph, t_hat, z, nullptr), y, rows), p2, tape);
               },
               kGradStep),
           p2);
  }
  const double secs = seconds_since(t0);
  return {worst < kGradRelTol && secs < kGradSeconds,
          fmt("max rel err %.2e at %s over %zu entries in %zu tensors (< %.0e), %.2f s (< %.0f s)", worst,
              worst_name.c_str(), entries, classes.size(), kGradRelTol, secs, kGradSeconds)};
}

// --- 2 ---------------------------------------------------------------------------

Outcome attention_validity() {
  SimulationSettings s;
  s.n_nodes = 300;
  const SimulatedInstance inst = simulate(s, 2);
  const NodeSplit split = split_nodes(inst.network(), 0.8, 2);
  TrainConfig cfg;
  cfg.seed = 2;
  cfg.patience = 0;  // every epoch of the budget
  const StageOneModel s1 = train_stage1(inst.dataset, split.train, cfg);
  const StageTwoModel s2 = train_stage2(inst.dataset, split.train, s1, inst.peer_weights, cfg);
  const double worst = std::max(s1.log.attention.max_row_sum_error, s2.log.attention.max_row_sum_error);
  const std::size_t rows = s1.log.attention.rows_checked + s2.log.attention.rows_checked;
  const std::size_t passes = s1.log.attention.passes + s2.log.attention.passes;
  const std::size_t expected_passes = 2 * cfg.layers * cfg.epochs;
  return {worst <= kSoftmaxTol && passes == expected_passes,
          fmt("max |row sum - 1| = %.2e (<= %.0e) over %zu rows, %zu layer passes", worst, kSoftmaxTol,
              rows, passes)};
}

// --- 3 ---------------------------------------------------------------------------

Outcome metric_oracles() {
  const std::vector<double> pred{0.5, 1.0}, zero{0.0, 0.0};
  const double pehe_err = std::abs(pehe(pred, zero, EffectKind::Main).value - std::sqrt(1.25 / 2.0));
  const std::vector<double> a{1, 2, 3}, b{1, 1, 1}, ones{1, 1};
  const double mse_err = std::abs(mse(a, b).value - 5.0 / 3.0);
  const double mse_err2 = std::abs(mse(ones, zero).value - 1.0);
  const std::vector<double> c{2.3, -0.7, 5.0}, d{2.0, -1.0, 4.7};
  const double const_err = std::abs(pehe(c, d, EffectKind::Main).value - 0.3);

  Rng rng = make_rng(3, 0);
  std::normal_distribution<double> normal(0.0, 10.0);
  std::uniform_int_distribution<int> len(1, 100);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(static_cast<std::size_t>(len(rng)));
    for (auto& v : x) v = normal(rng);
    if (pehe(x, x, EffectKind::Main).value != 0.0 || mse(x, x).value != 0.0) ++violations;
  }
  const double worst = std::max({pehe_err, mse_err, mse_err2, const_err});
  return {worst <= kMetricTol && violations == 0,
          fmt("max example error %.1e (<= %.0e); pehe(x,x)=mse(x,x)=0 violations %d/1000", worst,
              kMetricTol, violations)};
}

// --- 4 ---------------------------------------------------------------------------

Outcome simulator_fidelity() {
  const SimulationSettings s;  // mu 20, d_u 10, alpha (1, .5, .1), sigma_t .01, sigma_y .1
  const bool defaults = s.mu == 20.0 && s.d_u == 10 && s.alpha == std::array<double, 3>{1.0, 0.5, 0.1} &&
                        s.sigma_t == 0.01 && s.sigma_y == 0.1;
  int me_exact = 0, within_se = 0, reproducible = 0;
  double worst_z = 0.0;
  const fs::path tmp = fs::temp_directory_path() / ("cgnn_accept_sim_" + std::to_string(::getpid()));
  for (int seed = 0; seed < kSeeds; ++seed) {
    const SimulatedInstance inst = simulate(s, static_cast<std::uint64_t>(seed));
    const EvalPairs pairs = evaluation_pairs(inst.network(), inst.peer_weights, inst.dataset.treatments());
    const GroundTruthEffects g = ground_truth_effects(inst, pairs);
    me_exact += (g.me.array() == inst.params.beta[2]).all() ? 1 : 0;

    const double n = static_cast<double>(inst.num_nodes());
    const double se = std::sqrt((inst.propensities.array() * (1.0 - inst.propensities.array())).sum()) / n;
    const double zscore = std::abs(inst.dataset.treatments().mean() - inst.propensities.mean()) / se;
    worst_z = std::max(worst_z, zscore);
    within_se += zscore <= 3.0 ? 1 : 0;

    const SimulatedInstance again = simulate(s, static_cast<std::uint64_t>(seed));
    write_instance(tmp / "a", inst);
    write_instance(tmp / "b", again);
    bool same = again.dataset == inst.dataset && again.confounders == inst.confounders &&
                again.eps_y == inst.eps_y && again.peer_weights.values() == inst.peer_weights.values();
    for (const auto& entry : fs::directory_iterator(tmp / "a")) {
      same = same && slurp(entry.path()) == slurp(tmp / "b" / entry.path().filename());
    }
    reproducible += same ? 1 : 0;
  }
  fs::remove_all(tmp);
  return {defaults && me_exact == kSeeds && within_se == kSeeds && reproducible == kSeeds,
          fmt("defaults %s; ME == beta2 exactly %d/%d; treated fraction within 3 SE %d/%d (max z %.2f); "
              "bit-reproducible %d/%d",
              defaults ? "ok" : "WRONG", me_exact, kSeeds, within_se, kSeeds, worst_z, reproducible, kSeeds)};
}

// --- 5, 6, 7 -----------------------------------------------------------------------

struct RegimeRuns {
  std::vector<RunResult> runs;
  std::vector<double> seconds;
};

RegimeRuns run_regime(bool confounded) {
  ExperimentConfig c;
  c.simulation.n_nodes = 500;
  c.simulation.hidden_confounding = confounded;
  c.compare_no_iv = confounded;
  RegimeRuns out;
  for (int r = 0; r < kSeeds; ++r) {
    const auto t0 = Clock::now();
    out.runs.push_back(run_single(c, static_cast<std::size_t>(r), std::nullopt));
    out.seconds.push_back(seconds_since(t0));
  }
  return out;
}

Outcome clean_recovery(const RegimeRuns& clean) {
  int ok = 0;
  double worst = 0.0, slowest = 0.0;
  std::string per_seed;
  for (std::size_t r = 0; r < clean.runs.size(); ++r) {
    const auto& run = clean.runs[r];
    const double e = std::max(run.within.pehe_me, run.out_of_sample.pehe_me);
    worst = std::max(worst, e);
    slowest = std::max(slowest, clean.seconds[r]);
    ok += (e <= kCleanPeheMax && clean.seconds[r] < kRunSecondsMax) ? 1 : 0;
    per_seed += fmt("%s%.3f/%.3f", r ? " " : "", run.within.pehe_me, run.out_of_sample.pehe_me);
  }
  return {ok == kSeeds,
          fmt("PEHE(ME) within/out per seed [%s], worst %.3f (<= %.2f), %d/%d seeds ok, slowest run %.1f s "
              "(< %.0f s)",
              per_seed.c_str(), worst, kCleanPeheMax, ok, kSeeds, slowest, kRunSecondsMax)};
}

Outcome confounded_advantage(const RegimeRuns& confounded) {
  int wins_within = 0, wins_out = 0;
  std::string per_seed;
  for (std::size_t r = 0; r < confounded.runs.size(); ++r) {
    const auto& run = confounded.runs[r];
    wins_within += run.within.pehe_me < run.no_iv_within->pehe_me ? 1 : 0;
    wins_out += run.out_of_sample.pehe_me < run.no_iv_out_of_sample->pehe_me ? 1 : 0;
    per_seed += fmt("%s%.3f vs %.3f", r ? ", " : "", run.out_of_sample.pehe_me,
                    run.no_iv_out_of_sample->pehe_me);
  }
  return {wins_within >= kMinWins && wins_out >= kMinWins,
          fmt("CgNN beats no-IV on PEHE(ME) in %d/%d seeds within-sample, %d/%d out-of-sample (need >= %d); "
              "out-of-sample CgNN vs no-IV [%s]",
              wins_within, kSeeds, wins_out, kSeeds, kMinWins, per_seed.c_str())};
}

Outcome flip_trend(const RegimeRuns& confounded) {
  std::vector<double> low, high;
  for (const auto& run : confounded.runs) {
    for (const auto& row : run.flip) {
      if (row.flip_rate == 0.25) low.push_back(row.mse.mean);
      if (row.flip_rate == 1.0) high.push_back(row.mse.mean);
    }
  }
  const MeanStd a = mean_std(low), b = mean_std(high);
  return {a.n == kSeeds && b.n == kSeeds && b.mean > a.mean,
          fmt("mean MSE at flip rate 1.0 = %.4f (sd %.4f) vs 0.25 = %.4f (sd %.4f) over %zu seeds", b.mean, b.std,
              a.mean, a.std, b.n)};
}

// --- 8 ---------------------------------------------------------------------------

Outcome peer_weight_properties() {
  Rng rng = make_rng(8, 0);
  std::gamma_distribution<double> gamma(0.5, 1.0);
  std::uniform_int_distribution<int> dim(2, 16);
  int out_of_range = 0, identical_not_one = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    const int k = dim(rng);
    std::vector<double> p(k), q(k);
    double sp = 0.0, sq = 0.0;
    for (int i = 0; i < k; ++i) {
      p[i] = gamma(rng) + 1e-300;
      q[i] = gamma(rng) + 1e-300;
      sp += p[i];
      sq += q[i];
    }
    for (int i = 0; i < k; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const double w = peer_weight(p, q);
    out_of_range += (w > 0.0 && w <= 1.0) ? 0 : 1;
    identical_not_one += peer_weight(p, p) == 1.0 ? 0 : 1;
  }
  const std::vector<double> pi{0.5, 0.5}, pj{0.25, 0.75};
  const double example = peer_weight(pi, pj);
  const bool example_ok = std::abs(example - kWeightExample) < kWeightTol;
  return {out_of_range == 0 && identical_not_one == 0 && example_ok,
          fmt("out of (0,1]: %d/100000; identical pairs != 1: %d; example %.6f vs %.6f (tol %.0e)",
              out_of_range, identical_not_one, example, kWeightExample, kWeightTol)};
}

// --- 9 ---------------------------------------------------------------------------

Outcome iv_firewall() {
  SimulationSettings s;
  s.n_nodes = 150;
  const SimulatedInstance inst = simulate(s, 9);
  const auto& ds = inst.dataset;
  const NodeSplit split = split_nodes(ds.network(), 0.8, 9);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.seed = 9;
  const StageOneModel s1 = train_stage1(ds, split.train, cfg);

  auto same_model = [](const StageTwoModel& a, const StageTwoModel& b) {
    const auto pa = a.parameters(), pb = b.parameters();
    for (std::size_t k = 0; k < pa.size(); ++k) {
      if (!(pa[k]->value == pb[k]->value)) return false;
    }
    return a.log.loss == b.log.loss;
  };

  // (a) every observed treatment inverted: stage 2 must be bit-identical
  const ObservationalDataset other_t =
      ds.with_observations((1.0 - ds.treatments().array()).matrix(), ds.outcomes());
  // (b) outcomes of nodes outside the training set replaced: they may reach
  // stage 2 only through a forward input, so the model must not change
  Vector y = ds.outcomes();
  for (NodeId i : split.test) y[i] = 1e3;
  const ObservationalDataset other_y = ds.with_observations(ds.treatments(), y);

  const StageTwoModel base = train_stage2(ds, split.train, s1, inst.peer_weights, cfg);
  const bool t_blind = same_model(base, train_stage2(other_t, split.train, s1, inst.peer_weights, cfg));
  const bool y_blind = same_model(base, train_stage2(other_y, split.train, s1, inst.peer_weights, cfg));

  // (c) the recorded forward signals are exactly stage-1 output and its exposure
  const StageTwoInputs iv = instrumented_inputs(s1, ds.features(), ds.network(), inst.peer_weights);
  const bool signals = base.training_inputs.treatment == iv.treatment &&
                       base.training_inputs.exposure == iv.exposure;

  // (d) the ablation is a distinct path: it does read observed T
  TrainConfig ablation = cfg;
  ablation.treatment_source = TreatmentSource::Observed;
  const bool ablation_differs =
      !same_model(train_stage2(ds, split.train, s1, inst.peer_weights, ablation),
                  train_stage2(other_t, split.train, s1, inst.peer_weights, ablation));

  return {t_blind && y_blind && signals && ablation_differs,
          fmt("stage 2 invariant to observed T: %s; to non-training Y: %s; inputs == (T_hat, z_hat): %s; "
              "no-IV ablation reads T: %s",
              t_blind ? "yes" : "NO", y_blind ? "yes" : "NO", signals ? "yes" : "NO",
              ablation_differs ? "yes" : "NO")};
}

// --- 10 --------------------------------------------------------------------------

Outcome end_to_end_reproducibility() {
#ifndef CGNN_CLI_PATH
  return {false, "command-line tool not built"};
#else
  const fs::path tmp = fs::temp_directory_path() / ("cgnn_accept_repro_" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  {
    std::ofstream(tmp / "config.json") << R"({"experiment": {"repetitions": 2, "compare_no_iv": true},
                                               "simulation": {"n_nodes": 300}})";
  }
  for (const char* name : {"a", "b"}) {
    const std::string cmd = std::string("\"") + CGNN_CLI_PATH + "\" --seed 17 --config \"" +
                            (tmp / "config.json").string() + "\" --out \"" + (tmp / name).string() +
                            "\" pipeline > \"" + (tmp / (std::string(name) + ".log")).string() + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      return {false, "pipeline run failed: " + slurp(tmp / (std::string(name) + ".log"))};
    }
  }
  std::size_t compared = 0, csv = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(tmp / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), tmp / "a");
    ++compared;
    csv += rel.extension() == ".csv" ? 1 : 0;
    if (!fs::exists(tmp / "b" / rel) || slurp(entry.path()) != slurp(tmp / "b" / rel)) ++differing;
  }
  std::size_t in_b = 0;
  for (const auto& entry : fs::recursive_directory_iterator(tmp / "b")) in_b += entry.is_regular_file() ? 1 : 0;
  fs::remove_all(tmp);
  return {differing == 0 && compared == in_b && csv > 0,
          fmt("%zu files (%zu CSV) compared across two CLI pipeline runs, %zu differ", compared, csv, differing)};
#endif
}

}  // namespace

int main() {
  std::printf("cgnn acceptance suite\n");
  report(1, "gradient correctness", gradient_correctness);
  report(2, "attention validity", attention_validity);
  report(3, "metric oracles", metric_oracles);
  report(4, "simulator fidelity", simulator_fidelity);

  RegimeRuns clean, confounded;
  try {
    clean = run_regime(false);
    confounded = run_regime(true);
  } catch (const std::exception& e) {
    std::printf("regime runs failed: %s\n", e.what());
  }
  report(5, "clean-regime recovery", [&] { return clean_recovery(clean); });
  report(6, "confounded-regime advantage", [&] { return confounded_advantage(confounded); });
  report(7, "flip-rate trend", [&] { return flip_trend(confounded); });

  report(8, "peer-weight properties", peer_weight_properties);
  report(9, "IV firewall", iv_firewall);
  report(10, "end-to-end reproducibility", end_to_end_reproducibility);

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
