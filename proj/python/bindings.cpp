#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cgnn/experiment.hpp"
#include "cgnn/io.hpp"

namespace py = pybind11;
using namespace cgnn;
using nlohmann::json;

namespace {

// dicts cross the boundary as JSON text
json to_json(const py::object& obj) {
  if (obj.is_none()) return json::object();
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

py::object from_json(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<Edge> edges_from(const std::vector<std::pair<NodeId, NodeId>>& pairs) {
  std::vector<Edge> out;
  out.reserve(pairs.size());
  for (auto [u, v] : pairs) out.push_back({u, v});
  return out;
}

py::list edge_list(const Network& g) {
  py::list out;
  for (const Edge& e : g.edges()) out.append(py::make_tuple(e.u, e.v));
  return out;
}

Matrix dense_weights(const Network& g, const PeerWeights& w) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Matrix m = Matrix::Zero(n, n);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const auto nbrs = g.neighbors(i);
    const auto row = w.row(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) m(i, nbrs[k]) = row[k];
  }
  return m;
}

SimulationSettings settings_from(const py::object& obj) { return settings_from_json(to_json(obj)); }

// A trained estimator bundled with the instance it was fitted on.
struct Fit {
  SimulatedInstance instance;
  NodeSplit split;
  StageOneModel stage1;
  StageTwoModel stage2;

  EffectReport report(const std::vector<NodeId>& nodes, const std::string& label) const {
    const EvalPairs pairs = evaluation_pairs(instance.network(), instance.peer_weights,
                                             instance.dataset.treatments());
    return estimate_effects(stage2, instance.dataset.features(), instance.network(), pairs, nodes,
                            ground_truth_effects(instance, pairs), label);
  }
};

py::dict report_dict(const EffectReport& r) {
  py::dict d;
  d["nodes"] = r.nodes;
  d["me"] = r.me_hat;
  d["pe"] = r.pe_hat;
  d["te"] = r.te_hat;
  if (r.summary) d["summary"] = from_json(summary_to_json(*r.summary));
  return d;
}

}  // namespace

PYBIND11_MODULE(_cgnn, m) {
  m.doc() = "Two-stage graph-attention IV estimator for networked treatment effects";

  py::register_exception<Error>(m, "CgnnError", PyExc_RuntimeError);

  m.def("feature_distributions",
        [](const Matrix& x, double smoothing) { return feature_distributions(FeatureMatrix(x), smoothing); },
        py::arg("features"), py::arg("smoothing") = kDefaultSmoothing);
  m.def("kl_divergence", [](const std::vector<double>& p, const std::vector<double>& q) {
    return kl_divergence(p, q);
  });
  m.def("peer_weight", [](const std::vector<double>& p, const std::vector<double>& q) {
    return peer_weight(p, q);
  });
  m.def(
      "peer_weights",
      [](std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges, const Matrix& x, double smoothing) {
        const Network g(n, edges_from(edges));
        return dense_weights(g, compute_peer_weights(g, FeatureMatrix(x), smoothing));
      },
      py::arg("n_nodes"), py::arg("edges"), py::arg("features"), py::arg("smoothing") = kDefaultSmoothing,
      "Dense n x n matrix of w_ij (zero off the edge set).");
  m.def(
      "exposure",
      [](std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges, const Matrix& x, const Vector& t) {
        const Network g(n, edges_from(edges));
        return exposure(g, compute_peer_weights(g, FeatureMatrix(x)), t);
      },
      py::arg("n_nodes"), py::arg("edges"), py::arg("features"), py::arg("treatments"));

  m.def("pehe", [](const std::vector<double>& a, const std::vector<double>& b) {
    return pehe(a, b, EffectKind::Main).value;
  });
  m.def("mse", [](const std::vector<double>& a, const std::vector<double>& b) { return mse(a, b).value; });
  m.def("random_network", &generate_random_network, py::arg("n_nodes"), py::arg("edge_prob"), py::arg("seed"));

  py::class_<Network>(m, "Network")
      .def(py::init([](std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
             return Network(n, edges_from(edges));
           }),
           py::arg("n_nodes"), py::arg("edges"))
      .def_property_readonly("num_nodes", &Network::num_nodes)
      .def_property_readonly("num_edges", &Network::num_edges)
      .def_property_readonly("edges", &edge_list)
      .def("neighbors", [](const Network& g, NodeId i) {
        const auto s = g.neighbors(i);
        return std::vector<NodeId>(s.begin(), s.end());
      });

  py::class_<SimulatedInstance>(m, "Instance")
      .def_property_readonly("num_nodes", &SimulatedInstance::num_nodes)
      .def_property_readonly("network", &SimulatedInstance::network, py::return_value_policy::reference_internal)
      .def_property_readonly("features", [](const SimulatedInstance& s) { return s.dataset.features().values(); })
      .def_property_readonly("treatments", [](const SimulatedInstance& s) { return s.dataset.treatments(); })
      .def_property_readonly("outcomes", [](const SimulatedInstance& s) { return s.dataset.outcomes(); })
      .def_property_readonly("confounders", [](const SimulatedInstance& s) { return s.confounders; })
      .def_property_readonly("propensities", [](const SimulatedInstance& s) { return s.propensities; })
      .def_property_readonly("exposure", &SimulatedInstance::observed_exposure)
      .def_property_readonly("beta", [](const SimulatedInstance& s) { return s.params.beta; })
      .def_property_readonly("peer_weights",
                             [](const SimulatedInstance& s) { return dense_weights(s.network(), s.peer_weights); })
      .def("ground_truth",
           [](const SimulatedInstance& s) {
             const EvalPairs pairs = evaluation_pairs(s.network(), s.peer_weights, s.dataset.treatments());
             const GroundTruthEffects g = ground_truth_effects(s, pairs);
             py::dict d;
             d["me"] = g.me;
             d["pe"] = g.pe;
             d["te"] = g.te;
             d["z_obs"] = g.z_obs;
             return d;
           })
      .def(
          "oracle_outcome",
          [](const SimulatedInstance& s, const Vector& t, const Vector& z, bool noise) {
            return oracle_outcome(s, t, z, noise);
          },
          py::arg("t"), py::arg("z"), py::arg("include_noise") = false)
      .def("save", [](const SimulatedInstance& s, const std::filesystem::path& dir) { write_instance(dir, s); });

  m.def(
      "simulate",
      [](std::uint64_t seed, const py::object& settings) { return simulate(settings_from(settings), seed); },
      py::arg("seed") = 0, py::arg("settings") = py::none(),
      "Synthetic instance. `settings` is a dict of simulation fields (n_nodes, edge_prob, "
      "hidden_confounding, ...).");
  m.def("load_instance", &load_instance, py::arg("directory"));

  py::class_<Fit>(m, "Fit")
      .def_property_readonly("train_nodes", [](const Fit& f) { return f.split.train; })
      .def_property_readonly("test_nodes", [](const Fit& f) { return f.split.test; })
      .def_property_readonly("propensities", [](const Fit& f) { return f.stage2.training_inputs.treatment; })
      .def_property_readonly("stage1_loss", [](const Fit& f) { return f.stage1.log.loss; })
      .def_property_readonly("stage2_loss", [](const Fit& f) { return f.stage2.log.loss; })
      .def("predict",
           [](const Fit& f, const Vector& t, const Vector& z) {
             return predict_counterfactual(f.stage2, f.instance.dataset.features(), f.instance.network(), t, z);
           })
      .def("effects", [](const Fit& f, bool out_of_sample) {
        return report_dict(out_of_sample ? f.report(f.split.test, "out_of_sample")
                                         : f.report(f.split.train, "within"));
      }, py::arg("out_of_sample") = false);

  m.def(
      "fit",
      [](const SimulatedInstance& inst, double train_frac, std::uint64_t seed, const py::object& train) {
        TrainConfig cfg = train_config_from_json(to_json(train));
        cfg.seed = seed;
        py::gil_scoped_release release;
        Fit f{inst, split_nodes(inst.network(), train_frac, seed), {}, {}};
        f.stage1 = train_stage1(inst.dataset, f.split.train, cfg);
        f.stage2 = train_stage2(inst.dataset, f.split.train, f.stage1, inst.peer_weights, cfg);
        return f;
      },
      py::arg("instance"), py::arg("train_frac") = 0.8, py::arg("seed") = 0, py::arg("train") = py::none(),
      "Trains both stages. `train` is a dict of training fields (epochs, hidden, head, ...).");

  m.def(
      "run_pipeline",
      [](const py::object& config, const std::optional<std::filesystem::path>& out) {
        const ExperimentConfig cfg = experiment_config_from_json(to_json(config));
        PipelineResult r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(cfg, out);
        }
        return from_json(r.summary);
      },
      py::arg("config") = py::none(), py::arg("out") = py::none(),
      "Repeated simulate/train/evaluate runs; returns the aggregate summary.");
}
