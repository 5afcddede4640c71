// Python bindings for the core library.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "interpole/serialize.hpp"

namespace py = pybind11;
using namespace interpole;

namespace {

using Nested3 = std::vector<std::vector<std::vector<double>>>;

Tensor3 tensor_from_nested(const Nested3& v, const char* what) {
  if (v.empty() || v[0].empty() || v[0][0].empty())
    throw std::invalid_argument(std::string(what) + ": empty tensor");
  Tensor3 t(static_cast<int>(v.size()), static_cast<int>(v[0].size()),
            static_cast<int>(v[0][0].size()));
  for (int i = 0; i < t.dim0(); ++i)
    for (int j = 0; j < t.dim1(); ++j) {
      if (static_cast<int>(v[i].size()) != t.dim1() ||
          static_cast<int>(v[i][j].size()) != t.dim2())
        throw std::invalid_argument(std::string(what) + ": ragged tensor");
      for (int k = 0; k < t.dim2(); ++k) t(i, j, k) = v[i][j][k];
    }
  return t;
}

Nested3 tensor_to_nested(const Tensor3& t) {
  Nested3 v(t.dim0(), std::vector<std::vector<double>>(t.dim1(), std::vector<double>(t.dim2())));
  for (int i = 0; i < t.dim0(); ++i)
    for (int j = 0; j < t.dim1(); ++j)
      for (int k = 0; k < t.dim2(); ++k) v[i][j][k] = t(i, j, k);
  return v;
}

}  // namespace

PYBIND11_MODULE(_interpole, m) {
  m.doc() = "Interpretable policy learning: belief dynamics and decision boundaries";

  py::register_exception<ZeroLikelihood>(m, "ZeroLikelihoodError");
  py::register_exception<NonFiniteValue>(m, "NonFiniteValueError");
  py::register_exception<UnknownEnvironment>(m, "UnknownEnvironmentError");
  py::register_exception<UnsupportedDimension>(m, "UnsupportedDimensionError");

  py::class_<Spaces>(m, "Spaces")
      .def(py::init<int, int, int>(), py::arg("n_states"), py::arg("n_actions"),
           py::arg("n_observations"))
      .def_readwrite("n_states", &Spaces::n_states)
      .def_readwrite("n_actions", &Spaces::n_actions)
      .def_readwrite("n_observations", &Spaces::n_observations)
      .def_readwrite("state_labels", &Spaces::state_labels)
      .def_readwrite("action_labels", &Spaces::action_labels)
      .def_readwrite("observation_labels", &Spaces::observation_labels)
      .def("validate", &Spaces::validate);

  py::class_<Belief>(m, "Belief")
      .def(py::init<Eigen::VectorXd>(), py::arg("probs"))
      .def_static("uniform", &Belief::uniform)
      .def_static("point_mass", &Belief::point_mass)
      .def_property_readonly("probs", &Belief::vec)
      .def("__len__", &Belief::size)
      .def("__getitem__", [](const Belief& b, int i) { return b[i]; });

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", &Rng::uniform)
      .def("normal", &Rng::normal);

  py::class_<IohmmParams>(m, "IohmmParams")
      .def(py::init([](const Nested3& t, const Nested3& o, const Belief& b1) {
             return IohmmParams(tensor_from_nested(t, "transition"),
                                tensor_from_nested(o, "observation"), b1);
           }),
           py::arg("transition"), py::arg("observation"), py::arg("initial"))
      .def_property_readonly("transition",
                             [](const IohmmParams& p) { return tensor_to_nested(p.transition); })
      .def_property_readonly("observation",
                             [](const IohmmParams& p) { return tensor_to_nested(p.observation); })
      .def_property_readonly("initial", [](const IohmmParams& p) { return p.initial; })
      .def_property_readonly("n_states", &IohmmParams::n_states)
      .def_property_readonly("n_actions", &IohmmParams::n_actions)
      .def_property_readonly("n_observations", &IohmmParams::n_observations);

  m.def("belief_update", &belief_update, py::arg("belief"), py::arg("action"),
        py::arg("observation"), py::arg("params"));
  m.def("observation_likelihood", &observation_likelihood);
  m.def(
      "belief_trajectory",
      [](const Trajectory& traj, const IohmmParams& params, const StopSet& stops) {
        const BeliefTrajectory bt = belief_trajectory(traj, params, stops);
        return py::make_tuple(bt.beliefs, bt.log_increments);
      },
      py::arg("trajectory"), py::arg("params"), py::arg("stop_actions") = StopSet{});
  m.def("sample_step", &sample_step, py::arg("state"), py::arg("action"), py::arg("params"),
        py::arg("rng"));

  py::class_<BoundaryPolicy>(m, "BoundaryPolicy")
      .def(py::init<double, std::vector<Eigen::VectorXd>>(), py::arg("eta"), py::arg("means"))
      .def_readwrite("eta", &BoundaryPolicy::eta)
      .def_readwrite("means", &BoundaryPolicy::means);

  m.def("action_distribution",
        [](const Belief& b, const BoundaryPolicy& pol) { return action_distribution(b, pol).probs; });
  m.def("log_prob", &log_prob, py::arg("belief"), py::arg("action"), py::arg("policy"));
  m.def("modal_action", &modal_action);
  m.def("decision_boundary", [](const BoundaryPolicy& pol, int a1, int a2) {
    const DecisionBoundary hp = decision_boundary(pol, a1, a2);
    py::dict d;
    d["degenerate"] = hp.degenerate;
    if (!hp.degenerate) {
      d["normal"] = hp.normal;
      d["offset"] = hp.offset;
    }
    return d;
  });
  m.def("boundary_crossing_2state", &boundary_crossing_2state);

  py::class_<Trajectory>(m, "Trajectory")
      .def(py::init([](const std::vector<std::pair<int, int>>& steps,
                       const std::map<std::string, std::string>& tags) {
             Trajectory t;
             t.steps = steps;
             t.tags = tags;
             return t;
           }),
           py::arg("steps"), py::arg("tags") = std::map<std::string, std::string>{})
      .def_readwrite("steps", &Trajectory::steps)
      .def_readwrite("tags", &Trajectory::tags)
      .def("__len__", &Trajectory::length);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const Spaces& spaces, const std::vector<Trajectory>& trajectories,
                       const StopSet& stops) {
             Dataset d;
             d.spaces = spaces;
             d.trajectories = trajectories;
             d.stop_actions = stops;
             d.normalize_stop_actions();
             d.validate();
             return d;
           }),
           py::arg("spaces"), py::arg("trajectories"), py::arg("stop_actions") = StopSet{})
      .def_readwrite("spaces", &Dataset::spaces)
      .def_readwrite("trajectories", &Dataset::trajectories)
      .def_readwrite("stop_actions", &Dataset::stop_actions)
      .def("__len__", &Dataset::size);

  py::class_<Posteriors>(m, "Posteriors")
      .def_readonly("gamma", &Posteriors::gamma)
      .def_readonly("xi", &Posteriors::xi)
      .def_readonly("log_likelihood", &Posteriors::log_likelihood);
  m.def("smooth", &smooth, py::arg("trajectory"), py::arg("params"),
        py::arg("stop_actions") = StopSet{});

  py::class_<FreezeMask>(m, "FreezeMask")
      .def(py::init<>())
      .def_readwrite("transition", &FreezeMask::transition)
      .def_readwrite("observation", &FreezeMask::observation)
      .def_readwrite("initial", &FreezeMask::initial)
      .def_readwrite("eta", &FreezeMask::eta)
      .def_readwrite("means", &FreezeMask::means);

  py::class_<ThetaEstimate>(m, "ThetaEstimate")
      .def(py::init<IohmmParams, BoundaryPolicy, FreezeMask>(), py::arg("params"),
           py::arg("policy"), py::arg("frozen") = FreezeMask{})
      .def_readwrite("params", &ThetaEstimate::params)
      .def_readwrite("policy", &ThetaEstimate::policy)
      .def_readwrite("frozen", &ThetaEstimate::frozen);

  py::class_<Prior>(m, "Prior")
      .def(py::init<>())
      .def_readwrite("dirichlet_transition", &Prior::dirichlet_transition)
      .def_readwrite("dirichlet_observation", &Prior::dirichlet_observation)
      .def_readwrite("dirichlet_initial", &Prior::dirichlet_initial)
      .def_readwrite("eta_log_normal", &Prior::eta_log_normal)
      .def_readwrite("means_normal_sd", &Prior::means_normal_sd);

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &FitConfig::learning_rate)
      .def_readwrite("max_iterations", &FitConfig::max_iterations)
      .def_readwrite("patience", &FitConfig::patience)
      .def_readwrite("seed", &FitConfig::seed)
      .def_readwrite("improvement_tolerance", &FitConfig::improvement_tolerance)
      .def_readwrite("workers", &FitConfig::workers);

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("estimate", &FitReport::estimate)
      .def_readonly("log_posterior_trace", &FitReport::log_posterior_trace)
      .def_readonly("iterations_run", &FitReport::iterations_run)
      .def_readonly("converged", &FitReport::converged)
      .def_readonly("seed", &FitReport::seed);

  py::class_<KnownValues>(m, "KnownValues")
      .def(py::init<>())
      .def("set_transition",
           [](KnownValues& k, const Nested3& t) {
             k.transition = tensor_from_nested(t, "transition");
           })
      .def("set_observation",
           [](KnownValues& k, const Nested3& o) {
             k.observation = tensor_from_nested(o, "observation");
           })
      .def("set_initial", [](KnownValues& k, const Eigen::VectorXd& b) { k.initial = b; })
      .def("set_eta", [](KnownValues& k, double eta) { k.eta = eta; })
      .def("set_means",
           [](KnownValues& k, const std::vector<Eigen::VectorXd>& mu) { k.means = mu; });

  m.def("init_random", &init_random, py::arg("spaces"), py::arg("seed"), py::arg("freeze"),
        py::arg("known") = KnownValues{});
  m.def("log_posterior", &log_posterior, py::arg("theta"), py::arg("data"), py::arg("prior"));
  m.def("fit", &fit, py::arg("data"), py::arg("init"), py::arg("prior"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("two_stage_fit", &two_stage_fit, py::arg("data"), py::arg("init"), py::arg("prior"),
        py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("permute_states", &permute_states);

  py::class_<EnvironmentSpec>(m, "EnvironmentSpec")
      .def_readwrite("spaces", &EnvironmentSpec::spaces)
      .def_readwrite("true_params", &EnvironmentSpec::true_params)
      .def_readwrite("agent_params", &EnvironmentSpec::agent_params)
      .def_readwrite("behavior", &EnvironmentSpec::behavior)
      .def_readwrite("stop_actions", &EnvironmentSpec::stop_actions)
      .def_readwrite("max_horizon", &EnvironmentSpec::max_horizon);

  py::class_<GroundTruthTrajectory>(m, "GroundTruthTrajectory")
      .def_readonly("states", &GroundTruthTrajectory::states)
      .def_readonly("beliefs", &GroundTruthTrajectory::beliefs)
      .def_readonly("action_dists", &GroundTruthTrajectory::action_dists);
  py::class_<GroundTruth>(m, "GroundTruth")
      .def_readonly("trajectories", &GroundTruth::trajectories);

  m.def("make_diag", &make_diag);
  m.def("make_bias", &make_bias);
  m.def("make_adni_like", &make_adni_like, py::arg("seed"));
  m.def("make_decision_tree_example", &make_decision_tree_example);
  m.def("make_environment", &make_environment, py::arg("name"), py::arg("seed") = 0);
  m.def("generate_dataset", &generate_dataset, py::arg("env"), py::arg("n"), py::arg("seed"));

  py::class_<EvalOptions>(m, "EvalOptions")
      .def(py::init<>())
      .def_readwrite("positive_action", &EvalOptions::positive_action)
      .def_readwrite("horizon_cap", &EvalOptions::horizon_cap)
      .def_readwrite("align_states", &EvalOptions::align_states);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("belief_mismatch", &EvalReport::belief_mismatch)
      .def_readonly("policy_mismatch", &EvalReport::policy_mismatch)
      .def_readonly("stopping_time_error", &EvalReport::stopping_time_error)
      .def_readonly("brier", &EvalReport::brier)
      .def_readonly("auroc", &EvalReport::auroc)
      .def_readonly("auprc", &EvalReport::auprc);

  m.def("kl_divergence", &kl_divergence);
  m.def(
      "evaluate",
      [](const Dataset& data, const ThetaEstimate& model, const GroundTruth* truth,
         const EvalOptions& options) { return evaluate(data, model, truth, options); },
      py::arg("data"), py::arg("model"), py::arg("truth") = nullptr,
      py::arg("options") = EvalOptions{});
  m.def("best_state_alignment", &best_state_alignment);

  py::class_<AuditCriteria>(m, "AuditCriteria")
      .def(py::init<>())
      .def_readwrite("boundary_confidence", &AuditCriteria::boundary_confidence)
      .def_readwrite("informativeness_fraction", &AuditCriteria::informativeness_fraction)
      .def_readwrite("test_action", &AuditCriteria::test_action);

  py::class_<CounterfactualOutcome>(m, "CounterfactualOutcome")
      .def_readonly("observation", &CounterfactualOutcome::observation)
      .def_readonly("posterior", &CounterfactualOutcome::posterior)
      .def_readonly("probability", &CounterfactualOutcome::probability);
  m.def("counterfactual_updates", &counterfactual_updates, py::arg("belief"), py::arg("action"),
        py::arg("params"));

  py::class_<BelatedEvidence>(m, "BelatedEvidence")
      .def_readonly("belated", &BelatedEvidence::belated)
      .def_readonly("skipped_steps", &BelatedEvidence::skipped_steps)
      .def_readonly("certain_step", &BelatedEvidence::certain_step);

  py::class_<AuditStats>(m, "AuditStats")
      .def_readonly("mean_factual_change", &AuditStats::mean_factual_change)
      .def_readonly("sd_factual_change", &AuditStats::sd_factual_change)
      .def_readonly("n_test_steps", &AuditStats::n_test_steps)
      .def_readonly("active", &AuditStats::active);

  py::class_<AuditTrajectoryResult>(m, "AuditTrajectoryResult")
      .def_readonly("belated", &AuditTrajectoryResult::belated)
      .def_readonly("uninformative_steps", &AuditTrajectoryResult::uninformative_steps)
      .def_readonly("n_test_steps", &AuditTrajectoryResult::n_test_steps);

  py::class_<CohortRow>(m, "CohortRow")
      .def_readonly("name", &CohortRow::name)
      .def_readonly("n_trajectories", &CohortRow::n_trajectories)
      .def_readonly("n_belated", &CohortRow::n_belated)
      .def_readonly("belated_rate", &CohortRow::belated_rate)
      .def_readonly("n_test_steps", &CohortRow::n_test_steps)
      .def_readonly("n_uninformative", &CohortRow::n_uninformative)
      .def_readonly("uninformative_rate", &CohortRow::uninformative_rate);

  py::class_<AuditReport>(m, "AuditReport")
      .def_readonly("per_trajectory", &AuditReport::per_trajectory)
      .def_readonly("stats", &AuditReport::stats)
      .def_readonly("cohorts", &AuditReport::cohorts);

  m.def("detect_belated", &detect_belated, py::arg("trajectory"), py::arg("model"),
        py::arg("criteria"), py::arg("stop_actions") = StopSet{});
  m.def("compute_audit_stats", &compute_audit_stats);
  m.def(
      "audit_dataset",
      [](const Dataset& data, const ThetaEstimate& model, const AuditCriteria& criteria,
         const std::vector<std::pair<std::string, std::function<bool(const Trajectory&)>>>&
             cohorts) { return audit_dataset(data, model, criteria, cohorts); },
      py::arg("data"), py::arg("model"), py::arg("criteria"),
      py::arg("cohorts") = std::vector<CohortPredicate>{});

  m.def("save_dataset", &save_dataset, py::arg("path"), py::arg("data"));
  m.def("load_dataset", &load_dataset, py::arg("path"), py::arg("max_trajectory_length") = 1000);
  m.def("save_ground_truth", &save_ground_truth);
  m.def("load_ground_truth", &load_ground_truth);
  m.def("save_model", [](const std::string& path, const FitReport& report) {
    save_json_file(path, fit_report_to_json(report));
  });
  m.def("load_model",
        [](const std::string& path) { return theta_from_json(load_json_file(path)); });
  m.def("model_to_json_string",
        [](const ThetaEstimate& theta) { return theta_to_json(theta).dump(2); });
}
