// Command-line front end: simulate | train | evaluate | audit | export-plot.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "interpole/serialize.hpp"

namespace {

using namespace interpole;

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag_seed) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("INTERPOLE_SEED")) return std::strtoull(env, nullptr, 10);
  return 0;
}

class ManifestWriter {
 public:
  ManifestWriter(std::string command, json options, std::uint64_t seed)
      : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["options"] = std::move(options);
    j_["seed"] = seed;
    j_["inputs"] = json::object();
    j_["outputs"] = json::object();
  }

  void add_input(const std::string& path) { j_["inputs"][path] = file_checksum(path); }
  void add_output(const std::string& path) { j_["outputs"][path] = file_checksum(path); }

  void finish(const std::string& path) {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    j_["wall_clock_seconds"] =
        std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
    save_json_file(path, j_);
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

FreezeMask parse_freeze(const std::vector<std::string>& names) {
  FreezeMask mask;
  for (const std::string& n : names) {
    if (n == "T" || n == "transition")
      mask.transition = true;
    else if (n == "O" || n == "observation")
      mask.observation = true;
    else if (n == "b1" || n == "initial")
      mask.initial = true;
    else if (n == "eta")
      mask.eta = true;
    else if (n == "means" || n == "mu")
      mask.means = true;
    else
      throw CLI::ValidationError("--freeze", "unknown block: " + n);
  }
  return mask;
}

int run_simulate(const std::string& env_name, const std::string& env_file, int n,
                 std::uint64_t seed, const std::string& out, std::string truth_path,
                 std::string truth_model_path, std::string manifest_path) {
  if (truth_path.empty()) truth_path = out + ".truth.jsonl";
  if (truth_model_path.empty()) truth_model_path = out + ".truth-model.json";
  if (manifest_path.empty()) manifest_path = out + ".manifest.json";

  EnvironmentSpec env = env_file.empty() ? make_environment(env_name, seed)
                                         : environment_from_json(load_json_file(env_file));
  auto [data, truth] = generate_dataset(env, n, seed);
  save_dataset(out, data);
  save_ground_truth(truth_path, truth);
  ThetaEstimate agent{env.agent_params, env.behavior, {}};
  json truth_model = theta_to_json(agent, &env.spaces);
  truth_model["environment"] = environment_to_json(env);
  save_json_file(truth_model_path, truth_model);

  ManifestWriter manifest("simulate",
                          {{"env", env_name}, {"env_file", env_file}, {"n", n}, {"out", out}},
                          seed);
  if (!env_file.empty()) manifest.add_input(env_file);
  manifest.add_output(out);
  manifest.add_output(truth_path);
  manifest.add_output(truth_model_path);
  manifest.finish(manifest_path);

  std::cout << "wrote " << data.size() << " trajectories to " << out << "\n";
  return 0;
}

int run_train(const std::string& data_path, const std::string& out, const std::string& method,
              const std::vector<std::string>& freeze_names, const std::string& known_model,
              const std::string& init_model, std::uint64_t seed, const FitConfig& config,
              std::string manifest_path) {
  if (manifest_path.empty()) manifest_path = out + ".manifest.json";
  const Dataset data = load_dataset(data_path);
  const FreezeMask freeze = parse_freeze(freeze_names);

  ThetaEstimate init = [&] {
    if (!init_model.empty()) {
      ThetaEstimate theta = theta_from_json(load_json_file(init_model));
      if (!freeze_names.empty()) theta.frozen = freeze;
      return theta;
    }
    KnownValues known;
    if (!known_model.empty()) {
      const ThetaEstimate ref = theta_from_json(load_json_file(known_model));
      if (freeze.transition) known.transition = ref.params.transition;
      if (freeze.observation) known.observation = ref.params.observation;
      if (freeze.initial) known.initial = ref.params.initial.vec();
      if (freeze.eta) known.eta = ref.policy.eta;
      if (freeze.means) known.means = ref.policy.means;
    }
    return init_random(data.spaces, seed, freeze, known);
  }();

  const Prior prior;  // flat by default
  FitConfig cfg = config;
  cfg.seed = seed;
  const FitReport report = (method == "two-stage") ? two_stage_fit(data, init, prior, cfg)
                                                   : fit(data, init, prior, cfg);
  save_json_file(out, fit_report_to_json(report, &data.spaces));

  ManifestWriter manifest("train",
                          {{"data", data_path},
                           {"method", method},
                           {"freeze", freeze_names},
                           {"known_model", known_model},
                           {"init_model", init_model},
                           {"learning_rate", cfg.learning_rate},
                           {"max_iterations", cfg.max_iterations},
                           {"patience", cfg.patience},
                           {"improvement_tolerance", cfg.improvement_tolerance},
                           {"workers", cfg.workers}},
                          seed);
  manifest.add_input(data_path);
  if (!known_model.empty()) manifest.add_input(known_model);
  if (!init_model.empty()) manifest.add_input(init_model);
  manifest.add_output(out);
  manifest.finish(manifest_path);

  std::cout << (report.converged ? "converged" : "max iterations reached") << " after "
            << report.iterations_run << " iterations; final log posterior "
            << report.log_posterior_trace.back() << "\n";
  return report.converged ? 0 : 2;
}

int run_evaluate(const std::string& data_path, const std::string& model_path,
                 const std::string& truth_path, const std::string& out,
                 const std::string& csv_path, std::optional<int> positive_action, int cap,
                 bool no_align, std::string manifest_path, std::uint64_t seed) {
  if (manifest_path.empty()) manifest_path = out + ".manifest.json";
  const Dataset data = load_dataset(data_path);
  const ThetaEstimate model = theta_from_json(load_json_file(model_path));
  GroundTruth truth;
  const bool have_truth = !truth_path.empty();
  if (have_truth) truth = load_ground_truth(truth_path);

  EvalOptions options;
  options.positive_action = positive_action;
  options.horizon_cap = cap;
  options.align_states = !no_align;
  const EvalReport report = evaluate(data, model, have_truth ? &truth : nullptr, options);
  save_json_file(out, eval_report_to_json(report));
  if (!csv_path.empty()) write_text_file(csv_path, eval_report_to_csv(report));

  ManifestWriter manifest("evaluate",
                          {{"data", data_path},
                           {"model", model_path},
                           {"truth", truth_path},
                           {"positive_action", positive_action ? json(*positive_action) : json()},
                           {"horizon_cap", cap},
                           {"align", !no_align}},
                          seed);
  manifest.add_input(data_path);
  manifest.add_input(model_path);
  if (have_truth) manifest.add_input(truth_path);
  manifest.add_output(out);
  if (!csv_path.empty()) manifest.add_output(csv_path);
  manifest.finish(manifest_path);

  std::cout << eval_report_to_json(report).dump(2) << "\n";
  return 0;
}

int run_audit(const std::string& data_path, const std::string& model_path,
              const std::string& out, const std::string& csv_path, int test_action,
              double confidence, double fraction,
              const std::vector<std::string>& cohort_specs, std::string manifest_path,
              std::uint64_t seed) {
  if (manifest_path.empty()) manifest_path = out + ".manifest.json";
  const Dataset data = load_dataset(data_path);
  const ThetaEstimate model = theta_from_json(load_json_file(model_path));

  AuditCriteria criteria;
  criteria.test_action = test_action;
  criteria.boundary_confidence = confidence;
  criteria.informativeness_fraction = fraction;

  std::vector<CohortPredicate> cohorts;
  for (const std::string& spec : cohort_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--cohort", "expected key=value: " + spec);
    const std::string key = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);
    cohorts.emplace_back(spec, [key, value](const Trajectory& t) {
      const auto it = t.tags.find(key);
      return it != t.tags.end() && it->second == value;
    });
  }

  const AuditReport report = audit_dataset(data, model, criteria, cohorts);
  save_json_file(out, audit_report_to_json(report));
  if (!csv_path.empty()) write_text_file(csv_path, audit_cohorts_to_csv(report));

  ManifestWriter manifest("audit",
                          {{"data", data_path},
                           {"model", model_path},
                           {"test_action", test_action},
                           {"confidence", confidence},
                           {"fraction", fraction},
                           {"cohorts", cohort_specs}},
                          seed);
  manifest.add_input(data_path);
  manifest.add_input(model_path);
  manifest.add_output(out);
  if (!csv_path.empty()) manifest.add_output(csv_path);
  manifest.finish(manifest_path);

  std::cout << audit_cohorts_to_csv(report);
  return 0;
}

struct PlotPoint {
  double x, y;
};

PlotPoint to_plane(const Eigen::VectorXd& b) {
  if (b.size() == 2) return {b[1], 0.0};
  const double root3_2 = std::sqrt(3.0) / 2.0;
  return {b[1] + 0.5 * b[2], root3_2 * b[2]};
}

int run_export_plot(const std::string& model_path, const std::string& data_path,
                    const std::string& out, std::string manifest_path, std::uint64_t seed) {
  if (manifest_path.empty()) manifest_path = out + ".manifest.json";
  const ThetaEstimate model = theta_from_json(load_json_file(model_path));
  const Dataset data = load_dataset(data_path);
  const int S = model.n_states();
  if (S > 3)
    throw UnsupportedDimension("export-plot supports |S| in {2, 3}; got " + std::to_string(S));

  std::ostringstream csv;
  csv.precision(12);
  csv << "kind,i,j,x1,y1,x2,y2\n";

  for (int i = 0; i < data.size(); ++i) {
    const BeliefTrajectory bt =
        belief_trajectory(data.trajectories[i], model.params, data.stop_actions);
    for (size_t t = 0; t < bt.beliefs.size(); ++t) {
      const PlotPoint p = to_plane(bt.beliefs[t].vec());
      csv << "belief," << i << "," << t << "," << p.x << "," << p.y << ",,\n";
    }
  }

  for (int a = 0; a < model.n_actions(); ++a) {
    const PlotPoint p = to_plane(model.policy.means[a]);
    csv << "mean," << a << ",," << p.x << "," << p.y << ",,\n";
  }

  for (int a1 = 0; a1 < model.n_actions(); ++a1) {
    for (int a2 = a1 + 1; a2 < model.n_actions(); ++a2) {
      const DecisionBoundary hp = decision_boundary(model.policy, a1, a2);
      if (hp.degenerate) {
        csv << "boundary-degenerate," << a1 << "," << a2 << ",,,,\n";
        continue;
      }
      if (S == 2) {
        const auto p = boundary_crossing_2state(model.policy, a1, a2);
        if (p)
          csv << "boundary," << a1 << "," << a2 << "," << *p << ",0," << *p << ",0\n";
        continue;
      }
      // Clip the equidistance line against the simplex triangle.
      const Eigen::Vector2d c0(0.0, 0.0), c1(1.0, 0.0), c2(0.5, std::sqrt(3.0) / 2.0);
      auto belief_at = [](const Eigen::Vector2d& p) {
        const double b2 = p.y() * 2.0 / std::sqrt(3.0);
        const double b1 = p.x() - 0.5 * b2;
        Eigen::VectorXd b(3);
        b << 1.0 - b1 - b2, b1, b2;
        return b;
      };
      auto f = [&](const Eigen::Vector2d& p) {
        return hp.normal.dot(belief_at(p)) - hp.offset;
      };
      const Eigen::Vector2d corners[3] = {c0, c1, c2};
      std::vector<Eigen::Vector2d> pts;
      for (int e = 0; e < 3; ++e) {
        const Eigen::Vector2d pa = corners[e];
        const Eigen::Vector2d pb = corners[(e + 1) % 3];
        const double fa = f(pa), fb = f(pb);
        if (fa == 0.0) pts.push_back(pa);
        if ((fa < 0) != (fb < 0) && fa != 0.0 && fb != 0.0)
          pts.push_back(pa + (fa / (fa - fb)) * (pb - pa));
      }
      std::vector<Eigen::Vector2d> unique;
      for (const auto& p : pts) {
        bool dup = false;
        for (const auto& q : unique)
          if ((p - q).norm() < 1e-9) dup = true;
        if (!dup) unique.push_back(p);
      }
      if (unique.size() >= 2)
        csv << "boundary," << a1 << "," << a2 << "," << unique[0].x() << "," << unique[0].y()
            << "," << unique[1].x() << "," << unique[1].y() << "\n";
    }
  }

  write_text_file(out, csv.str());

  ManifestWriter manifest("export-plot", {{"model", model_path}, {"data", data_path}}, seed);
  manifest.add_input(model_path);
  manifest.add_input(data_path);
  manifest.add_output(out);
  manifest.finish(manifest_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interpole: interpretable policy learning from demonstrations"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed_flag;

  // simulate
  auto* sim = app.add_subcommand("simulate", "sample demonstrations from an environment");
  std::string sim_env = "diag", sim_env_file, sim_out, sim_truth, sim_truth_model, sim_manifest;
  int sim_n = 100;
  sim->add_option("--env", sim_env, "environment name: diag|bias|adni-like|tree");
  sim->add_option("--env-file", sim_env_file, "environment spec file (overrides --env)");
  sim->add_option("--n", sim_n, "number of trajectories")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed_flag, "random seed (fallback: INTERPOLE_SEED)");
  sim->add_option("--out", sim_out, "output dataset (JSON Lines)")->required();
  sim->add_option("--truth", sim_truth, "generation-record sidecar path");
  sim->add_option("--truth-model", sim_truth_model, "agent model output path");
  sim->add_option("--manifest", sim_manifest, "manifest path");

  // train
  auto* train = app.add_subcommand("train", "fit a model to demonstrations");
  std::string train_data, train_out, train_method = "joint", train_known, train_init,
              train_manifest;
  std::vector<std::string> train_freeze;
  FitConfig train_cfg;
  train->add_option("--data", train_data, "dataset path")->required();
  train->add_option("--out", train_out, "model output path")->required();
  train->add_option("--method", train_method, "joint|two-stage")
      ->check(CLI::IsMember({"joint", "two-stage"}));
  train->add_option("--freeze", train_freeze, "blocks to hold fixed: T,O,b1,eta,means")
      ->delimiter(',');
  train->add_option("--known-model", train_known, "model file supplying frozen-block values");
  train->add_option("--init-model", train_init, "model file supplying the full initial estimate");
  train->add_option("--seed", seed_flag, "random seed (fallback: INTERPOLE_SEED)");
  train->add_option("--lr", train_cfg.learning_rate, "learning rate");
  train->add_option("--max-iters", train_cfg.max_iterations, "maximum iterations");
  train->add_option("--patience", train_cfg.patience, "no-improvement iterations before stop");
  train->add_option("--tol", train_cfg.improvement_tolerance, "improvement tolerance");
  train->add_option("--workers", train_cfg.workers, "worker threads");
  train->add_option("--manifest", train_manifest, "manifest path");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "score a model against demonstrations");
  std::string eval_data, eval_model, eval_truth, eval_out, eval_csv, eval_manifest;
  std::optional<int> eval_positive;
  int eval_cap = 50;
  bool eval_no_align = false;
  eval->add_option("--data", eval_data, "dataset path")->required();
  eval->add_option("--model", eval_model, "model path")->required();
  eval->add_option("--truth", eval_truth, "generation-record sidecar");
  eval->add_option("--out", eval_out, "report output path")->required();
  eval->add_option("--csv", eval_csv, "flat CSV output path");
  eval->add_option("--positive-action", eval_positive, "positive class for action matching");
  eval->add_option("--cap", eval_cap, "horizon cap for stopping-time replay");
  eval->add_flag("--no-align", eval_no_align, "skip state alignment against ground truth");
  eval->add_option("--seed", seed_flag, "seed recorded in the manifest");
  eval->add_option("--manifest", eval_manifest, "manifest path");

  // audit
  auto* audit = app.add_subcommand("audit", "post-hoc behavior audit");
  std::string audit_data, audit_model, audit_out, audit_csv, audit_manifest;
  int audit_test_action = 0;
  double audit_confidence = 0.9, audit_fraction = 0.5;
  std::vector<std::string> audit_cohorts;
  audit->add_option("--data", audit_data, "dataset path")->required();
  audit->add_option("--model", audit_model, "model path")->required();
  audit->add_option("--out", audit_out, "report output path")->required();
  audit->add_option("--csv", audit_csv, "cohort table CSV path");
  audit->add_option("--test-action", audit_test_action, "designated test action index");
  audit->add_option("--confidence", audit_confidence, "near-certainty threshold");
  audit->add_option("--fraction", audit_fraction, "informativeness sd fraction");
  audit->add_option("--cohort", audit_cohorts, "cohort predicate tag=value (repeatable)");
  audit->add_option("--seed", seed_flag, "seed recorded in the manifest");
  audit->add_option("--manifest", audit_manifest, "manifest path");

  // export-plot
  auto* plot = app.add_subcommand("export-plot", "plot-ready CSV of beliefs and boundaries");
  std::string plot_model, plot_data, plot_out, plot_manifest;
  plot->add_option("--model", plot_model, "model path")->required();
  plot->add_option("--data", plot_data, "dataset path")->required();
  plot->add_option("--out", plot_out, "CSV output path")->required();
  plot->add_option("--seed", seed_flag, "seed recorded in the manifest");
  plot->add_option("--manifest", plot_manifest, "manifest path");

  CLI11_PARSE(app, argc, argv);
  const std::uint64_t seed = resolve_seed(seed_flag);

  try {
    if (sim->parsed())
      return run_simulate(sim_env, sim_env_file, sim_n, seed, sim_out, sim_truth,
                          sim_truth_model, sim_manifest);
    if (train->parsed())
      return run_train(train_data, train_out, train_method, train_freeze, train_known,
                       train_init, seed, train_cfg, train_manifest);
    if (eval->parsed())
      return run_evaluate(eval_data, eval_model, eval_truth, eval_out, eval_csv, eval_positive,
                          eval_cap, eval_no_align, eval_manifest, seed);
    if (audit->parsed())
      return run_audit(audit_data, audit_model, audit_out, audit_csv, audit_test_action,
                       audit_confidence, audit_fraction, audit_cohorts, audit_manifest, seed);
    if (plot->parsed())
      return run_export_plot(plot_model, plot_data, plot_out, plot_manifest, seed);
  } catch (const ZeroLikelihood& e) {
    std::cerr << "numeric failure: " << e.what() << " (step " << e.step() << ", trajectory "
              << e.trajectory() << ")\n";
    return 3;
  } catch (const NonFiniteValue& e) {
    std::cerr << "numeric failure: " << e.what() << " (block " << e.block() << ", iteration "
              << e.iteration() << ")\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
