#include "interpole/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace interpole {

namespace {

json tensor_to_json(const Tensor3& t) {
  json out = json::array();
  for (int i = 0; i < t.dim0(); ++i) {
    json mid = json::array();
    for (int j = 0; j < t.dim1(); ++j) {
      json row = json::array();
      for (int k = 0; k < t.dim2(); ++k) row.push_back(t(i, j, k));
      mid.push_back(std::move(row));
    }
    out.push_back(std::move(mid));
  }
  return out;
}

Tensor3 tensor_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty() || !j[0][0].is_array())
    throw std::invalid_argument(std::string(what) + ": expected rank-3 array");
  Tensor3 t(static_cast<int>(j.size()), static_cast<int>(j[0].size()),
            static_cast<int>(j[0][0].size()));
  for (int i = 0; i < t.dim0(); ++i)
    for (int k = 0; k < t.dim1(); ++k) {
      if (static_cast<int>(j[i].size()) != t.dim1() ||
          static_cast<int>(j[i][k].size()) != t.dim2())
        throw std::invalid_argument(std::string(what) + ": ragged tensor");
      for (int l = 0; l < t.dim2(); ++l) t(i, k, l) = j[i][k][l].get<double>();
    }
  return t;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

/// Optional metric values: absent -> null, infinite -> "inf" string.
json metric_to_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  return *v;
}

std::string metric_to_csv(const std::optional<double>& v) {
  if (!v) return "";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(12);
  os << *v;
  return os.str();
}

}  // namespace

json spaces_to_json(const Spaces& spaces) {
  json j;
  j["n_states"] = spaces.n_states;
  j["n_actions"] = spaces.n_actions;
  j["n_observations"] = spaces.n_observations;
  json labels;
  if (!spaces.state_labels.empty()) labels["states"] = spaces.state_labels;
  if (!spaces.action_labels.empty()) labels["actions"] = spaces.action_labels;
  if (!spaces.observation_labels.empty()) labels["observations"] = spaces.observation_labels;
  if (!labels.empty()) j["labels"] = labels;
  return j;
}

Spaces spaces_from_json(const json& j) {
  Spaces spaces(j.at("n_states").get<int>(), j.at("n_actions").get<int>(),
                j.at("n_observations").get<int>());
  if (j.contains("labels")) {
    const json& labels = j["labels"];
    if (labels.contains("states"))
      spaces.state_labels = labels["states"].get<std::vector<std::string>>();
    if (labels.contains("actions"))
      spaces.action_labels = labels["actions"].get<std::vector<std::string>>();
    if (labels.contains("observations"))
      spaces.observation_labels = labels["observations"].get<std::vector<std::string>>();
  }
  spaces.validate();
  return spaces;
}

json params_to_json(const IohmmParams& params, const Spaces* spaces) {
  json j;
  j["n_states"] = params.n_states();
  j["n_actions"] = params.n_actions();
  j["n_observations"] = params.n_observations();
  j["transition"] = tensor_to_json(params.transition);
  j["observation"] = tensor_to_json(params.observation);
  j["initial"] = vector_to_json(params.initial.vec());
  if (spaces) {
    const json s = spaces_to_json(*spaces);
    if (s.contains("labels")) j["labels"] = s["labels"];
  }
  return j;
}

IohmmParams params_from_json(const json& j) {
  Tensor3 t = tensor_from_json(j.at("transition"), "transition");
  Tensor3 o = tensor_from_json(j.at("observation"), "observation");
  Belief b1(vector_from_json(j.at("initial")));
  IohmmParams params(std::move(t), std::move(o), std::move(b1));
  if (j.contains("n_states") && j["n_states"].get<int>() != params.n_states())
    throw std::invalid_argument("params_from_json: n_states mismatch");
  return params;
}

json policy_to_json(const BoundaryPolicy& policy) {
  json j;
  j["eta"] = policy.eta;
  json means = json::array();
  for (const auto& mu : policy.means) means.push_back(vector_to_json(mu));
  j["means"] = std::move(means);
  return j;
}

BoundaryPolicy policy_from_json(const json& j) {
  std::vector<Eigen::VectorXd> means;
  for (const auto& m : j.at("means")) means.push_back(vector_from_json(m));
  return BoundaryPolicy(j.at("eta").get<double>(), std::move(means));
}

json theta_to_json(const ThetaEstimate& theta, const Spaces* spaces) {
  json j;
  j["params"] = params_to_json(theta.params, spaces);
  j["policy"] = policy_to_json(theta.policy);
  j["frozen"] = {{"transition", theta.frozen.transition},
                 {"observation", theta.frozen.observation},
                 {"initial", theta.frozen.initial},
                 {"eta", theta.frozen.eta},
                 {"means", theta.frozen.means}};
  return j;
}

ThetaEstimate theta_from_json(const json& j) {
  ThetaEstimate theta{params_from_json(j.at("params")), policy_from_json(j.at("policy")), {}};
  if (j.contains("frozen")) {
    const json& f = j["frozen"];
    theta.frozen.transition = f.value("transition", false);
    theta.frozen.observation = f.value("observation", false);
    theta.frozen.initial = f.value("initial", false);
    theta.frozen.eta = f.value("eta", false);
    theta.frozen.means = f.value("means", false);
  }
  theta.validate();
  return theta;
}

json fit_report_to_json(const FitReport& report, const Spaces* spaces) {
  json j = theta_to_json(report.estimate, spaces);
  j["log_posterior_trace"] = report.log_posterior_trace;
  j["iterations_run"] = report.iterations_run;
  j["converged"] = report.converged;
  j["seed"] = report.seed;
  return j;
}

json environment_to_json(const EnvironmentSpec& env) {
  json j;
  j["spaces"] = spaces_to_json(env.spaces);
  j["true_params"] = params_to_json(env.true_params);
  j["agent_params"] = params_to_json(env.agent_params);
  j["behavior"] = policy_to_json(env.behavior);
  j["stop_actions"] = env.stop_actions;
  j["max_horizon"] = env.max_horizon;
  return j;
}

EnvironmentSpec environment_from_json(const json& j) {
  EnvironmentSpec env{spaces_from_json(j.at("spaces")),
                      params_from_json(j.at("true_params")),
                      params_from_json(j.at("agent_params")),
                      policy_from_json(j.at("behavior")),
                      j.value("stop_actions", std::vector<int>{}),
                      j.value("max_horizon", 1)};
  std::sort(env.stop_actions.begin(), env.stop_actions.end());
  env.validate();
  return env;
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  json header = spaces_to_json(data.spaces);
  header["stop_actions"] = data.stop_actions;
  out << header.dump() << "\n";
  for (const Trajectory& traj : data.trajectories) {
    json line;
    json steps = json::array();
    for (const auto& [a, z] : traj.steps) steps.push_back(json::array({a, z}));
    line["steps"] = std::move(steps);
    if (!traj.tags.empty()) line["tags"] = traj.tags;
    out << line.dump() << "\n";
  }
}

Dataset load_dataset(const std::string& path, int max_trajectory_length) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset file is empty: " + path);
  const json header = json::parse(line);
  Dataset data;
  data.spaces = spaces_from_json(header);
  data.stop_actions = header.value("stop_actions", std::vector<int>{});
  data.normalize_stop_actions();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    Trajectory traj;
    for (const auto& step : j.at("steps"))
      traj.steps.emplace_back(step[0].get<int>(), step[1].get<int>());
    if (traj.length() > max_trajectory_length)
      throw std::invalid_argument("load_dataset: trajectory exceeds the length cap");
    if (j.contains("tags"))
      traj.tags = j["tags"].get<std::map<std::string, std::string>>();
    data.trajectories.push_back(std::move(traj));
  }
  data.validate();
  return data;
}

void save_ground_truth(const std::string& path, const GroundTruth& truth) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (size_t i = 0; i < truth.trajectories.size(); ++i) {
    const auto& gt = truth.trajectories[i];
    json line;
    line["index"] = i;
    line["states"] = gt.states;
    json beliefs = json::array();
    for (const auto& b : gt.beliefs) beliefs.push_back(vector_to_json(b.vec()));
    line["beliefs"] = std::move(beliefs);
    json dists = json::array();
    for (const auto& d : gt.action_dists) dists.push_back(vector_to_json(d));
    line["action_dists"] = std::move(dists);
    out << line.dump() << "\n";
  }
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  GroundTruth truth;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    GroundTruthTrajectory gt;
    gt.states = j.at("states").get<std::vector<int>>();
    for (const auto& b : j.at("beliefs")) gt.beliefs.push_back(Belief(vector_from_json(b)));
    for (const auto& d : j.at("action_dists")) gt.action_dists.push_back(vector_from_json(d));
    truth.trajectories.push_back(std::move(gt));
  }
  return truth;
}

json eval_report_to_json(const EvalReport& report) {
  json j;
  j["belief_mismatch"] = metric_to_json(report.belief_mismatch);
  j["policy_mismatch"] = metric_to_json(report.policy_mismatch);
  j["stopping_time_error"] = metric_to_json(report.stopping_time_error);
  j["brier"] = metric_to_json(report.brier);
  j["auroc"] = metric_to_json(report.auroc);
  j["auprc"] = metric_to_json(report.auprc);
  j["per_trajectory"] = {{"belief_mismatch", report.per_trajectory_belief_mismatch},
                         {"policy_mismatch", report.per_trajectory_policy_mismatch},
                         {"stopping_error", report.per_trajectory_stopping_error}};
  return j;
}

std::string eval_report_to_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "belief_mismatch,policy_mismatch,stopping_time_error,brier,auroc,auprc\n";
  os << metric_to_csv(report.belief_mismatch) << "," << metric_to_csv(report.policy_mismatch)
     << "," << metric_to_csv(report.stopping_time_error) << "," << metric_to_csv(report.brier)
     << "," << metric_to_csv(report.auroc) << "," << metric_to_csv(report.auprc) << "\n";
  return os.str();
}

json audit_report_to_json(const AuditReport& report) {
  json j;
  j["stats"] = {{"mean_factual_change", report.stats.mean_factual_change},
                {"sd_factual_change", report.stats.sd_factual_change},
                {"n_test_steps", report.stats.n_test_steps},
                {"active", report.stats.active}};
  json per = json::array();
  for (const auto& r : report.per_trajectory) {
    json item;
    item["belated"] = r.belated.belated;
    item["belated_skipped_steps"] = r.belated.skipped_steps;
    item["belated_certain_step"] = r.belated.certain_step;
    item["uninformative_steps"] = r.uninformative_steps;
    item["n_test_steps"] = r.n_test_steps;
    per.push_back(std::move(item));
  }
  j["per_trajectory"] = std::move(per);
  json cohorts = json::array();
  for (const auto& c : report.cohorts) {
    cohorts.push_back({{"cohort", c.name},
                       {"n_trajectories", c.n_trajectories},
                       {"n_belated", c.n_belated},
                       {"belated_rate", c.belated_rate},
                       {"n_test_steps", c.n_test_steps},
                       {"n_uninformative", c.n_uninformative},
                       {"uninformative_rate", c.uninformative_rate}});
  }
  j["cohorts"] = std::move(cohorts);
  return j;
}

std::string audit_cohorts_to_csv(const AuditReport& report) {
  std::ostringstream os;
  os << "cohort,n_trajectories,belated_rate,n_test_steps,uninformative_rate\n";
  os.precision(12);
  for (const auto& c : report.cohorts)
    os << c.name << "," << c.n_trajectories << "," << c.belated_rate << "," << c.n_test_steps
       << "," << c.uninformative_rate << "\n";
  return os.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << contents;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json load_json_file(const std::string& path) { return json::parse(read_text_file(path)); }

void save_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

std::string file_checksum(const std::string& path) {
  const std::string contents = read_text_file(path);
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : contents) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << hash;
  return "fnv1a64:" + os.str();
}

}  // namespace interpole
