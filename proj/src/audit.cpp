#include "interpole/audit.hpp"

#include <cmath>

#include "interpole/policy.hpp"

namespace interpole {

std::vector<CounterfactualOutcome> counterfactual_updates(const Belief& b, int a,
                                                          const IohmmParams& params) {
  if (a < 0 || a >= params.n_actions())
    throw std::invalid_argument("counterfactual_updates: invalid action");
  const int S = params.n_states();
  const int Z = params.n_observations();
  const Eigen::VectorXd m = predict_next_state(b, a, params);
  std::vector<CounterfactualOutcome> out;
  out.reserve(Z);
  for (int z = 0; z < Z; ++z) {
    Eigen::VectorXd numer(S);
    double prob = 0.0;
    for (int s2 = 0; s2 < S; ++s2) {
      numer[s2] = m[s2] * params.obs(z, a, s2);
      prob += numer[s2];
    }
    if (prob > kZeroLikelihoodFloor)
      out.push_back({z, Belief(numer / prob), prob});
    else
      out.push_back({z, Belief(m), 0.0});
  }
  return out;
}

namespace {

double belief_change(const Belief& a, const Belief& b) {
  return (a.vec() - b.vec()).norm();
}

struct TestStepChanges {
  int step;
  double factual;
  double counterfactual_max;
};

std::vector<TestStepChanges> test_step_changes(const Trajectory& traj,
                                               const ThetaEstimate& model,
                                               const AuditCriteria& criteria,
                                               const StopSet& stops) {
  std::vector<TestStepChanges> out;
  const BeliefTrajectory bt = belief_trajectory(traj, model.params, stops);
  for (int t = 0; t < traj.length(); ++t) {
    if (traj.steps[t].first != criteria.test_action) continue;
    if (is_stop_action(stops, criteria.test_action)) continue;
    const double factual = belief_change(bt.beliefs[t + 1], bt.beliefs[t]);
    double cf_max = 0.0;
    for (const auto& cf : counterfactual_updates(bt.beliefs[t], criteria.test_action,
                                                 model.params)) {
      if (cf.probability <= 0.0) continue;
      cf_max = std::max(cf_max, belief_change(cf.posterior, bt.beliefs[t]));
    }
    out.push_back({t, factual, cf_max});
  }
  return out;
}

}  // namespace

AuditStats compute_audit_stats(const Dataset& data, const ThetaEstimate& model,
                               const AuditCriteria& criteria) {
  criteria.validate();
  double sum = 0.0, sumsq = 0.0;
  int n = 0;
  for (const Trajectory& traj : data.trajectories) {
    for (const auto& c : test_step_changes(traj, model, criteria, data.stop_actions)) {
      sum += c.factual;
      sumsq += c.factual * c.factual;
      ++n;
    }
  }
  AuditStats stats;
  stats.n_test_steps = n;
  if (n >= 2) {
    stats.mean_factual_change = sum / n;
    const double var = std::max(sumsq / n - stats.mean_factual_change * stats.mean_factual_change, 0.0);
    stats.sd_factual_change = std::sqrt(var * n / (n - 1.0));
    stats.active = true;
  } else if (n == 1) {
    stats.mean_factual_change = sum;
  }
  return stats;
}

BelatedEvidence detect_belated(const Trajectory& traj, const ThetaEstimate& model,
                               const AuditCriteria& criteria, const StopSet& stops) {
  criteria.validate();
  BelatedEvidence out;
  const BeliefTrajectory bt = belief_trajectory(traj, model.params, stops);
  std::vector<int> skipped;
  for (int t = 0; t < traj.length(); ++t) {
    const int a = traj.steps[t].first;
    if (a != criteria.test_action &&
        modal_action(bt.beliefs[t], model.policy) == criteria.test_action)
      skipped.push_back(t);
  }
  if (skipped.empty()) return out;
  for (int t = skipped.front() + 1; t < traj.length(); ++t) {
    if (traj.steps[t].first != criteria.test_action) continue;
    if (is_stop_action(stops, criteria.test_action)) continue;
    if (bt.beliefs[t + 1].vec().maxCoeff() >= criteria.boundary_confidence) {
      out.belated = true;
      out.certain_step = t;
      for (int s : skipped)
        if (s < t) out.skipped_steps.push_back(s);
      return out;
    }
  }
  return out;
}

std::vector<int> detect_uninformative(const Trajectory& traj, const ThetaEstimate& model,
                                      const AuditCriteria& criteria, const AuditStats& stats,
                                      const StopSet& stops) {
  criteria.validate();
  std::vector<int> flagged;
  if (!stats.active) return flagged;  // degenerate statistics: rule inactive
  const double threshold = stats.threshold(criteria);
  for (const auto& c : test_step_changes(traj, model, criteria, stops)) {
    if (c.factual < threshold && c.counterfactual_max < threshold) flagged.push_back(c.step);
  }
  return flagged;
}

AuditReport audit_dataset(const Dataset& data, const ThetaEstimate& model,
                          const AuditCriteria& criteria,
                          const std::vector<CohortPredicate>& cohorts) {
  criteria.validate();
  AuditReport report;
  report.stats = compute_audit_stats(data, model, criteria);
  report.per_trajectory.reserve(data.size());
  for (const Trajectory& traj : data.trajectories) {
    AuditTrajectoryResult r;
    r.belated = detect_belated(traj, model, criteria, data.stop_actions);
    r.uninformative_steps =
        detect_uninformative(traj, model, criteria, report.stats, data.stop_actions);
    for (const auto& [a, z] : traj.steps)
      if (a == criteria.test_action) ++r.n_test_steps;
    report.per_trajectory.push_back(std::move(r));
  }

  auto tabulate = [&](const std::string& name, auto&& member) {
    CohortRow row;
    row.name = name;
    for (int i = 0; i < data.size(); ++i) {
      if (!member(data.trajectories[i])) continue;
      ++row.n_trajectories;
      const AuditTrajectoryResult& r = report.per_trajectory[i];
      row.n_belated += r.belated.belated ? 1 : 0;
      row.n_test_steps += r.n_test_steps;
      row.n_uninformative += static_cast<int>(r.uninformative_steps.size());
    }
    if (row.n_trajectories > 0)
      row.belated_rate = static_cast<double>(row.n_belated) / row.n_trajectories;
    if (row.n_test_steps > 0)
      row.uninformative_rate = static_cast<double>(row.n_uninformative) / row.n_test_steps;
    return row;
  };

  report.cohorts.push_back(tabulate("all", [](const Trajectory&) { return true; }));
  for (const auto& [name, pred] : cohorts) report.cohorts.push_back(tabulate(name, pred));
  return report;
}

std::vector<CohortRow> cohort_summary(const Dataset& data, const ThetaEstimate& model,
                                      const std::vector<CohortPredicate>& cohorts,
                                      const AuditCriteria& criteria) {
  return audit_dataset(data, model, criteria, cohorts).cohorts;
}

}  // namespace interpole
