#pragma once

#include <optional>
#include <vector>

#include "interpole/envs.hpp"
#include "interpole/gradient.hpp"

namespace interpole {

/// Evaluation summary. Fields are absent (not zero) when the required inputs
/// are unavailable: belief/policy mismatch need ground truth, stopping-time
/// error needs stop actions, action matching needs a designated positive
/// action. KL-based fields may be +infinity for degenerate estimates.
struct EvalReport {
  std::optional<double> belief_mismatch;
  std::optional<double> policy_mismatch;
  std::optional<double> stopping_time_error;
  std::optional<double> brier;
  std::optional<double> auroc;
  std::optional<double> auprc;
  std::vector<double> per_trajectory_belief_mismatch;
  std::vector<double> per_trajectory_policy_mismatch;
  std::vector<double> per_trajectory_stopping_error;
};

/// KL(p || q) with natural log, 0 log 0 = 0, +infinity when p has mass where
/// q does not.
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Mean over trajectories of the per-trajectory sum of step-wise KL
/// divergences between belief sequences.
double belief_mismatch(const std::vector<std::vector<Belief>>& true_beliefs,
                       const std::vector<std::vector<Belief>>& est_beliefs);

/// Same aggregation over action distributions (behavior policy at the true
/// beliefs vs learned policy at the learned beliefs).
double policy_mismatch(const std::vector<std::vector<Eigen::VectorXd>>& true_dists,
                       const std::vector<std::vector<Eigen::VectorXd>>& est_dists);

/// Mean absolute difference between each demonstration's stopping step and
/// the step at which the model's modal action first enters `stop_actions`
/// while filtering the demonstration's own observations. A side that never
/// stops counts as `horizon_cap`.
double stopping_time_error(const Dataset& data, const ThetaEstimate& model,
                           const StopSet& stop_actions, int horizon_cap = 50,
                           std::vector<double>* per_trajectory = nullptr);

/// Binary action-matching scores from pooled per-step predictions of the
/// positive action: Brier (mean squared error), AUROC (rank statistic with
/// midranks), AUPRC (step-interpolated precision-recall integral). AUROC and
/// AUPRC are absent when only one class occurs.
struct ActionMatching {
  double brier = 0.0;
  std::optional<double> auroc;
  std::optional<double> auprc;
};

ActionMatching action_matching(const std::vector<Eigen::VectorXd>& predicted_dists,
                               const std::vector<int>& actual_actions, int positive_action);

/// State labels of a learned model are arbitrary whenever the protocol is
/// permutation-symmetric; this selects the relabeling minimizing total belief
/// mismatch against the generation record. Identity when |S| > 8.
std::vector<int> best_state_alignment(const ThetaEstimate& model, const Dataset& data,
                                      const GroundTruth& truth);

struct EvalOptions {
  std::optional<int> positive_action;
  int horizon_cap = 50;
  bool align_states = true;  // permutation-align to ground truth when present
};

/// Full evaluation of a model against demonstrations, with ground-truth
/// comparisons when a generation record is supplied.
EvalReport evaluate(const Dataset& data, const ThetaEstimate& model, const GroundTruth* truth,
                    const EvalOptions& options = {});

}  // namespace interpole
