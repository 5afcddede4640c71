#include "interpole/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace interpole {

namespace {

double inf() { return std::numeric_limits<double>::infinity(); }

}  // namespace

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return inf();
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

double belief_mismatch(const std::vector<std::vector<Belief>>& true_beliefs,
                       const std::vector<std::vector<Belief>>& est_beliefs) {
  if (true_beliefs.size() != est_beliefs.size())
    throw std::invalid_argument("belief_mismatch: trajectory count mismatch");
  if (true_beliefs.empty()) throw std::invalid_argument("belief_mismatch: empty input");
  double total = 0.0;
  for (size_t i = 0; i < true_beliefs.size(); ++i) {
    if (true_beliefs[i].size() != est_beliefs[i].size())
      throw std::invalid_argument("belief_mismatch: length mismatch");
    for (size_t t = 0; t < true_beliefs[i].size(); ++t)
      total += kl_divergence(true_beliefs[i][t].vec(), est_beliefs[i][t].vec());
  }
  return total / static_cast<double>(true_beliefs.size());
}

double policy_mismatch(const std::vector<std::vector<Eigen::VectorXd>>& true_dists,
                       const std::vector<std::vector<Eigen::VectorXd>>& est_dists) {
  if (true_dists.size() != est_dists.size())
    throw std::invalid_argument("policy_mismatch: trajectory count mismatch");
  if (true_dists.empty()) throw std::invalid_argument("policy_mismatch: empty input");
  double total = 0.0;
  for (size_t i = 0; i < true_dists.size(); ++i) {
    if (true_dists[i].size() != est_dists[i].size())
      throw std::invalid_argument("policy_mismatch: length mismatch");
    for (size_t t = 0; t < true_dists[i].size(); ++t)
      total += kl_divergence(true_dists[i][t], est_dists[i][t]);
  }
  return total / static_cast<double>(true_dists.size());
}

double stopping_time_error(const Dataset& data, const ThetaEstimate& model,
                           const StopSet& stop_actions, int horizon_cap,
                           std::vector<double>* per_trajectory) {
  if (stop_actions.empty())
    throw std::invalid_argument("stopping_time_error: stop_actions must be nonempty");
  if (per_trajectory) per_trajectory->clear();
  double total = 0.0;
  for (const Trajectory& traj : data.trajectories) {
    const int tau = traj.length();
    int demo_stop = horizon_cap;
    for (int t = 0; t < tau; ++t)
      if (is_stop_action(stop_actions, traj.steps[t].first)) {
        demo_stop = t + 1;
        break;
      }
    // Greedy replay: filter the demonstration's own observations through the
    // model and take modal actions.
    const BeliefTrajectory bt = belief_trajectory(traj, model.params, stop_actions);
    int model_stop = horizon_cap;
    for (int t = 0; t < tau; ++t)
      if (is_stop_action(stop_actions, modal_action(bt.beliefs[t], model.policy))) {
        model_stop = t + 1;
        break;
      }
    const double err = std::abs(demo_stop - model_stop);
    if (per_trajectory) per_trajectory->push_back(err);
    total += err;
  }
  return total / static_cast<double>(data.size());
}

ActionMatching action_matching(const std::vector<Eigen::VectorXd>& predicted_dists,
                               const std::vector<int>& actual_actions, int positive_action) {
  if (predicted_dists.size() != actual_actions.size() || predicted_dists.empty())
    throw std::invalid_argument("action_matching: bad input sizes");
  const size_t n = predicted_dists.size();
  std::vector<double> score(n);
  std::vector<int> label(n);
  size_t n_pos = 0;
  double brier = 0.0;
  for (size_t i = 0; i < n; ++i) {
    score[i] = predicted_dists[i][positive_action];
    label[i] = actual_actions[i] == positive_action ? 1 : 0;
    n_pos += label[i];
    brier += (score[i] - label[i]) * (score[i] - label[i]);
  }
  ActionMatching out;
  out.brier = brier / static_cast<double>(n);
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return out;

  // AUROC by the rank statistic with midranks for ties.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return score[a] < score[b]; });
  double pos_rank_sum = 0.0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && score[order[j]] == score[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (size_t k = i; k < j; ++k)
      if (label[order[k]]) pos_rank_sum += midrank;
    i = j;
  }
  out.auroc = (pos_rank_sum - 0.5 * n_pos * (n_pos + 1)) /
              (static_cast<double>(n_pos) * static_cast<double>(n_neg));

  // AUPRC by step integration over distinct thresholds (descending scores,
  // tie groups handled atomically).
  std::reverse(order.begin(), order.end());
  double tp = 0.0, fp = 0.0, auprc = 0.0, prev_recall = 0.0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    double group_tp = 0.0, group_fp = 0.0;
    while (j < n && score[order[j]] == score[order[i]]) {
      if (label[order[j]])
        group_tp += 1.0;
      else
        group_fp += 1.0;
      ++j;
    }
    tp += group_tp;
    fp += group_fp;
    const double recall = tp / static_cast<double>(n_pos);
    const double precision = tp / (tp + fp);
    auprc += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  out.auprc = auprc;
  return out;
}

namespace {

std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<int> base(n);
  std::iota(base.begin(), base.end(), 0);
  std::vector<std::vector<int>> result;
  do {
    result.push_back(base);
  } while (std::next_permutation(base.begin(), base.end()));
  return result;
}

double alignment_cost(const ThetaEstimate& model, const Dataset& data,
                      const GroundTruth& truth) {
  double total = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    BeliefTrajectory bt;
    try {
      bt = belief_trajectory(data.trajectories[i], model.params, data.stop_actions);
    } catch (const ZeroLikelihood&) {
      return inf();
    }
    const auto& gt = truth.trajectories[i].beliefs;
    const size_t steps = std::min(bt.beliefs.size(), gt.size());
    for (size_t t = 0; t < steps; ++t) {
      const double kl = kl_divergence(gt[t].vec(), bt.beliefs[t].vec());
      total += std::isfinite(kl) ? kl : 1e6;  // bounded so degenerate cells don't mask totals
    }
  }
  return total;
}

}  // namespace

std::vector<int> best_state_alignment(const ThetaEstimate& model, const Dataset& data,
                                      const GroundTruth& truth) {
  const int S = model.n_states();
  std::vector<int> identity(S);
  std::iota(identity.begin(), identity.end(), 0);
  if (S > 8 || static_cast<int>(truth.trajectories.size()) != data.size()) return identity;
  std::vector<int> best = identity;
  double best_cost = inf();
  for (const auto& perm : all_permutations(S)) {
    const double cost = alignment_cost(permute_states(model, perm), data, truth);
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  }
  return best;
}

EvalReport evaluate(const Dataset& data, const ThetaEstimate& model, const GroundTruth* truth,
                    const EvalOptions& options) {
  EvalReport report;
  ThetaEstimate aligned = model;
  if (truth && options.align_states)
    aligned = permute_states(model, best_state_alignment(model, data, *truth));

  std::vector<std::vector<Belief>> est_beliefs(data.size());
  std::vector<std::vector<Eigen::VectorXd>> est_dists(data.size());
  std::vector<Eigen::VectorXd> pooled_dists;
  std::vector<int> pooled_actions;
  for (int i = 0; i < data.size(); ++i) {
    const Trajectory& traj = data.trajectories[i];
    const BeliefTrajectory bt = belief_trajectory(traj, aligned.params, data.stop_actions);
    est_beliefs[i].assign(bt.beliefs.begin(), bt.beliefs.end() - 1);  // decision beliefs
    est_dists[i].reserve(traj.length());
    for (int t = 0; t < traj.length(); ++t) {
      est_dists[i].push_back(action_distribution(bt.beliefs[t], aligned.policy).probs);
      pooled_dists.push_back(est_dists[i].back());
      pooled_actions.push_back(traj.steps[t].first);
    }
  }

  if (truth) {
    std::vector<std::vector<Belief>> true_beliefs(data.size());
    std::vector<std::vector<Eigen::VectorXd>> true_dists(data.size());
    for (int i = 0; i < data.size(); ++i) {
      const auto& gt = truth->trajectories[i];
      true_beliefs[i].assign(gt.beliefs.begin(),
                             gt.beliefs.begin() + est_beliefs[i].size());
      true_dists[i] = gt.action_dists;
    }
    report.belief_mismatch = 0.0;
    report.policy_mismatch = 0.0;
    for (int i = 0; i < data.size(); ++i) {
      double bm = 0.0;
      for (size_t t = 0; t < true_beliefs[i].size(); ++t)
        bm += kl_divergence(true_beliefs[i][t].vec(), est_beliefs[i][t].vec());
      double pm = 0.0;
      for (size_t t = 0; t < true_dists[i].size(); ++t)
        pm += kl_divergence(true_dists[i][t], est_dists[i][t]);
      report.per_trajectory_belief_mismatch.push_back(bm);
      report.per_trajectory_policy_mismatch.push_back(pm);
      *report.belief_mismatch += bm;
      *report.policy_mismatch += pm;
    }
    *report.belief_mismatch /= data.size();
    *report.policy_mismatch /= data.size();
  }

  if (!data.stop_actions.empty())
    report.stopping_time_error =
        stopping_time_error(data, aligned, data.stop_actions, options.horizon_cap,
                            &report.per_trajectory_stopping_error);

  if (options.positive_action) {
    const ActionMatching am =
        action_matching(pooled_dists, pooled_actions, *options.positive_action);
    report.brier = am.brier;
    report.auroc = am.auroc;
    report.auprc = am.auprc;
  }
  return report;
}

}  // namespace interpole
