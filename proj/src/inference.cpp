#include "interpole/inference.hpp"

#include <cmath>

namespace interpole {

Messages forward_messages(const Trajectory& traj, const IohmmParams& params,
                          const StopSet& stops) {
  const int S = params.n_states();
  const int tau = traj.length();
  Messages m;
  m.alpha.resize(tau + 1, S);
  m.alpha_log_scale.resize(tau + 1);
  m.beta.resize(0, S);
  m.beta_log_scale.resize(0);

  for (int s = 0; s < S; ++s) m.alpha(0, s) = params.initial[s];
  m.alpha_log_scale[0] = 0.0;

  for (int t = 0; t < tau; ++t) {
    const auto [a, z] = traj.steps[t];
    const bool stop = is_stop_action(stops, a);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(S);
    for (int s = 0; s < S; ++s) {
      const double w = m.alpha(t, s);
      if (w == 0.0) continue;
      const double* trow = params.transition.row(s, a);
      for (int s2 = 0; s2 < S; ++s2) next[s2] += w * trow[s2];
    }
    if (!stop)
      for (int s2 = 0; s2 < S; ++s2) next[s2] *= params.obs(z, a, s2);
    const double norm = next.sum();
    if (norm <= kZeroLikelihoodFloor)
      throw ZeroLikelihood("forward messages: normalizer underflow", t);
    m.alpha.row(t + 1) = next.transpose() / norm;
    m.alpha_log_scale[t + 1] = m.alpha_log_scale[t] + std::log(norm);
  }
  return m;
}

Messages backward_messages(const Trajectory& traj, const IohmmParams& params,
                           const StopSet& stops) {
  const int S = params.n_states();
  const int tau = traj.length();
  Messages m;
  m.beta.resize(tau + 1, S);
  m.beta_log_scale.resize(tau + 1);
  m.alpha.resize(0, S);
  m.alpha_log_scale.resize(0);

  // Stored rows sum to one; the unscaled message at time tau+1 is all-ones.
  m.beta.row(tau).setConstant(1.0 / S);
  m.beta_log_scale[tau] = std::log(static_cast<double>(S));

  for (int t = tau - 1; t >= 0; --t) {
    const auto [a, z] = traj.steps[t];
    const bool stop = is_stop_action(stops, a);
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(S);
    for (int s = 0; s < S; ++s) {
      const double* trow = params.transition.row(s, a);
      double acc = 0.0;
      for (int s2 = 0; s2 < S; ++s2) {
        const double o = stop ? 1.0 : params.obs(z, a, s2);
        acc += trow[s2] * o * m.beta(t + 1, s2);
      }
      prev[s] = acc;
    }
    const double norm = prev.sum();
    if (norm <= kZeroLikelihoodFloor)
      throw ZeroLikelihood("backward messages: normalizer underflow", t);
    m.beta.row(t) = prev.transpose() / norm;
    m.beta_log_scale[t] = m.beta_log_scale[t + 1] + std::log(norm);
  }
  return m;
}

Messages forward_backward(const Trajectory& traj, const IohmmParams& params,
                          const StopSet& stops) {
  Messages fwd = forward_messages(traj, params, stops);
  Messages bwd = backward_messages(traj, params, stops);
  fwd.beta = std::move(bwd.beta);
  fwd.beta_log_scale = std::move(bwd.beta_log_scale);
  return fwd;
}

Eigen::MatrixXd state_marginals(const Messages& msgs) {
  if (msgs.alpha.rows() == 0 || msgs.beta.rows() != msgs.alpha.rows())
    throw std::invalid_argument("state_marginals: messages incomplete");
  const int n = static_cast<int>(msgs.alpha.rows());
  const int S = static_cast<int>(msgs.alpha.cols());
  Eigen::MatrixXd gamma(n, S);
  for (int t = 0; t < n; ++t) {
    Eigen::VectorXd g = msgs.alpha.row(t).cwiseProduct(msgs.beta.row(t)).transpose();
    const double norm = g.sum();
    if (norm <= kZeroLikelihoodFloor)
      throw ZeroLikelihood("state marginals: normalizer underflow", t);
    gamma.row(t) = g.transpose() / norm;
  }
  return gamma;
}

std::vector<Eigen::MatrixXd> transition_marginals(const Messages& msgs, const Trajectory& traj,
                                                  const IohmmParams& params,
                                                  const StopSet& stops) {
  const int S = params.n_states();
  const int tau = traj.length();
  if (msgs.alpha.rows() != tau + 1 || msgs.beta.rows() != tau + 1)
    throw std::invalid_argument("transition_marginals: messages incomplete");
  std::vector<Eigen::MatrixXd> xi;
  xi.reserve(tau);
  for (int t = 0; t < tau; ++t) {
    const auto [a, z] = traj.steps[t];
    const bool stop = is_stop_action(stops, a);
    Eigen::MatrixXd table(S, S);
    for (int s = 0; s < S; ++s) {
      const double* trow = params.transition.row(s, a);
      for (int s2 = 0; s2 < S; ++s2) {
        const double o = stop ? 1.0 : params.obs(z, a, s2);
        table(s, s2) = msgs.alpha(t, s) * trow[s2] * o * msgs.beta(t + 1, s2);
      }
    }
    const double norm = table.sum();
    if (norm <= kZeroLikelihoodFloor)
      throw ZeroLikelihood("transition marginals: normalizer underflow", t);
    table /= norm;
    xi.push_back(std::move(table));
  }
  return xi;
}

Posteriors smooth(const Trajectory& traj, const IohmmParams& params, const StopSet& stops) {
  const Messages msgs = forward_backward(traj, params, stops);
  Posteriors post;
  post.gamma = state_marginals(msgs);
  post.xi = transition_marginals(msgs, traj, params, stops);
  post.log_likelihood = msgs.observation_log_likelihood();
  return post;
}

}  // namespace interpole
