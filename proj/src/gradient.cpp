#include "interpole/gradient.hpp"

#include <cmath>

#include "interpole/parallel.hpp"

namespace interpole {

namespace {

// Parameter entries are floored inside log/ratio terms only; EM iterates may
// touch the simplex boundary.
constexpr double kRatioFloor = 1e-12;

double safe_ratio(double weight, double param) {
  return weight / std::max(param, kRatioFloor);
}

}  // namespace

ThetaGradient ThetaGradient::zeros(int S, int A, int Z) {
  ThetaGradient g;
  g.d_transition = Tensor3(S, A, S, 0.0);
  g.d_observation = Tensor3(A, S, Z, 0.0);
  g.d_initial = Eigen::VectorXd::Zero(S);
  g.d_eta = 0.0;
  g.d_means.assign(A, Eigen::VectorXd::Zero(S));
  return g;
}

void ThetaGradient::add(const ThetaGradient& other) {
  if (!d_transition.same_shape(other.d_transition) ||
      !d_observation.same_shape(other.d_observation))
    throw std::invalid_argument("ThetaGradient::add: shape mismatch");
  for (size_t i = 0; i < d_transition.data().size(); ++i)
    d_transition.data()[i] += other.d_transition.data()[i];
  for (size_t i = 0; i < d_observation.data().size(); ++i)
    d_observation.data()[i] += other.d_observation.data()[i];
  d_initial += other.d_initial;
  d_eta += other.d_eta;
  for (size_t a = 0; a < d_means.size(); ++a) d_means[a] += other.d_means[a];
}

void ThetaGradient::apply_freeze(const FreezeMask& mask) {
  if (mask.transition)
    for (auto& v : d_transition.data()) v = 0.0;
  if (mask.observation)
    for (auto& v : d_observation.data()) v = 0.0;
  if (mask.initial) d_initial.setZero();
  if (mask.eta) d_eta = 0.0;
  if (mask.means)
    for (auto& mu : d_means) mu.setZero();
}

void ThetaGradient::project_to_tangent() {
  const int S = d_transition.dim0();
  const int A = d_transition.dim1();
  const int Z = d_observation.dim2();
  auto center = [](double* row, int n) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += row[i];
    mean /= n;
    for (int i = 0; i < n; ++i) row[i] -= mean;
  };
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) center(d_transition.row(s, a), S);
  for (int a = 0; a < A; ++a)
    for (int s2 = 0; s2 < S; ++s2) center(d_observation.row(a, s2), Z);
  d_initial.array() -= d_initial.mean();
  for (auto& mu : d_means) mu.array() -= mu.mean();
}

bool ThetaGradient::all_finite() const {
  for (double v : d_transition.data())
    if (!std::isfinite(v)) return false;
  for (double v : d_observation.data())
    if (!std::isfinite(v)) return false;
  if (!d_initial.allFinite() || !std::isfinite(d_eta)) return false;
  for (const auto& mu : d_means)
    if (!mu.allFinite()) return false;
  return true;
}

EStep e_step(const Dataset& data, const ThetaEstimate& theta, int workers) {
  EStep out;
  out.posteriors.resize(data.size());
  parallel_for(data.size(), workers, [&](int i) {
    try {
      out.posteriors[i] = smooth(data.trajectories[i], theta.params, data.stop_actions);
    } catch (const ZeroLikelihood& e) {
      throw e.with_trajectory(i);
    }
  });
  out.total_log_likelihood = 0.0;
  for (const auto& p : out.posteriors) out.total_log_likelihood += p.log_likelihood;
  return out;
}

double expected_log_likelihood(const ThetaEstimate& theta, const EStep& estep,
                               const Dataset& data) {
  if (static_cast<int>(estep.posteriors.size()) != data.size())
    throw std::invalid_argument("expected_log_likelihood: posterior count mismatch");
  const IohmmParams& p = theta.params;
  double q = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    const Trajectory& traj = data.trajectories[i];
    const Posteriors& post = estep.posteriors[i];
    BeliefTrajectory bt;
    try {
      bt = belief_trajectory(traj, p, data.stop_actions);
    } catch (const ZeroLikelihood& e) {
      throw e.with_trajectory(i);
    }

    const int tau = traj.length();
    for (int t = 0; t < tau; ++t)
      q += log_prob(bt.beliefs[t], traj.steps[t].first, theta.policy);

    for (int s = 0; s < p.n_states(); ++s) {
      const double w = post.gamma(0, s);
      if (w <= 0.0) continue;
      const double v = p.initial[s];
      if (v <= 0.0)
        throw NonFiniteValue("expected_log_likelihood: log(0) with positive weight", "initial");
      q += w * std::log(v);
    }

    for (int t = 0; t < tau; ++t) {
      const auto [a, z] = traj.steps[t];
      const bool stop = is_stop_action(data.stop_actions, a);
      const Eigen::MatrixXd& xi = post.xi[t];
      for (int s = 0; s < p.n_states(); ++s) {
        for (int s2 = 0; s2 < p.n_states(); ++s2) {
          const double w = xi(s, s2);
          if (w <= 0.0) continue;
          const double v = p.trans(s, a, s2);
          if (v <= 0.0)
            throw NonFiniteValue("expected_log_likelihood: log(0) with positive weight",
                                 "transition");
          q += w * std::log(v);
        }
      }
      if (stop) continue;
      for (int s2 = 0; s2 < p.n_states(); ++s2) {
        const double w = post.gamma(t + 1, s2);
        if (w <= 0.0) continue;
        const double v = p.obs(z, a, s2);
        if (v <= 0.0)
          throw NonFiniteValue("expected_log_likelihood: log(0) with positive weight",
                               "observation");
        q += w * std::log(v);
      }
    }
  }
  if (!std::isfinite(q))
    throw NonFiniteValue("expected_log_likelihood: non-finite total", "total");
  return q;
}

std::vector<Eigen::MatrixXd> belief_jacobians(const std::vector<Belief>& beliefs,
                                              const Trajectory& traj,
                                              const IohmmParams& params,
                                              const StopSet& stops) {
  const int S = params.n_states();
  const int tau = traj.length();
  if (static_cast<int>(beliefs.size()) != tau + 1)
    throw std::invalid_argument("belief_jacobians: belief count mismatch");
  std::vector<Eigen::MatrixXd> jac;
  jac.reserve(tau);
  for (int t = 0; t < tau; ++t) {
    const auto [a, z] = traj.steps[t];
    Eigen::MatrixXd J(S, S);
    if (is_stop_action(stops, a)) {
      // Prediction-only propagation is linear: d b'(i) / d b(j) = T(i|j,a).
      for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j) J(i, j) = params.trans(j, a, i);
    } else {
      const Belief& b = beliefs[t];
      const Belief& bn = beliefs[t + 1];
      double denom = 0.0;
      for (int i = 0; i < S; ++i) {
        double m = 0.0;
        for (int x = 0; x < S; ++x) m += b[x] * params.trans(x, a, i);
        denom += m * params.obs(z, a, i);
      }
      if (denom <= kZeroLikelihoodFloor)
        throw ZeroLikelihood("belief jacobian: zero-likelihood step", t);
      Eigen::VectorXd colsum(S);  // sum_{x'} T(x'|j,a) O(z|a,x')
      for (int j = 0; j < S; ++j) {
        double acc = 0.0;
        for (int x2 = 0; x2 < S; ++x2) acc += params.trans(j, a, x2) * params.obs(z, a, x2);
        colsum[j] = acc;
      }
      for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j)
          J(i, j) = (params.trans(j, a, i) * params.obs(z, a, i) - bn[i] * colsum[j]) / denom;
    }
    jac.push_back(std::move(J));
  }
  return jac;
}

namespace {

// Gradient contribution of a single trajectory. Action-likelihood terms
// couple to the dynamics through the belief recursion; that coupling is
// accumulated with one vector-Jacobian product per step (reverse pass)
// instead of materializing all pairwise Jacobian chains.
ThetaGradient trajectory_gradient(const Trajectory& traj, const Posteriors& post,
                                  const ThetaEstimate& theta, const StopSet& stops) {
  const IohmmParams& p = theta.params;
  const BoundaryPolicy& pol = theta.policy;
  const int S = p.n_states();
  const int A = p.n_actions();
  const int Z = p.n_observations();
  const int tau = traj.length();

  ThetaGradient g = ThetaGradient::zeros(S, A, Z);

  const BeliefTrajectory bt = belief_trajectory(traj, p, stops);
  const std::vector<Eigen::MatrixXd> jac = belief_jacobians(bt.beliefs, traj, p, stops);

  // Action-block gradients and the per-step d log pi / d b rows.
  std::vector<Eigen::VectorXd> glog(tau);
  for (int t = 0; t < tau; ++t) {
    const int a_t = traj.steps[t].first;
    const Belief& b = bt.beliefs[t];
    const Eigen::VectorXd d2 = squared_distances(b, pol);
    const ActionDistribution pi = action_distribution(b, pol);

    double eta_term = -d2[a_t];
    for (int a = 0; a < A; ++a) eta_term += pi[a] * d2[a];
    g.d_eta += eta_term;

    Eigen::VectorXd row = -2.0 * pol.eta * (b.vec() - pol.means[a_t]);
    for (int a = 0; a < A; ++a) {
      const Eigen::VectorXd diff = b.vec() - pol.means[a];
      const double ind = (a == a_t) ? 1.0 : 0.0;
      g.d_means[a] += 2.0 * pol.eta * (ind - pi[a]) * diff;
      row += 2.0 * pol.eta * pi[a] * diff;
    }
    glog[t] = std::move(row);
  }

  // Reverse accumulation: v[k] = sum_{t >= k} glog[t] * (d b_t / d b_k),
  // with v[tau] = 0 (no action follows the final belief).
  std::vector<Eigen::VectorXd> v(tau + 1);
  v[tau] = Eigen::VectorXd::Zero(S);
  for (int k = tau - 1; k >= 0; --k) v[k] = glog[k] + jac[k].transpose() * v[k + 1];

  for (int s = 0; s < S; ++s)
    g.d_initial[s] = safe_ratio(post.gamma(0, s), p.initial[s]) + v[0][s];

  for (int t = 0; t < tau; ++t) {
    const auto [a, z] = traj.steps[t];
    const bool stop = is_stop_action(stops, a);
    const Eigen::VectorXd& w = v[t + 1];
    const Belief& b = bt.beliefs[t];
    const Eigen::MatrixXd& xi = post.xi[t];

    for (int s = 0; s < S; ++s)
      for (int s2 = 0; s2 < S; ++s2)
        g.d_transition(s, a, s2) += safe_ratio(xi(s, s2), p.trans(s, a, s2));

    if (stop) {
      // d b'(i) / d T(s'|s,a) = I{i=s'} b(s) for the prediction-only update.
      for (int s = 0; s < S; ++s) {
        if (b[s] == 0.0) continue;
        for (int s2 = 0; s2 < S; ++s2) g.d_transition(s, a, s2) += w[s2] * b[s];
      }
      continue;
    }

    for (int s2 = 0; s2 < S; ++s2)
      g.d_observation(a, s2, z) += safe_ratio(post.gamma(t + 1, s2), p.obs(z, a, s2));

    Eigen::VectorXd m = Eigen::VectorXd::Zero(S);
    for (int s = 0; s < S; ++s) {
      if (b[s] == 0.0) continue;
      const double* trow = p.transition.row(s, a);
      for (int s2 = 0; s2 < S; ++s2) m[s2] += b[s] * trow[s2];
    }
    double denom = 0.0;
    for (int s2 = 0; s2 < S; ++s2) denom += m[s2] * p.obs(z, a, s2);

    const Belief& bn = bt.beliefs[t + 1];
    const double wc = w.dot(bn.vec());
    // coef(i) = (w(i) - w . b') / D is the adjoint of the unnormalized
    // posterior numerator through the normalization.
    Eigen::VectorXd coef(S);
    for (int s2 = 0; s2 < S; ++s2) coef[s2] = (w[s2] - wc) / denom;

    for (int s = 0; s < S; ++s) {
      if (b[s] == 0.0) continue;
      for (int s2 = 0; s2 < S; ++s2)
        g.d_transition(s, a, s2) += coef[s2] * b[s] * p.obs(z, a, s2);
    }
    for (int s2 = 0; s2 < S; ++s2) g.d_observation(a, s2, z) += coef[s2] * m[s2];
  }

  return g;
}

}  // namespace

ThetaGradient grad_Q(const ThetaEstimate& theta, const EStep& estep, const Dataset& data,
                     int workers) {
  if (static_cast<int>(estep.posteriors.size()) != data.size())
    throw std::invalid_argument("grad_Q: posterior count mismatch");
  const int n = data.size();
  std::vector<ThetaGradient> parts(n);
  parallel_for(n, workers, [&](int i) {
    try {
      parts[i] =
          trajectory_gradient(data.trajectories[i], estep.posteriors[i], theta, data.stop_actions);
    } catch (const ZeroLikelihood& e) {
      throw e.with_trajectory(i);
    }
  });
  ThetaGradient total =
      ThetaGradient::zeros(theta.n_states(), theta.n_actions(), theta.n_observations());
  for (int i = 0; i < n; ++i) total.add(parts[i]);  // fixed trajectory order
  total.apply_freeze(theta.frozen);
  if (!total.all_finite())
    throw NonFiniteValue("grad_Q: non-finite gradient", "gradient");
  return total;
}

ThetaEstimate permute_states(const ThetaEstimate& theta, const std::vector<int>& perm) {
  const int S = theta.n_states();
  if (static_cast<int>(perm.size()) != S)
    throw std::invalid_argument("permute_states: permutation size mismatch");
  const int A = theta.n_actions();
  const int Z = theta.n_observations();
  Tensor3 T(S, A, S);
  Tensor3 O(A, S, Z);
  Eigen::VectorXd b1(S);
  for (int i = 0; i < S; ++i) {
    b1[i] = theta.params.initial[perm[i]];
    for (int a = 0; a < A; ++a) {
      for (int j = 0; j < S; ++j) T(i, a, j) = theta.params.trans(perm[i], a, perm[j]);
      for (int z = 0; z < Z; ++z) O(a, i, z) = theta.params.obs(z, a, perm[i]);
    }
  }
  std::vector<Eigen::VectorXd> means(A);
  for (int a = 0; a < A; ++a) {
    means[a] = Eigen::VectorXd(S);
    for (int i = 0; i < S; ++i) means[a][i] = theta.policy.means[a][perm[i]];
  }
  ThetaEstimate out{IohmmParams(std::move(T), std::move(O), Belief(std::move(b1))),
                    BoundaryPolicy(theta.policy.eta, std::move(means)), theta.frozen};
  return out;
}

}  // namespace interpole
