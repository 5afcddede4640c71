// Test-only oracles, independent of the library's inference and gradient
// paths: exhaustive enumeration over latent state sequences, hand Bayes-rule
// updates, central finite differences, and the naive product-form
// backpropagation chain.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "interpole/gradient.hpp"
#include "interpole/learner.hpp"

namespace oracles {

using namespace interpole;

// ---------------------------------------------------------------------------
// Exhaustive enumeration over all state sequences of length tau+1.

struct Enumeration {
  std::vector<std::vector<int>> paths;
  std::vector<double> path_weight;  // observation-likelihood weight per path
  double total_weight = 0.0;
};

inline double path_weight(const std::vector<int>& path, const Trajectory& traj,
                          const IohmmParams& p, const StopSet& stops) {
  double w = p.initial[path[0]];
  for (int t = 0; t < traj.length(); ++t) {
    const auto [a, z] = traj.steps[t];
    w *= p.trans(path[t], a, path[t + 1]);
    if (!is_stop_action(stops, a)) w *= p.obs(z, a, path[t + 1]);
  }
  return w;
}

inline Enumeration enumerate_paths(const Trajectory& traj, const IohmmParams& p,
                                   const StopSet& stops) {
  const int S = p.n_states();
  const int tau = traj.length();
  Enumeration e;
  std::vector<int> path(tau + 1, 0);
  std::function<void(int)> rec = [&](int depth) {
    if (depth == tau + 1) {
      const double w = path_weight(path, traj, p, stops);
      e.paths.push_back(path);
      e.path_weight.push_back(w);
      e.total_weight += w;
      return;
    }
    for (int s = 0; s < S; ++s) {
      path[depth] = s;
      rec(depth + 1);
    }
  };
  rec(0);
  return e;
}

// Posterior state marginals gamma by enumeration under params.
inline Eigen::MatrixXd enum_gamma(const Trajectory& traj, const IohmmParams& p,
                                  const StopSet& stops) {
  const Enumeration e = enumerate_paths(traj, p, stops);
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(traj.length() + 1, p.n_states());
  for (size_t i = 0; i < e.paths.size(); ++i)
    for (int t = 0; t <= traj.length(); ++t)
      gamma(t, e.paths[i][t]) += e.path_weight[i] / e.total_weight;
  return gamma;
}

inline std::vector<Eigen::MatrixXd> enum_xi(const Trajectory& traj, const IohmmParams& p,
                                            const StopSet& stops) {
  const Enumeration e = enumerate_paths(traj, p, stops);
  std::vector<Eigen::MatrixXd> xi(traj.length(),
                                  Eigen::MatrixXd::Zero(p.n_states(), p.n_states()));
  for (size_t i = 0; i < e.paths.size(); ++i)
    for (int t = 0; t < traj.length(); ++t)
      xi[t](e.paths[i][t], e.paths[i][t + 1]) += e.path_weight[i] / e.total_weight;
  return xi;
}

// Observation log-likelihood by enumeration.
inline double enum_log_likelihood(const Trajectory& traj, const IohmmParams& p,
                                  const StopSet& stops) {
  return std::log(enumerate_paths(traj, p, stops).total_weight);
}

// Action log-likelihood along deterministic beliefs.
inline double action_log_likelihood(const Trajectory& traj, const ThetaEstimate& theta,
                                    const StopSet& stops) {
  const BeliefTrajectory bt = belief_trajectory(traj, theta.params, stops);
  double ll = 0.0;
  for (int t = 0; t < traj.length(); ++t)
    ll += log_prob(bt.beliefs[t], traj.steps[t].first, theta.policy);
  return ll;
}

// Expected complete-data log-likelihood by enumeration: posterior weights
// under theta_hat, complete log-likelihood under theta.
inline double enum_Q(const Trajectory& traj, const ThetaEstimate& theta,
                     const ThetaEstimate& theta_hat, const StopSet& stops) {
  const Enumeration post = enumerate_paths(traj, theta_hat.params, stops);
  double q = action_log_likelihood(traj, theta, stops);
  for (size_t i = 0; i < post.paths.size(); ++i) {
    const double w = post.path_weight[i] / post.total_weight;
    if (w <= 0.0) continue;
    const std::vector<int>& path = post.paths[i];
    double lw = std::log(theta.params.initial[path[0]]);
    for (int t = 0; t < traj.length(); ++t) {
      const auto [a, z] = traj.steps[t];
      lw += std::log(theta.params.trans(path[t], a, path[t + 1]));
      if (!is_stop_action(stops, a)) lw += std::log(theta.params.obs(z, a, path[t + 1]));
    }
    q += w * lw;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Central finite differences of Q along constraint-tangent directions.

struct FdCheck {
  double analytic;
  double numeric;
  bool ok(double rel_tol = 1e-5, double abs_floor = 1e-8) const {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    return std::abs(analytic - numeric) <= std::max(abs_floor, rel_tol * scale);
  }
};

// Evaluates Q at a perturbed copy of theta; the perturbation is applied to a
// single block coordinate along a tangent direction d (sum zero for
// probability rows and means), so the bundle stays on its affine hull.
using ThetaEditor = std::function<void(RawTheta&, double)>;

inline ThetaEstimate apply_raw(const RawTheta& raw, const ThetaEstimate& like) {
  // Bypasses projection: the raw bundle must already satisfy the constraints
  // up to sign (small negative entries from perturbation are rejected by
  // validation, so tests keep parameters interior).
  return ThetaEstimate{
      IohmmParams(raw.transition, raw.observation, Belief(raw.initial)),
      BoundaryPolicy(raw.eta, raw.means), like.frozen};
}

inline double fd_directional(const ThetaEstimate& theta, const EStep& estep,
                             const Dataset& data, const ThetaEditor& edit, double h = 1e-6) {
  RawTheta plus = RawTheta::from(theta);
  edit(plus, h);
  RawTheta minus = RawTheta::from(theta);
  edit(minus, -h);
  const double qp = expected_log_likelihood(apply_raw(plus, theta), estep, data);
  const double qm = expected_log_likelihood(apply_raw(minus, theta), estep, data);
  return (qp - qm) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// Naive product-form gradient of the action-likelihood coupling: materializes
// every Jacobian chain grad_{b_{t'+1}} b_t explicitly.

inline ThetaGradient naive_btt_gradient(const Trajectory& traj, const ThetaEstimate& theta,
                                        const StopSet& stops) {
  const IohmmParams& p = theta.params;
  const int S = p.n_states();
  const int tau = traj.length();
  ThetaGradient g = ThetaGradient::zeros(S, p.n_actions(), p.n_observations());

  const BeliefTrajectory bt = belief_trajectory(traj, p, stops);
  const std::vector<Eigen::MatrixXd> jac = belief_jacobians(bt.beliefs, traj, p, stops);

  std::vector<Eigen::VectorXd> glog(tau);
  for (int t = 0; t < tau; ++t)
    glog[t] = grad_log_prob_belief(bt.beliefs[t], traj.steps[t].first, theta.policy);

  // chain(k, t) = grad_{b_k} b_t as an explicit matrix product.
  auto chain = [&](int k, int t) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(S, S);
    for (int u = k; u < t; ++u) J = jac[u] * J;
    return J;
  };

  // d b_{t'+1} / d param for a single step, as explicit vectors.
  for (int tp = 0; tp < tau; ++tp) {
    const auto [a, z] = traj.steps[tp];
    const bool stop = is_stop_action(stops, a);
    const Belief& b = bt.beliefs[tp];
    const Belief& bn = bt.beliefs[tp + 1];

    double denom = 1.0;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(S);
    for (int i = 0; i < S; ++i)
      for (int x = 0; x < S; ++x) m[i] += b[x] * p.trans(x, a, i);
    if (!stop) {
      denom = 0.0;
      for (int i = 0; i < S; ++i) denom += m[i] * p.obs(z, a, i);
    }

    // Accumulate sum_{t > tp} glog[t] chain(tp+1, t) once.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(S);
    for (int t = tp + 1; t < tau; ++t) w += chain(tp + 1, t).transpose() * glog[t];

    for (int s = 0; s < S; ++s)
      for (int s2 = 0; s2 < S; ++s2) {
        Eigen::VectorXd db = Eigen::VectorXd::Zero(S);
        if (stop) {
          db[s2] = b[s];
        } else {
          for (int i = 0; i < S; ++i) {
            const double direct = (i == s2) ? b[s] * p.obs(z, a, s2) : 0.0;
            db[i] = (direct - bn[i] * b[s] * p.obs(z, a, s2)) / denom;
          }
        }
        g.d_transition(s, a, s2) += w.dot(db);
      }

    if (!stop) {
      for (int s2 = 0; s2 < S; ++s2) {
        Eigen::VectorXd db = Eigen::VectorXd::Zero(S);
        for (int i = 0; i < S; ++i) {
          const double direct = (i == s2) ? m[s2] : 0.0;
          db[i] = (direct - bn[i] * m[s2]) / denom;
        }
        g.d_observation(a, s2, z) += w.dot(db);
      }
    }
  }

  // Initial-belief coupling: sum_t glog[t] chain(0, t).
  for (int t = 0; t < tau; ++t) g.d_initial += chain(0, t).transpose() * glog[t];

  return g;
}

// ---------------------------------------------------------------------------
// Random interior instances.

inline Eigen::VectorXd interior_simplex(Rng& rng, int n, double mix = 0.5) {
  Eigen::VectorXd v = rng.simplex_uniform(n);
  return mix * v + (1.0 - mix) * Eigen::VectorXd::Constant(n, 1.0 / n);
}

inline IohmmParams random_params(Rng& rng, int S, int A, int Z) {
  Tensor3 T(S, A, S);
  Tensor3 O(A, S, Z);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const Eigen::VectorXd row = interior_simplex(rng, S);
      for (int s2 = 0; s2 < S; ++s2) T(s, a, s2) = row[s2];
    }
  for (int a = 0; a < A; ++a)
    for (int s2 = 0; s2 < S; ++s2) {
      const Eigen::VectorXd row = interior_simplex(rng, Z);
      for (int z = 0; z < Z; ++z) O(a, s2, z) = row[z];
    }
  return IohmmParams(std::move(T), std::move(O), Belief(interior_simplex(rng, S)));
}

inline BoundaryPolicy random_policy(Rng& rng, int S, int A, double eta_max = 4.0) {
  std::vector<Eigen::VectorXd> means;
  for (int a = 0; a < A; ++a) {
    Eigen::VectorXd mu(S);
    for (int s = 0; s < S; ++s) mu[s] = rng.uniform() - 0.2;
    mu.array() -= (mu.sum() - 1.0) / S;
    means.push_back(std::move(mu));
  }
  return BoundaryPolicy(rng.uniform() * eta_max, std::move(means));
}

inline Trajectory random_trajectory(Rng& rng, int tau, int A, int Z,
                                    const StopSet& stops = {}, bool end_with_stop = false) {
  Trajectory traj;
  for (int t = 0; t < tau; ++t) {
    int a = rng.uniform_int(A);
    if (!end_with_stop)
      while (is_stop_action(stops, a)) a = rng.uniform_int(A);
    const bool last = (t == tau - 1);
    if (end_with_stop && last && !stops.empty())
      a = stops[rng.uniform_int(static_cast<int>(stops.size()))];
    else if (end_with_stop)
      while (is_stop_action(stops, a)) a = rng.uniform_int(A);
    traj.steps.emplace_back(a, is_stop_action(stops, a) ? 0 : rng.uniform_int(Z));
  }
  return traj;
}

}  // namespace oracles
