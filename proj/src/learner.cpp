#include "interpole/learner.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>

#include "interpole/rng.hpp"

namespace interpole {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr int kMaxBacktracks = 10;
constexpr double kFloor = 1e-12;

double neg_inf() { return -std::numeric_limits<double>::infinity(); }

template <typename F>
void zip_blocks(RawTheta& r, const ThetaGradient& g, F&& f) {
  for (size_t i = 0; i < r.transition.data().size(); ++i)
    f(r.transition.data()[i], g.d_transition.data()[i]);
  for (size_t i = 0; i < r.observation.data().size(); ++i)
    f(r.observation.data()[i], g.d_observation.data()[i]);
  for (int i = 0; i < r.initial.size(); ++i) f(r.initial[i], g.d_initial[i]);
  f(r.eta, g.d_eta);
  for (size_t a = 0; a < r.means.size(); ++a)
    for (int i = 0; i < r.means[a].size(); ++i) f(r.means[a][i], g.d_means[a][i]);
}

struct AdamState {
  ThetaGradient m;
  ThetaGradient v;
  int t = 0;

  static AdamState zeros(int S, int A, int Z) {
    return {ThetaGradient::zeros(S, A, Z), ThetaGradient::zeros(S, A, Z), 0};
  }

  /// One adaptive-moment ascent direction (already scaled by the learning
  /// rate); moments update on every computed gradient.
  RawTheta direction(const ThetaGradient& g, const RawTheta& shape, double lr) {
    ++t;
    RawTheta dir = shape;  // copy for shape; every entry overwritten below
    const double c1 = 1.0 - std::pow(kAdamBeta1, t);
    const double c2 = 1.0 - std::pow(kAdamBeta2, t);
    auto upd = [&](double& mm, double& vv, double gg) {
      mm = kAdamBeta1 * mm + (1.0 - kAdamBeta1) * gg;
      vv = kAdamBeta2 * vv + (1.0 - kAdamBeta2) * gg * gg;
      return lr * (mm / c1) / (std::sqrt(vv / c2) + kAdamEps);
    };
    for (size_t i = 0; i < dir.transition.data().size(); ++i)
      dir.transition.data()[i] = upd(m.d_transition.data()[i], v.d_transition.data()[i],
                                     g.d_transition.data()[i]);
    for (size_t i = 0; i < dir.observation.data().size(); ++i)
      dir.observation.data()[i] = upd(m.d_observation.data()[i], v.d_observation.data()[i],
                                      g.d_observation.data()[i]);
    for (int i = 0; i < dir.initial.size(); ++i)
      dir.initial[i] = upd(m.d_initial[i], v.d_initial[i], g.d_initial[i]);
    dir.eta = upd(m.d_eta, v.d_eta, g.d_eta);
    for (size_t a = 0; a < dir.means.size(); ++a)
      for (int i = 0; i < dir.means[a].size(); ++i)
        dir.means[a][i] = upd(m.d_means[a][i], v.d_means[a][i], g.d_means[a][i]);
    return dir;
  }
};

RawTheta raw_plus_scaled(const RawTheta& base, const RawTheta& dir, double scale) {
  RawTheta out = base;
  for (size_t i = 0; i < out.transition.data().size(); ++i)
    out.transition.data()[i] += scale * dir.transition.data()[i];
  for (size_t i = 0; i < out.observation.data().size(); ++i)
    out.observation.data()[i] += scale * dir.observation.data()[i];
  out.initial += scale * dir.initial;
  out.eta += scale * dir.eta;
  for (size_t a = 0; a < out.means.size(); ++a) out.means[a] += scale * dir.means[a];
  return out;
}

}  // namespace

double log_prior(const ThetaEstimate& theta, const Prior& prior) {
  prior.validate();
  double lp = 0.0;
  auto dirichlet_term = [&](double conc, const Tensor3& t) {
    if (conc == 1.0) return;
    for (double v : t.data()) lp += (conc - 1.0) * std::log(std::max(v, kFloor));
  };
  dirichlet_term(prior.dirichlet_transition, theta.params.transition);
  dirichlet_term(prior.dirichlet_observation, theta.params.observation);
  if (prior.dirichlet_initial != 1.0)
    for (int s = 0; s < theta.n_states(); ++s)
      lp += (prior.dirichlet_initial - 1.0) * std::log(std::max(theta.params.initial[s], kFloor));
  if (prior.eta_log_normal) {
    const auto [m, sd] = *prior.eta_log_normal;
    const double le = std::log(std::max(theta.policy.eta, kFloor));
    lp += -(le - m) * (le - m) / (2.0 * sd * sd) - le;
  }
  if (prior.means_normal_sd) {
    const double sd = *prior.means_normal_sd;
    for (const auto& mu : theta.policy.means) lp -= mu.squaredNorm() / (2.0 * sd * sd);
  }
  return lp;
}

ThetaGradient grad_log_prior(const ThetaEstimate& theta, const Prior& prior) {
  ThetaGradient g =
      ThetaGradient::zeros(theta.n_states(), theta.n_actions(), theta.n_observations());
  auto dirichlet_grad = [](double conc, const Tensor3& t, Tensor3& out) {
    if (conc == 1.0) return;
    for (size_t i = 0; i < t.data().size(); ++i)
      out.data()[i] = (conc - 1.0) / std::max(t.data()[i], kFloor);
  };
  dirichlet_grad(prior.dirichlet_transition, theta.params.transition, g.d_transition);
  dirichlet_grad(prior.dirichlet_observation, theta.params.observation, g.d_observation);
  if (prior.dirichlet_initial != 1.0)
    for (int s = 0; s < theta.n_states(); ++s)
      g.d_initial[s] =
          (prior.dirichlet_initial - 1.0) / std::max(theta.params.initial[s], kFloor);
  if (prior.eta_log_normal) {
    const auto [m, sd] = *prior.eta_log_normal;
    const double eta = std::max(theta.policy.eta, kFloor);
    g.d_eta = (-(std::log(eta) - m) / (sd * sd) - 1.0) / eta;
  }
  if (prior.means_normal_sd) {
    const double sd = *prior.means_normal_sd;
    for (int a = 0; a < theta.n_actions(); ++a)
      g.d_means[a] = -theta.policy.means[a] / (sd * sd);
  }
  return g;
}

RawTheta RawTheta::from(const ThetaEstimate& theta) {
  RawTheta r;
  r.transition = theta.params.transition;
  r.observation = theta.params.observation;
  r.initial = theta.params.initial.vec();
  r.eta = theta.policy.eta;
  r.means = theta.policy.means;
  return r;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double lambda = 0.0;
  int rho = 0;
  for (int j = 0; j < n; ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - 1.0) / (j + 1);
    if (u[j] - candidate > 0) {
      rho = j + 1;
      lambda = candidate;
    }
  }
  (void)rho;
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = std::max(v[i] - lambda, 0.0);
  return out;
}

ThetaEstimate project(const RawTheta& raw, const ThetaEstimate& reference) {
  const int S = reference.n_states();
  const int A = reference.n_actions();
  const int Z = reference.n_observations();
  Tensor3 T(S, A, S);
  Tensor3 O(A, S, Z);

  if (reference.frozen.transition) {
    T = reference.params.transition;
  } else {
    Eigen::VectorXd row(S);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        for (int s2 = 0; s2 < S; ++s2) row[s2] = raw.transition(s, a, s2);
        const Eigen::VectorXd proj = project_to_simplex(row);
        for (int s2 = 0; s2 < S; ++s2) T(s, a, s2) = proj[s2];
      }
  }
  if (reference.frozen.observation) {
    O = reference.params.observation;
  } else {
    Eigen::VectorXd row(Z);
    for (int a = 0; a < A; ++a)
      for (int s2 = 0; s2 < S; ++s2) {
        for (int z = 0; z < Z; ++z) row[z] = raw.observation(a, s2, z);
        const Eigen::VectorXd proj = project_to_simplex(row);
        for (int z = 0; z < Z; ++z) O(a, s2, z) = proj[z];
      }
  }
  Belief b1 = reference.frozen.initial ? reference.params.initial
                                       : Belief(project_to_simplex(raw.initial));
  const double eta = reference.frozen.eta ? reference.policy.eta : std::max(raw.eta, 0.0);
  std::vector<Eigen::VectorXd> means;
  if (reference.frozen.means) {
    means = reference.policy.means;
  } else {
    means.reserve(A);
    for (int a = 0; a < A; ++a) {
      Eigen::VectorXd mu = raw.means[a];
      mu.array() -= (mu.sum() - 1.0) / S;
      means.push_back(std::move(mu));
    }
  }
  return ThetaEstimate{IohmmParams(std::move(T), std::move(O), std::move(b1)),
                       BoundaryPolicy(eta, std::move(means)), reference.frozen};
}

double log_posterior(const ThetaEstimate& theta, const Dataset& data, const Prior& prior) {
  double lp = log_prior(theta, prior);
  for (int i = 0; i < data.size(); ++i) {
    const Trajectory& traj = data.trajectories[i];
    Messages fwd;
    try {
      fwd = forward_messages(traj, theta.params, data.stop_actions);
    } catch (const ZeroLikelihood& e) {
      throw e.with_trajectory(i);
    }
    lp += fwd.observation_log_likelihood();
    // The normalized forward messages are exactly the subjective beliefs, so
    // the action likelihoods reuse them.
    for (int t = 0; t < traj.length(); ++t)
      lp += log_prob(Belief(fwd.alpha.row(t).transpose()), traj.steps[t].first, theta.policy);
  }
  return lp;
}

ThetaEstimate init_random(const Spaces& spaces, std::uint64_t seed, const FreezeMask& freeze,
                          const KnownValues& known) {
  spaces.validate();
  Rng rng(seed);
  const int S = spaces.n_states;
  const int A = spaces.n_actions;
  const int Z = spaces.n_observations;

  Tensor3 T(S, A, S);
  if (known.transition) {
    T = *known.transition;
  } else {
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const Eigen::VectorXd row = rng.simplex_uniform(S);
        for (int s2 = 0; s2 < S; ++s2) T(s, a, s2) = row[s2];
      }
  }
  Tensor3 O(A, S, Z);
  if (known.observation) {
    O = *known.observation;
  } else {
    for (int a = 0; a < A; ++a)
      for (int s2 = 0; s2 < S; ++s2) {
        const Eigen::VectorXd row = rng.simplex_uniform(Z);
        for (int z = 0; z < Z; ++z) O(a, s2, z) = row[z];
      }
  }
  Belief b1 = known.initial ? Belief(*known.initial) : Belief(rng.simplex_uniform(S));
  const double eta = known.eta ? *known.eta : 1.0;
  std::vector<Eigen::VectorXd> means;
  if (known.means) {
    means = *known.means;
  } else {
    means.reserve(A);
    for (int a = 0; a < A; ++a) {
      Eigen::VectorXd mu(S);
      for (int s = 0; s < S; ++s) mu[s] = 1.0 / S + 0.001 * rng.normal();
      mu /= mu.sum();
      means.push_back(std::move(mu));
    }
  }
  return ThetaEstimate{IohmmParams(std::move(T), std::move(O), std::move(b1)),
                       BoundaryPolicy(eta, std::move(means)), freeze};
}

FitReport fit(const Dataset& data, const ThetaEstimate& init, const Prior& prior,
              const FitConfig& config) {
  config.validate();
  prior.validate();
  data.validate();
  init.validate();

  ThetaEstimate theta = project(RawTheta::from(init), init);
  FitReport report;
  report.seed = config.seed;

  double current_lp = log_posterior(theta, data, prior);
  report.log_posterior_trace.push_back(current_lp);
  ThetaEstimate best = theta;
  double best_lp = current_lp;

  if (config.max_iterations == 0) {
    report.estimate = std::move(theta);
    return report;
  }

  AdamState adam =
      AdamState::zeros(theta.n_states(), theta.n_actions(), theta.n_observations());
  int no_improve = 0;

  for (int k = 1; k <= config.max_iterations; ++k) {
    report.iterations_run = k;

    EStep estep;
    ThetaGradient grad;
    double q_current;
    try {
      estep = e_step(data, theta, config.workers);
      grad = grad_Q(theta, estep, data, config.workers);
      const ThetaGradient gp = grad_log_prior(theta, prior);
      grad.add(gp);
      grad.project_to_tangent();
      grad.apply_freeze(theta.frozen);
      q_current = expected_log_likelihood(theta, estep, data) + log_prior(theta, prior);
    } catch (const NonFiniteValue& e) {
      throw e.at_iteration(k);
    }

    const RawTheta base = RawTheta::from(theta);
    const RawTheta dir = adam.direction(grad, base, config.learning_rate);

    bool accepted = false;
    double gain = 0.0;
    double scale = 1.0;
    for (int trial = 0; trial < kMaxBacktracks; ++trial) {
      ThetaEstimate candidate = project(raw_plus_scaled(base, dir, scale), init);
      double q_candidate;
      try {
        q_candidate = expected_log_likelihood(candidate, estep, data) + log_prior(candidate, prior);
      } catch (const NonFiniteValue&) {
        q_candidate = neg_inf();
      } catch (const ZeroLikelihood&) {
        q_candidate = neg_inf();
      }
      if (q_candidate > q_current) {
        theta = std::move(candidate);
        gain = q_candidate - q_current;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }

    if (accepted) {
      current_lp = log_posterior(theta, data, prior);
      if (current_lp > best_lp) {
        best_lp = current_lp;
        best = theta;
      }
      if (gain > config.improvement_tolerance)
        no_improve = 0;
      else
        ++no_improve;
    } else {
      ++no_improve;
    }
    report.log_posterior_trace.push_back(current_lp);

    if (std::getenv("INTERPOLE_TRACE_FIT") && k % 25 == 0) {
      double gnorm = 0.0;
      zip_blocks(const_cast<RawTheta&>(base), grad,
                 [&](double&, double gg) { gnorm += gg * gg; });
      std::fprintf(stderr, "iter %d lp %.6f gain %.3e scale %.3e accepted %d gnorm %.3e\n", k,
                   current_lp, gain, scale, accepted ? 1 : 0, std::sqrt(gnorm));
    }

    if (no_improve >= config.patience) {
      report.converged = true;
      break;
    }
  }

  report.estimate = std::move(best);
  return report;
}

namespace {

double dynamics_log_prior(const ThetaEstimate& theta, const Prior& prior) {
  Prior dyn = prior;
  dyn.eta_log_normal.reset();
  dyn.means_normal_sd.reset();
  return log_prior(theta, dyn);
}

double observation_log_posterior(const ThetaEstimate& theta, const Dataset& data,
                                 const Prior& prior) {
  double lp = dynamics_log_prior(theta, prior);
  for (int i = 0; i < data.size(); ++i) {
    Messages fwd;
    try {
      fwd = forward_messages(data.trajectories[i], theta.params, data.stop_actions);
    } catch (const ZeroLikelihood& e) {
      throw e.with_trajectory(i);
    }
    lp += fwd.observation_log_likelihood();
  }
  return lp;
}

}  // namespace

FitReport two_stage_fit(const Dataset& data, const ThetaEstimate& init, const Prior& prior,
                        const FitConfig& config) {
  config.validate();
  prior.validate();
  data.validate();
  init.validate();

  const int S = init.n_states();
  const int A = init.n_actions();
  const int Z = init.n_observations();

  // Stage 1: conventional EM for the decision dynamics from observation
  // likelihoods alone, with closed-form count-ratio M-steps.
  ThetaEstimate theta = project(RawTheta::from(init), init);
  double current = observation_log_posterior(theta, data, prior);
  bool stage1_converged = (config.max_iterations == 0);
  int no_improve = 0;
  for (int k = 1; k <= config.max_iterations; ++k) {
    const EStep estep = e_step(data, theta, config.workers);

    Tensor3 ct(S, A, S, 0.0);
    Tensor3 co(A, S, Z, 0.0);
    Eigen::VectorXd cb = Eigen::VectorXd::Zero(S);
    for (int i = 0; i < data.size(); ++i) {
      const Trajectory& traj = data.trajectories[i];
      const Posteriors& post = estep.posteriors[i];
      for (int s = 0; s < S; ++s) cb[s] += post.gamma(0, s);
      for (int t = 0; t < traj.length(); ++t) {
        const auto [a, z] = traj.steps[t];
        for (int s = 0; s < S; ++s)
          for (int s2 = 0; s2 < S; ++s2) ct(s, a, s2) += post.xi[t](s, s2);
        if (!is_stop_action(data.stop_actions, a))
          for (int s2 = 0; s2 < S; ++s2) co(a, s2, z) += post.gamma(t + 1, s2);
      }
    }

    auto renormalize = [](double* cell, const double* count, int n, double conc) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += std::max(count[i] + conc - 1.0, 0.0);
      if (!(sum > 0.0)) return false;  // no evidence: keep previous row
      for (int i = 0; i < n; ++i) cell[i] = std::max(count[i] + conc - 1.0, 0.0) / sum;
      return true;
    };

    Tensor3 T = theta.params.transition;
    if (!theta.frozen.transition)
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
          renormalize(T.row(s, a), ct.row(s, a), S, prior.dirichlet_transition);
    Tensor3 O = theta.params.observation;
    if (!theta.frozen.observation)
      for (int a = 0; a < A; ++a)
        for (int s2 = 0; s2 < S; ++s2)
          renormalize(O.row(a, s2), co.row(a, s2), Z, prior.dirichlet_observation);
    Eigen::VectorXd b1 = theta.params.initial.vec();
    if (!theta.frozen.initial) {
      Eigen::VectorXd cells(S);
      double sum = 0.0;
      for (int s = 0; s < S; ++s) {
        cells[s] = std::max(cb[s] + prior.dirichlet_initial - 1.0, 0.0);
        sum += cells[s];
      }
      if (sum > 0.0) b1 = cells / sum;
    }

    ThetaEstimate candidate{IohmmParams(std::move(T), std::move(O), Belief(std::move(b1))),
                            theta.policy, theta.frozen};
    double candidate_lp;
    try {
      candidate_lp = observation_log_posterior(candidate, data, prior);
    } catch (const ZeroLikelihood&) {
      candidate_lp = neg_inf();
    }
    const double gain = candidate_lp - current;
    if (gain > 0.0) {
      theta = std::move(candidate);
      current = candidate_lp;
    }
    if (gain > config.improvement_tolerance)
      no_improve = 0;
    else
      ++no_improve;
    if (no_improve >= config.patience) {
      stage1_converged = true;
      break;
    }
  }

  // Stage 2: policy estimation from action likelihoods with the learned
  // dynamics held fixed.
  ThetaEstimate stage2_init = theta;
  stage2_init.frozen.transition = true;
  stage2_init.frozen.observation = true;
  stage2_init.frozen.initial = true;

  FitReport report = fit(data, stage2_init, prior, config);
  report.converged = report.converged && stage1_converged;
  return report;
}

}  // namespace interpole
