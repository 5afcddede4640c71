#include "interpole/iohmm.hpp"

#include <cmath>
#include <string>

namespace interpole {

namespace {

void check_row(const double* row, int n, const char* what) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = row[i];
    if (!std::isfinite(v) || v < -1e-12 || v > 1.0 + 1e-9)
      throw std::invalid_argument(std::string(what) + ": entry outside [0, 1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
}

}  // namespace

void IohmmParams::validate() const {
  const int S = transition.dim0();
  const int A = transition.dim1();
  const int Z = observation.dim2();
  if (transition.dim2() != S)
    throw std::invalid_argument("IohmmParams: transition tensor must be S x A x S");
  if (observation.dim0() != A || observation.dim1() != S)
    throw std::invalid_argument("IohmmParams: observation tensor must be A x S x Z");
  if (initial.size() != S)
    throw std::invalid_argument("IohmmParams: initial belief has wrong dimension");
  (void)Z;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) check_row(transition.row(s, a), S, "transition");
  for (int a = 0; a < A; ++a)
    for (int s2 = 0; s2 < S; ++s2) check_row(observation.row(a, s2), Z, "observation");
}

Eigen::VectorXd predict_next_state(const Belief& b, int a, const IohmmParams& params) {
  const int S = params.n_states();
  if (a < 0 || a >= params.n_actions()) throw std::invalid_argument("invalid action index");
  Eigen::VectorXd m = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s) {
    const double w = b[s];
    if (w == 0.0) continue;
    const double* row = params.transition.row(s, a);
    for (int s2 = 0; s2 < S; ++s2) m[s2] += w * row[s2];
  }
  return m;
}

double observation_likelihood(const Belief& b, int a, int z, const IohmmParams& params) {
  if (z < 0 || z >= params.n_observations())
    throw std::invalid_argument("invalid observation index");
  const Eigen::VectorXd m = predict_next_state(b, a, params);
  double lik = 0.0;
  for (int s2 = 0; s2 < params.n_states(); ++s2) lik += m[s2] * params.obs(z, a, s2);
  return lik;
}

BeliefUpdateResult belief_update_full(const Belief& b, int a, int z,
                                      const IohmmParams& params) {
  if (z < 0 || z >= params.n_observations())
    throw std::invalid_argument("invalid observation index");
  const int S = params.n_states();
  Eigen::VectorXd m = predict_next_state(b, a, params);
  Eigen::VectorXd post(S);
  double norm = 0.0;
  for (int s2 = 0; s2 < S; ++s2) {
    post[s2] = m[s2] * params.obs(z, a, s2);
    norm += post[s2];
  }
  if (norm <= kZeroLikelihoodFloor)
    throw ZeroLikelihood("belief update: observation has zero likelihood under the model",
                         /*step=*/-1);
  post /= norm;
  return {Belief(std::move(post)), norm};
}

Belief belief_update(const Belief& b, int a, int z, const IohmmParams& params) {
  return belief_update_full(b, a, z, params).posterior;
}

BeliefTrajectory belief_trajectory(const Trajectory& traj, const IohmmParams& params,
                                   const StopSet& stops) {
  BeliefTrajectory out;
  out.beliefs.reserve(traj.steps.size() + 1);
  out.log_increments.reserve(traj.steps.size());
  out.beliefs.push_back(params.initial);
  int t = 0;
  for (const auto& [a, z] : traj.steps) {
    const Belief& b = out.beliefs.back();
    if (is_stop_action(stops, a)) {
      // Episode-ending action: no observation is generated, so the belief is
      // propagated through the transition only and the step contributes no
      // observation likelihood.
      out.beliefs.push_back(Belief(predict_next_state(b, a, params)));
      out.log_increments.push_back(0.0);
    } else {
      try {
        BeliefUpdateResult r = belief_update_full(b, a, z, params);
        out.beliefs.push_back(std::move(r.posterior));
        out.log_increments.push_back(std::log(r.likelihood));
      } catch (const ZeroLikelihood&) {
        throw ZeroLikelihood("belief trajectory: zero-likelihood observation", t);
      }
    }
    ++t;
  }
  return out;
}

std::pair<int, int> sample_step(int s, int a, const IohmmParams& params, Rng& rng) {
  const int S = params.n_states();
  if (s < 0 || s >= S) throw std::invalid_argument("invalid state index");
  if (a < 0 || a >= params.n_actions()) throw std::invalid_argument("invalid action index");
  Eigen::VectorXd trow(S);
  for (int s2 = 0; s2 < S; ++s2) trow[s2] = params.trans(s, a, s2);
  const int s2 = rng.categorical(trow);
  const int Z = params.n_observations();
  Eigen::VectorXd orow(Z);
  for (int z = 0; z < Z; ++z) orow[z] = params.obs(z, a, s2);
  const int z = rng.categorical(orow);
  return {s2, z};
}

}  // namespace interpole
