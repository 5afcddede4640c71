#pragma once

#include <utility>
#include <vector>

#include "interpole/rng.hpp"
#include "interpole/tensor.hpp"
#include "interpole/types.hpp"

namespace interpole {

/// Decision dynamics: transition tensor T(s'|s,a) stored as [s][a][s'],
/// observation tensor O(z|a,s') stored as [a][s'][z], and initial belief.
/// These parameters describe how the agent aggregates history into beliefs;
/// they need not coincide with the dynamics of the world that produced the
/// data.
struct IohmmParams {
  Tensor3 transition;   // [s][a][s']
  Tensor3 observation;  // [a][s'][z]
  Belief initial;

  IohmmParams()
      : transition(1, 1, 1, 1.0), observation(1, 1, 1, 1.0), initial(Belief::uniform(1)) {}
  IohmmParams(Tensor3 t, Tensor3 o, Belief b1)
      : transition(std::move(t)), observation(std::move(o)), initial(std::move(b1)) {
    validate();
  }

  int n_states() const { return transition.dim0(); }
  int n_actions() const { return transition.dim1(); }
  int n_observations() const { return observation.dim2(); }

  double trans(int s, int a, int s2) const { return transition(s, a, s2); }
  double obs(int z, int a, int s2) const { return observation(a, s2, z); }

  /// Row-sum and range checks at tolerance 1e-9.
  void validate() const;
};

constexpr double kZeroLikelihoodFloor = 1e-300;

/// One-step posterior with the predictive probability of the observation.
struct BeliefUpdateResult {
  Belief posterior;
  double likelihood;  // Pr(z | b, a)
};

/// Predicted next-state marginal sum_s b(s) T(.|s,a).
Eigen::VectorXd predict_next_state(const Belief& b, int a, const IohmmParams& params);

/// Pr(z | b, a) = sum_{s,s'} b(s) T(s'|s,a) O(z|a,s').
double observation_likelihood(const Belief& b, int a, int z, const IohmmParams& params);

/// Recursive subjective belief update:
///   b'(s') ∝ sum_s b(s) T(s'|s,a) O(z|a,s').
/// Throws ZeroLikelihood when the normalizer is <= 1e-300.
BeliefUpdateResult belief_update_full(const Belief& b, int a, int z, const IohmmParams& params);
Belief belief_update(const Belief& b, int a, int z, const IohmmParams& params);

/// Beliefs along a trajectory and per-step observation log-likelihood
/// increments. beliefs[0] is the initial belief; beliefs[t] follows the
/// first t steps. Steps whose action is in `stops` propagate the predicted
/// marginal without observation reweighting and contribute increment 0.
struct BeliefTrajectory {
  std::vector<Belief> beliefs;        // length tau + 1
  std::vector<double> log_increments; // length tau
  double total_log_likelihood() const {
    double sum = 0.0;
    for (double v : log_increments) sum += v;
    return sum;
  }
};

BeliefTrajectory belief_trajectory(const Trajectory& traj, const IohmmParams& params,
                                   const StopSet& stops = {});

/// Generative counterpart of (T, O): samples s' ~ T(.|s,a), z ~ O(.|a,s').
std::pair<int, int> sample_step(int s, int a, const IohmmParams& params, Rng& rng);

}  // namespace interpole
