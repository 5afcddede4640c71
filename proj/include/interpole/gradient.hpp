#pragma once

#include <vector>

#include <Eigen/Dense>

#include "interpole/inference.hpp"
#include "interpole/iohmm.hpp"
#include "interpole/policy.hpp"
#include "interpole/tensor.hpp"
#include "interpole/types.hpp"

namespace interpole {

/// Parameter blocks excluded from updates (known quantities in a protocol).
struct FreezeMask {
  bool transition = false;
  bool observation = false;
  bool initial = false;
  bool eta = false;
  bool means = false;

  bool all_frozen() const { return transition && observation && initial && eta && means; }
};

/// Full parameter bundle under estimation: decision dynamics plus the
/// boundary policy, with a per-block freeze mask.
struct ThetaEstimate {
  IohmmParams params;
  BoundaryPolicy policy;
  FreezeMask frozen;

  int n_states() const { return params.n_states(); }
  int n_actions() const { return params.n_actions(); }
  int n_observations() const { return params.n_observations(); }

  void validate() const {
    params.validate();
    policy.validate();
    if (policy.n_actions() != params.n_actions() || policy.n_states() != params.n_states())
      throw std::invalid_argument("ThetaEstimate: policy/params dimension mismatch");
  }
};

/// Gradient of the expected complete-data log-likelihood, one block per
/// parameter block. Frozen blocks are identically zero.
struct ThetaGradient {
  Tensor3 d_transition;                 // [s][a][s']
  Tensor3 d_observation;                // [a][s'][z]
  Eigen::VectorXd d_initial;            // S
  double d_eta = 0.0;
  std::vector<Eigen::VectorXd> d_means; // one per action

  static ThetaGradient zeros(int S, int A, int Z);
  void add(const ThetaGradient& other);
  void apply_freeze(const FreezeMask& mask);
  bool all_finite() const;

  /// Projects each constrained block onto its tangent space (zero row sums
  /// for probability rows and mean vectors). Ratio-form gradients carry a
  /// large component normal to the simplex that optimizers must not see.
  void project_to_tangent();
};

/// Per-trajectory posteriors computed under a fixed estimate (the E-step).
struct EStep {
  std::vector<Posteriors> posteriors;
  double total_log_likelihood = 0.0;  // observation log-likelihood of the data
};

EStep e_step(const Dataset& data, const ThetaEstimate& theta, int workers = 1);

/// Expected complete-data log-likelihood Q(theta; theta_hat): action
/// log-likelihoods along beliefs computed under `theta`, plus posterior-
/// weighted initial/transition/observation log terms with the posteriors of
/// `estep` (computed under theta_hat). Zero-weight log(0) terms contribute 0;
/// a positive-weight log(0) throws NonFiniteValue.
double expected_log_likelihood(const ThetaEstimate& theta, const EStep& estep,
                               const Dataset& data);

/// Per-step belief Jacobians d b_{t+1} / d b_t along a trajectory, evaluated
/// at the supplied beliefs (as returned by belief_trajectory under the same
/// parameters). jac[t] maps perturbations of beliefs[t] to beliefs[t+1].
std::vector<Eigen::MatrixXd> belief_jacobians(const std::vector<Belief>& beliefs,
                                              const Trajectory& traj,
                                              const IohmmParams& params,
                                              const StopSet& stops = {});

/// Exact analytic gradient of Q(theta; theta_hat) at `theta`, including the
/// backpropagation-through-time coupling of dynamics parameters to action
/// likelihoods. Frozen blocks are zeroed.
ThetaGradient grad_Q(const ThetaEstimate& theta, const EStep& estep, const Dataset& data,
                     int workers = 1);

/// Relabels states by `perm` (new index i takes old index perm[i]) across all
/// parameter blocks. Pure relabeling: likelihoods are invariant.
ThetaEstimate permute_states(const ThetaEstimate& theta, const std::vector<int>& perm);

}  // namespace interpole
