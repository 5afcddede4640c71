#pragma once

#include <vector>

#include <Eigen/Dense>

#include "interpole/iohmm.hpp"
#include "interpole/types.hpp"

namespace interpole {

/// Scaled forward/backward messages for one trajectory. Row k of each matrix
/// is the message at time k+1 (k = 0..tau). Stored rows are normalized to
/// sum to one; the accumulated log scales recover the unscaled quantities:
/// unscaled message at time k+1 = row(k) * exp(log_scale(k)). In particular
/// the stored backward message at time tau+1 times its scale is the all-ones
/// vector, and the final forward log scale is the observation log-likelihood.
struct Messages {
  Eigen::MatrixXd alpha;             // (tau+1) x S
  Eigen::VectorXd alpha_log_scale;   // tau+1
  Eigen::MatrixXd beta;              // (tau+1) x S
  Eigen::VectorXd beta_log_scale;    // tau+1

  int horizon() const { return static_cast<int>(alpha.rows()) - 1; }
  double observation_log_likelihood() const {
    return alpha_log_scale[alpha_log_scale.size() - 1];
  }
};

/// Posterior state marginals gamma (time 1..tau+1) and transition marginals
/// xi (steps 1..tau) given the demonstrations and a parameter estimate.
struct Posteriors {
  Eigen::MatrixXd gamma;             // (tau+1) x S, rows on the simplex
  std::vector<Eigen::MatrixXd> xi;   // tau matrices, S x S, each summing to 1
  double log_likelihood = 0.0;       // observation log-likelihood from scaling
};

Messages forward_messages(const Trajectory& traj, const IohmmParams& params,
                          const StopSet& stops = {});
Messages backward_messages(const Trajectory& traj, const IohmmParams& params,
                           const StopSet& stops = {});

/// Combines the two passes into one Messages bundle.
Messages forward_backward(const Trajectory& traj, const IohmmParams& params,
                          const StopSet& stops = {});

Eigen::MatrixXd state_marginals(const Messages& msgs);
std::vector<Eigen::MatrixXd> transition_marginals(const Messages& msgs, const Trajectory& traj,
                                                  const IohmmParams& params,
                                                  const StopSet& stops = {});

Posteriors smooth(const Trajectory& traj, const IohmmParams& params, const StopSet& stops = {});

}  // namespace interpole
