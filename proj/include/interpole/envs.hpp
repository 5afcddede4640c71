#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "interpole/iohmm.hpp"
#include "interpole/policy.hpp"
#include "interpole/types.hpp"

namespace interpole {

/// A reference decision environment: the dynamics of the world that emits
/// data (true_params), the agent's subjective decision dynamics used to form
/// beliefs (agent_params; equal to true_params unless the agent is biased),
/// and the behavior policy applied to the agent's beliefs.
struct EnvironmentSpec {
  Spaces spaces;
  IohmmParams true_params;
  IohmmParams agent_params;
  BoundaryPolicy behavior;
  std::vector<int> stop_actions;  // sorted; actions that end an episode
  int max_horizon = 1;

  void validate() const;
};

/// Two-state diagnosis environment: monitor until confident, then declare.
/// The test has 40% false-positive and false-negative rates, the policy is a
/// 90% confidence target, and the agent knows the world exactly.
EnvironmentSpec make_diag();

/// Same world as make_diag, but the agent believes the test's false-negative
/// rate is 20% instead of 40%, so subjective beliefs diverge from Bayesian
/// filtering under the true dynamics.
EnvironmentSpec make_bias();

/// Three-state progressive-disease environment with a costly imaging test:
/// 12 observations combining 4 imaging outcomes ("not ordered" is certain
/// when the test is skipped) and 3 always-available cognitive-score
/// categories. Parameters are drawn reproducibly from the seed.
EnvironmentSpec make_adni_like(std::uint64_t seed);

/// Five-state finite-state-machine environment equivalent to a two-level
/// diagnostic decision tree, with deterministic state-revealing observations.
EnvironmentSpec make_decision_tree_example();

/// Dispatch by name: "diag", "bias", "adni-like", or "tree".
EnvironmentSpec make_environment(const std::string& name, std::uint64_t seed = 0);

/// Per-trajectory generation record for evaluation: the sampled state path,
/// the agent's belief sequence, and the behavior action distributions at
/// each decision point.
struct GroundTruthTrajectory {
  std::vector<int> states;                    // length tau+1
  std::vector<Belief> beliefs;                // length tau+1, agent beliefs
  std::vector<Eigen::VectorXd> action_dists;  // length tau
};

struct GroundTruth {
  std::vector<GroundTruthTrajectory> trajectories;
};

/// Samples n demonstration trajectories: states and observations from
/// true_params, actions from the behavior policy applied to beliefs updated
/// with agent_params. Episodes end at a stop action (recorded with a
/// placeholder observation 0) or at max_horizon. Trajectory i uses the
/// derived seed (seed + i), so output is independent of scheduling.
std::pair<Dataset, GroundTruth> generate_dataset(const EnvironmentSpec& env, int n,
                                                 std::uint64_t seed);

}  // namespace interpole
