#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "interpole/errors.hpp"

namespace interpole {

/// Cardinalities of the state, action, and observation sets, with optional
/// display labels. Identity is by integer index; labels are metadata only.
struct Spaces {
  int n_states = 0;
  int n_actions = 0;
  int n_observations = 0;
  std::vector<std::string> state_labels;        // empty or size n_states
  std::vector<std::string> action_labels;       // empty or size n_actions
  std::vector<std::string> observation_labels;  // empty or size n_observations

  Spaces() = default;
  Spaces(int s, int a, int z) : n_states(s), n_actions(a), n_observations(z) { validate(); }

  void validate() const {
    if (n_states < 1 || n_actions < 1 || n_observations < 1)
      throw std::invalid_argument("Spaces: all cardinalities must be >= 1");
    check_labels(state_labels, n_states, "state");
    check_labels(action_labels, n_actions, "action");
    check_labels(observation_labels, n_observations, "observation");
  }

  bool valid_state(int s) const { return s >= 0 && s < n_states; }
  bool valid_action(int a) const { return a >= 0 && a < n_actions; }
  bool valid_observation(int z) const { return z >= 0 && z < n_observations; }

 private:
  static void check_labels(const std::vector<std::string>& labels, int n, const char* kind) {
    if (labels.empty()) return;
    if (static_cast<int>(labels.size()) != n)
      throw std::invalid_argument(std::string(kind) + " labels do not match cardinality");
    std::set<std::string> unique(labels.begin(), labels.end());
    if (static_cast<int>(unique.size()) != n)
      throw std::invalid_argument(std::string(kind) + " labels must be unique");
  }
};

/// A point on the probability simplex over states. Renormalized on
/// construction; entries are kept nonnegative and summing to one.
class Belief {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit Belief(Eigen::VectorXd probs) : probs_(std::move(probs)) {
    if (probs_.size() < 1) throw std::invalid_argument("Belief: empty vector");
    for (int i = 0; i < probs_.size(); ++i) {
      if (!std::isfinite(probs_[i]) || probs_[i] < -1e-12)
        throw std::invalid_argument("Belief: entries must be finite and nonnegative");
      if (probs_[i] < 0.0) probs_[i] = 0.0;
    }
    const double total = probs_.sum();
    if (!(total > 0.0)) throw std::invalid_argument("Belief: entries sum to zero");
    probs_ /= total;
  }

  static Belief uniform(int n) {
    return Belief(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
  }

  static Belief point_mass(int n, int state) {
    if (state < 0 || state >= n) throw std::invalid_argument("Belief: state out of range");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v[state] = 1.0;
    return Belief(std::move(v));
  }

  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](int i) const { return probs_[i]; }
  const Eigen::VectorXd& vec() const { return probs_; }

 private:
  Eigen::VectorXd probs_;
};

/// One demonstration: an ordered list of (action, observation) index pairs.
/// Optional string tags carry trajectory-level metadata (cohort predicates).
struct Trajectory {
  std::vector<std::pair<int, int>> steps;
  std::map<std::string, std::string> tags;

  int length() const { return static_cast<int>(steps.size()); }

  void validate(const Spaces& spaces) const {
    if (steps.empty()) throw std::invalid_argument("Trajectory: must have length >= 1");
    for (const auto& [a, z] : steps) {
      if (!spaces.valid_action(a) || !spaces.valid_observation(z))
        throw std::invalid_argument("Trajectory: index out of range");
    }
  }
};

/// A set of demonstration trajectories over common spaces. `stop_actions`
/// marks actions that end an episode: a step taken with a stop action carries
/// a placeholder observation which is excluded from all likelihoods.
struct Dataset {
  Spaces spaces;
  std::vector<Trajectory> trajectories;
  std::vector<int> stop_actions;  // sorted, unique

  int size() const { return static_cast<int>(trajectories.size()); }

  bool is_stop(int action) const {
    return std::binary_search(stop_actions.begin(), stop_actions.end(), action);
  }

  void normalize_stop_actions() {
    std::sort(stop_actions.begin(), stop_actions.end());
    stop_actions.erase(std::unique(stop_actions.begin(), stop_actions.end()),
                       stop_actions.end());
  }

  void validate() const {
    spaces.validate();
    if (trajectories.empty()) throw std::invalid_argument("Dataset: must contain >= 1 trajectory");
    for (const auto& t : trajectories) t.validate(spaces);
    for (int a : stop_actions)
      if (!spaces.valid_action(a)) throw std::invalid_argument("Dataset: stop action out of range");
  }
};

/// Sorted stop-action view used by likelihood code paths; empty by default.
using StopSet = std::vector<int>;

inline bool is_stop_action(const StopSet& stops, int action) {
  return std::binary_search(stops.begin(), stops.end(), action);
}

}  // namespace interpole
