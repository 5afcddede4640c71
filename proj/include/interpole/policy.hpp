#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "interpole/types.hpp"

namespace interpole {

/// Decision-boundary policy over the belief simplex:
///   pi(a|b) ∝ exp(-eta * ||b - mu_a||^2),
/// with one mean vector per action constrained to sum to one (components may
/// be negative) and inverse temperature eta >= 0.
struct BoundaryPolicy {
  double eta = 1.0;
  std::vector<Eigen::VectorXd> means;  // one per action, each length |S|

  BoundaryPolicy() = default;
  BoundaryPolicy(double eta_, std::vector<Eigen::VectorXd> means_)
      : eta(eta_), means(std::move(means_)) {
    validate();
  }

  int n_actions() const { return static_cast<int>(means.size()); }
  int n_states() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }

  void validate() const {
    if (!(eta >= 0.0)) throw std::invalid_argument("BoundaryPolicy: eta must be >= 0");
    if (means.empty()) throw std::invalid_argument("BoundaryPolicy: needs >= 1 mean");
    const int S = static_cast<int>(means[0].size());
    for (const auto& mu : means) {
      if (static_cast<int>(mu.size()) != S)
        throw std::invalid_argument("BoundaryPolicy: mean dimensions disagree");
      double sum = 0.0;
      for (int i = 0; i < mu.size(); ++i) {
        if (!std::isfinite(mu[i])) throw std::invalid_argument("BoundaryPolicy: non-finite mean");
        sum += mu[i];
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("BoundaryPolicy: mean components must sum to 1");
    }
  }
};

/// Distribution over actions at a fixed belief.
struct ActionDistribution {
  Eigen::VectorXd probs;

  int size() const { return static_cast<int>(probs.size()); }
  double operator[](int a) const { return probs[a]; }
};

/// Squared Euclidean distances ||b - mu_a||^2 for every action.
Eigen::VectorXd squared_distances(const Belief& b, const BoundaryPolicy& pol);

/// Softmax of -eta * squared distances, computed with max subtraction.
ActionDistribution action_distribution(const Belief& b, const BoundaryPolicy& pol);

/// log pi(a|b), stable for any finite eta (never -inf).
double log_prob(const Belief& b, int a, const BoundaryPolicy& pol);

/// d log pi(a|b) / d b: -2 eta (b - mu_a) + 2 eta sum_a' pi(a'|b) (b - mu_a').
Eigen::VectorXd grad_log_prob_belief(const Belief& b, int a, const BoundaryPolicy& pol);

/// Modal action; exact ties resolve to the lowest action index.
int modal_action(const Belief& b, const BoundaryPolicy& pol);

/// The set {x : ||x - mu_a1||^2 = ||x - mu_a2||^2} as a hyperplane
/// normal . x = offset, with normal = 2 (mu_a2 - mu_a1) and
/// offset = ||mu_a2||^2 - ||mu_a1||^2. Degenerate when the means coincide.
struct DecisionBoundary {
  bool degenerate = false;
  Eigen::VectorXd normal;
  double offset = 0.0;
};

DecisionBoundary decision_boundary(const BoundaryPolicy& pol, int a1, int a2);

/// For |S| = 2: the value p where the (a1, a2) boundary crosses the belief
/// line b = (1-p, p); nullopt when degenerate or the boundary is parallel to
/// the belief line.
std::optional<double> boundary_crossing_2state(const BoundaryPolicy& pol, int a1, int a2);

}  // namespace interpole
