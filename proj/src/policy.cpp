#include "interpole/policy.hpp"

#include <cmath>

namespace interpole {

Eigen::VectorXd squared_distances(const Belief& b, const BoundaryPolicy& pol) {
  const int A = pol.n_actions();
  if (b.size() != pol.n_states())
    throw std::invalid_argument("squared_distances: dimension mismatch");
  Eigen::VectorXd d2(A);
  for (int a = 0; a < A; ++a) d2[a] = (b.vec() - pol.means[a]).squaredNorm();
  return d2;
}

ActionDistribution action_distribution(const Belief& b, const BoundaryPolicy& pol) {
  const Eigen::VectorXd d2 = squared_distances(b, pol);
  Eigen::VectorXd logits = -pol.eta * d2;
  const double top = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - top).exp();
  w /= w.sum();
  return {std::move(w)};
}

double log_prob(const Belief& b, int a, const BoundaryPolicy& pol) {
  if (a < 0 || a >= pol.n_actions()) throw std::invalid_argument("log_prob: invalid action");
  const Eigen::VectorXd d2 = squared_distances(b, pol);
  Eigen::VectorXd logits = -pol.eta * d2;
  const double top = logits.maxCoeff();
  const double lse = top + std::log((logits.array() - top).exp().sum());
  return logits[a] - lse;
}

Eigen::VectorXd grad_log_prob_belief(const Belief& b, int a, const BoundaryPolicy& pol) {
  const ActionDistribution pi = action_distribution(b, pol);
  Eigen::VectorXd g = -2.0 * pol.eta * (b.vec() - pol.means[a]);
  for (int a2 = 0; a2 < pol.n_actions(); ++a2)
    g += 2.0 * pol.eta * pi[a2] * (b.vec() - pol.means[a2]);
  return g;
}

int modal_action(const Belief& b, const BoundaryPolicy& pol) {
  const Eigen::VectorXd d2 = squared_distances(b, pol);
  int best = 0;
  for (int a = 1; a < d2.size(); ++a)
    if (d2[a] < d2[best]) best = a;
  return best;
}

DecisionBoundary decision_boundary(const BoundaryPolicy& pol, int a1, int a2) {
  if (a1 == a2) throw std::invalid_argument("decision_boundary: actions must differ");
  const Eigen::VectorXd& m1 = pol.means[a1];
  const Eigen::VectorXd& m2 = pol.means[a2];
  DecisionBoundary out;
  if ((m1 - m2).lpNorm<Eigen::Infinity>() == 0.0) {
    out.degenerate = true;
    out.normal = Eigen::VectorXd::Zero(m1.size());
    return out;
  }
  out.normal = 2.0 * (m2 - m1);
  out.offset = m2.squaredNorm() - m1.squaredNorm();
  return out;
}

std::optional<double> boundary_crossing_2state(const BoundaryPolicy& pol, int a1, int a2) {
  if (pol.n_states() != 2)
    throw std::invalid_argument("boundary_crossing_2state: requires |S| = 2");
  const DecisionBoundary hp = decision_boundary(pol, a1, a2);
  if (hp.degenerate) return std::nullopt;
  // b = (1-p, p): normal[0] (1-p) + normal[1] p = offset.
  const double slope = hp.normal[1] - hp.normal[0];
  if (std::abs(slope) < 1e-300) return std::nullopt;
  return (hp.offset - hp.normal[0]) / slope;
}

}  // namespace interpole
