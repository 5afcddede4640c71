#include <doctest.h>

#include <cmath>

#include "interpole/envs.hpp"
#include "interpole/policy.hpp"
#include "oracles.hpp"

using namespace interpole;

TEST_CASE("eta = 0 gives the uniform action distribution exactly") {
  Rng rng(10);
  const BoundaryPolicy pol(0.0, {rng.simplex_uniform(3), rng.simplex_uniform(3),
                                 rng.simplex_uniform(3), rng.simplex_uniform(3)});
  const Belief b(rng.simplex_uniform(3));
  const ActionDistribution dist = action_distribution(b, pol);
  for (int a = 0; a < 4; ++a) CHECK(dist[a] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(log_prob(b, 2, pol) == doctest::Approx(std::log(0.25)).epsilon(1e-15));
}

TEST_CASE("diagnosis policy probabilities at the neutral and boundary beliefs") {
  const EnvironmentSpec env = make_diag();
  const BoundaryPolicy& pol = env.behavior;

  const ActionDistribution center = action_distribution(Belief::uniform(2), pol);
  const double expected = 1.0 / (1.0 + 2.0 * std::exp(-12.8));
  CHECK(center[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(center[0] > 0.999993);
  CHECK(log_prob(Belief::uniform(2), 0, pol) ==
        doctest::Approx(std::log(expected)).epsilon(1e-9));

  Eigen::VectorXd v(2);
  v << 0.1, 0.9;
  const ActionDistribution edge = action_distribution(Belief(v), pol);
  CHECK(edge[0] == doctest::Approx(edge[2]).epsilon(1e-12));
  CHECK(edge[1] == doctest::Approx(std::exp(-10.0 * (2.88 - 0.32)) * edge[0]).epsilon(1e-9));
}

TEST_CASE("log probabilities normalize") {
  for (int trial = 0; trial < 30; ++trial) {
    Rng rng(400 + trial);
    const BoundaryPolicy pol = oracles::random_policy(rng, 3, 4, 50.0);
    const Belief b(rng.simplex_uniform(3));
    double total = 0.0;
    for (int a = 0; a < 4; ++a) total += std::exp(log_prob(b, a, pol));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("modal action is the nearest mean and sharpness increases with eta") {
  for (int trial = 0; trial < 30; ++trial) {
    Rng rng(500 + trial);
    BoundaryPolicy pol = oracles::random_policy(rng, 3, 4, 8.0);
    pol.eta = 0.5 + rng.uniform() * 4.0;
    const Belief b(rng.simplex_uniform(3));
    const Eigen::VectorXd d2 = squared_distances(b, pol);
    int nearest = 0;
    for (int a = 1; a < 4; ++a)
      if (d2[a] < d2[nearest]) nearest = a;
    CHECK(modal_action(b, pol) == nearest);
    const ActionDistribution dist = action_distribution(b, pol);
    int arg = 0;
    for (int a = 1; a < 4; ++a)
      if (dist[a] > dist[arg]) arg = a;
    CHECK(arg == nearest);

    // Monotonicity in eta at the nearest action.
    BoundaryPolicy sharper = pol;
    sharper.eta = pol.eta * 1.5;
    CHECK(action_distribution(b, sharper)[nearest] > dist[nearest]);
  }
}

TEST_CASE("large eta concentrates nearly all mass on the nearest action") {
  Rng rng(77);
  BoundaryPolicy pol(1e4, {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 1.0),
                           Eigen::Vector2d(0.5, 0.5)});
  Eigen::VectorXd v(2);
  v << 0.8, 0.2;
  const ActionDistribution dist = action_distribution(Belief(v), pol);
  CHECK(dist[0] > 1.0 - 1e-6);
}

TEST_CASE("policy depends on means only through squared-distance differences") {
  // Shifting every mean by a vector orthogonal to all pairwise differences
  // leaves the distribution unchanged; the only such shift preserving the
  // sum-to-one constraint is zero, so test the distance-difference statement
  // directly: distributions agree whenever pairwise d2 differences agree.
  Rng rng(88);
  const Belief b(rng.simplex_uniform(3));
  const BoundaryPolicy pol = oracles::random_policy(rng, 3, 3, 5.0);
  const Eigen::VectorXd d2 = squared_distances(b, pol);
  Eigen::VectorXd logits = -pol.eta * d2;
  const Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
  Eigen::VectorXd manual = shifted.array().exp();
  manual /= manual.sum();
  const ActionDistribution dist = action_distribution(b, pol);
  for (int a = 0; a < 3; ++a) CHECK(dist[a] == doctest::Approx(manual[a]).epsilon(1e-12));
}

TEST_CASE("decision boundaries: closed form, crossings, degeneracy") {
  const EnvironmentSpec env = make_diag();
  const BoundaryPolicy& pol = env.behavior;

  const DecisionBoundary hp = decision_boundary(pol, 0, 2);
  REQUIRE(!hp.degenerate);
  for (int i = 0; i < 2; ++i)
    CHECK(hp.normal[i] == doctest::Approx(2.0 * (pol.means[2][i] - pol.means[0][i])));
  CHECK(hp.offset ==
        doctest::Approx(pol.means[2].squaredNorm() - pol.means[0].squaredNorm()));

  CHECK(*boundary_crossing_2state(pol, 0, 2) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(*boundary_crossing_2state(pol, 0, 1) == doctest::Approx(0.1).epsilon(1e-12));

  // Points on the boundary really are equidistant.
  Eigen::VectorXd v(2);
  v << 0.1, 0.9;
  const Eigen::VectorXd d2 = squared_distances(Belief(v), pol);
  CHECK(d2[0] == doctest::Approx(d2[2]).epsilon(1e-12));

  BoundaryPolicy same(1.0, {Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.5, 0.5)});
  CHECK(decision_boundary(same, 0, 1).degenerate);
  CHECK(!boundary_crossing_2state(same, 0, 1).has_value());
}

TEST_CASE("gradient of log pi with respect to the belief matches finite differences") {
  for (int trial = 0; trial < 25; ++trial) {
    Rng rng(600 + trial);
    const BoundaryPolicy pol = oracles::random_policy(rng, 3, 3, 6.0);
    const Belief b(oracles::interior_simplex(rng, 3));
    const int a = trial % 3;
    const Eigen::VectorXd g = grad_log_prob_belief(b, a, pol);
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd dir = Eigen::VectorXd::Constant(3, -1.0 / 3.0);
      dir[j] += 1.0;
      const double fp = log_prob(Belief(b.vec() + h * dir), a, pol);
      const double fm = log_prob(Belief(b.vec() - h * dir), a, pol);
      const double numeric = (fp - fm) / (2.0 * h);
      CHECK(g.dot(dir) == doctest::Approx(numeric).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("mean vectors may carry negative components but must sum to one") {
  CHECK_NOTHROW(BoundaryPolicy(1.0, {Eigen::Vector2d(1.3, -0.3)}));
  CHECK_THROWS_AS(BoundaryPolicy(1.0, {Eigen::Vector2d(0.7, 0.7)}), std::invalid_argument);
  CHECK_THROWS_AS(BoundaryPolicy(-1.0, {Eigen::Vector2d(0.5, 0.5)}), std::invalid_argument);
}
