#include <doctest.h>

#include <cmath>

#include "interpole/inference.hpp"
#include "oracles.hpp"

using namespace interpole;

TEST_CASE("forward messages: initial case and uninformative flows") {
  const int S = 3, A = 2, Z = 2;
  Tensor3 T(S, A, S, 0.0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) T(s, a, s) = 1.0;
  Tensor3 O(A, S, Z, 0.5);
  Eigen::VectorXd b1(S);
  b1 << 0.2, 0.3, 0.5;
  const IohmmParams params(T, O, Belief(b1));

  Trajectory traj;
  for (int t = 0; t < 4; ++t) traj.steps.emplace_back(t % 2, t % 2);

  const Messages fwd = forward_messages(traj, params);
  for (int s = 0; s < S; ++s) CHECK(fwd.alpha(0, s) == doctest::Approx(b1[s]));
  // Identity transitions with uniform observations leave the message fixed.
  for (int t = 1; t <= 4; ++t)
    for (int s = 0; s < S; ++s) CHECK(fwd.alpha(t, s) == doctest::Approx(b1[s]));

  const Messages bwd = backward_messages(traj, params);
  for (int t = 0; t <= 4; ++t)
    for (int s = 0; s < S; ++s) CHECK(bwd.beta(t, s) == doctest::Approx(1.0 / S));
  // Stored row times its scale recovers the all-ones boundary message.
  CHECK(bwd.beta(4, 0) * std::exp(bwd.beta_log_scale[4]) == doctest::Approx(1.0));
}

TEST_CASE("messages and marginals match exhaustive enumeration") {
  for (int trial = 0; trial < 40; ++trial) {
    Rng rng(300 + trial);
    const int S = 2 + trial % 2;
    const int A = 2, Z = 2;
    const int tau = 2 + trial % 3;
    StopSet stops = (trial % 5 == 0) ? StopSet{A - 1} : StopSet{};
    const IohmmParams params = oracles::random_params(rng, S, A, Z);
    const Trajectory traj =
        oracles::random_trajectory(rng, tau, A, Z, stops, !stops.empty());

    const Posteriors post = smooth(traj, params, stops);
    const Eigen::MatrixXd gamma_ref = oracles::enum_gamma(traj, params, stops);
    const auto xi_ref = oracles::enum_xi(traj, params, stops);
    const double ll_ref = oracles::enum_log_likelihood(traj, params, stops);

    for (int t = 0; t <= tau; ++t)
      for (int s = 0; s < S; ++s)
        CHECK(post.gamma(t, s) == doctest::Approx(gamma_ref(t, s)).epsilon(1e-12).scale(1.0));
    for (int t = 0; t < tau; ++t)
      for (int s = 0; s < S; ++s)
        for (int s2 = 0; s2 < S; ++s2)
          CHECK(post.xi[t](s, s2) ==
                doctest::Approx(xi_ref[t](s, s2)).epsilon(1e-12).scale(1.0));
    CHECK(post.log_likelihood == doctest::Approx(ll_ref).epsilon(1e-12));

    // Forward-alpha against the brute-force prefix marginals.
    const Messages fwd = forward_messages(traj, params, stops);
    for (int t = 0; t <= tau; ++t) {
      Trajectory prefix;
      prefix.steps.assign(traj.steps.begin(), traj.steps.begin() + t);
      Eigen::VectorXd marg = Eigen::VectorXd::Zero(S);
      if (t == 0) {
        for (int s = 0; s < S; ++s) marg[s] = params.initial[s];
      } else {
        const auto e = oracles::enumerate_paths(prefix, params, stops);
        for (size_t i = 0; i < e.paths.size(); ++i)
          marg[e.paths[i][t]] += e.path_weight[i] / e.total_weight;
      }
      for (int s = 0; s < S; ++s)
        CHECK(fwd.alpha(t, s) == doctest::Approx(marg[s]).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("marginalization identities hold") {
  for (int trial = 0; trial < 30; ++trial) {
    Rng rng(900 + trial);
    const int S = 3, A = 3, Z = 3;
    const IohmmParams params = oracles::random_params(rng, S, A, Z);
    const Trajectory traj = oracles::random_trajectory(rng, 6, A, Z);
    const Posteriors post = smooth(traj, params);
    for (int t = 0; t < traj.length(); ++t) {
      for (int s = 0; s < S; ++s) {
        double row = 0.0;
        for (int s2 = 0; s2 < S; ++s2) row += post.xi[t](s, s2);
        CHECK(row == doctest::Approx(post.gamma(t, s)).epsilon(1e-10).scale(1.0));
      }
      for (int s2 = 0; s2 < S; ++s2) {
        double col = 0.0;
        for (int s = 0; s < S; ++s) col += post.xi[t](s, s2);
        CHECK(col == doctest::Approx(post.gamma(t + 1, s2)).epsilon(1e-10).scale(1.0));
      }
    }
  }
}

TEST_CASE("final state marginal is proportional to the final forward message") {
  Rng rng(55);
  const IohmmParams params = oracles::random_params(rng, 3, 2, 2);
  const Trajectory traj = oracles::random_trajectory(rng, 4, 2, 2);
  const Messages msgs = forward_backward(traj, params);
  const Eigen::MatrixXd gamma = state_marginals(msgs);
  const int last = traj.length();
  for (int s = 0; s < 3; ++s)
    CHECK(gamma(last, s) == doctest::Approx(msgs.alpha(last, s)).epsilon(1e-12));
}

TEST_CASE("deterministic chain forces point-mass marginals") {
  const int S = 3, A = 1, Z = 2;
  Tensor3 T(S, A, S, 0.0);
  T(0, 0, 1) = 1.0;  // 0 -> 1 -> 2 -> 2
  T(1, 0, 2) = 1.0;
  T(2, 0, 2) = 1.0;
  Tensor3 O(A, S, Z, 0.5);
  const IohmmParams params(T, O, Belief::point_mass(S, 0));
  Trajectory traj;
  traj.steps = {{0, 0}, {0, 1}, {0, 0}};
  const Posteriors post = smooth(traj, params);
  const int expected_state[] = {0, 1, 2, 2};
  for (int t = 0; t <= 3; ++t)
    for (int s = 0; s < S; ++s)
      CHECK(post.gamma(t, s) == doctest::Approx(s == expected_state[t] ? 1.0 : 0.0));
}

TEST_CASE("two routes to the observation log-likelihood agree") {
  for (int trial = 0; trial < 25; ++trial) {
    Rng rng(1200 + trial);
    const int S = 2 + trial % 3, A = 2, Z = 3;
    StopSet stops = (trial % 4 == 1) ? StopSet{1} : StopSet{};
    const IohmmParams params = oracles::random_params(rng, S, A, Z);
    const Trajectory traj =
        oracles::random_trajectory(rng, 7, A, Z, stops, !stops.empty());
    const Messages fwd = forward_messages(traj, params, stops);
    const BeliefTrajectory bt = belief_trajectory(traj, params, stops);
    CHECK(fwd.observation_log_likelihood() ==
          doctest::Approx(bt.total_log_likelihood()).epsilon(1e-10));
    // The normalized forward messages coincide with the subjective beliefs.
    for (int t = 0; t <= traj.length(); ++t)
      for (int s = 0; s < S; ++s)
        CHECK(fwd.alpha(t, s) == doctest::Approx(bt.beliefs[t][s]).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("zero-likelihood observations raise with the offending step") {
  const int S = 2, A = 1, Z = 2;
  Tensor3 T(S, A, S, 0.0);
  T(0, 0, 0) = T(1, 0, 1) = 1.0;
  Tensor3 O(A, S, Z, 0.0);
  O(0, 0, 0) = 1.0;  // state 0 always emits z = 0
  O(0, 1, 0) = 1.0;  // state 1 always emits z = 0
  const IohmmParams params(T, O, Belief::uniform(S));
  Trajectory traj;
  traj.steps = {{0, 0}, {0, 1}};  // z = 1 at step 1 is impossible
  try {
    (void)forward_messages(traj, params);
    FAIL("expected ZeroLikelihood");
  } catch (const ZeroLikelihood& e) {
    CHECK(e.step() == 1);
  }
}
