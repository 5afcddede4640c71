#include <doctest.h>

#include <chrono>
#include <cmath>

#include "interpole/gradient.hpp"
#include "interpole/learner.hpp"
#include "oracles.hpp"

using namespace interpole;

namespace {

Dataset single_trajectory_dataset(const Spaces& spaces, Trajectory traj, StopSet stops = {}) {
  Dataset data;
  data.spaces = spaces;
  data.trajectories.push_back(std::move(traj));
  data.stop_actions = std::move(stops);
  data.normalize_stop_actions();
  return data;
}

struct FdFailure {
  std::string block;
  double analytic, numeric;
};

// Checks every unfrozen coordinate of grad_Q against central finite
// differences along constraint-tangent directions. Returns failures.
std::vector<FdFailure> fd_check_all(const ThetaEstimate& theta, const EStep& estep,
                                    const Dataset& data, double rel_tol = 1e-5,
                                    double abs_floor = 1e-8) {
  std::vector<FdFailure> failures;
  const ThetaGradient g = grad_Q(theta, estep, data);
  const int S = theta.n_states();
  const int A = theta.n_actions();
  const int Z = theta.n_observations();

  auto tangent_component = [](const std::vector<double>& grad_row, int i) {
    double mean = 0.0;
    for (double v : grad_row) mean += v;
    mean /= static_cast<double>(grad_row.size());
    return grad_row[i] - mean;
  };

  auto check = [&](const std::string& name, double analytic, const oracles::ThetaEditor& edit) {
    const double numeric = oracles::fd_directional(theta, estep, data, edit);
    const oracles::FdCheck c{analytic, numeric};
    if (!c.ok(rel_tol, abs_floor)) failures.push_back({name, analytic, numeric});
  };

  if (!theta.frozen.transition)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        for (int i = 0; i < S; ++i) {
          std::vector<double> row(S);
          for (int s2 = 0; s2 < S; ++s2) row[s2] = g.d_transition(s, a, s2);
          check("T(" + std::to_string(s) + "," + std::to_string(a) + "," + std::to_string(i) + ")",
                tangent_component(row, i), [=](RawTheta& r, double h) {
                  for (int s2 = 0; s2 < S; ++s2) r.transition(s, a, s2) -= h / S;
                  r.transition(s, a, i) += h;
                });
        }

  if (!theta.frozen.observation)
    for (int a = 0; a < A; ++a)
      for (int s2 = 0; s2 < S; ++s2)
        for (int i = 0; i < Z; ++i) {
          std::vector<double> row(Z);
          for (int z = 0; z < Z; ++z) row[z] = g.d_observation(a, s2, z);
          check("O(" + std::to_string(a) + "," + std::to_string(s2) + "," + std::to_string(i) + ")",
                tangent_component(row, i), [=](RawTheta& r, double h) {
                  for (int z = 0; z < Z; ++z) r.observation(a, s2, z) -= h / Z;
                  r.observation(a, s2, i) += h;
                });
        }

  if (!theta.frozen.initial)
    for (int i = 0; i < S; ++i) {
      std::vector<double> row(S);
      for (int s = 0; s < S; ++s) row[s] = g.d_initial[s];
      check("b1(" + std::to_string(i) + ")", tangent_component(row, i),
            [=](RawTheta& r, double h) {
              for (int s = 0; s < S; ++s) r.initial[s] -= h / S;
              r.initial[i] += h;
            });
    }

  if (!theta.frozen.eta)
    check("eta", g.d_eta, [](RawTheta& r, double h) { r.eta += h; });

  if (!theta.frozen.means)
    for (int a = 0; a < A; ++a)
      for (int i = 0; i < S; ++i) {
        std::vector<double> row(S);
        for (int s = 0; s < S; ++s) row[s] = g.d_means[a][s];
        check("mu(" + std::to_string(a) + "," + std::to_string(i) + ")",
              tangent_component(row, i), [=](RawTheta& r, double h) {
                for (int s = 0; s < S; ++s) r.means[a][s] -= h / S;
                r.means[a][i] += h;
              });
      }

  return failures;
}

}  // namespace

TEST_CASE("gradient matches central finite differences on random instances") {
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    Rng rng(1000 + trial);
    const int S = 2 + trial % 2;
    const int A = 3, Z = 2;
    Spaces spaces(S, A, Z);
    const int tau = 1 + trial % 5;

    StopSet stops;
    bool with_stop = trial % 4 == 3;
    if (with_stop) stops = {A - 1};

    ThetaEstimate theta{oracles::random_params(rng, S, A, Z),
                        oracles::random_policy(rng, S, A), {}};
    const Dataset data = single_trajectory_dataset(
        spaces, oracles::random_trajectory(rng, tau, A, Z, stops, with_stop), stops);

    // Half the trials evaluate Q away from the posterior's parameter point.
    const ThetaEstimate theta_hat =
        (trial % 2 == 0)
            ? theta
            : ThetaEstimate{oracles::random_params(rng, S, A, Z), theta.policy, {}};
    const EStep estep = e_step(data, theta_hat);

    const auto failures = fd_check_all(theta, estep, data);
    for (const auto& f : failures)
      MESSAGE("trial ", trial, " block ", f.block, " analytic ", f.analytic, " numeric ",
              f.numeric);
    CHECK(failures.empty());
    ++checked;
  }
  CHECK(checked == 60);
}

TEST_CASE("eta gradient is zero for the mean blocks when eta = 0") {
  Rng rng(77);
  const int S = 3, A = 3, Z = 2;
  Spaces spaces(S, A, Z);
  ThetaEstimate theta{oracles::random_params(rng, S, A, Z), oracles::random_policy(rng, S, A), {}};
  theta.policy.eta = 0.0;
  const Dataset data =
      single_trajectory_dataset(spaces, oracles::random_trajectory(rng, 5, A, Z));
  const EStep estep = e_step(data, theta);
  const ThetaGradient g = grad_Q(theta, estep, data);
  for (int a = 0; a < A; ++a) CHECK(g.d_means[a].norm() == doctest::Approx(0.0));
}

TEST_CASE("eta gradient equals the weighted distance-difference form") {
  // Single-action-dominant dataset: d_eta = sum_t sum_{a != a0} pi(a|b_t)
  // (||b_t - mu_a||^2 - ||b_t - mu_a0||^2), positive when a0 is nearest.
  Rng rng(78);
  const int S = 2, A = 3, Z = 2;
  Spaces spaces(S, A, Z);
  ThetaEstimate theta{oracles::random_params(rng, S, A, Z), oracles::random_policy(rng, S, A), {}};
  // Make action 0's mean clearly nearest to every achievable belief.
  theta.policy.eta = 6.0;
  theta.policy.means[0] = Eigen::Vector2d(0.5, 0.5);
  theta.policy.means[1] = Eigen::Vector2d(1.9, -0.9);
  theta.policy.means[2] = Eigen::Vector2d(-0.9, 1.9);

  Trajectory traj;
  for (int t = 0; t < 6; ++t) traj.steps.emplace_back(0, t % 2);
  const Dataset data = single_trajectory_dataset(spaces, traj);
  const EStep estep = e_step(data, theta);
  const ThetaGradient g = grad_Q(theta, estep, data);

  const BeliefTrajectory bt = belief_trajectory(traj, theta.params);
  double expected = 0.0;
  for (int t = 0; t < traj.length(); ++t) {
    const Eigen::VectorXd d2 = squared_distances(bt.beliefs[t], theta.policy);
    const ActionDistribution pi = action_distribution(bt.beliefs[t], theta.policy);
    for (int a = 1; a < A; ++a) expected += pi[a] * (d2[a] - d2[0]);
  }
  CHECK(g.d_eta == doctest::Approx(expected).epsilon(1e-10));
  CHECK(g.d_eta > 0.0);
}

TEST_CASE("frozen blocks are zeroed") {
  Rng rng(79);
  const int S = 2, A = 3, Z = 2;
  Spaces spaces(S, A, Z);
  ThetaEstimate theta{oracles::random_params(rng, S, A, Z), oracles::random_policy(rng, S, A), {}};
  theta.frozen.transition = true;
  theta.frozen.eta = true;
  const Dataset data =
      single_trajectory_dataset(spaces, oracles::random_trajectory(rng, 4, A, Z));
  const EStep estep = e_step(data, theta);
  const ThetaGradient g = grad_Q(theta, estep, data);
  for (double v : g.d_transition.data()) CHECK(v == 0.0);
  CHECK(g.d_eta == 0.0);
  double sum = 0.0;
  for (double v : g.d_observation.data()) sum += std::abs(v);
  CHECK(sum > 0.0);
}

TEST_CASE("reverse accumulation matches the naive Jacobian-product form") {
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(4200 + trial);
    const int S = 2 + trial % 2, A = 3, Z = 2;
    Spaces spaces(S, A, Z);
    StopSet stops = trial % 3 == 0 ? StopSet{2} : StopSet{};
    ThetaEstimate theta{oracles::random_params(rng, S, A, Z),
                        oracles::random_policy(rng, S, A), {}};
    const Trajectory traj =
        oracles::random_trajectory(rng, 5, A, Z, stops, !stops.empty());
    const Dataset data = single_trajectory_dataset(spaces, traj, stops);
    const EStep estep = e_step(data, theta);

    ThetaGradient fast = grad_Q(theta, estep, data);
    ThetaGradient naive = oracles::naive_btt_gradient(traj, theta, data.stop_actions);

    // Remove the direct posterior-ratio terms from the fast gradient so only
    // the belief-coupling parts are compared.
    const Posteriors& post = estep.posteriors[0];
    for (int t = 0; t < traj.length(); ++t) {
      const auto [a, z] = traj.steps[t];
      for (int s = 0; s < S; ++s)
        for (int s2 = 0; s2 < S; ++s2)
          fast.d_transition(s, a, s2) -= post.xi[t](s, s2) / theta.params.trans(s, a, s2);
      if (!is_stop_action(stops, a))
        for (int s2 = 0; s2 < S; ++s2)
          fast.d_observation(a, s2, z) -= post.gamma(t + 1, s2) / theta.params.obs(z, a, s2);
    }
    for (int s = 0; s < S; ++s)
      fast.d_initial[s] -= post.gamma(0, s) / theta.params.initial[s];

    for (size_t i = 0; i < fast.d_transition.data().size(); ++i)
      CHECK(fast.d_transition.data()[i] ==
            doctest::Approx(naive.d_transition.data()[i]).epsilon(1e-10).scale(1.0));
    for (size_t i = 0; i < fast.d_observation.data().size(); ++i)
      CHECK(fast.d_observation.data()[i] ==
            doctest::Approx(naive.d_observation.data()[i]).epsilon(1e-10).scale(1.0));
    for (int s = 0; s < S; ++s)
      CHECK(fast.d_initial[s] == doctest::Approx(naive.d_initial[s]).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("belief jacobians: identity at zero steps and finite-difference match") {
  for (int trial = 0; trial < 25; ++trial) {
    Rng rng(6000 + trial);
    const int S = 3, A = 2, Z = 2;
    const IohmmParams params = oracles::random_params(rng, S, A, Z);
    const Trajectory traj = oracles::random_trajectory(rng, 3, A, Z);
    const BeliefTrajectory bt = belief_trajectory(traj, params);
    const auto jac = belief_jacobians(bt.beliefs, traj, params);
    REQUIRE(jac.size() == 3);

    // Central differences along simplex-tangent directions of b_t.
    for (int t = 0; t < 3; ++t) {
      const double h = 1e-6;
      for (int j = 0; j < S; ++j) {
        Eigen::VectorXd dir = Eigen::VectorXd::Constant(S, -1.0 / S);
        dir[j] += 1.0;
        const Belief bp(bt.beliefs[t].vec() + h * dir);
        const Belief bm(bt.beliefs[t].vec() - h * dir);
        const auto [a, z] = traj.steps[t];
        const Eigen::VectorXd fp = belief_update(bp, a, z, params).vec();
        const Eigen::VectorXd fm = belief_update(bm, a, z, params).vec();
        const Eigen::VectorXd numeric = (fp - fm) / (2.0 * h);
        const Eigen::VectorXd analytic = jac[t] * dir;
        for (int i = 0; i < S; ++i)
          CHECK(analytic[i] == doctest::Approx(numeric[i]).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("jacobian under uninformative observations passes tangent vectors through") {
  const int S = 3, A = 1, Z = 2;
  Tensor3 T(S, A, S, 0.0);
  for (int s = 0; s < S; ++s) T(s, 0, s) = 1.0;
  Tensor3 O(A, S, Z, 0.5);
  const IohmmParams params(T, O, Belief::uniform(S));
  Trajectory traj;
  traj.steps.emplace_back(0, 1);
  const BeliefTrajectory bt = belief_trajectory(traj, params);
  const auto jac = belief_jacobians(bt.beliefs, traj, params);
  Eigen::VectorXd v(S);
  v << 0.3, -0.1, -0.2;  // tangent: sums to zero
  const Eigen::VectorXd out = jac[0] * v;
  for (int i = 0; i < S; ++i) CHECK(out[i] == doctest::Approx(v[i]).epsilon(1e-12));
}

TEST_CASE("expected log likelihood matches enumeration") {
  for (int trial = 0; trial < 30; ++trial) {
    Rng rng(7000 + trial);
    const int S = 2, A = 2, Z = 2;
    Spaces spaces(S, A, Z);
    ThetaEstimate theta{oracles::random_params(rng, S, A, Z),
                        oracles::random_policy(rng, S, A), {}};
    ThetaEstimate theta_hat{oracles::random_params(rng, S, A, Z), theta.policy, {}};
    const Trajectory traj = oracles::random_trajectory(rng, 2, A, Z);
    const Dataset data = single_trajectory_dataset(spaces, traj);
    const EStep estep = e_step(data, theta_hat);
    const double q = expected_log_likelihood(theta, estep, data);
    const double q_enum = oracles::enum_Q(traj, theta, theta_hat, {});
    CHECK(q == doctest::Approx(q_enum).epsilon(1e-10));
  }
}

TEST_CASE("Q is finite on all-positive parameters and simple closed forms hold") {
  // Deterministic dynamics consistent with the data and eta = 0:
  // Q reduces to tau * log(1/|A|).
  const int S = 2, A = 2, Z = 2;
  Spaces spaces(S, A, Z);
  Tensor3 T(S, A, S, 0.0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) T(s, a, s) = 1.0;
  Tensor3 O(A, S, Z, 0.0);
  for (int a = 0; a < A; ++a)
    for (int s = 0; s < S; ++s) O(a, s, s) = 1.0;  // state s always emits z = s
  IohmmParams params(T, O, Belief::point_mass(S, 1));
  std::vector<Eigen::VectorXd> means = {Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.2, 0.8)};
  ThetaEstimate theta{params, BoundaryPolicy(0.0, means), {}};

  Trajectory traj;
  const int tau = 4;
  for (int t = 0; t < tau; ++t) traj.steps.emplace_back(t % 2, 1);
  const Dataset data = single_trajectory_dataset(spaces, traj);
  const EStep estep = e_step(data, theta);
  const double q = expected_log_likelihood(theta, estep, data);
  CHECK(q == doctest::Approx(tau * std::log(1.0 / A)).epsilon(1e-12));
}

TEST_CASE("positive-weight log(0) raises NonFiniteValue") {
  const int S = 2, A = 2, Z = 2;
  Spaces spaces(S, A, Z);
  Rng rng(81);
  ThetaEstimate theta_hat{oracles::random_params(rng, S, A, Z),
                          oracles::random_policy(rng, S, A), {}};
  const Trajectory traj = oracles::random_trajectory(rng, 2, A, Z);
  const Dataset data = single_trajectory_dataset(spaces, traj);
  const EStep estep = e_step(data, theta_hat);

  // theta assigns probability zero to an observation the posterior supports
  // in state 0, while the observation stays possible from other states.
  ThetaEstimate theta = theta_hat;
  Tensor3 O = theta.params.observation;
  const auto [a0, z0] = traj.steps[0];
  O(a0, 0, z0) = 0.0;
  O(a0, 0, 1 - z0) = 1.0;
  theta.params = IohmmParams(theta.params.transition, O, theta.params.initial);
  CHECK_THROWS_AS((void)expected_log_likelihood(theta, estep, data), NonFiniteValue);
}

TEST_CASE("gradient runtime grows polynomially with horizon") {
  // Doubling tau should scale runtime like tau (reverse accumulation), well
  // under the tau^2 bound; assert a loose factor to keep timing robust.
  Rng rng(90);
  const int S = 3, A = 3, Z = 2;
  Spaces spaces(S, A, Z);
  ThetaEstimate theta{oracles::random_params(rng, S, A, Z), oracles::random_policy(rng, S, A), {}};

  auto time_for_tau = [&](int tau) {
    Trajectory traj = oracles::random_trajectory(rng, tau, A, Z);
    Dataset data = single_trajectory_dataset(spaces, traj);
    const EStep estep = e_step(data, theta);
    const auto start = std::chrono::steady_clock::now();
    for (int rep = 0; rep < 5; ++rep) (void)grad_Q(theta, estep, data);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  time_for_tau(64);  // warm up
  const double t1 = time_for_tau(64);
  const double t2 = time_for_tau(128);
  MESSAGE("gradient time tau=64: ", t1, "s, tau=128: ", t2, "s");
  CHECK(t2 < 16.0 * std::max(t1, 1e-6));
}
