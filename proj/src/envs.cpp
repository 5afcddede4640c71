#include "interpole/envs.hpp"

#include <cmath>

#include "interpole/rng.hpp"

namespace interpole {

void EnvironmentSpec::validate() const {
  spaces.validate();
  true_params.validate();
  agent_params.validate();
  behavior.validate();
  if (true_params.n_states() != spaces.n_states ||
      true_params.n_actions() != spaces.n_actions ||
      true_params.n_observations() != spaces.n_observations)
    throw std::invalid_argument("EnvironmentSpec: true_params/spaces mismatch");
  if (agent_params.n_states() != spaces.n_states ||
      agent_params.n_actions() != spaces.n_actions ||
      agent_params.n_observations() != spaces.n_observations)
    throw std::invalid_argument("EnvironmentSpec: agent_params/spaces mismatch");
  if (behavior.n_actions() != spaces.n_actions || behavior.n_states() != spaces.n_states)
    throw std::invalid_argument("EnvironmentSpec: behavior/spaces mismatch");
  if (max_horizon < 1) throw std::invalid_argument("EnvironmentSpec: max_horizon must be >= 1");
  for (int a : stop_actions)
    if (!spaces.valid_action(a))
      throw std::invalid_argument("EnvironmentSpec: stop action out of range");
}

namespace {

Eigen::VectorXd to_vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

Tensor3 identity_transitions(int S, int A) {
  Tensor3 T(S, A, S, 0.0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) T(s, a, s) = 1.0;
  return T;
}

}  // namespace

EnvironmentSpec make_diag() {
  Spaces spaces(2, 3, 2);
  spaces.state_labels = {"s-", "s+"};
  spaces.action_labels = {"a=", "a-", "a+"};
  spaces.observation_labels = {"z-", "z+"};

  Tensor3 T = identity_transitions(2, 3);
  Tensor3 O(3, 2, 2);
  // Monitoring: 40% false-positive and false-negative rates.
  O(0, 0, 0) = 0.6;  // z- from s-
  O(0, 0, 1) = 0.4;
  O(0, 1, 0) = 0.4;  // z- from s+
  O(0, 1, 1) = 0.6;
  // Declarations end the episode; their observation rows are never used.
  for (int a = 1; a < 3; ++a)
    for (int s = 0; s < 2; ++s)
      for (int z = 0; z < 2; ++z) O(a, s, z) = 0.5;

  IohmmParams params(T, O, Belief(to_vec({0.5, 0.5})));
  BoundaryPolicy behavior(10.0, {to_vec({0.5, 0.5}), to_vec({1.3, -0.3}), to_vec({-0.3, 1.3})});

  EnvironmentSpec env{spaces, params, params, behavior, {1, 2}, 50};
  env.validate();
  return env;
}

EnvironmentSpec make_bias() {
  EnvironmentSpec env = make_diag();
  // The agent underestimates the false-negative rate of the test: the
  // subjective chance of z- in the diseased state is 0.2, not 0.4.
  Tensor3 O = env.agent_params.observation;
  O(0, 1, 0) = 0.2;
  O(0, 1, 1) = 0.8;
  env.agent_params = IohmmParams(env.agent_params.transition, O, env.agent_params.initial);
  env.validate();
  return env;
}

EnvironmentSpec make_adni_like(std::uint64_t seed) {
  Rng rng(seed);
  const int S = 3, A = 2, Z = 12;

  Spaces spaces(S, A, Z);
  spaces.state_labels = {"NL", "MCI", "dementia"};
  spaces.action_labels = {"no-mri", "order-mri"};
  static const char* kMri[] = {"avg", "above-avg", "below-avg", "not-ordered"};
  static const char* kCdr[] = {"normal", "questionable", "impaired"};
  for (int m = 0; m < 4; ++m)
    for (int c = 0; c < 3; ++c)
      spaces.observation_labels.push_back(std::string(kMri[m]) + "/" + kCdr[c]);

  auto jitter_row = [&](Eigen::VectorXd row) {
    for (int i = 0; i < row.size(); ++i)
      if (row[i] > 0.0) row[i] *= std::exp(0.08 * rng.normal());
    row /= row.sum();
    return row;
  };

  // Slow progression, shared across actions (imaging does not alter disease).
  std::vector<Eigen::VectorXd> trans_rows = {
      jitter_row(to_vec({0.86, 0.12, 0.02})),
      jitter_row(to_vec({0.02, 0.86, 0.12})),
      jitter_row(to_vec({0.005, 0.015, 0.98}))};
  Tensor3 T(S, A, S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      for (int s2 = 0; s2 < S; ++s2) T(s, a, s2) = trans_rows[s][s2];

  // Cognitive-score category, always measured; imaging outcome only under the
  // ordering action ("not ordered" is a structural certainty otherwise).
  std::vector<Eigen::VectorXd> cdr_rows = {
      jitter_row(to_vec({0.75, 0.20, 0.05})),
      jitter_row(to_vec({0.22, 0.56, 0.22})),
      jitter_row(to_vec({0.05, 0.25, 0.70}))};
  std::vector<Eigen::VectorXd> mri_rows = {
      jitter_row(to_vec({0.50, 0.35, 0.15})),
      jitter_row(to_vec({0.45, 0.15, 0.40})),
      jitter_row(to_vec({0.25, 0.05, 0.70}))};

  Tensor3 O(A, S, Z, 0.0);
  for (int s2 = 0; s2 < S; ++s2) {
    for (int c = 0; c < 3; ++c) {
      O(0, s2, 3 * 3 + c) = cdr_rows[s2][c];  // m = not-ordered under no-mri
      for (int m = 0; m < 3; ++m) O(1, s2, 3 * m + c) = mri_rows[s2][m] * cdr_rows[s2][c];
    }
  }

  Belief b1(jitter_row(to_vec({0.50, 0.35, 0.15})));
  IohmmParams params(T, O, b1);
  BoundaryPolicy behavior(1.0, {to_vec({0.9, 0.0, 0.1}), to_vec({0.0, 0.7, 0.3})});

  EnvironmentSpec env{spaces, params, params, behavior, {}, 6};
  env.validate();
  return env;
}

EnvironmentSpec make_decision_tree_example() {
  const int S = 5, A = 5, Z = 5;
  Spaces spaces(S, A, Z);
  spaces.state_labels = {"ini", "hlt", "dis", "dsa", "dsb"};
  spaces.action_labels = {"tst-dis", "tst-typ", "stp-hlt", "stp-dsa", "stp-dsb"};
  spaces.observation_labels = {"obs-ini", "obs-hlt", "obs-dis", "obs-dsa", "obs-dsb"};

  Tensor3 T = identity_transitions(S, A);
  // tst-dis resolves a new arrival into healthy or diseased.
  T(0, 0, 0) = 0.0;
  T(0, 0, 1) = 0.6;
  T(0, 0, 2) = 0.4;
  // tst-typ resolves the disease into one of its two sub-types.
  T(2, 1, 2) = 0.0;
  T(2, 1, 3) = 0.5;
  T(2, 1, 4) = 0.5;

  // Deterministic, state-revealing observations under every action.
  Tensor3 O(A, S, Z, 0.0);
  for (int a = 0; a < A; ++a)
    for (int s2 = 0; s2 < S; ++s2) O(a, s2, s2) = 1.0;

  IohmmParams params(T, O, Belief::point_mass(S, 0));
  std::vector<Eigen::VectorXd> means;
  means.push_back(Belief::point_mass(S, 0).vec());  // tst-dis at ini
  means.push_back(Belief::point_mass(S, 2).vec());  // tst-typ at dis
  means.push_back(Belief::point_mass(S, 1).vec());  // stp-hlt at hlt
  means.push_back(Belief::point_mass(S, 3).vec());  // stp-dsa at dsa
  means.push_back(Belief::point_mass(S, 4).vec());  // stp-dsb at dsb
  BoundaryPolicy behavior(10.0, std::move(means));

  EnvironmentSpec env{spaces, params, params, behavior, {2, 3, 4}, 10};
  env.validate();
  return env;
}

EnvironmentSpec make_environment(const std::string& name, std::uint64_t seed) {
  if (name == "diag") return make_diag();
  if (name == "bias") return make_bias();
  if (name == "adni-like") return make_adni_like(seed);
  if (name == "tree") return make_decision_tree_example();
  throw UnknownEnvironment(name);
}

std::pair<Dataset, GroundTruth> generate_dataset(const EnvironmentSpec& env, int n,
                                                 std::uint64_t seed) {
  env.validate();
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");

  Dataset data;
  data.spaces = env.spaces;
  data.stop_actions = env.stop_actions;
  data.normalize_stop_actions();
  data.trajectories.resize(n);
  GroundTruth truth;
  truth.trajectories.resize(n);

  const int S = env.spaces.n_states;
  for (int i = 0; i < n; ++i) {
    Rng rng(seed + static_cast<std::uint64_t>(i));
    Trajectory traj;
    GroundTruthTrajectory gt;

    Eigen::VectorXd b1_true(S);
    for (int s = 0; s < S; ++s) b1_true[s] = env.true_params.initial[s];
    int state = rng.categorical(b1_true);
    gt.states.push_back(state);
    Belief belief = env.agent_params.initial;
    gt.beliefs.push_back(belief);

    for (int t = 0; t < env.max_horizon; ++t) {
      const ActionDistribution dist = action_distribution(belief, env.behavior);
      const int action = rng.categorical(dist.probs);
      gt.action_dists.push_back(dist.probs);

      if (data.is_stop(action)) {
        traj.steps.emplace_back(action, 0);
        Eigen::VectorXd trow(S);
        for (int s2 = 0; s2 < S; ++s2) trow[s2] = env.true_params.trans(state, action, s2);
        state = rng.categorical(trow);
        gt.states.push_back(state);
        belief = Belief(predict_next_state(belief, action, env.agent_params));
        gt.beliefs.push_back(belief);
        break;
      }

      const auto [next_state, obs] = sample_step(state, action, env.true_params, rng);
      traj.steps.emplace_back(action, obs);
      state = next_state;
      gt.states.push_back(state);
      belief = belief_update(belief, action, obs, env.agent_params);
      gt.beliefs.push_back(belief);
    }

    data.trajectories[i] = std::move(traj);
    truth.trajectories[i] = std::move(gt);
  }

  data.validate();
  return {std::move(data), std::move(truth)};
}

}  // namespace interpole
