#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "interpole/gradient.hpp"

namespace interpole {

/// Prior over the parameter bundle. Defaults are flat: symmetric Dirichlet(1)
/// on every probability row (so the MAP estimate coincides with maximum
/// likelihood) and no eta/mean priors.
struct Prior {
  double dirichlet_transition = 1.0;
  double dirichlet_observation = 1.0;
  double dirichlet_initial = 1.0;
  std::optional<std::pair<double, double>> eta_log_normal;  // (mean, sd) of log eta
  std::optional<double> means_normal_sd;                    // isotropic sd on mean components

  void validate() const {
    if (dirichlet_transition < 0 || dirichlet_observation < 0 || dirichlet_initial < 0)
      throw std::invalid_argument("Prior: Dirichlet concentrations must be >= 0");
    if (eta_log_normal && !(eta_log_normal->second > 0))
      throw std::invalid_argument("Prior: eta log-normal sd must be positive");
    if (means_normal_sd && !(*means_normal_sd > 0))
      throw std::invalid_argument("Prior: means sd must be positive");
  }
};

/// Log-density of the prior at theta, dropping parameter-independent
/// normalization constants (flat priors contribute exactly zero).
double log_prior(const ThetaEstimate& theta, const Prior& prior);

/// Gradient of log_prior in the same block layout as ThetaGradient.
ThetaGradient grad_log_prior(const ThetaEstimate& theta, const Prior& prior);

struct FitConfig {
  double learning_rate = 0.001;
  int max_iterations = 20000;
  int patience = 100;
  std::uint64_t seed = 0;
  double improvement_tolerance = 1e-8;
  int workers = 1;

  void validate() const {
    if (!(learning_rate > 0)) throw std::invalid_argument("FitConfig: learning_rate must be > 0");
    if (max_iterations < 0) throw std::invalid_argument("FitConfig: max_iterations must be >= 0");
    if (patience < 1) throw std::invalid_argument("FitConfig: patience must be >= 1");
    if (max_iterations > 0 && patience > max_iterations)
      throw std::invalid_argument("FitConfig: patience must be <= max_iterations");
    if (!(improvement_tolerance >= 0))
      throw std::invalid_argument("FitConfig: improvement_tolerance must be >= 0");
    if (workers < 1) throw std::invalid_argument("FitConfig: workers must be >= 1");
  }
};

struct FitReport {
  ThetaEstimate estimate;
  std::vector<double> log_posterior_trace;  // value at init, then one per iteration
  int iterations_run = 0;
  bool converged = false;
  std::uint64_t seed = 0;
};

/// Unconstrained parameter bundle used between a gradient step and the
/// projection back onto the feasible set.
struct RawTheta {
  Tensor3 transition;
  Tensor3 observation;
  Eigen::VectorXd initial;
  double eta = 0.0;
  std::vector<Eigen::VectorXd> means;

  static RawTheta from(const ThetaEstimate& theta);
};

/// Euclidean projection of a vector onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

/// Projects a raw bundle onto the feasible set: probability rows onto the
/// simplex, mean vectors onto the sum-to-one hyperplane, eta clamped at zero.
/// Frozen blocks are restored from `reference`.
ThetaEstimate project(const RawTheta& raw, const ThetaEstimate& reference);

/// Exact log posterior (up to the evidence constant): observation
/// log-likelihood from forward scaling, plus action log-likelihoods along the
/// subjective beliefs, plus log_prior.
double log_posterior(const ThetaEstimate& theta, const Dataset& data, const Prior& prior);

/// Optional known blocks used to pin initial values (typically for frozen
/// blocks of a protocol).
struct KnownValues {
  std::optional<Tensor3> transition;
  std::optional<Tensor3> observation;
  std::optional<Eigen::VectorXd> initial;
  std::optional<double> eta;
  std::optional<std::vector<Eigen::VectorXd>> means;
};

/// Random initial estimate: probability rows uniform on the simplex, mean
/// vectors 1/|S| with small normalized jitter, eta from known values or 1.
ThetaEstimate init_random(const Spaces& spaces, std::uint64_t seed, const FreezeMask& freeze,
                          const KnownValues& known = {});

/// MAP estimation: alternate posterior computation with a projected
/// adaptive-moment ascent step on the expected log-posterior, accepting a
/// step only if it improves the surrogate (halving the step on rejection).
/// Stops after `patience` consecutive iterations without an improvement
/// larger than improvement_tolerance. Returns the best iterate by exact log
/// posterior.
FitReport fit(const Dataset& data, const ThetaEstimate& init, const Prior& prior,
              const FitConfig& config);

/// Two-stage baseline: first fit the decision dynamics by closed-form EM on
/// observation likelihoods alone, then freeze them and fit the policy from
/// action likelihoods.
FitReport two_stage_fit(const Dataset& data, const ThetaEstimate& init, const Prior& prior,
                        const FitConfig& config);

}  // namespace interpole
