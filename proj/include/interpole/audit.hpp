#pragma once

#include <functional>
#include <string>
#include <vector>

#include "interpole/gradient.hpp"
#include "interpole/types.hpp"

namespace interpole {

/// Post-hoc audit configuration. `test_action` designates the
/// information-gathering action judged by the two detectors.
struct AuditCriteria {
  double boundary_confidence = 0.9;    // near-certainty threshold on beliefs
  double informativeness_fraction = 0.5;  // multiplier on the sd rule
  int test_action = 0;

  void validate() const {
    if (!(boundary_confidence > 0.0 && boundary_confidence <= 1.0))
      throw std::invalid_argument("AuditCriteria: boundary_confidence must be in (0, 1]");
    if (!(informativeness_fraction > 0.0))
      throw std::invalid_argument("AuditCriteria: informativeness_fraction must be > 0");
  }
};

/// One entry per possible observation: the posterior that observation would
/// have produced and its predictive probability. Probabilities sum to one;
/// zero-probability observations carry the predicted marginal as a
/// placeholder posterior.
struct CounterfactualOutcome {
  int observation;
  Belief posterior;
  double probability;
};

std::vector<CounterfactualOutcome> counterfactual_updates(const Belief& b, int a,
                                                          const IohmmParams& params);

/// Dataset-level statistics of factual belief change at test steps; the
/// informativeness rule is inactive with fewer than two test steps.
struct AuditStats {
  double mean_factual_change = 0.0;
  double sd_factual_change = 0.0;
  int n_test_steps = 0;
  bool active = false;

  double threshold(const AuditCriteria& criteria) const {
    return mean_factual_change - criteria.informativeness_fraction * sd_factual_change;
  }
};

AuditStats compute_audit_stats(const Dataset& data, const ThetaEstimate& model,
                               const AuditCriteria& criteria);

/// A trajectory is belated when (i) at some step the learned policy's modal
/// action is the test but the demonstration skipped it, and (ii) a test at a
/// later step produced a posterior with some state at or above the confidence
/// threshold.
struct BelatedEvidence {
  bool belated = false;
  std::vector<int> skipped_steps;  // steps violating (i) before the certain step
  int certain_step = -1;           // the later test step satisfying (ii)
};

BelatedEvidence detect_belated(const Trajectory& traj, const ThetaEstimate& model,
                               const AuditCriteria& criteria, const StopSet& stops = {});

/// Test steps whose factual belief change and best counterfactual belief
/// change (Euclidean distance) both fall below the dataset threshold
/// mean - fraction * sd.
std::vector<int> detect_uninformative(const Trajectory& traj, const ThetaEstimate& model,
                                      const AuditCriteria& criteria, const AuditStats& stats,
                                      const StopSet& stops = {});

struct AuditTrajectoryResult {
  BelatedEvidence belated;
  std::vector<int> uninformative_steps;
  int n_test_steps = 0;
};

struct CohortRow {
  std::string name;
  int n_trajectories = 0;
  int n_belated = 0;
  double belated_rate = 0.0;
  int n_test_steps = 0;
  int n_uninformative = 0;
  double uninformative_rate = 0.0;
};

using CohortPredicate = std::pair<std::string, std::function<bool(const Trajectory&)>>;

struct AuditReport {
  std::vector<AuditTrajectoryResult> per_trajectory;
  AuditStats stats;
  std::vector<CohortRow> cohorts;  // first row is always the full dataset
};

/// Runs both detectors over the dataset and tabulates frequencies per cohort.
AuditReport audit_dataset(const Dataset& data, const ThetaEstimate& model,
                          const AuditCriteria& criteria,
                          const std::vector<CohortPredicate>& cohorts = {});

/// Frequency table alone, for callers that already hold a report.
std::vector<CohortRow> cohort_summary(const Dataset& data, const ThetaEstimate& model,
                                      const std::vector<CohortPredicate>& cohorts,
                                      const AuditCriteria& criteria);

}  // namespace interpole
