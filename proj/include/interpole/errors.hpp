#pragma once

#include <stdexcept>
#include <string>

namespace interpole {

/// Thrown when an observation is impossible under the current model
/// (belief-update or forward-message normalizer underflows).
class ZeroLikelihood : public std::runtime_error {
 public:
  ZeroLikelihood(const std::string& what, int step, int trajectory = -1)
      : std::runtime_error(what), step_(step), trajectory_(trajectory) {}
  int step() const { return step_; }
  int trajectory() const { return trajectory_; }
  ZeroLikelihood with_trajectory(int trajectory) const {
    return ZeroLikelihood(what(), step_, trajectory);
  }

 private:
  int step_;
  int trajectory_;
};

/// Thrown when a likelihood or gradient evaluation produces a non-finite
/// value that cannot be attributed to a zero-weight term.
class NonFiniteValue : public std::runtime_error {
 public:
  NonFiniteValue(const std::string& what, std::string block, int iteration = -1)
      : std::runtime_error(what), block_(std::move(block)), iteration_(iteration) {}
  const std::string& block() const { return block_; }
  int iteration() const { return iteration_; }
  NonFiniteValue at_iteration(int iteration) const {
    return NonFiniteValue(what(), block_, iteration);
  }

 private:
  std::string block_;
  int iteration_;
};

class UnknownEnvironment : public std::runtime_error {
 public:
  explicit UnknownEnvironment(const std::string& name)
      : std::runtime_error("unknown environment: " + name) {}
};

class UnsupportedDimension : public std::runtime_error {
 public:
  explicit UnsupportedDimension(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace interpole
