#pragma once

#include <stdexcept>
#include <vector>

namespace interpole {

/// Dense rank-3 tensor of doubles, row-major with the last index contiguous.
/// Used for the transition tensor T[s][a][s'] and observation tensor
/// O[a][s'][z], matching their serialized index order.
class Tensor3 {
 public:
  Tensor3() : d0_(0), d1_(0), d2_(0) {}
  Tensor3(int d0, int d1, int d2, double fill = 0.0)
      : d0_(d0), d1_(d1), d2_(d2), data_(static_cast<size_t>(d0) * d1 * d2, fill) {
    if (d0 <= 0 || d1 <= 0 || d2 <= 0)
      throw std::invalid_argument("Tensor3: dimensions must be positive");
  }

  int dim0() const { return d0_; }
  int dim1() const { return d1_; }
  int dim2() const { return d2_; }

  double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }

  /// Pointer to the contiguous last-axis row (i, j, ·).
  double* row(int i, int j) { return data_.data() + index(i, j, 0); }
  const double* row(int i, int j) const { return data_.data() + index(i, j, 0); }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_shape(const Tensor3& other) const {
    return d0_ == other.d0_ && d1_ == other.d1_ && d2_ == other.d2_;
  }

 private:
  size_t index(int i, int j, int k) const {
    return (static_cast<size_t>(i) * d1_ + j) * d2_ + k;
  }

  int d0_, d1_, d2_;
  std::vector<double> data_;
};

}  // namespace interpole
