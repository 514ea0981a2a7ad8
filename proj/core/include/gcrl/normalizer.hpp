#pragma once

#include <vector>

#include "gcrl/mdp.hpp"

namespace gcrl {

/// Running per-dimension standardizer: raw clip, standardize, then clip again.
class Normalizer {
 public:
  explicit Normalizer(int dim, double raw_clip = 200.0, double norm_clip = 5.0, double std_floor = 1e-2);

  void update(const std::vector<Vector>& samples);
  Vector normalize(const Vector& x) const;
  /// Normalizes columns [row, row + dim) of a sample matrix in place.
  void normalize_rows(Eigen::MatrixXd& batch, Eigen::Index row) const;

  int dim() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }
  const Vector& mean() const { return mean_; }
  const Vector& stddev() const { return std_; }

  /// Restores statistics read from a checkpoint.
  void set_state(double count, Vector sum, Vector sum_sq);
  const Vector& sum() const { return sum_; }
  const Vector& sum_sq() const { return sum_sq_; }

 private:
  void recompute();

  double raw_clip_;
  double norm_clip_;
  double std_floor_;
  double count_ = 0.0;
  Vector sum_;
  Vector sum_sq_;
  Vector mean_;
  Vector std_;
};

}  // namespace gcrl
