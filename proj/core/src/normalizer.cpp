#include "gcrl/normalizer.hpp"

#include <cmath>

namespace gcrl {

Normalizer::Normalizer(int dim, double raw_clip, double norm_clip, double std_floor)
    : raw_clip_(raw_clip),
      norm_clip_(norm_clip),
      std_floor_(std_floor),
      sum_(Vector::Zero(dim)),
      sum_sq_(Vector::Zero(dim)),
      mean_(Vector::Zero(dim)),
      std_(Vector::Ones(dim)) {
  require(dim >= 1, "normalizer dimension must be positive");
  require(std_floor > 0.0, "normalizer floor must be positive");
}

void Normalizer::update(const std::vector<Vector>& samples) {
  for (const auto& x : samples) {
    require(x.size() == mean_.size(), "normalizer dimension mismatch");
    const Vector clipped = x.cwiseMax(-raw_clip_).cwiseMin(raw_clip_);
    sum_ += clipped;
    sum_sq_ += clipped.cwiseAbs2();
    count_ += 1.0;
  }
  recompute();
}

void Normalizer::recompute() {
  if (count_ <= 0.0) return;
  mean_ = sum_ / count_;
  const Vector var = (sum_sq_ / count_ - mean_.cwiseAbs2()).cwiseMax(std_floor_ * std_floor_);
  std_ = var.cwiseSqrt();
}

Vector Normalizer::normalize(const Vector& x) const {
  require(x.size() == mean_.size(), "normalizer dimension mismatch");
  const Vector clipped = x.cwiseMax(-raw_clip_).cwiseMin(raw_clip_);
  const Vector z = (clipped - mean_).cwiseQuotient(std_);
  return z.cwiseMax(-norm_clip_).cwiseMin(norm_clip_);
}

void Normalizer::normalize_rows(Eigen::MatrixXd& batch, Eigen::Index row) const {
  auto block = batch.middleRows(row, mean_.size());
  block = block.cwiseMax(-raw_clip_).cwiseMin(raw_clip_);
  block.colwise() -= mean_;
  block.array().colwise() /= std_.array();
  block = block.cwiseMax(-norm_clip_).cwiseMin(norm_clip_);
}

void Normalizer::set_state(double count, Vector sum, Vector sum_sq) {
  require(sum.size() == mean_.size() && sum_sq.size() == mean_.size(), "normalizer state shape mismatch");
  count_ = count;
  sum_ = std::move(sum);
  sum_sq_ = std::move(sum_sq);
  recompute();
}

}  // namespace gcrl
