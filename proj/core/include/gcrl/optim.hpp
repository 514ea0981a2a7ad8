#pragma once

#include "gcrl/mdp.hpp"

namespace gcrl {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected moments over a flat parameter vector.
class AdamState {
 public:
  AdamState() = default;
  AdamState(Eigen::Index size, AdamConfig config = {});

  void update(Vector& params, const Vector& grad);

  long steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const Vector& first_moment() const { return m_; }
  const Vector& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  Vector m_;
  Vector v_;
  long steps_ = 0;
};

/// target <- (1 - tau) * target + tau * source
void soft_update(Vector& target, const Vector& source, double tau);

}  // namespace gcrl
