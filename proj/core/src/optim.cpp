#include "gcrl/optim.hpp"

#include <cmath>

namespace gcrl {

AdamState::AdamState(Eigen::Index size, AdamConfig config)
    : config_(config), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

void AdamState::update(Vector& params, const Vector& grad) {
  require(params.size() == m_.size() && grad.size() == m_.size(), "adam shape mismatch");
  ++steps_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  params.array() -= config_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + config_.eps);
}

void soft_update(Vector& target, const Vector& source, double tau) {
  require(target.size() == source.size(), "soft update shape mismatch");
  target = (1.0 - tau) * target + tau * source;
}

}  // namespace gcrl
