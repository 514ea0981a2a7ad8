#include "gcrl/gumbel.hpp"

#include <cmath>
#include <limits>

#include "gcrl/dense_net.hpp"

namespace gcrl {

GumbelSample gumbel_softmax_sample(const Vector& logits, double temperature, Rng& rng) {
  require(temperature > 0.0, "gumbel temperature must be positive");
  std::uniform_real_distribution<double> unit(std::numeric_limits<double>::min(), 1.0);
  Vector perturbed(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    perturbed[i] = logits[i] - std::log(-std::log(unit(rng)));
  }
  GumbelSample sample;
  sample.temperature = temperature;
  sample.index = argmax(perturbed);
  sample.one_hot = Vector::Zero(logits.size());
  sample.one_hot[sample.index] = 1.0;
  sample.soft = softmax(Vector(perturbed / temperature));
  return sample;
}

Vector straight_through_grad(const GumbelSample& sample, const Vector& action_adjoint) {
  require(action_adjoint.size() == sample.soft.size(), "gumbel adjoint shape mismatch");
  const Vector& p = sample.soft;
  const double inner = p.dot(action_adjoint);
  return p.cwiseProduct(action_adjoint.array().matrix() - Vector::Constant(p.size(), inner)) /
         sample.temperature;
}

}  // namespace gcrl
