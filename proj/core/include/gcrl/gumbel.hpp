#pragma once

#include "gcrl/mdp.hpp"

namespace gcrl {

/// A straight-through Gumbel-Softmax draw: the hard one-hot feeds the critic,
/// gradients flow through the relaxed probabilities.
struct GumbelSample {
  int index = 0;
  Vector one_hot;
  Vector soft;  ///< softmax((logits + gumbel) / temperature)
  double temperature = 1.0;
};

GumbelSample gumbel_softmax_sample(const Vector& logits, double temperature, Rng& rng);

/// Maps dL/d(one_hot) to dL/d(logits) through the relaxed sample.
Vector straight_through_grad(const GumbelSample& sample, const Vector& action_adjoint);

}  // namespace gcrl
