#pragma once

#include <functional>
#include <span>
#include <vector>

#include "gcrl/dense_net.hpp"
#include "gcrl/gumbel.hpp"
#include "gcrl/replay.hpp"

namespace gcrl {

struct QuantileSpec {
  double rho = 0.75;
  double kappa = 10.0;
  void validate() const;
};

/// d^2 if |d| <= kappa, else kappa * (2|d| - kappa).
double huber(double diff, double kappa);
double huber_derivative(double diff, double kappa);

/// Asymmetric Huber: |rho - 1[y < q]| * huber(y - q, kappa).
double quantile_huber(double y, double q, const QuantileSpec& spec);
/// Partial derivative of quantile_huber with respect to q.
double quantile_huber_dq(double y, double q, const QuantileSpec& spec);

using ActionValueFn = std::function<double(const State&, const Action&, const Goal&)>;
using PolicyFn = std::function<Action(const State&, const Goal&)>;

/// gamma * Q_target(s', pi(s', g), g) + r(s', g) - Q(s, a, g), with s' the observed successor.
double td_error(const Environment& env, const State& s, const Action& a, const State& s_next, const Goal& g,
                const ActionValueFn& q, const ActionValueFn& q_target, const PolicyFn& pi, double gamma);
/// Same with s' = env.step(s, a).
double td_error(const Environment& env, const State& s, const Action& a, const Goal& g, const ActionValueFn& q,
                const ActionValueFn& q_target, const PolicyFn& pi, double gamma);

/// Q_target(s, a, g) - Q_target(s, pi(s, g), g)
double advantage(const State& s, const Action& a, const Goal& g, const ActionValueFn& q_target, const PolicyFn& pi);

struct IdentitySides {
  double lhs = 0.0;  ///< y^(n) - Q(s_t, a_t, g)
  double rhs = 0.0;  ///< delta(s_t) + sum_i gamma^i [A_target(s_{t+i}) + delta_target(s_{t+i})]
};

/// Both sides of the n-step TD-error identity on a stored segment (n clipped to the segment length).
IdentitySides nstep_td_identity(const Environment& env, const SampledSegment& seg, const ActionValueFn& q,
                                const ActionValueFn& q_target, const PolicyFn& pi, double gamma, int n);

enum class CriticLossMode { kHuberMean, kQuantile };

struct LossResult {
  double value = 0.0;
  Vector dq;  ///< dL/dQ_i
};

LossResult critic_loss(std::span<const double> q, std::span<const double> y, CriticLossMode mode,
                       const QuantileSpec& spec);

/// Mean squared n-step TD error written directly as (Q - y^(n))^2.
double direct_critic_loss(const Environment& env, const std::vector<SampledSegment>& batch, const ActionValueFn& q,
                          const ActionValueFn& q_target, const PolicyFn& pi, double gamma, int n);
/// The same loss written through TD errors and advantages only.
double reformulated_critic_loss(const Environment& env, const std::vector<SampledSegment>& batch,
                                const ActionValueFn& q, const ActionValueFn& q_target, const PolicyFn& pi,
                                double gamma, int n);

/// Batched critic view for the actor step: Q values and dQ/d(action), one sample per column.
struct CriticEval {
  Eigen::RowVectorXd q;
  Matrix action_grad;
};
using BatchCritic = std::function<CriticEval(const Matrix& obs, const Matrix& actions)>;

/// Critic network fed with [obs; action] rows.
BatchCritic network_critic(const DenseNet& critic);

struct ActorLossResult {
  double value = 0.0;
  Vector grad;      ///< dL/d(actor params)
  Matrix actions;   ///< actions fed to the critic
};

/// -mean Q(obs, tanh(z)) + penalty * mean(z^2) for an actor emitting pre-tanh z.
ActorLossResult actor_loss_continuous(const DenseNet& actor, const BatchCritic& critic, const Matrix& obs,
                                      double penalty);
/// Straight-through Gumbel-Softmax version for discrete actions; the penalty acts on the logits.
ActorLossResult actor_loss_discrete(const DenseNet& actor, const BatchCritic& critic, const Matrix& obs,
                                    double penalty, double temperature, Rng& rng);
/// Discrete actor loss -mean_b sum_k softmax(z_b)_k Q(s_b, e_k) + penalty * mean(z^2), with the critic
/// evaluated at every one-hot action.
ActorLossResult actor_loss_discrete_expected(const DenseNet& actor, const BatchCritic& critic, const Matrix& obs,
                                             double penalty);

}  // namespace gcrl
