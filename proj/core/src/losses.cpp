#include "gcrl/losses.hpp"

#include <cmath>

#include "gcrl/targets.hpp"

namespace gcrl {

void QuantileSpec::validate() const {
  require(rho > 0.0 && rho < 1.0, "quantile level must lie in (0, 1)");
  require(kappa > 0.0, "huber threshold must be positive");
}

double huber(double diff, double kappa) {
  const double a = std::abs(diff);
  return a <= kappa ? diff * diff : kappa * (2.0 * a - kappa);
}

double huber_derivative(double diff, double kappa) {
  const double a = std::abs(diff);
  if (a <= kappa) return 2.0 * diff;
  return diff > 0.0 ? 2.0 * kappa : -2.0 * kappa;
}

double quantile_huber(double y, double q, const QuantileSpec& spec) {
  const double weight = std::abs(spec.rho - (y < q ? 1.0 : 0.0));
  return weight * huber(y - q, spec.kappa);
}

double quantile_huber_dq(double y, double q, const QuantileSpec& spec) {
  const double weight = std::abs(spec.rho - (y < q ? 1.0 : 0.0));
  return -weight * huber_derivative(y - q, spec.kappa);
}

double td_error(const Environment& env, const State& s, const Action& a, const State& s_next, const Goal& g,
                const ActionValueFn& q, const ActionValueFn& q_target, const PolicyFn& pi, double gamma) {
  const double r = env.reward(env.achieved_goal(s_next), g);
  return gamma * q_target(s_next, pi(s_next, g), g) + r - q(s, a, g);
}

double td_error(const Environment& env, const State& s, const Action& a, const Goal& g, const ActionValueFn& q,
                const ActionValueFn& q_target, const PolicyFn& pi, double gamma) {
  return td_error(env, s, a, env.step(s, a), g, q, q_target, pi, gamma);
}

double advantage(const State& s, const Action& a, const Goal& g, const ActionValueFn& q_target, const PolicyFn& pi) {
  return q_target(s, a, g) - q_target(s, pi(s, g), g);
}

IdentitySides nstep_td_identity(const Environment& env, const SampledSegment& seg, const ActionValueFn& q,
                                const ActionValueFn& q_target, const PolicyFn& pi, double gamma, int n) {
  require(n >= 1, "n must be >= 1");
  const int m = std::min(n, seg.n_eff);
  BootstrapOracle oracle;
  oracle.value = [&](const State& s, const Goal& g) { return q_target(s, pi(s, g), g); };

  IdentitySides sides;
  sides.lhs = n_step_target(seg, oracle, gamma, m) - q(seg.state(0), seg.action(0), seg.goal);

  sides.rhs = td_error(env, seg.state(0), seg.action(0), seg.state(1), seg.goal, q, q_target, pi, gamma);
  double discount = 1.0;
  for (int i = 1; i < m; ++i) {
    discount *= gamma;
    const State& s = seg.state(i);
    const Action& a = seg.action(i);
    sides.rhs += discount * (advantage(s, a, seg.goal, q_target, pi) +
                             td_error(env, s, a, seg.state(i + 1), seg.goal, q_target, q_target, pi, gamma));
  }
  return sides;
}

LossResult critic_loss(std::span<const double> q, std::span<const double> y, CriticLossMode mode,
                       const QuantileSpec& spec) {
  require(!q.empty(), "critic loss of an empty batch");
  require(q.size() == y.size(), "critic loss batch size mismatch");
  const double inv = 1.0 / static_cast<double>(q.size());
  LossResult out;
  out.dq.resize(static_cast<Eigen::Index>(q.size()));
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (mode == CriticLossMode::kQuantile) {
      out.value += quantile_huber(y[i], q[i], spec);
      out.dq[i] = inv * quantile_huber_dq(y[i], q[i], spec);
    } else {
      out.value += huber(y[i] - q[i], spec.kappa);
      out.dq[i] = -inv * huber_derivative(y[i] - q[i], spec.kappa);
    }
  }
  out.value *= inv;
  return out;
}

double direct_critic_loss(const Environment& env, const std::vector<SampledSegment>& batch, const ActionValueFn& q,
                          const ActionValueFn& q_target, const PolicyFn& pi, double gamma, int n) {
  (void)env;
  require(!batch.empty(), "critic loss of an empty batch");
  BootstrapOracle oracle;
  oracle.value = [&](const State& s, const Goal& g) { return q_target(s, pi(s, g), g); };
  double total = 0.0;
  for (const auto& seg : batch) {
    const double diff = q(seg.state(0), seg.action(0), seg.goal) - n_step_target(seg, oracle, gamma, n);
    total += diff * diff;
  }
  return total / static_cast<double>(batch.size());
}

double reformulated_critic_loss(const Environment& env, const std::vector<SampledSegment>& batch,
                                const ActionValueFn& q, const ActionValueFn& q_target, const PolicyFn& pi,
                                double gamma, int n) {
  require(!batch.empty(), "critic loss of an empty batch");
  double total = 0.0;
  for (const auto& seg : batch) {
    const int m = std::min(n, seg.n_eff);
    double e = td_error(env, seg.state(0), seg.action(0), seg.state(1), seg.goal, q, q_target, pi, gamma);
    double discount = 1.0;
    for (int i = 1; i < m; ++i) {
      discount *= gamma;
      e += discount * (advantage(seg.state(i), seg.action(i), seg.goal, q_target, pi) +
                       td_error(env, seg.state(i), seg.action(i), seg.state(i + 1), seg.goal, q_target, q_target,
                                pi, gamma));
    }
    total += e * e;
  }
  return total / static_cast<double>(batch.size());
}

BatchCritic network_critic(const DenseNet& critic) {
  return [&critic](const Matrix& obs, const Matrix& actions) {
    Matrix input(obs.rows() + actions.rows(), obs.cols());
    input.topRows(obs.rows()) = obs;
    input.bottomRows(actions.rows()) = actions;
    ForwardCache cache;
    CriticEval eval;
    eval.q = critic.forward(input, cache).row(0);
    Matrix input_adjoint;
    critic.backward(cache, Matrix::Ones(1, obs.cols()), &input_adjoint);
    eval.action_grad = input_adjoint.bottomRows(actions.rows());
    return eval;
  };
}

ActorLossResult actor_loss_continuous(const DenseNet& actor, const BatchCritic& critic, const Matrix& obs,
                                      double penalty) {
  require(obs.cols() > 0, "actor loss of an empty batch");
  const double batch = static_cast<double>(obs.cols());
  ForwardCache cache;
  const Matrix z = actor.forward(obs, cache);
  ActorLossResult out;
  out.actions = z.array().tanh().matrix();
  const CriticEval eval = critic(obs, out.actions);
  const double elems = batch * static_cast<double>(z.rows());
  out.value = -eval.q.sum() / batch + penalty * z.squaredNorm() / elems;

  const Matrix d_action = -eval.action_grad / batch;
  const Matrix dz = d_action.cwiseProduct((1.0 - out.actions.array().square()).matrix()) + (2.0 * penalty / elems) * z;
  out.grad = actor.backward(cache, dz);
  return out;
}

ActorLossResult actor_loss_discrete(const DenseNet& actor, const BatchCritic& critic, const Matrix& obs,
                                    double penalty, double temperature, Rng& rng) {
  require(obs.cols() > 0, "actor loss of an empty batch");
  const double batch = static_cast<double>(obs.cols());
  ForwardCache cache;
  const Matrix logits = actor.forward(obs, cache);
  std::vector<GumbelSample> samples;
  samples.reserve(static_cast<std::size_t>(obs.cols()));
  ActorLossResult out;
  out.actions.resize(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    samples.push_back(gumbel_softmax_sample(logits.col(j), temperature, rng));
    out.actions.col(j) = samples.back().one_hot;
  }
  const CriticEval eval = critic(obs, out.actions);
  const double elems = batch * static_cast<double>(logits.rows());
  out.value = -eval.q.sum() / batch + penalty * logits.squaredNorm() / elems;

  Matrix dz(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    dz.col(j) = straight_through_grad(samples[j], Vector(-eval.action_grad.col(j) / batch));
  }
  dz += (2.0 * penalty / elems) * logits;
  out.grad = actor.backward(cache, dz);
  return out;
}

ActorLossResult actor_loss_discrete_expected(const DenseNet& actor, const BatchCritic& critic, const Matrix& obs,
                                             double penalty) {
  require(obs.cols() > 0, "actor loss of an empty batch");
  const Eigen::Index batch = obs.cols();
  ForwardCache cache;
  const Matrix logits = actor.forward(obs, cache);
  const Eigen::Index actions = logits.rows();
  const Matrix probs = softmax_columns(logits);

  Matrix q(actions, batch);
  for (Eigen::Index k = 0; k < actions; ++k) {
    Matrix one_hot = Matrix::Zero(actions, batch);
    one_hot.row(k).setOnes();
    q.row(k) = critic(obs, one_hot).q;
  }
  const Eigen::RowVectorXd expected = probs.cwiseProduct(q).colwise().sum();
  const double elems = static_cast<double>(batch * actions);
  ActorLossResult out;
  out.value = -expected.sum() / static_cast<double>(batch) + penalty * logits.squaredNorm() / elems;
  out.actions = probs;
  // d(-E_pi Q)/dz_k = -pi_k (Q_k - E_pi Q)
  Matrix dz = -probs.cwiseProduct(q - Matrix::Ones(actions, 1) * expected) / static_cast<double>(batch);
  dz += (2.0 * penalty / elems) * logits;
  out.grad = actor.backward(cache, dz);
  return out;
}

}  // namespace gcrl
