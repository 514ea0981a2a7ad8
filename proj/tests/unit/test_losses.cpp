#include <gtest/gtest.h>

#include <random>

#include "gcrl/losses.hpp"
#include "gcrl/optim.hpp"
#include "test_support.hpp"

namespace gcrl {
namespace {

using testing::cell;
using testing::central_difference;
using testing::relative_error;

const QuantileSpec kSpec{};

TEST(QuantileHuber, Examples) {
  EXPECT_EQ(quantile_huber(1.5, 1.5, kSpec), 0.0);
  EXPECT_DOUBLE_EQ(quantile_huber(2.0, 0.0, kSpec), 3.0);
  EXPECT_DOUBLE_EQ(quantile_huber(-2.0, 0.0, kSpec), 1.0);
  EXPECT_DOUBLE_EQ(quantile_huber(20.0, 0.0, kSpec), 225.0);
}

TEST(QuantileHuber, GradientExample) {
  EXPECT_DOUBLE_EQ(quantile_huber_dq(2.0, 0.0, kSpec), -3.0);
  const double h = 1e-6;
  const double fd = (quantile_huber(2.0, h, kSpec) - quantile_huber(2.0, -h, kSpec)) / (2 * h);
  EXPECT_NEAR(fd, -3.0, 1e-6);
}

TEST(QuantileHuber, DerivativeMatchesFiniteDifference) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    const double y = u(rng);
    const double q = u(rng);
    if (std::abs(y - q) < 1e-3 || std::abs(std::abs(y - q) - kSpec.kappa) < 1e-3) continue;
    const double h = 1e-6;
    const double fd = (quantile_huber(y, q + h, kSpec) - quantile_huber(y, q - h, kSpec)) / (2 * h);
    EXPECT_LE(relative_error(quantile_huber_dq(y, q, kSpec), fd), 1e-5);
  }
}

TEST(QuantileHuber, ContinuousAtThreshold) {
  for (double sign : {1.0, -1.0}) {
    const double at = sign * kSpec.kappa;
    const double eps = 1e-9;
    EXPECT_NEAR(quantile_huber(at + eps, 0.0, kSpec), quantile_huber(at - eps, 0.0, kSpec), 1e-6);
    EXPECT_NEAR(huber_derivative(at + sign * eps, kSpec.kappa), huber_derivative(at - sign * eps, kSpec.kappa),
                1e-6);
    EXPECT_NEAR(std::abs(huber_derivative(at, kSpec.kappa)), 2.0 * kSpec.kappa, 1e-12);
  }
}

TEST(QuantileHuber, MedianIsSymmetric) {
  const QuantileSpec median{0.5, 10.0};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 200; ++i) {
    const double y = u(rng);
    const double q = u(rng);
    EXPECT_NEAR(quantile_huber(y, q, median), quantile_huber(2 * q - y, q, median), 1e-9);
  }
}

TEST(CriticLoss, ZeroWhenOnTarget) {
  const std::vector<double> q{-1.0, -2.0, 0.5};
  for (auto mode : {CriticLossMode::kHuberMean, CriticLossMode::kQuantile}) {
    const auto loss = critic_loss(q, q, mode, kSpec);
    EXPECT_EQ(loss.value, 0.0);
    EXPECT_EQ(loss.dq.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(CriticLoss, QuantileGradientExample) {
  const std::vector<double> q{0.0};
  const std::vector<double> y{2.0};
  const auto loss = critic_loss(q, y, CriticLossMode::kQuantile, kSpec);
  EXPECT_DOUBLE_EQ(loss.value, 3.0);
  EXPECT_DOUBLE_EQ(loss.dq[0], -3.0);
}

TEST(CriticLoss, HuberMeanIsMseInsideThreshold) {
  const std::vector<double> q{0.0, 1.0, -3.0};
  const std::vector<double> y{2.0, -1.0, -3.5};
  const auto loss = critic_loss(q, y, CriticLossMode::kHuberMean, kSpec);
  EXPECT_DOUBLE_EQ(loss.value, (4.0 + 4.0 + 0.25) / 3.0);
}

TEST(CriticLoss, GradientMatchesFiniteDifference) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-25.0, 5.0);
  std::vector<double> q(16);
  std::vector<double> y(16);
  for (auto& v : q) v = u(rng);
  for (auto& v : y) v = u(rng);
  for (auto mode : {CriticLossMode::kHuberMean, CriticLossMode::kQuantile}) {
    const auto loss = critic_loss(q, y, mode, kSpec);
    for (std::size_t i = 0; i < q.size(); ++i) {
      auto up = q;
      auto down = q;
      up[i] += 1e-6;
      down[i] -= 1e-6;
      const double fd = (critic_loss(up, y, mode, kSpec).value - critic_loss(down, y, mode, kSpec).value) / 2e-6;
      EXPECT_LE(relative_error(loss.dq[static_cast<Eigen::Index>(i)], fd), 1e-5);
    }
  }
}

TEST(CriticLoss, RejectsEmptyBatch) {
  const std::vector<double> none;
  EXPECT_THROW(critic_loss(none, none, CriticLossMode::kHuberMean, kSpec), ContractViolation);
}

class GridPrimitives : public ::testing::Test {
 protected:
  GridPrimitives() : env(EnvSpec::grid(5)), q_star(value_iteration(env, 0.9)) {}

  Environment env;
  TabularQ q_star;
};

TEST_F(GridPrimitives, TdErrorVanishesAtOptimum) {
  const auto q = testing::table_critic(q_star);
  const auto pi = testing::table_policy(q_star);
  for (const auto& s : env.all_cells()) {
    for (const auto& g : env.all_cells()) {
      for (int a = 0; a < kNumGridActions; ++a) {
        EXPECT_NEAR(td_error(env, s, Action::discrete(a), g, q, q, pi, 0.9), 0.0, 1e-12);
      }
    }
  }
}

TEST_F(GridPrimitives, TdErrorOfZeroCritic) {
  const ActionValueFn zero = [](const State&, const Action&, const Goal&) { return 0.0; };
  const PolicyFn stay = [](const State&, const Goal&) { return Action::discrete(4); };
  EXPECT_EQ(td_error(env, cell(0, 0), Action::discrete(3), cell(4, 4), zero, zero, stay, 0.7), -1.0);
  EXPECT_EQ(td_error(env, cell(0, 0), Action::discrete(3), cell(1, 0), zero, zero, stay, 0.7), 0.0);
}

TEST_F(GridPrimitives, Advantage) {
  const auto q = testing::table_critic(q_star);
  const auto pi = testing::table_policy(q_star);
  const State s = cell(1, 1);
  const Goal g = cell(3, 3);
  EXPECT_EQ(advantage(s, pi(s, g), g, q, pi), 0.0);
  // moving left leaves distance 5, the greedy move leaves 3
  EXPECT_NEAR(advantage(s, Action::discrete(2), g, q, pi), optimal_grid_value(5, 0.9) - optimal_grid_value(3, 0.9),
              1e-12);
  EXPECT_LT(advantage(s, Action::discrete(2), g, q, pi), 0.0);
  const ActionValueFn constant = [](const State&, const Action&, const Goal&) { return -4.0; };
  for (int a = 0; a < kNumGridActions; ++a) EXPECT_EQ(advantage(s, Action::discrete(a), g, constant, pi), 0.0);
}

std::shared_ptr<const Trajectory> random_episode(const Environment& env, Rng& rng) {
  const auto task = env.sample_task(rng);
  return std::make_shared<Trajectory>(
      rollout(env, [&](const State&, const Goal&) { return env.random_action(rng); }, task.goal, task.start));
}

TEST_F(GridPrimitives, IdentityOneStepIsTdError) {
  Rng rng(4);
  testing::NetCritic q(rng, 5);
  testing::NetCritic q_target(rng, 5);
  const auto pi = testing::greedy_policy(q_target);
  const auto traj = random_episode(env, rng);
  const auto seg = make_segment(env, traj, 3, 1, cell(2, 2));
  const auto sides = nstep_td_identity(env, seg, q, q_target, pi, 0.9, 1);
  EXPECT_DOUBLE_EQ(sides.rhs, td_error(env, seg.state(0), seg.action(0), seg.state(1), seg.goal, q, q_target, pi, 0.9));
  EXPECT_NEAR(sides.lhs, sides.rhs, 1e-12);
}

TEST_F(GridPrimitives, IdentityHoldsForRandomNetworks) {
  Rng rng(5);
  std::uniform_int_distribution<int> n_dist(1, 10);
  for (int trial = 0; trial < 100; ++trial) {
    testing::NetCritic q(rng, 5);
    testing::NetCritic q_target(rng, 5);
    const auto pi = testing::greedy_policy(q_target);
    const auto traj = random_episode(env, rng);
    std::uniform_int_distribution<int> t_dist(0, traj->horizon() - 1);
    const int n = n_dist(rng);
    const int t = t_dist(rng);
    const auto seg = make_segment(env, traj, t, n, traj->achieved[traj->horizon()]);
    const auto sides = nstep_td_identity(env, seg, q, q_target, pi, 0.95, n);
    EXPECT_NEAR(sides.lhs, sides.rhs, 1e-9);
  }
}

TEST_F(GridPrimitives, IdentityAtOptimumIsZero) {
  const auto q = testing::table_critic(q_star);
  const auto pi = testing::table_policy(q_star);
  const Goal g = cell(4, 3);
  const auto traj = std::make_shared<Trajectory>(rollout(env, pi, g, cell(0, 0)));
  const auto seg = make_segment(env, traj, 0, 5, g);
  const auto sides = nstep_td_identity(env, seg, q, q, pi, 0.9, 5);
  EXPECT_NEAR(sides.lhs, 0.0, 1e-12);
  EXPECT_NEAR(sides.rhs, 0.0, 1e-12);
}

TEST_F(GridPrimitives, DirectAndReformulatedLossesAgree) {
  Rng rng(6);
  testing::NetCritic q(rng, 5);
  testing::NetCritic q_target(rng, 5);
  const auto pi = testing::greedy_policy(q_target);
  TrajectoryBuffer buffer;
  for (int i = 0; i < 20; ++i) buffer.store(*random_episode(env, rng));
  for (int n : {1, 3, 7}) {
    const auto batch = sample_segments(env, buffer, 64, n, HindsightSpec{}, rng);
    EXPECT_NEAR(direct_critic_loss(env, batch, q, q_target, pi, 0.9, n),
                reformulated_critic_loss(env, batch, q, q_target, pi, 0.9, n), 1e-9);
  }
}

Matrix random_obs(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> normal;
  Matrix obs(rows, cols);
  for (Eigen::Index j = 0; j < obs.cols(); ++j) {
    for (Eigen::Index i = 0; i < obs.rows(); ++i) obs(i, j) = normal(rng);
  }
  return obs;
}

TEST(ActorLoss, ContinuousGradientMatchesFiniteDifference) {
  Rng rng(7);
  DenseNet actor({4, 8, 2}, OutputActivation::kLinear, rng);
  DenseNet critic_net({6, 8, 1}, OutputActivation::kLinear, rng);
  const auto critic = network_critic(critic_net);
  const Matrix obs = random_obs(rng, 4, 6);
  const auto result = actor_loss_continuous(actor, critic, obs, 0.3);
  auto f = [&](const Vector& p) {
    DenseNet probe = actor;
    probe.params() = p;
    return actor_loss_continuous(probe, critic, obs, 0.3).value;
  };
  for (Eigen::Index i = 0; i < actor.params().size(); ++i) {
    EXPECT_LE(relative_error(result.grad[i], central_difference(f, actor.params(), i)), 1e-5) << "param " << i;
  }
}

TEST(ActorLoss, ExpectedDiscreteGradientMatchesFiniteDifference) {
  Rng rng(8);
  DenseNet actor({4, 8, kNumGridActions}, OutputActivation::kLinear, rng);
  DenseNet critic_net({4 + kNumGridActions, 8, 1}, OutputActivation::kLinear, rng);
  const auto critic = network_critic(critic_net);
  const Matrix obs = random_obs(rng, 4, 6);
  const auto result = actor_loss_discrete_expected(actor, critic, obs, 0.5);
  auto f = [&](const Vector& p) {
    DenseNet probe = actor;
    probe.params() = p;
    return actor_loss_discrete_expected(probe, critic, obs, 0.5).value;
  };
  for (Eigen::Index i = 0; i < actor.params().size(); ++i) {
    EXPECT_LE(relative_error(result.grad[i], central_difference(f, actor.params(), i)), 1e-5) << "param " << i;
  }
  for (Eigen::Index j = 0; j < obs.cols(); ++j) EXPECT_NEAR(result.actions.col(j).sum(), 1.0, 1e-12);
}

TEST(ActorLoss, ConstantCriticLeavesOnlyPenalty) {
  Rng rng(9);
  DenseNet actor({3, 5, 2}, OutputActivation::kLinear, rng);
  const BatchCritic constant = [](const Matrix& obs, const Matrix& actions) {
    CriticEval eval;
    eval.q = Eigen::RowVectorXd::Constant(obs.cols(), -2.0);
    eval.action_grad = Matrix::Zero(actions.rows(), actions.cols());
    return eval;
  };
  const Matrix obs = random_obs(rng, 3, 4);
  const auto with_penalty = actor_loss_continuous(actor, constant, obs, 1.0);
  const auto without = actor_loss_continuous(actor, constant, obs, 0.0);
  EXPECT_EQ(without.grad.cwiseAbs().maxCoeff(), 0.0);
  ForwardCache cache;
  const Matrix z = actor.forward(obs, cache);
  const Vector expected = actor.backward(cache, (2.0 / static_cast<double>(z.size())) * z);
  EXPECT_LE((with_penalty.grad - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(with_penalty.value - without.value, z.squaredNorm() / static_cast<double>(z.size()), 1e-12);
}

TEST(ActorLoss, SaturatedActionCostsMoreThanZero) {
  DenseNet actor({1, 1}, OutputActivation::kLinear);
  const BatchCritic flat = [](const Matrix& obs, const Matrix& actions) {
    return CriticEval{Eigen::RowVectorXd::Zero(obs.cols()), Matrix::Zero(actions.rows(), actions.cols())};
  };
  const Matrix obs = Matrix::Zero(1, 1);
  actor.bias(0)[0] = 5.0;
  const double saturated = actor_loss_continuous(actor, flat, obs, 1.0).value;
  actor.bias(0)[0] = 0.0;
  EXPECT_GT(saturated, actor_loss_continuous(actor, flat, obs, 1.0).value);
}

TEST(ActorLoss, ToyCriticConvergesToOptimum) {
  DenseNet actor({1, 1}, OutputActivation::kLinear);
  const BatchCritic toy = [](const Matrix& obs, const Matrix& actions) {
    CriticEval eval;
    eval.q = -(actions.array() - 0.3).square().matrix();
    eval.action_grad = -2.0 * (actions.array() - 0.3).matrix();
    (void)obs;
    return eval;
  };
  const Matrix obs = Matrix::Ones(1, 1);
  for (int step = 0; step < 5000; ++step) {
    const auto result = actor_loss_continuous(actor, toy, obs, 1e-4);
    actor.params() -= 0.5 * result.grad;
  }
  EXPECT_NEAR(actor_loss_continuous(actor, toy, obs, 1e-4).actions(0, 0), 0.3, 1e-3);
}

}  // namespace
}  // namespace gcrl
