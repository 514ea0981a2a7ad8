#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gcrl/targets.hpp"
#include "test_support.hpp"

namespace gcrl {
namespace {

using testing::cell;

// Recursive definition of the truncated target, evaluated from step offset k.
double truncated_recursive(const std::vector<double>& r, const std::vector<double>& boot, double gamma, int n,
                           int k = 0) {
  if (r[k] != 0.0 && n > 1) return r[k] + gamma * truncated_recursive(r, boot, gamma, n - 1, k + 1);
  return r[k] + gamma * boot[k];
}

double n_step_direct(const std::vector<double>& r, const std::vector<double>& boot, double gamma, int n) {
  double y = 0.0;
  for (int i = 0; i < n; ++i) y += std::pow(gamma, i) * r[i];
  return y + std::pow(gamma, n) * boot[n - 1];
}

double weighted(const std::vector<double>& ys, double lambda) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    num += std::pow(lambda, i + 1) * ys[i];
    den += std::pow(lambda, i + 1);
  }
  return num / den;
}

struct RandomSegment {
  std::vector<double> rewards;
  std::vector<double> boot;
};

RandomSegment random_segment(Rng& rng, int len, double zero_prob) {
  std::bernoulli_distribution zero(zero_prob);
  std::uniform_real_distribution<double> q(-10.0, 0.0);
  RandomSegment seg;
  for (int i = 0; i < len; ++i) {
    seg.rewards.push_back(zero(rng) ? 0.0 : -1.0);
    seg.boot.push_back(q(rng));
  }
  return seg;
}

TEST(NStepTarget, HandExample) {
  const std::vector<double> r{-1.0, -1.0};
  const std::vector<double> boot{0.0, -2.0};
  EXPECT_NEAR(n_step_target(r, boot, 0.9, 2), -3.52, 1e-12);
}

TEST(NStepTarget, OneStepIsHerTarget) {
  const std::vector<double> r{-1.0, 0.0, -1.0};
  const std::vector<double> boot{-4.0, -3.0, -2.0};
  EXPECT_DOUBLE_EQ(n_step_target(r, boot, 0.9, 1), -1.0 + 0.9 * -4.0);
}

TEST(NStepTarget, ZerosGiveZero) {
  const std::vector<double> zeros(5, 0.0);
  EXPECT_EQ(n_step_target(zeros, zeros, 0.98, 5), 0.0);
}

TEST(NStepTarget, TruncatesAtHorizon) {
  const std::vector<double> r{-1.0, -1.0};
  const std::vector<double> boot{-5.0, -2.0};
  EXPECT_DOUBLE_EQ(n_step_target(r, boot, 0.9, 10), n_step_target(r, boot, 0.9, 2));
}

TEST(NStepTarget, RejectsMissingValues) {
  const std::vector<double> r{-1.0, -1.0};
  const std::vector<double> boot{-5.0};
  EXPECT_THROW(n_step_target(r, boot, 0.9, 2), ContractViolation);
  EXPECT_THROW(n_step_target(r, r, 0.9, 0), ContractViolation);
}

TEST(LambdaTarget, HandExample) {
  // y1 = -1 + 0.9 * 0 = -1, y2 = -1 - 0.9 + 0.81 * b with b chosen so y2 = -1.5
  const double b = (-1.5 + 1.9) / 0.81;
  const std::vector<double> r{-1.0, -1.0};
  const std::vector<double> boot{0.0, b};
  EXPECT_NEAR(lambda_target(r, boot, 0.9, 2, 0.7), (0.7 * -1.0 + 0.49 * -1.5) / 1.19, 1e-12);
  EXPECT_NEAR(lambda_target(r, boot, 0.9, 2, 0.7), -1.20588, 1e-5);
}

TEST(LambdaTarget, SingleStepIgnoresLambda) {
  const std::vector<double> r{-1.0, -1.0, -1.0};
  const std::vector<double> boot{-3.0, -2.0, -1.0};
  for (double lambda : {0.0, 0.3, 0.7, 1.0}) {
    EXPECT_DOUBLE_EQ(lambda_target(r, boot, 0.9, 1, lambda), -1.0 + 0.9 * -3.0);
  }
}

TEST(LambdaTarget, SmallLambdaApproachesOneStep) {
  const std::vector<double> r{-1.0, -1.0, -1.0};
  const std::vector<double> boot{-3.0, -2.0, -1.0};
  const double one_step = -1.0 + 0.9 * -3.0;
  EXPECT_DOUBLE_EQ(lambda_target(r, boot, 0.9, 3, 0.0), one_step);
  EXPECT_NEAR(lambda_target(r, boot, 0.9, 3, 1e-9), one_step, 1e-7);
}

TEST(TruncatedTarget, HandExample) {
  const double q = -3.7;
  const std::vector<double> r{-1.0, 0.0, -1.0};
  const std::vector<double> boot{-8.0, q, -6.0};
  EXPECT_NEAR(truncated_target(r, boot, 0.9, 3), -1.0 + 0.81 * q, 1e-12);
}

TEST(TruncatedTarget, ZeroFirstRewardIsOneStep) {
  const std::vector<double> r{0.0, 0.0, -1.0, -1.0};
  const std::vector<double> boot{-0.5, -1.0, -2.0, -3.0};
  for (int n = 1; n <= 4; ++n) EXPECT_DOUBLE_EQ(truncated_target(r, boot, 0.9, n), 0.9 * -0.5);
  for (int n = 1; n <= 4; ++n) EXPECT_DOUBLE_EQ(truncated_lambda_target(r, boot, 0.9, n, 0.7), 0.9 * -0.5);
}

TEST(TruncatedTarget, NoGoalMatchesNStep) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto seg = random_segment(rng, 10, 0.0);
    for (int n = 1; n <= 10; ++n) {
      EXPECT_EQ(truncated_target(seg.rewards, seg.boot, 0.95, n), n_step_target(seg.rewards, seg.boot, 0.95, n));
      EXPECT_EQ(truncated_lambda_target(seg.rewards, seg.boot, 0.95, n, 0.7),
                lambda_target(seg.rewards, seg.boot, 0.95, n, 0.7));
    }
  }
}

TEST(TruncatedTarget, MatchesRecursiveDefinition) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const auto seg = random_segment(rng, 10, 0.3);
    for (int n = 1; n <= 10; ++n) {
      EXPECT_NEAR(truncated_target(seg.rewards, seg.boot, 0.9, n), truncated_recursive(seg.rewards, seg.boot, 0.9, n),
                  1e-12);
    }
  }
}

TEST(TargetOracles, BruteForceAverages) {
  Rng rng(11);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto seg = random_segment(rng, 10, 0.25);
    const double gamma = unit(rng);
    const double lambda = unit(rng);
    for (int n = 1; n <= 10; ++n) {
      EXPECT_NEAR(n_step_target(seg.rewards, seg.boot, gamma, n), n_step_direct(seg.rewards, seg.boot, gamma, n),
                  1e-10);
      std::vector<double> plain;
      std::vector<double> truncated;
      for (int i = 1; i <= n; ++i) {
        plain.push_back(n_step_direct(seg.rewards, seg.boot, gamma, i));
        truncated.push_back(truncated_recursive(seg.rewards, seg.boot, gamma, i));
      }
      EXPECT_NEAR(lambda_target(seg.rewards, seg.boot, gamma, n, lambda), weighted(plain, lambda), 1e-10);
      EXPECT_NEAR(truncated_lambda_target(seg.rewards, seg.boot, gamma, n, lambda), weighted(truncated, lambda),
                  1e-10);
    }
  }
}

TEST(TargetOracles, Deterministic) {
  Rng rng(13);
  const auto seg = random_segment(rng, 8, 0.3);
  EXPECT_EQ(truncated_lambda_target(seg.rewards, seg.boot, 0.9, 8, 0.7),
            truncated_lambda_target(seg.rewards, seg.boot, 0.9, 8, 0.7));
}

TEST(TargetOracles, LowerBound) {
  Rng rng(17);
  const double gamma = 0.9;
  for (int trial = 0; trial < 200; ++trial) {
    const auto seg = random_segment(rng, 10, 0.3);
    const double floor = -1.0 / (1.0 - gamma) - 10.0;
    for (int n = 1; n <= 10; ++n) {
      EXPECT_GE(n_step_target(seg.rewards, seg.boot, gamma, n), floor);
      EXPECT_GE(truncated_lambda_target(seg.rewards, seg.boot, gamma, n, 0.7), floor);
    }
  }
}

std::vector<RetraceStep> random_retrace_steps(Rng& rng, int n) {
  std::uniform_real_distribution<double> q(-5.0, 0.0);
  std::uniform_real_distribution<double> p(0.05, 1.0);
  std::vector<RetraceStep> steps(n);
  for (auto& step : steps) {
    step.reward = q(rng) < -2.5 ? -1.0 : 0.0;
    step.expected_q = q(rng);
    step.taken_q = q(rng);
    step.target_prob = p(rng);
    step.behavior_prob = p(rng);
  }
  return steps;
}

TEST(RetraceTarget, ZeroLambdaIsExpectedOneStep) {
  Rng rng(19);
  const auto steps = random_retrace_steps(rng, 5);
  EXPECT_DOUBLE_EQ(retrace_target(steps, 0.9, 5, 0.0), steps[0].reward + 0.9 * steps[0].expected_q);
}

TEST(RetraceTarget, OneStepIgnoresLambda) {
  Rng rng(23);
  const auto steps = random_retrace_steps(rng, 5);
  for (double lambda : {0.0, 0.5, 1.0}) {
    EXPECT_DOUBLE_EQ(retrace_target(steps, 0.9, 1, lambda), steps[0].reward + 0.9 * steps[0].expected_q);
  }
}

TEST(RetraceTarget, OnPolicyTwoStepTelescopes) {
  // Deterministic policy equal to the behavior: pi = mu = 1 on the logged action, so E_pi Q = Q(taken).
  std::vector<RetraceStep> steps(2);
  steps[0] = {-1.0, -2.5, -2.5, 1.0, 1.0};
  steps[1] = {-1.0, -1.7, 0.0, 1.0, 1.0};
  const double gamma = 0.9;
  EXPECT_NEAR(retrace_target(steps, gamma, 2, 1.0), -1.0 + gamma * -1.0 + gamma * gamma * -1.7, 1e-12);
}

TEST(RetraceTarget, MatchesExplicitSum) {
  Rng rng(29);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 10;
    const auto steps = random_retrace_steps(rng, n);
    const double gamma = 0.95;
    const double lambda = 0.8;
    double expected = 0.0;
    for (int i = 1; i <= n; ++i) {
      double trace = 1.0;
      for (int s = 1; s < i; ++s) trace *= lambda * std::min(1.0, steps[s - 1].target_prob / steps[s - 1].behavior_prob);
      const double c = i == n ? 0.0 : lambda * std::min(1.0, steps[i - 1].target_prob / steps[i - 1].behavior_prob);
      const auto& st = steps[i - 1];
      expected += std::pow(gamma, i - 1) * trace * (st.reward + gamma * st.expected_q - gamma * c * st.taken_q);
    }
    EXPECT_NEAR(retrace_target(steps, gamma, n, lambda), expected, 1e-10);
  }
}

TEST(RetraceTarget, ZeroBehaviorProbabilityThrows) {
  std::vector<RetraceStep> steps(2);
  steps[0].behavior_prob = 0.0;
  EXPECT_THROW(retrace_target(steps, 0.9, 2, 1.0), ContractViolation);
}

class SegmentTargets : public ::testing::Test {
 protected:
  SegmentTargets() : env(EnvSpec::grid(5)) {
    // right, right, up, stay from (0,0) towards (2,1); goal reached after three steps
    auto traj = std::make_shared<Trajectory>();
    const std::vector<int> moves{3, 3, 0, 4, 4, 4};
    traj->states.push_back(cell(0, 0));
    traj->achieved.push_back(cell(0, 0));
    traj->desired = cell(2, 1);
    for (int a : moves) {
      traj->actions.push_back(Action::discrete(a));
      traj->behavior_prob.push_back(0.5);
      traj->states.push_back(env.step(traj->states.back(), traj->actions.back()));
      traj->achieved.push_back(traj->states.back());
    }
    stored = traj;
    oracle.value = [](const State& s, const Goal& g) { return -0.5 * manhattan(s, g) - 0.1; };
    oracle.action_values = [](const State& s, const Goal& g) {
      Vector q(kNumGridActions);
      for (int a = 0; a < kNumGridActions; ++a) q[a] = -0.5 * manhattan(s, g) - 0.1 * a;
      return q;
    };
    oracle.policy_probs = [](const State&, const Goal&) { return Vector::Constant(kNumGridActions, 0.2); };
  }

  Environment env;
  std::shared_ptr<const Trajectory> stored;
  BootstrapOracle oracle;
};

TEST_F(SegmentTargets, SegmentFormMatchesSpanForm) {
  const auto seg = make_segment(env, stored, 0, 5, cell(2, 1));
  std::vector<double> boot;
  for (int i = 1; i <= seg.n_eff; ++i) boot.push_back(oracle.value(seg.state(i), seg.goal));
  for (int n = 1; n <= 5; ++n) {
    EXPECT_DOUBLE_EQ(n_step_target(seg, oracle, 0.9, n), n_step_target(seg.rewards, boot, 0.9, n));
    EXPECT_DOUBLE_EQ(lambda_target(seg, oracle, 0.9, n, 0.7), lambda_target(seg.rewards, boot, 0.9, n, 0.7));
    EXPECT_DOUBLE_EQ(truncated_target(seg, oracle, 0.9, n), truncated_target(seg.rewards, boot, 0.9, n));
    EXPECT_DOUBLE_EQ(truncated_lambda_target(seg, oracle, 0.9, n, 0.7),
                     truncated_lambda_target(seg.rewards, boot, 0.9, n, 0.7));
  }
  // truncation: rewards -1, -1, 0 so a 5-step truncated target stops at the third step
  EXPECT_DOUBLE_EQ(truncated_target(seg, oracle, 0.9, 5), truncated_target(seg, oracle, 0.9, 3));
}

TEST_F(SegmentTargets, HorizonTruncation) {
  const auto seg = make_segment(env, stored, 4, 10, cell(2, 1));
  EXPECT_EQ(seg.n_eff, 2);
  EXPECT_DOUBLE_EQ(n_step_target(seg, oracle, 0.9, 10), n_step_target(seg, oracle, 0.9, 2));
}

TEST_F(SegmentTargets, RetraceSteps) {
  const auto seg = make_segment(env, stored, 0, 3, cell(2, 1));
  const auto steps = retrace_steps(seg, oracle, 3);
  ASSERT_EQ(steps.size(), 3u);
  EXPECT_DOUBLE_EQ(steps[0].reward, -1.0);
  EXPECT_DOUBLE_EQ(steps[0].behavior_prob, 0.5);
  EXPECT_DOUBLE_EQ(steps[0].target_prob, 0.2);
  // s_{t+1} = (1,0) is two cells from the goal and logs "right" (index 3)
  EXPECT_DOUBLE_EQ(steps[0].taken_q, -0.5 * 2 - 0.3);
  EXPECT_DOUBLE_EQ(steps[0].expected_q, -1.0 - 0.1 * (0 + 1 + 2 + 3 + 4) / 5.0);
  EXPECT_DOUBLE_EQ(retrace_target(seg, oracle, 0.9, 3, 0.6), retrace_target(steps, 0.9, 3, 0.6));
}

TEST_F(SegmentTargets, DispatchOneStepCollapse) {
  const auto seg = make_segment(env, stored, 1, 5, cell(2, 1));
  const double her = compute_target({TargetKind::kHer, 1, 0.7}, seg, oracle, 0.9);
  for (auto kind : {TargetKind::kMher, TargetKind::kMherLambda, TargetKind::kTmher, TargetKind::kTmherLambda}) {
    EXPECT_DOUBLE_EQ(compute_target({kind, 1, 0.7}, seg, oracle, 0.9), her);
  }
  const auto steps = retrace_steps(seg, oracle, 1);
  EXPECT_DOUBLE_EQ(compute_target({TargetKind::kRetrace, 1, 0.7}, seg, oracle, 0.9),
                   steps[0].reward + 0.9 * steps[0].expected_q);
}

TEST(TargetSpec, Validation) {
  EXPECT_THROW((TargetSpec{TargetKind::kHer, 3, 0.7}.validate(true)), ContractViolation);
  EXPECT_THROW((TargetSpec{TargetKind::kMher, 0, 0.7}.validate(true)), ContractViolation);
  EXPECT_THROW((TargetSpec{TargetKind::kMherLambda, 3, 1.5}.validate(true)), ContractViolation);
  EXPECT_THROW((TargetSpec{TargetKind::kRetrace, 3, 0.7}.validate(false)), ContractViolation);
  EXPECT_NO_THROW((TargetSpec{TargetKind::kTmherLambda, 10, 0.7}.validate(false)));
  EXPECT_EQ(target_kind_from_string("tmher_lambda"), TargetKind::kTmherLambda);
  EXPECT_THROW(target_kind_from_string("bogus"), ContractViolation);
}

}  // namespace
}  // namespace gcrl
