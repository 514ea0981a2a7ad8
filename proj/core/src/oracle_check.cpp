#include "gcrl/oracle_check.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "gcrl/bias.hpp"
#include "gcrl/dense_net.hpp"
#include "gcrl/tabular.hpp"

namespace gcrl {

namespace {

struct RandomCritic {
  DenseNet net;
  int size;

  double operator()(const State& s, const Action& a, const Goal& g) const {
    Vector in(4 + kNumGridActions);
    in << s / size, g / size, a.encode(kNumGridActions);
    return net.forward(in)[0];
  }
};

Action greedy_action(const RandomCritic& q, const State& s, const Goal& g) {
  Vector values(kNumGridActions);
  for (int a = 0; a < kNumGridActions; ++a) values[a] = q(s, Action::discrete(a), g);
  return Action::discrete(argmax(values));
}

}  // namespace

OracleCheck check_value_iteration(int size, double gamma) {
  OracleCheck check{"value iteration vs closed form", 0.0, 1e-12, 0};
  const Environment env(EnvSpec::grid(size));
  const TabularQ q = value_iteration(env, gamma);
  const auto cells = env.all_cells();
  for (const auto& s : cells) {
    for (const auto& g : cells) {
      for (int a = 0; a < kNumGridActions; ++a) {
        const State next = env.step(s, Action::discrete(a));
        const double expected = optimal_grid_value(manhattan(next, g), gamma);
        check.max_error = std::max(check.max_error, std::abs(q(s, a, g) - expected));
        ++check.cases;
      }
    }
  }
  return check;
}

OracleCheck check_optimal_bias(int size, double gamma) {
  OracleCheck check{"optimal critic has zero TSB and ISB", 0.0, 1e-9, 0};
  const Environment env(EnvSpec::grid(size));
  const TabularQ table = value_iteration(env, gamma);
  const ActionValueFn q = [&](const State& s, const Action& a, const Goal& g) { return table(s, a.index(), g); };
  const PolicyFn pi = [&](const State& s, const Goal& g) { return Action::discrete(table.greedy(s, g)); };
  const auto cells = env.all_cells();
  for (const auto& start : cells) {
    for (const auto& goal : cells) {
      if (start == goal) continue;
      const std::vector<Trajectory> one = {rollout(env, pi, goal, start)};
      const auto t = tsb(env, one, q, pi);
      const auto i = isb(env, one, q, gamma, t);
      if (!t || !i) {
        check.max_error = INFINITY;
      } else {
        check.max_error = std::max({check.max_error, std::abs(*t), std::abs(*i)});
      }
      ++check.cases;
    }
  }
  return check;
}

OracleCheck check_td_identity(int draws, std::uint64_t seed) {
  OracleCheck check{"n-step TD identity", 0.0, 1e-9, 0};
  Rng rng(seed);
  const Environment env(EnvSpec::grid(6));
  std::uniform_int_distribution<int> pick_n(1, 10);
  std::bernoulli_distribution pick_gamma(0.5);
  for (int d = 0; d < draws; ++d) {
    const RandomCritic q{DenseNet({4 + kNumGridActions, 16, 1}, OutputActivation::kLinear, rng), 6};
    const RandomCritic q_target{DenseNet({4 + kNumGridActions, 16, 1}, OutputActivation::kLinear, rng), 6};
    const PolicyFn pi = [&](const State& s, const Goal& g) { return greedy_action(q_target, s, g); };
    const auto task = env.sample_task(rng);
    auto traj = std::make_shared<const Trajectory>(
        rollout(env, [&](const State&, const Goal&) { return env.random_action(rng); }, task.goal, task.start));
    std::uniform_int_distribution<int> pick_t(0, traj->horizon() - 1);
    const int t = pick_t(rng);
    const int n = pick_n(rng);
    const double gamma = pick_gamma(rng) ? 0.9 : 0.98;
    const auto seg = make_segment(env, traj, t, n, task.goal);
    const auto sides = nstep_td_identity(env, seg, q, q_target, pi, gamma, n);
    check.max_error = std::max(check.max_error, std::abs(sides.lhs - sides.rhs));
    ++check.cases;
  }
  return check;
}

OracleCheck check_telescoping(int draws, std::uint64_t seed) {
  OracleCheck check{"bias telescoping", 0.0, 1e-9, 0};
  Rng rng(seed);
  const Environment env(EnvSpec::grid(5));
  for (int d = 0; d < draws; ++d) {
    const RandomCritic q{DenseNet({4 + kNumGridActions, 16, 1}, OutputActivation::kLinear, rng), 5};
    const PolicyFn pi = [&](const State& s, const Goal& g) { return greedy_action(q, s, g); };
    const auto task = env.sample_task(rng);
    const auto traj =
        rollout(env, [&](const State&, const Goal&) { return env.random_action(rng); }, task.goal, task.start);
    std::uniform_int_distribution<int> pick_t(0, traj.horizon() - 1);
    const auto split = decompose_bias(env, traj, q, pi, 0.9, pick_t(rng));
    check.max_error = std::max(check.max_error, std::abs(split.telescoping_residual));
    ++check.cases;
  }
  return check;
}

std::vector<OracleCheck> run_oracle_checks(std::uint64_t seed) {
  return {check_value_iteration(5, 0.9), check_optimal_bias(5, 0.9), check_td_identity(1000, seed),
          check_telescoping(500, seed + 1)};
}

}  // namespace gcrl
