#include "gcrl/bias.hpp"

#include <cmath>

#include "gcrl/targets.hpp"

namespace gcrl {

double success_rate(const Environment& env, const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) return 0.0;
  int hits = 0;
  for (const auto& traj : trajectories) hits += env.is_success(traj) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(trajectories.size());
}

std::vector<Trajectory> successful(const Environment& env, const std::vector<Trajectory>& trajectories) {
  std::vector<Trajectory> out;
  for (const auto& traj : trajectories) {
    if (env.is_success(traj)) out.push_back(traj);
  }
  return out;
}

std::optional<double> tsb(const Environment& env, const std::vector<Trajectory>& trajectories,
                          const ActionValueFn& q, const PolicyFn& pi) {
  double sum = 0.0;
  int count = 0;
  for (const auto& traj : trajectories) {
    if (!env.is_success(traj)) continue;
    const State& s_final = traj.states.back();
    sum += q(s_final, pi(s_final, traj.desired), traj.desired);
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

std::optional<double> isb(const Environment& env, const std::vector<Trajectory>& trajectories,
                          const ActionValueFn& q, double gamma, std::optional<double> tsb_value) {
  if (!tsb_value) return std::nullopt;
  double sum = 0.0;
  int count = 0;
  int horizon = 0;
  for (const auto& traj : trajectories) {
    if (!env.is_success(traj)) continue;
    horizon = traj.horizon();
    sum += q(traj.states.front(), traj.actions.front(), traj.desired) -
           discounted_return(env, traj, traj.desired, gamma);
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / count - std::pow(gamma, horizon) * *tsb_value;
}

BiasSplit decompose_bias(const Environment& env, const Trajectory& traj, const ActionValueFn& q_target,
                         const PolicyFn& pi, double gamma, int t) {
  const int horizon = traj.horizon();
  require(t >= 0 && t < horizon, "decomposition start out of range");
  const Goal& g = traj.desired;

  BiasSplit split;
  double discount = 1.0;
  double expansion = 0.0;
  double realized = 0.0;
  for (int i = t; i < horizon; ++i) {
    const double delta =
        td_error(env, traj.states[i], traj.actions[i], traj.states[i + 1], g, q_target, q_target, pi, gamma);
    const double r = env.reward(traj.achieved[i + 1], g);
    if (i > t) split.advantage_sum += discount * advantage(traj.states[i], traj.actions[i], g, q_target, pi);
    split.shooting -= discount * delta;
    expansion += discount * (r - delta);
    realized += discount * r;
    discount *= gamma;
  }
  const State& s_final = traj.states.back();
  split.shifting = q_target(s_final, pi(s_final, g), g);
  const double q_start = q_target(traj.states[t], traj.actions[t], g);
  split.total = q_start - realized;
  expansion += discount * split.shifting - split.advantage_sum;
  split.telescoping_residual = q_start - expansion;
  return split;
}

BiasClass classify_bias(double segment_target, double rollout_target, double tol) {
  if (segment_target > rollout_target + tol) return BiasClass::kBeneficial;
  if (segment_target < rollout_target - tol) return BiasClass::kDetrimental;
  return BiasClass::kNeutral;
}

BeneficialBiasResult beneficial_bias(const Environment& env, const SampledSegment& seg, const PolicyFn& pi,
                                     const ActionValueFn& q_target, double gamma, int n, double tol) {
  require(n >= 1, "n must be >= 1");
  const int m = std::min(n, seg.n_eff);
  BootstrapOracle oracle;
  oracle.value = [&](const State& s, const Goal& g) { return q_target(s, pi(s, g), g); };

  BeneficialBiasResult out;
  out.segment_target = n_step_target(seg, oracle, gamma, m);

  // On-policy comparison: a_t at s_t, then pi for the remaining m - 1 steps.
  std::vector<double> rewards(m);
  State s = env.step(seg.state(0), seg.action(0));
  rewards[0] = env.reward(env.achieved_goal(s), seg.goal);
  for (int i = 1; i < m; ++i) {
    s = env.step(s, pi(s, seg.goal));
    rewards[i] = env.reward(env.achieved_goal(s), seg.goal);
  }
  std::vector<double> boot(m, 0.0);
  boot[m - 1] = oracle.value(s, seg.goal);
  out.rollout_target = n_step_target(rewards, boot, gamma, m);
  out.kind = classify_bias(out.segment_target, out.rollout_target, tol);
  return out;
}

BiasReport make_bias_report(const Environment& env, const std::vector<Trajectory>& eval, const ActionValueFn& q,
                            const ActionValueFn& q_target, const PolicyFn& pi, double gamma, int epoch) {
  BiasReport report;
  report.epoch = epoch;
  report.success_rate = success_rate(env, eval);
  report.tsb = tsb(env, eval, q, pi);
  report.isb = isb(env, eval, q, gamma, report.tsb);
  const int horizon = env.horizon();
  report.mean_td_error.assign(horizon, 0.0);
  report.mean_advantage.assign(horizon, 0.0);
  for (const auto& traj : eval) {
    if (!env.is_success(traj)) continue;
    ++report.successes;
    for (int i = 0; i < horizon; ++i) {
      report.mean_td_error[i] += td_error(env, traj.states[i], traj.actions[i], traj.states[i + 1], traj.desired,
                                          q_target, q_target, pi, gamma);
      report.mean_advantage[i] += advantage(traj.states[i], traj.actions[i], traj.desired, q_target, pi);
    }
  }
  if (report.successes > 0) {
    for (int i = 0; i < horizon; ++i) {
      report.mean_td_error[i] /= report.successes;
      report.mean_advantage[i] /= report.successes;
    }
  }
  return report;
}

}  // namespace gcrl
