#pragma once

#include <optional>
#include <vector>

#include "gcrl/losses.hpp"

namespace gcrl {

/// Fraction of trajectories whose final state satisfies the goal.
double success_rate(const Environment& env, const std::vector<Trajectory>& trajectories);

std::vector<Trajectory> successful(const Environment& env, const std::vector<Trajectory>& trajectories);

/// Mean of Q(s_T, pi(s_T, g), g) over successful trajectories; nullopt when there are none.
std::optional<double> tsb(const Environment& env, const std::vector<Trajectory>& trajectories,
                          const ActionValueFn& q, const PolicyFn& pi);

/// Mean of [Q(s_0, a_0, g) - discounted return] over successful trajectories, minus gamma^T * tsb.
std::optional<double> isb(const Environment& env, const std::vector<Trajectory>& trajectories,
                          const ActionValueFn& q, double gamma, std::optional<double> tsb_value);

/// Split of Q(s_t, a_t, g) - (discounted return from t) along a trajectory.
///
/// shooting sums gamma^(i-t) * (Q(s_i, a_i) - r_{i+1} - gamma * Q(s_{i+1}, pi(s_{i+1}))), the discounted
/// Bellman residuals. shifting is Q(s_T, pi(s_T)). advantage_sum collects gamma^(i-t) * A(s_i, a_i) for
/// i = t+1..T-1 and vanishes when the logged actions are the policy's own. Then
/// total = shooting - advantage_sum + gamma^(T-t) * shifting.
struct BiasSplit {
  double shooting = 0.0;
  double shifting = 0.0;
  double advantage_sum = 0.0;
  /// Q(s_t, a_t) minus the realized discounted return from t.
  double total = 0.0;
  /// Q(s_t, a_t) minus its expansion sum gamma^(i-t) [r - delta] - advantage_sum + gamma^(T-t) Q(s_T, pi).
  double telescoping_residual = 0.0;
};

BiasSplit decompose_bias(const Environment& env, const Trajectory& traj, const ActionValueFn& q_target,
                         const PolicyFn& pi, double gamma, int t = 0);

enum class BiasClass { kBeneficial, kNeutral, kDetrimental };

struct BeneficialBiasResult {
  BiasClass kind = BiasClass::kNeutral;
  double segment_target = 0.0;
  double rollout_target = 0.0;
};

/// Compares the n-step target of a stored segment with the target of the on-policy rollout that takes
/// a_t at s_t and then follows pi. Both bootstrap with Q_target(., pi(.)).
BeneficialBiasResult beneficial_bias(const Environment& env, const SampledSegment& seg, const PolicyFn& pi,
                                     const ActionValueFn& q_target, double gamma, int n, double tol = 0.0);

BiasClass classify_bias(double segment_target, double rollout_target, double tol = 0.0);

/// Per-evaluation summary.
struct BiasReport {
  int epoch = 0;
  double success_rate = 0.0;
  std::optional<double> tsb;
  std::optional<double> isb;
  int successes = 0;
  /// Mean target-critic TD error and advantage at each step over successful trajectories.
  std::vector<double> mean_td_error;
  std::vector<double> mean_advantage;
};

BiasReport make_bias_report(const Environment& env, const std::vector<Trajectory>& eval, const ActionValueFn& q,
                            const ActionValueFn& q_target, const PolicyFn& pi, double gamma, int epoch);

}  // namespace gcrl
