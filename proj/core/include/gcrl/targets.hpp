#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gcrl/replay.hpp"

namespace gcrl {

enum class TargetKind { kHer, kMher, kMherLambda, kTmher, kTmherLambda, kRetrace };

struct TargetSpec {
  TargetKind kind = TargetKind::kHer;
  int n = 1;
  double lambda = 0.7;

  void validate(bool discrete_actions) const;
  /// Number of bootstrap values the estimator may read.
  int horizon_needed() const { return kind == TargetKind::kHer ? 1 : n; }
};

std::string to_string(TargetKind kind);
TargetKind target_kind_from_string(const std::string& name);

/// Target-network values along a segment. Every member may be empty if the estimator never reads it.
struct BootstrapOracle {
  /// Q_target(s, pi_target(s, g), g)
  std::function<double(const State&, const Goal&)> value;
  /// Q_target(s, a, g) for every discrete action a
  std::function<Vector(const State&, const Goal&)> action_values;
  /// pi(a | s, g) for every discrete action a
  std::function<Vector(const State&, const Goal&)> policy_probs;
};

// Span forms. rewards[i] = r(s_{t+i+1}, g) and bootstrap[i] = Q_target(s_{t+i+1}, pi(s_{t+i+1}, g), g)
// for i = 0..n_eff-1. When n exceeds the available length the estimator truncates at the horizon.

double n_step_target(std::span<const double> rewards, std::span<const double> bootstrap, double gamma, int n);
double lambda_target(std::span<const double> rewards, std::span<const double> bootstrap, double gamma, int n,
                     double lambda);
/// Accumulates rewards until the first zero reward, then bootstraps from the next state.
double truncated_target(std::span<const double> rewards, std::span<const double> bootstrap, double gamma, int n);
double truncated_lambda_target(std::span<const double> rewards, std::span<const double> bootstrap, double gamma,
                               int n, double lambda);

/// Quantities at step t+i (i = 1..n) of a segment, for Retrace.
struct RetraceStep {
  double reward = 0.0;         ///< r(s_{t+i}, g)
  double expected_q = 0.0;     ///< E_pi Q_target(s_{t+i}, ., g)
  double taken_q = 0.0;        ///< Q_target(s_{t+i}, a_{t+i}, g); unused at i = n
  double target_prob = 1.0;    ///< pi(a_{t+i} | s_{t+i}, g); unused at i = n
  double behavior_prob = 1.0;  ///< mu(a_{t+i} | s_{t+i}, g); unused at i = n
};

double retrace_target(std::span<const RetraceStep> steps, double gamma, int n, double lambda);

// Segment forms, evaluating the oracle along the stored trajectory.

double n_step_target(const SampledSegment& seg, const BootstrapOracle& oracle, double gamma, int n);
double lambda_target(const SampledSegment& seg, const BootstrapOracle& oracle, double gamma, int n, double lambda);
double truncated_target(const SampledSegment& seg, const BootstrapOracle& oracle, double gamma, int n);
double truncated_lambda_target(const SampledSegment& seg, const BootstrapOracle& oracle, double gamma, int n,
                               double lambda);
double retrace_target(const SampledSegment& seg, const BootstrapOracle& oracle, double gamma, int n, double lambda);

std::vector<RetraceStep> retrace_steps(const SampledSegment& seg, const BootstrapOracle& oracle, int n);

/// Dispatches on spec.kind.
double compute_target(const TargetSpec& spec, std::span<const double> rewards, std::span<const double> bootstrap,
                      std::span<const RetraceStep> retrace, double gamma);
double compute_target(const TargetSpec& spec, const SampledSegment& seg, const BootstrapOracle& oracle,
                      double gamma);

}  // namespace gcrl
