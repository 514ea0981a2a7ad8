#include "gcrl/targets.hpp"

#include <algorithm>
#include <cmath>

namespace gcrl {

void TargetSpec::validate(bool discrete_actions) const {
  require(n >= 1, "n must be >= 1");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  require(kind != TargetKind::kHer || n == 1, "HER uses one-step targets (n = 1)");
  require(kind != TargetKind::kRetrace || discrete_actions, "retrace requires discrete actions");
}

std::string to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::kHer: return "her";
    case TargetKind::kMher: return "mher";
    case TargetKind::kMherLambda: return "mher_lambda";
    case TargetKind::kTmher: return "tmher";
    case TargetKind::kTmherLambda: return "tmher_lambda";
    case TargetKind::kRetrace: return "retrace";
  }
  return "unknown";
}

TargetKind target_kind_from_string(const std::string& name) {
  for (auto kind : {TargetKind::kHer, TargetKind::kMher, TargetKind::kMherLambda, TargetKind::kTmher,
                    TargetKind::kTmherLambda, TargetKind::kRetrace}) {
    if (to_string(kind) == name) return kind;
  }
  throw ContractViolation("unknown target kind: " + name);
}

namespace {

int usable_steps(std::size_t rewards, std::size_t bootstrap, int n) {
  require(n >= 1, "n must be >= 1");
  require(rewards > 0 && bootstrap >= rewards, "segment values are missing");
  return std::min<int>(n, static_cast<int>(rewards));
}

// Weighted average sum_i lambda^i y_i / sum_i lambda^i, written with lambda^(i-1) so lambda = 0 selects y_1.
template <typename StepValue>
double lambda_average(int m, double lambda, StepValue&& y) {
  double num = 0.0;
  double den = 0.0;
  double weight = 1.0;
  for (int i = 1; i <= m; ++i) {
    num += weight * y(i);
    den += weight;
    weight *= lambda;
    if (weight == 0.0) break;
  }
  return num / den;
}

}  // namespace

double n_step_target(std::span<const double> rewards, std::span<const double> bootstrap, double gamma, int n) {
  const int m = usable_steps(rewards.size(), bootstrap.size(), n);
  double y = 0.0;
  double discount = 1.0;
  for (int i = 0; i < m; ++i) {
    y += discount * rewards[i];
    discount *= gamma;
  }
  return y + discount * bootstrap[m - 1];
}

double lambda_target(std::span<const double> rewards, std::span<const double> bootstrap, double gamma, int n,
                     double lambda) {
  const int m = usable_steps(rewards.size(), bootstrap.size(), n);
  std::vector<double> ys(m);
  double partial = 0.0;
  double discount = 1.0;
  for (int i = 0; i < m; ++i) {
    partial += discount * rewards[i];
    discount *= gamma;
    ys[i] = partial + discount * bootstrap[i];
  }
  return lambda_average(m, lambda, [&](int i) { return ys[i - 1]; });
}

namespace {

// Truncated i-step values for i = 1..m; entries past the first zero reward repeat.
std::vector<double> truncated_values(std::span<const double> rewards, std::span<const double> bootstrap,
                                     double gamma, int m) {
  std::vector<double> ys(m);
  double partial = 0.0;
  double discount = 1.0;
  bool stopped = false;
  double frozen = 0.0;
  for (int i = 0; i < m; ++i) {
    if (stopped) {
      ys[i] = frozen;
      continue;
    }
    partial += discount * rewards[i];
    discount *= gamma;
    ys[i] = partial + discount * bootstrap[i];
    if (rewards[i] == 0.0) {
      stopped = true;
      frozen = ys[i];
    }
  }
  return ys;
}

}  // namespace

double truncated_target(std::span<const double> rewards, std::span<const double> bootstrap, double gamma, int n) {
  const int m = usable_steps(rewards.size(), bootstrap.size(), n);
  return truncated_values(rewards, bootstrap, gamma, m).back();
}

double truncated_lambda_target(std::span<const double> rewards, std::span<const double> bootstrap, double gamma,
                               int n, double lambda) {
  const int m = usable_steps(rewards.size(), bootstrap.size(), n);
  const auto ys = truncated_values(rewards, bootstrap, gamma, m);
  int stop = 1;
  while (stop < m && rewards[stop - 1] != 0.0) ++stop;
  if (stop == m) return lambda_average(m, lambda, [&](int i) { return ys[i - 1]; });
  // Every value from the stop onward equals ys[stop-1]; averaging around it keeps a one-step collapse exact.
  const double frozen = ys[stop - 1];
  double num = 0.0;
  double den = 0.0;
  double weight = 1.0;
  for (int i = 1; i <= m; ++i) {
    if (i < stop) num += weight * (ys[i - 1] - frozen);
    den += weight;
    weight *= lambda;
    if (weight == 0.0) break;
  }
  return frozen + num / den;
}

double retrace_target(std::span<const RetraceStep> steps, double gamma, int n, double lambda) {
  require(n >= 1 && !steps.empty(), "retrace needs at least one step");
  const int m = std::min<int>(n, static_cast<int>(steps.size()));
  double y = 0.0;
  double discount = 1.0;  // gamma^(i-1)
  double trace = 1.0;     // prod_{s<i} c_s
  for (int i = 1; i <= m; ++i) {
    const auto& step = steps[i - 1];
    double c = 0.0;
    if (i < m) {
      require(step.behavior_prob > 0.0, "behavior probability of a logged action must be positive");
      c = lambda * std::min(1.0, step.target_prob / step.behavior_prob);
    }
    y += discount * trace * (step.reward + gamma * step.expected_q - gamma * c * step.taken_q);
    discount *= gamma;
    trace *= c;
    if (trace == 0.0) break;
  }
  return y;
}

namespace {

std::vector<double> oracle_bootstrap(const SampledSegment& seg, const BootstrapOracle& oracle, int n) {
  require(static_cast<bool>(oracle.value), "oracle has no bootstrap value function");
  const int m = std::min(n, seg.n_eff);
  std::vector<double> values(m);
  for (int i = 0; i < m; ++i) values[i] = oracle.value(seg.state(i + 1), seg.goal);
  return values;
}

std::span<const double> head(const SampledSegment& seg, int n) {
  return std::span<const double>(seg.rewards).first(std::min(n, seg.n_eff));
}

}  // namespace

double n_step_target(const SampledSegment& seg, const BootstrapOracle& oracle, double gamma, int n) {
  require(n >= 1, "n must be >= 1");
  const int m = std::min(n, seg.n_eff);
  std::vector<double> boot(m, 0.0);
  boot[m - 1] = oracle.value(seg.state(m), seg.goal);
  return n_step_target(head(seg, n), boot, gamma, n);
}

double lambda_target(const SampledSegment& seg, const BootstrapOracle& oracle, double gamma, int n, double lambda) {
  require(n >= 1, "n must be >= 1");
  return lambda_target(head(seg, n), oracle_bootstrap(seg, oracle, n), gamma, n, lambda);
}

double truncated_target(const SampledSegment& seg, const BootstrapOracle& oracle, double gamma, int n) {
  require(n >= 1, "n must be >= 1");
  return truncated_target(head(seg, n), oracle_bootstrap(seg, oracle, n), gamma, n);
}

double truncated_lambda_target(const SampledSegment& seg, const BootstrapOracle& oracle, double gamma, int n,
                               double lambda) {
  require(n >= 1, "n must be >= 1");
  return truncated_lambda_target(head(seg, n), oracle_bootstrap(seg, oracle, n), gamma, n, lambda);
}

std::vector<RetraceStep> retrace_steps(const SampledSegment& seg, const BootstrapOracle& oracle, int n) {
  require(oracle.action_values && oracle.policy_probs, "retrace needs action values and policy probabilities");
  require(n >= 1, "n must be >= 1");
  const int m = std::min(n, seg.n_eff);
  std::vector<RetraceStep> steps(m);
  for (int i = 1; i <= m; ++i) {
    const State& s = seg.state(i);
    const Vector q = oracle.action_values(s, seg.goal);
    const Vector pi = oracle.policy_probs(s, seg.goal);
    auto& step = steps[i - 1];
    step.reward = seg.rewards[i - 1];
    step.expected_q = pi.dot(q);
    if (i < m) {
      const int a = seg.action(i).index();
      step.taken_q = q[a];
      step.target_prob = pi[a];
      step.behavior_prob = seg.behavior_prob(i);
    }
  }
  return steps;
}

double retrace_target(const SampledSegment& seg, const BootstrapOracle& oracle, double gamma, int n,
                      double lambda) {
  return retrace_target(retrace_steps(seg, oracle, n), gamma, n, lambda);
}

double compute_target(const TargetSpec& spec, std::span<const double> rewards, std::span<const double> bootstrap,
                      std::span<const RetraceStep> retrace, double gamma) {
  switch (spec.kind) {
    case TargetKind::kHer: return n_step_target(rewards, bootstrap, gamma, 1);
    case TargetKind::kMher: return n_step_target(rewards, bootstrap, gamma, spec.n);
    case TargetKind::kMherLambda: return lambda_target(rewards, bootstrap, gamma, spec.n, spec.lambda);
    case TargetKind::kTmher: return truncated_target(rewards, bootstrap, gamma, spec.n);
    case TargetKind::kTmherLambda: return truncated_lambda_target(rewards, bootstrap, gamma, spec.n, spec.lambda);
    case TargetKind::kRetrace: return retrace_target(retrace, gamma, spec.n, spec.lambda);
  }
  throw ContractViolation("unknown target kind");
}

double compute_target(const TargetSpec& spec, const SampledSegment& seg, const BootstrapOracle& oracle,
                      double gamma) {
  switch (spec.kind) {
    case TargetKind::kHer: return n_step_target(seg, oracle, gamma, 1);
    case TargetKind::kMher: return n_step_target(seg, oracle, gamma, spec.n);
    case TargetKind::kMherLambda: return lambda_target(seg, oracle, gamma, spec.n, spec.lambda);
    case TargetKind::kTmher: return truncated_target(seg, oracle, gamma, spec.n);
    case TargetKind::kTmherLambda: return truncated_lambda_target(seg, oracle, gamma, spec.n, spec.lambda);
    case TargetKind::kRetrace: return retrace_target(seg, oracle, gamma, spec.n, spec.lambda);
  }
  throw ContractViolation("unknown target kind");
}

}  // namespace gcrl
