#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcrl/agent.hpp"

namespace gcrl {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

enum class Method { kHer, kMher, kMherLambda, kTmherLambda, kQrMher, kBrMher, kIsMher };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

/// Estimator and critic loss implied by a method name.
struct MethodSpec {
  TargetKind target = TargetKind::kHer;
  CriticLossMode loss = CriticLossMode::kHuberMean;
};
MethodSpec method_spec(Method method);

/// Parses "grid<N>" or "point".
EnvSpec task_spec(const std::string& task);

/// Flat key=value experiment description. Keys not set keep the defaults below.
struct ExperimentConfig {
  Method method = Method::kBrMher;
  std::string task = "grid10";
  int n = 10;
  double lambda = 0.7;
  double rho = 0.75;
  double kappa = 10.0;
  std::optional<double> gamma;
  int epochs = 50;
  std::vector<std::uint64_t> seeds = {111, 222, 333, 444, 555};
  std::string output_dir = "runs";

  int eval_episodes = 120;
  int cycles_per_epoch = 10;
  int episodes_per_cycle = 12;
  int batches_per_cycle = 40;
  int batch_size = 1024;
  int warmup_episodes = 100;
  std::vector<int> hidden = {512, 512, 512};
  double lr = 1e-3;
  double relabel_prob = 0.8;
  double action_penalty = 1.0;
  DiscreteActorGradient actor_gradient = DiscreteActorGradient::kExpected;
  /// Bias metrics read the online critic by default, or the target critic when set.
  bool bias_on_target = false;
  /// Record elapsed seconds in the CSV; off gives byte-identical reruns.
  bool wallclock = true;
  /// Save a checkpoint next to each run CSV after the final epoch.
  bool checkpoint = true;

  EnvSpec env_spec() const { return task_spec(task); }
  double resolved_gamma() const;
  TargetSpec target_spec() const;
  AgentConfig agent_config(std::uint64_t seed) const;

  /// Throws ConfigError (line 0) on inconsistent settings.
  void validate() const;
  /// Canonical key=value text; parse_config(to_text()) reproduces the config.
  std::string to_text() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace gcrl
