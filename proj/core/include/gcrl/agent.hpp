#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "gcrl/dense_net.hpp"
#include "gcrl/losses.hpp"
#include "gcrl/normalizer.hpp"
#include "gcrl/optim.hpp"
#include "gcrl/replay.hpp"
#include "gcrl/targets.hpp"

namespace gcrl {

/// How the discrete actor step differentiates the critic: through a straight-through Gumbel-Softmax
/// sample, or through the policy's expectation over all one-hot actions.
enum class DiscreteActorGradient { kExpected, kStraightThrough };

struct AgentConfig {
  double gamma = 0.98;
  int batch_size = 1024;
  int episodes_per_cycle = 12;
  int batches_per_cycle = 40;
  int cycles_per_epoch = 10;
  double tau = 0.005;
  int actor_delay = 2;
  double epsilon_greedy = 0.3;
  double noise_std = 0.2;
  double action_penalty = 1.0;
  double gumbel_temperature = 1.0;
  DiscreteActorGradient actor_gradient = DiscreteActorGradient::kExpected;
  int warmup_episodes = 100;
  std::size_t buffer_capacity = 1'000'000;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  std::vector<int> hidden = {512, 512, 512};
  HindsightSpec hindsight;
  TargetSpec target;
  CriticLossMode loss_mode = CriticLossMode::kHuberMean;
  QuantileSpec quantile;
  std::uint64_t seed = 111;

  void validate(bool discrete_actions) const;
};

/// Twin critics, actor, their target copies and optimizer states.
struct CriticEnsemble {
  DenseNet actor;
  DenseNet actor_target;
  DenseNet critic1;
  DenseNet critic2;
  DenseNet critic1_target;
  DenseNet critic2_target;
  AdamState actor_opt;
  AdamState critic1_opt;
  AdamState critic2_opt;

  static CriticEnsemble create(int obs_dim, int action_dim, const std::vector<int>& hidden, Rng& rng,
                               double actor_lr, double critic_lr);

  /// target <- (1 - tau) target + tau online, for all three pairs.
  void soft_update(double tau);
  /// Largest |target - online| parameter gap over the three pairs.
  double max_target_gap() const;
};

/// Per-batch data exposed to an instrumentation hook.
struct BatchTrace {
  const std::vector<SampledSegment>* segments = nullptr;
  std::vector<double> targets;
  std::vector<double> one_step_targets;  ///< r_{t+1} + gamma * bootstrap(s_{t+1}) for each segment
};

struct CycleStats {
  double critic_loss = 0.0;  ///< mean over batches and both critics
  double actor_loss = 0.0;
  int critic_updates = 0;
  int actor_updates = 0;
  int episodes_collected = 0;
};

/// TD3-style goal-conditioned learner whose critic target is chosen by AgentConfig::target.
class Agent {
 public:
  Agent(Environment env, AgentConfig config);

  const Environment& env() const { return env_; }
  const AgentConfig& config() const { return config_; }
  CriticEnsemble& nets() { return nets_; }
  const CriticEnsemble& nets() const { return nets_; }
  const Normalizer& state_normalizer() const { return state_norm_; }
  const Normalizer& goal_normalizer() const { return goal_norm_; }
  Rng& rng() { return rng_; }

  /// Exploration action plus the exact probability of the chosen discrete action under the behavior mixture.
  Decision act_explore(const State& s, const Goal& g, Rng& rng) const;
  /// Deterministic policy: tanh mean, or argmax logits with ties to the lowest index.
  Action act_eval(const State& s, const Goal& g) const;
  /// Raw actor output (logits or pre-tanh) for one input.
  Vector actor_output(const State& s, const Goal& g, bool target = false) const;
  /// Behavior-mixture probabilities over discrete actions.
  Vector behavior_probs(const State& s, const Goal& g) const;

  /// min_i Q_target_i(s, pi_target(s, g), g)
  double cdq_bootstrap(const State& s, const Goal& g) const;

  /// Q value of one critic; which = 1 or 2, target selects the target copy.
  double q_value(const State& s, const Action& a, const Goal& g, int which = 1, bool target = false) const;
  ActionValueFn q_function(int which = 1, bool target = false) const;
  PolicyFn policy(bool target = false) const;

  /// Stores warmup_episodes uniformly random episodes and fits the normalizers to them.
  void warmup(TrajectoryBuffer& buffer, Rng& env_rng);
  /// Collects episodes, refreshes the normalizers, then runs batches_per_cycle optimization steps.
  CycleStats train_cycle(TrajectoryBuffer& buffer, Rng& env_rng);
  /// One critic (and possibly actor) step on a sampled batch; returns the mean critic loss.
  double train_batch(const std::vector<SampledSegment>& batch, bool update_actor, double* actor_loss = nullptr);

  /// Targets for a batch under the configured estimator, using target networks only.
  std::vector<double> compute_targets(const std::vector<SampledSegment>& batch,
                                      std::vector<double>* one_step = nullptr) const;

  std::vector<Trajectory> evaluate(int episodes, Rng& env_rng) const;

  void update_normalizers(const std::vector<Trajectory>& episodes);

  std::function<void(const BatchTrace&)> on_batch;

  void save(const std::filesystem::path& path) const;
  /// Restores networks and normalizers from a checkpoint written by save().
  void load(const std::filesystem::path& path);

 private:
  Matrix observations(const std::vector<const State*>& states, const std::vector<const Goal*>& goals) const;
  Matrix encode_policy_actions(const Matrix& actor_out) const;

  Environment env_;
  AgentConfig config_;
  Rng rng_;
  Normalizer state_norm_;
  Normalizer goal_norm_;
  CriticEnsemble nets_;
  int batches_seen_ = 0;
};

/// Hidden layer widths stored in an agent checkpoint.
std::vector<int> checkpoint_hidden_layers(const std::filesystem::path& path);

}  // namespace gcrl
