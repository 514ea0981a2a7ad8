#pragma once

#include <Eigen/Core>

#include <concepts>
#include <cstdint>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "gcrl/error.hpp"

namespace gcrl {

using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

using State = Vector;
using Goal = Vector;

/// Discrete grid actions. "Up" increments y, "right" increments x.
enum class GridMove : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };

inline constexpr int kNumGridActions = 5;

/// Either a discrete action index or a continuous action vector.
class Action {
 public:
  Action() : value_(0) {}

  static Action discrete(int index) { return Action(index); }
  static Action continuous(Vector v) { return Action(std::move(v)); }

  bool is_discrete() const { return std::holds_alternative<int>(value_); }
  int index() const;
  const Vector& vector() const;

  /// Critic-input encoding: one-hot for discrete actions, the raw vector otherwise.
  Vector encode(int num_discrete) const;

  friend bool operator==(const Action& a, const Action& b);

 private:
  explicit Action(int index) : value_(index) {}
  explicit Action(Vector v) : value_(std::move(v)) {}

  std::variant<int, Vector> value_;
};

enum class EnvKind { kGrid, kPoint };

struct EnvSpec {
  EnvKind kind = EnvKind::kGrid;
  int size = 10;              ///< grid edge length N (grid only)
  int horizon = 30;           ///< T
  double epsilon = 0.0;       ///< goal tolerance; grid uses exact equality
  double step_scale = 0.05;   ///< point-reach displacement per unit action
  std::uint64_t goal_seed = 0;

  static EnvSpec grid(int n);
  static EnvSpec point(int horizon = 50);
  void validate() const;
};

/// One episode. states/achieved hold T+1 entries, actions and behavior_prob hold T.
struct Trajectory {
  std::vector<State> states;
  std::vector<Action> actions;
  std::vector<Goal> achieved;
  Goal desired;
  /// Probability the behavior policy assigned to each logged discrete action (1 if unknown).
  std::vector<double> behavior_prob;

  int horizon() const { return static_cast<int>(actions.size()); }
};

/// Action plus the probability the acting policy assigned to it.
struct Decision {
  Action action;
  double prob = 1.0;
};

State grid_step(const State& pos, int action, int size);
State point_step(const State& pos, const Vector& action, double step_scale);

/// 0 if the achieved goal is within tolerance of g, -1 otherwise.
/// exact=true compares coordinates for equality (grid cells).
double sparse_reward(const Goal& achieved, const Goal& g, double epsilon, bool exact = false);

struct StartGoal {
  State start;
  Goal goal;
};

/// Deterministic goal-augmented MDP over a grid or the unit box.
class Environment {
 public:
  explicit Environment(EnvSpec spec);

  const EnvSpec& spec() const { return spec_; }
  int horizon() const { return spec_.horizon; }
  int state_dim() const { return 2; }
  int goal_dim() const { return 2; }
  bool discrete() const { return spec_.kind == EnvKind::kGrid; }
  /// Number of discrete actions (0 for continuous tasks).
  int num_actions() const { return discrete() ? kNumGridActions : 0; }
  /// Width of the critic's action input.
  int action_dim() const { return discrete() ? kNumGridActions : 2; }

  State step(const State& s, const Action& a) const;
  Goal achieved_goal(const State& s) const { return s; }
  double reward(const Goal& achieved, const Goal& g) const;
  bool is_success(const Trajectory& traj) const;
  Action random_action(Rng& rng) const;

  /// Uniform start and goal, never equal.
  StartGoal sample_task(Rng& rng) const;

  /// Every valid grid cell in row-major order (grid only).
  std::vector<State> all_cells() const;

 private:
  EnvSpec spec_;
};

template <typename Policy>
concept TrajectoryPolicy = requires(Policy p, const State& s, const Goal& g) {
  { p(s, g) };
};

/// Runs exactly T steps; reaching the goal does not end the episode.
template <TrajectoryPolicy Policy>
Trajectory rollout(const Environment& env, Policy&& policy, const Goal& g, const State& start) {
  Trajectory traj;
  const int horizon = env.horizon();
  traj.desired = g;
  traj.states.reserve(horizon + 1);
  traj.actions.reserve(horizon);
  traj.achieved.reserve(horizon + 1);
  traj.behavior_prob.reserve(horizon);
  traj.states.push_back(start);
  traj.achieved.push_back(env.achieved_goal(start));
  for (int t = 0; t < horizon; ++t) {
    const State& s = traj.states.back();
    Decision decision;
    using Result = std::decay_t<decltype(policy(s, g))>;
    if constexpr (std::is_same_v<Result, Decision>) {
      decision = policy(s, g);
    } else {
      decision.action = policy(s, g);
    }
    State next = env.step(s, decision.action);
    traj.actions.push_back(std::move(decision.action));
    traj.behavior_prob.push_back(decision.prob);
    traj.achieved.push_back(env.achieved_goal(next));
    traj.states.push_back(std::move(next));
  }
  return traj;
}

/// Discounted return sum_{i=0}^{T-1} gamma^i r(s_{i+1}, g).
double discounted_return(const Environment& env, const Trajectory& traj, const Goal& g, double gamma);

/// Throws ContractViolation unless the trajectory is well formed for env.
void validate_trajectory(const Environment& env, const Trajectory& traj);

int manhattan(const State& a, const State& b);

std::string to_string(EnvKind kind);

}  // namespace gcrl
