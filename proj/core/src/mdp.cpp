#include "gcrl/mdp.hpp"

#include <algorithm>
#include <cmath>

namespace gcrl {

int Action::index() const {
  require(is_discrete(), "action is continuous");
  return std::get<int>(value_);
}

const Vector& Action::vector() const {
  require(!is_discrete(), "action is discrete");
  return std::get<Vector>(value_);
}

Vector Action::encode(int num_discrete) const {
  if (is_discrete()) {
    const int i = index();
    require(i >= 0 && i < num_discrete, "discrete action index out of range");
    Vector one_hot = Vector::Zero(num_discrete);
    one_hot[i] = 1.0;
    return one_hot;
  }
  return vector();
}

bool operator==(const Action& a, const Action& b) {
  if (a.is_discrete() != b.is_discrete()) return false;
  if (a.is_discrete()) return a.index() == b.index();
  return a.vector().size() == b.vector().size() && a.vector() == b.vector();
}

EnvSpec EnvSpec::grid(int n) {
  EnvSpec spec;
  spec.kind = EnvKind::kGrid;
  spec.size = n;
  spec.horizon = 3 * n;
  spec.epsilon = 0.0;
  return spec;
}

EnvSpec EnvSpec::point(int horizon) {
  EnvSpec spec;
  spec.kind = EnvKind::kPoint;
  spec.size = 0;
  spec.horizon = horizon;
  spec.epsilon = 0.05;
  spec.step_scale = 0.05;
  return spec;
}

void EnvSpec::validate() const {
  require(horizon >= 1, "horizon must be >= 1");
  require(epsilon >= 0.0, "goal tolerance must be >= 0");
  if (kind == EnvKind::kGrid) {
    require(size >= 2, "grid size must be >= 2");
    require(horizon == 3 * size, "grid horizon must be 3N");
  } else {
    require(step_scale > 0.0, "step scale must be positive");
  }
}

State grid_step(const State& pos, int action, int size) {
  require(pos.size() == 2, "grid state must be 2-D");
  require(action >= 0 && action < kNumGridActions, "invalid grid action index");
  State next = pos;
  switch (static_cast<GridMove>(action)) {
    case GridMove::kUp: next[1] += 1.0; break;
    case GridMove::kDown: next[1] -= 1.0; break;
    case GridMove::kLeft: next[0] -= 1.0; break;
    case GridMove::kRight: next[0] += 1.0; break;
    case GridMove::kStay: break;
  }
  const double hi = static_cast<double>(size - 1);
  next[0] = std::clamp(next[0], 0.0, hi);
  next[1] = std::clamp(next[1], 0.0, hi);
  return next;
}

State point_step(const State& pos, const Vector& action, double step_scale) {
  require(pos.size() == action.size(), "point action dimension mismatch");
  State next = pos + step_scale * action.cwiseMax(-1.0).cwiseMin(1.0);
  return next.cwiseMax(0.0).cwiseMin(1.0);
}

double sparse_reward(const Goal& achieved, const Goal& g, double epsilon, bool exact) {
  require(achieved.size() == g.size(), "goal dimension mismatch");
  if (exact) return achieved == g ? 0.0 : -1.0;
  return (achieved - g).norm() < epsilon ? 0.0 : -1.0;
}

Environment::Environment(EnvSpec spec) : spec_(spec) { spec_.validate(); }

State Environment::step(const State& s, const Action& a) const {
  if (discrete()) return grid_step(s, a.index(), spec_.size);
  return point_step(s, a.vector(), spec_.step_scale);
}

double Environment::reward(const Goal& achieved, const Goal& g) const {
  return sparse_reward(achieved, g, spec_.epsilon, discrete());
}

bool Environment::is_success(const Trajectory& traj) const {
  return reward(traj.achieved.back(), traj.desired) == 0.0;
}

Action Environment::random_action(Rng& rng) const {
  if (discrete()) {
    std::uniform_int_distribution<int> pick(0, kNumGridActions - 1);
    return Action::discrete(pick(rng));
  }
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector a(2);
  a[0] = unit(rng);
  a[1] = unit(rng);
  return Action::continuous(std::move(a));
}

StartGoal Environment::sample_task(Rng& rng) const {
  StartGoal task;
  if (discrete()) {
    std::uniform_int_distribution<int> cell(0, spec_.size - 1);
    task.start = State(2);
    task.goal = Goal(2);
    do {
      task.start << cell(rng), cell(rng);
      task.goal << cell(rng), cell(rng);
    } while (task.start == task.goal);
  } else {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    task.start = State(2);
    task.goal = Goal(2);
    do {
      task.start << unit(rng), unit(rng);
      task.goal << unit(rng), unit(rng);
    } while (reward(task.start, task.goal) == 0.0);
  }
  return task;
}

std::vector<State> Environment::all_cells() const {
  require(discrete(), "all_cells is defined for grid tasks only");
  std::vector<State> cells;
  cells.reserve(static_cast<std::size_t>(spec_.size) * spec_.size);
  for (int y = 0; y < spec_.size; ++y) {
    for (int x = 0; x < spec_.size; ++x) {
      State s(2);
      s << x, y;
      cells.push_back(std::move(s));
    }
  }
  return cells;
}

double discounted_return(const Environment& env, const Trajectory& traj, const Goal& g, double gamma) {
  double ret = 0.0;
  double discount = 1.0;
  for (int i = 0; i < traj.horizon(); ++i) {
    ret += discount * env.reward(traj.achieved[i + 1], g);
    discount *= gamma;
  }
  return ret;
}

void validate_trajectory(const Environment& env, const Trajectory& traj) {
  const auto horizon = static_cast<std::size_t>(env.horizon());
  require(traj.actions.size() == horizon, "trajectory must hold exactly T actions");
  require(traj.states.size() == horizon + 1, "trajectory must hold T+1 states");
  require(traj.achieved.size() == horizon + 1, "trajectory must hold T+1 achieved goals");
  require(traj.behavior_prob.empty() || traj.behavior_prob.size() == horizon,
          "behavior probabilities must match the action count");
  require(traj.desired.size() == env.goal_dim(), "desired goal has wrong dimension");
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    require(traj.states[i].size() == env.state_dim(), "state has wrong dimension");
    require(traj.achieved[i] == env.achieved_goal(traj.states[i]),
            "achieved goal inconsistent with state");
  }
  for (const auto& a : traj.actions) {
    require(a.is_discrete() == env.discrete(), "action kind does not match environment");
  }
}

int manhattan(const State& a, const State& b) {
  return static_cast<int>(std::lround((a - b).cwiseAbs().sum()));
}

std::string to_string(EnvKind kind) { return kind == EnvKind::kGrid ? "grid" : "point"; }

}  // namespace gcrl
