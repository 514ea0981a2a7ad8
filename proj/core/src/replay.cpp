#include "gcrl/replay.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gcrl {

void HindsightSpec::validate() const {
  require(relabel_prob >= 0.0 && relabel_prob <= 1.0, "relabel probability must lie in [0, 1]");
}

double SampledSegment::behavior_prob(int offset) const {
  if (traj->behavior_prob.empty()) return 1.0;
  return traj->behavior_prob[t + offset];
}

TrajectoryBuffer::TrajectoryBuffer(std::size_t capacity_transitions) : capacity_(capacity_transitions) {
  require(capacity_ > 0, "buffer capacity must be positive");
}

void TrajectoryBuffer::store(Trajectory traj) {
  require(!traj.actions.empty(), "cannot store an empty trajectory");
  require(traj.states.size() == traj.actions.size() + 1 && traj.achieved.size() == traj.states.size(),
          "malformed trajectory");
  require(traj.actions.size() <= capacity_, "trajectory longer than buffer capacity");
  transitions_ += traj.actions.size();
  episodes_.push_back(std::make_shared<const Trajectory>(std::move(traj)));
  while (transitions_ > capacity_) {
    transitions_ -= episodes_.front()->actions.size();
    episodes_.pop_front();
  }
}

std::optional<int> relabel_index(int t, const Trajectory& traj, const HindsightSpec& spec, Rng& rng) {
  const int horizon = traj.horizon();
  require(t >= 0 && t < horizon, "relabel step out of range");
  std::bernoulli_distribution relabel(spec.relabel_prob);
  if (!relabel(rng)) return std::nullopt;
  std::uniform_int_distribution<int> future(t + 1, horizon);
  return future(rng);
}

Goal relabel_goal(int t, const Trajectory& traj, const HindsightSpec& spec, Rng& rng) {
  const auto index = relabel_index(t, traj, spec, rng);
  return index ? traj.achieved[*index] : traj.desired;
}

SampledSegment make_segment(const Environment& env, std::shared_ptr<const Trajectory> traj, int t, int n,
                            Goal goal) {
  require(n >= 1, "segment length must be >= 1");
  const int horizon = traj->horizon();
  require(t >= 0 && t < horizon, "segment start out of range");
  SampledSegment seg;
  seg.t = t;
  seg.n_eff = std::min(n, horizon - t);
  seg.goal = std::move(goal);
  seg.rewards.resize(seg.n_eff);
  for (int i = 0; i < seg.n_eff; ++i) {
    seg.rewards[i] = env.reward(traj->achieved[t + i + 1], seg.goal);
  }
  seg.traj = std::move(traj);
  return seg;
}

std::vector<SampledSegment> sample_segments(const Environment& env, const TrajectoryBuffer& buffer,
                                            std::size_t batch, int n, const HindsightSpec& spec, Rng& rng) {
  if (buffer.empty()) throw EmptyBufferError();
  std::vector<SampledSegment> out;
  out.reserve(batch);
  std::uniform_int_distribution<std::size_t> pick_episode(0, buffer.episodes() - 1);
  for (std::size_t b = 0; b < batch; ++b) {
    auto traj = buffer.episode_ptr(pick_episode(rng));
    std::uniform_int_distribution<int> pick_t(0, traj->horizon() - 1);
    const int t = pick_t(rng);
    Goal goal = relabel_goal(t, *traj, spec, rng);
    out.push_back(make_segment(env, std::move(traj), t, n, std::move(goal)));
  }
  return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void save_episodes(const std::filesystem::path& path, const Environment& env,
                   const std::vector<Trajectory>& episodes) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open episode file for writing: " + path.string());
  out << std::setprecision(17);
  out << "episode,t";
  for (int d = 0; d < env.state_dim(); ++d) out << ",s_" << d;
  if (env.discrete()) {
    out << ",a";
  } else {
    for (int d = 0; d < env.action_dim(); ++d) out << ",a_" << d;
  }
  for (int d = 0; d < env.goal_dim(); ++d) out << ",g_" << d;
  out << ",behavior_prob\n";
  const int action_cols = env.discrete() ? 1 : env.action_dim();
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto& traj = episodes[e];
    validate_trajectory(env, traj);
    for (int t = 0; t <= traj.horizon(); ++t) {
      out << e << ',' << t;
      for (int d = 0; d < env.state_dim(); ++d) out << ',' << traj.states[t][d];
      if (t < traj.horizon()) {
        const auto& a = traj.actions[t];
        if (a.is_discrete()) {
          out << ',' << a.index();
        } else {
          for (int d = 0; d < action_cols; ++d) out << ',' << a.vector()[d];
        }
      } else {
        for (int d = 0; d < action_cols; ++d) out << ',';
      }
      for (int d = 0; d < env.goal_dim(); ++d) out << ',' << traj.desired[d];
      out << ',';
      if (t < traj.horizon()) out << (traj.behavior_prob.empty() ? 1.0 : traj.behavior_prob[t]);
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing episode file: " + path.string());
}

std::vector<Trajectory> load_episodes(const std::filesystem::path& path, const Environment& env) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open episode file: " + path.string());
  std::string line;
  std::getline(in, line);
  const int action_cols = env.discrete() ? 1 : env.action_dim();
  const std::size_t expected = 2 + env.state_dim() + action_cols + env.goal_dim() + 1;
  if (split_csv(line).size() != expected) {
    throw std::runtime_error("episode file header does not match the environment");
  }
  std::vector<Trajectory> episodes;
  long current = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != expected) {
      throw std::runtime_error("episode file line " + std::to_string(line_no) + ": wrong column count");
    }
    const long episode = std::stol(cells[0]);
    const int t = std::stoi(cells[1]);
    if (episode != current) {
      episodes.emplace_back();
      current = episode;
    }
    auto& traj = episodes.back();
    std::size_t c = 2;
    State s(env.state_dim());
    for (int d = 0; d < env.state_dim(); ++d) s[d] = std::stod(cells[c++]);
    const bool has_action = !cells[c].empty();
    if (has_action) {
      if (env.discrete()) {
        traj.actions.push_back(Action::discrete(std::stoi(cells[c])));
      } else {
        Vector a(env.action_dim());
        for (int d = 0; d < env.action_dim(); ++d) a[d] = std::stod(cells[c + d]);
        traj.actions.push_back(Action::continuous(std::move(a)));
      }
    }
    c += action_cols;
    Goal g(env.goal_dim());
    for (int d = 0; d < env.goal_dim(); ++d) g[d] = std::stod(cells[c++]);
    if (t == 0) traj.desired = g;
    if (has_action) traj.behavior_prob.push_back(std::stod(cells[c]));
    traj.achieved.push_back(env.achieved_goal(s));
    traj.states.push_back(std::move(s));
  }
  for (const auto& traj : episodes) validate_trajectory(env, traj);
  return episodes;
}

}  // namespace gcrl
