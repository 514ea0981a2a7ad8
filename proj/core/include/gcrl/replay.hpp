#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "gcrl/mdp.hpp"

namespace gcrl {

/// Future-strategy hindsight relabeling.
struct HindsightSpec {
  double relabel_prob = 0.8;
  void validate() const;
};

/// An n-step slice of a stored episode under a single (possibly relabeled) goal.
struct SampledSegment {
  std::shared_ptr<const Trajectory> traj;
  int t = 0;
  int n_eff = 1;
  Goal goal;
  /// rewards[i] = r(s_{t+i+1}, goal), i = 0..n_eff-1.
  std::vector<double> rewards;

  const State& state(int offset) const { return traj->states[t + offset]; }
  const Action& action(int offset) const { return traj->actions[t + offset]; }
  double behavior_prob(int offset) const;
};

/// Whole-episode FIFO replay buffer sized in transitions.
class TrajectoryBuffer {
 public:
  explicit TrajectoryBuffer(std::size_t capacity_transitions = 1'000'000);

  void store(Trajectory traj);

  std::size_t transitions() const { return transitions_; }
  std::size_t episodes() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return episodes_.empty(); }
  const Trajectory& episode(std::size_t i) const { return *episodes_.at(i); }
  std::shared_ptr<const Trajectory> episode_ptr(std::size_t i) const { return episodes_.at(i); }

 private:
  std::size_t capacity_;
  std::size_t transitions_ = 0;
  std::deque<std::shared_ptr<const Trajectory>> episodes_;
};

/// Index t' in {t+1..T} of the achieved goal to relabel with, or nullopt to keep the original goal.
std::optional<int> relabel_index(int t, const Trajectory& traj, const HindsightSpec& spec, Rng& rng);

Goal relabel_goal(int t, const Trajectory& traj, const HindsightSpec& spec, Rng& rng);

/// Builds the segment starting at t with rewards recomputed against goal.
SampledSegment make_segment(const Environment& env, std::shared_ptr<const Trajectory> traj, int t, int n,
                            Goal goal);

/// b segments with uniform episodes and start steps; n_eff = min(n, T - t).
std::vector<SampledSegment> sample_segments(const Environment& env, const TrajectoryBuffer& buffer,
                                            std::size_t batch, int n, const HindsightSpec& spec, Rng& rng);

/// CSV episode file: header "episode,t,s_0..,a..,g_0..,behavior_prob"; one row per state.
void save_episodes(const std::filesystem::path& path, const Environment& env,
                   const std::vector<Trajectory>& episodes);
std::vector<Trajectory> load_episodes(const std::filesystem::path& path, const Environment& env);

}  // namespace gcrl
