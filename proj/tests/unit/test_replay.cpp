#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <filesystem>
#include <map>

#include "gcrl/replay.hpp"
#include "test_support.hpp"

namespace gcrl {
namespace {

using testing::cell;

Trajectory random_episode(const Environment& env, Rng& rng) {
  const auto task = env.sample_task(rng);
  return rollout(
      env, [&](const State&, const Goal&) { return Decision{env.random_action(rng), 0.2}; }, task.goal,
      task.start);
}

double chi_square_p(const std::vector<long>& counts, double expected) {
  double stat = 0.0;
  for (long c : counts) stat += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

TEST(TrajectoryBuffer, CountsTransitions) {
  const Environment env(EnvSpec::grid(10));
  Rng rng(1);
  TrajectoryBuffer buffer;
  buffer.store(random_episode(env, rng));
  EXPECT_EQ(buffer.transitions(), 30u);
  EXPECT_EQ(buffer.episodes(), 1u);
}

TEST(TrajectoryBuffer, EvictsWholeEpisodesFifo) {
  const Environment env(EnvSpec::grid(10));
  Rng rng(2);
  TrajectoryBuffer buffer(60);
  std::vector<Trajectory> eps;
  for (int i = 0; i < 3; ++i) eps.push_back(random_episode(env, rng));
  for (const auto& e : eps) buffer.store(e);
  EXPECT_EQ(buffer.transitions(), 60u);
  EXPECT_EQ(buffer.episodes(), 2u);
  EXPECT_EQ(buffer.episode(0).desired, eps[1].desired);
  EXPECT_EQ(buffer.episode(1).desired, eps[2].desired);
}

TEST(TrajectoryBuffer, NeverExceedsCapacity) {
  const Environment env(EnvSpec::grid(3));
  Rng rng(3);
  TrajectoryBuffer buffer(40);
  for (int i = 0; i < 50; ++i) {
    buffer.store(random_episode(env, rng));
    EXPECT_LE(buffer.transitions(), buffer.capacity());
  }
}

TEST(TrajectoryBuffer, RejectsMalformed) {
  const Environment env(EnvSpec::grid(3));
  Rng rng(4);
  auto traj = random_episode(env, rng);
  traj.states.pop_back();
  TrajectoryBuffer buffer;
  EXPECT_THROW(buffer.store(traj), ContractViolation);
  EXPECT_THROW(buffer.store(Trajectory{}), ContractViolation);
}

TEST(Relabel, ZeroProbabilityKeepsGoal) {
  const Environment env(EnvSpec::grid(5));
  Rng rng(5);
  const auto traj = random_episode(env, rng);
  HindsightSpec spec{0.0};
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(relabel_goal(i % 15, traj, spec, rng), traj.desired);
}

TEST(Relabel, LastStepAlwaysUsesFinalState) {
  const Environment env(EnvSpec::grid(5));
  Rng rng(6);
  const auto traj = random_episode(env, rng);
  HindsightSpec spec{1.0};
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(relabel_index(14, traj, spec, rng), 15);
}

TEST(Relabel, FrequencyAndUniformFutureIndex) {
  const Environment env(EnvSpec::grid(5));
  Rng rng(7);
  const auto traj = random_episode(env, rng);
  const HindsightSpec spec;
  const int t = 4;
  const int draws = 100000;
  std::vector<long> counts(static_cast<std::size_t>(traj.horizon() - t), 0);
  long relabeled = 0;
  for (int i = 0; i < draws; ++i) {
    const auto idx = relabel_index(t, traj, spec, rng);
    if (!idx) continue;
    ++relabeled;
    ASSERT_GE(*idx, t + 1);
    ASSERT_LE(*idx, traj.horizon());
    ++counts[static_cast<std::size_t>(*idx - t - 1)];
  }
  EXPECT_NEAR(static_cast<double>(relabeled) / draws, 0.8, 0.01);
  EXPECT_GT(chi_square_p(counts, static_cast<double>(relabeled) / counts.size()), 0.01);
}

TEST(Segments, OneStepAndHorizonTruncation) {
  const Environment env(EnvSpec::grid(5));
  Rng rng(8);
  auto traj = std::make_shared<const Trajectory>(random_episode(env, rng));
  const auto seg = make_segment(env, traj, 13, 10, traj->desired);
  EXPECT_EQ(seg.n_eff, 2);
  TrajectoryBuffer buffer;
  buffer.store(*traj);
  for (const auto& s : sample_segments(env, buffer, 200, 1, HindsightSpec{}, rng)) EXPECT_EQ(s.n_eff, 1);
}

TEST(Segments, RelabeledNextStateGivesZeroReward) {
  const Environment env(EnvSpec::grid(5));
  Rng rng(9);
  auto traj = std::make_shared<const Trajectory>(random_episode(env, rng));
  const auto seg = make_segment(env, traj, 3, 5, traj->achieved[4]);
  EXPECT_EQ(seg.rewards[0], 0.0);
}

TEST(Segments, RewardsMatchSparseRewardEverywhere) {
  const Environment env(EnvSpec::grid(6));
  Rng rng(10);
  TrajectoryBuffer buffer;
  for (int i = 0; i < 20; ++i) buffer.store(random_episode(env, rng));
  for (const auto& seg : sample_segments(env, buffer, 2000, 7, HindsightSpec{}, rng)) {
    ASSERT_GE(seg.n_eff, 1);
    ASSERT_LE(seg.n_eff, 7);
    ASSERT_LE(seg.t + seg.n_eff, seg.traj->horizon());
    for (int i = 0; i < seg.n_eff; ++i) {
      EXPECT_EQ(seg.rewards[i], sparse_reward(seg.traj->achieved[seg.t + i + 1], seg.goal, 0.0, true));
    }
  }
}

TEST(Segments, EmptyBufferThrows) {
  const Environment env(EnvSpec::grid(5));
  Rng rng(11);
  TrajectoryBuffer buffer;
  EXPECT_THROW(sample_segments(env, buffer, 4, 3, HindsightSpec{}, rng), EmptyBufferError);
}

TEST(Segments, SeededSamplingIsReproducible) {
  const Environment env(EnvSpec::grid(5));
  auto draw = [&] {
    Rng rng(12);
    TrajectoryBuffer buffer;
    for (int i = 0; i < 10; ++i) buffer.store(random_episode(env, rng));
    return sample_segments(env, buffer, 64, 4, HindsightSpec{}, rng);
  };
  const auto a = draw();
  const auto b = draw();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].t, b[i].t);
    EXPECT_EQ(a[i].goal, b[i].goal);
    EXPECT_EQ(a[i].rewards, b[i].rewards);
    EXPECT_EQ(a[i].state(0), b[i].state(0));
  }
}

TEST(EpisodeFile, RoundTripsGridAndPoint) {
  for (const auto& spec : {EnvSpec::grid(4), EnvSpec::point(10)}) {
    const Environment env(spec);
    Rng rng(13);
    std::vector<Trajectory> eps;
    for (int i = 0; i < 3; ++i) eps.push_back(random_episode(env, rng));
    const auto path = std::filesystem::temp_directory_path() / "gcrl_episodes_roundtrip.csv";
    save_episodes(path, env, eps);
    const auto loaded = load_episodes(path, env);
    ASSERT_EQ(loaded.size(), eps.size());
    for (std::size_t e = 0; e < eps.size(); ++e) {
      EXPECT_EQ(loaded[e].states, eps[e].states);
      EXPECT_EQ(loaded[e].desired, eps[e].desired);
      EXPECT_EQ(loaded[e].behavior_prob, eps[e].behavior_prob);
      for (int t = 0; t < eps[e].horizon(); ++t) EXPECT_TRUE(loaded[e].actions[t] == eps[e].actions[t]);
    }
    std::filesystem::remove(path);
  }
}

}  // namespace
}  // namespace gcrl
