#include "gcrl/agent.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "gcrl/checkpoint.hpp"
#include "gcrl/gumbel.hpp"

namespace gcrl {

void AgentConfig::validate(bool discrete_actions) const {
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(batch_size > 0 && episodes_per_cycle > 0 && batches_per_cycle > 0 && cycles_per_epoch > 0,
          "cycle sizes must be positive");
  require(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
  require(actor_delay >= 1, "actor delay must be >= 1");
  require(epsilon_greedy >= 0.0 && epsilon_greedy <= 1.0, "epsilon must lie in [0, 1]");
  require(noise_std >= 0.0, "noise std must be >= 0");
  require(action_penalty >= 0.0, "action penalty must be >= 0");
  require(gumbel_temperature > 0.0, "gumbel temperature must be positive");
  require(warmup_episodes >= 0, "warm-up episodes must be >= 0");
  require(actor_lr > 0.0 && critic_lr > 0.0, "learning rates must be positive");
  require(!hidden.empty(), "at least one hidden layer is required");
  hindsight.validate();
  target.validate(discrete_actions);
  quantile.validate();
}

CriticEnsemble CriticEnsemble::create(int obs_dim, int action_dim, const std::vector<int>& hidden, Rng& rng,
                                      double actor_lr, double critic_lr) {
  std::vector<int> actor_sizes{obs_dim};
  actor_sizes.insert(actor_sizes.end(), hidden.begin(), hidden.end());
  actor_sizes.push_back(action_dim);
  std::vector<int> critic_sizes{obs_dim + action_dim};
  critic_sizes.insert(critic_sizes.end(), hidden.begin(), hidden.end());
  critic_sizes.push_back(1);

  CriticEnsemble e;
  e.actor = DenseNet(actor_sizes, OutputActivation::kLinear, rng);
  e.critic1 = DenseNet(critic_sizes, OutputActivation::kLinear, rng);
  e.critic2 = DenseNet(critic_sizes, OutputActivation::kLinear, rng);
  e.actor_target = e.actor;
  e.critic1_target = e.critic1;
  e.critic2_target = e.critic2;
  e.actor_opt = AdamState(e.actor.params().size(), AdamConfig{.lr = actor_lr});
  e.critic1_opt = AdamState(e.critic1.params().size(), AdamConfig{.lr = critic_lr});
  e.critic2_opt = AdamState(e.critic2.params().size(), AdamConfig{.lr = critic_lr});
  return e;
}

void CriticEnsemble::soft_update(double tau) {
  gcrl::soft_update(actor_target.params(), actor.params(), tau);
  gcrl::soft_update(critic1_target.params(), critic1.params(), tau);
  gcrl::soft_update(critic2_target.params(), critic2.params(), tau);
}

double CriticEnsemble::max_target_gap() const {
  return std::max({(actor_target.params() - actor.params()).cwiseAbs().maxCoeff(),
                   (critic1_target.params() - critic1.params()).cwiseAbs().maxCoeff(),
                   (critic2_target.params() - critic2.params()).cwiseAbs().maxCoeff()});
}

Agent::Agent(Environment env, AgentConfig config)
    : env_(std::move(env)),
      config_(std::move(config)),
      rng_(config_.seed),
      state_norm_(env_.state_dim()),
      goal_norm_(env_.goal_dim()) {
  config_.validate(env_.discrete());
  nets_ = CriticEnsemble::create(env_.state_dim() + env_.goal_dim(), env_.action_dim(), config_.hidden, rng_,
                                 config_.actor_lr, config_.critic_lr);
}

Matrix Agent::observations(const std::vector<const State*>& states, const std::vector<const Goal*>& goals) const {
  const Eigen::Index sd = env_.state_dim();
  const Eigen::Index gd = env_.goal_dim();
  Matrix obs(sd + gd, static_cast<Eigen::Index>(states.size()));
  for (std::size_t j = 0; j < states.size(); ++j) {
    obs.col(j).head(sd) = *states[j];
    obs.col(j).tail(gd) = *goals[j];
  }
  state_norm_.normalize_rows(obs, 0);
  goal_norm_.normalize_rows(obs, sd);
  return obs;
}

Matrix Agent::encode_policy_actions(const Matrix& actor_out) const {
  if (!env_.discrete()) return actor_out.array().tanh().matrix();
  Matrix one_hot = Matrix::Zero(actor_out.rows(), actor_out.cols());
  for (Eigen::Index j = 0; j < actor_out.cols(); ++j) one_hot(argmax(actor_out.col(j)), j) = 1.0;
  return one_hot;
}

Vector Agent::actor_output(const State& s, const Goal& g, bool target) const {
  const Matrix obs = observations({&s}, {&g});
  const DenseNet& net = target ? nets_.actor_target : nets_.actor;
  return net.forward(obs).col(0);
}

Vector Agent::behavior_probs(const State& s, const Goal& g) const {
  require(env_.discrete(), "behavior probabilities are defined for discrete actions");
  const Vector pi = softmax(actor_output(s, g));
  const double eps = config_.epsilon_greedy;
  return (Vector::Constant(pi.size(), eps / static_cast<double>(pi.size())) + (1.0 - eps) * pi).eval();
}

Decision Agent::act_explore(const State& s, const Goal& g, Rng& rng) const {
  std::bernoulli_distribution explore(config_.epsilon_greedy);
  const bool random_branch = explore(rng);
  const Vector out = actor_output(s, g);
  Decision d;
  if (env_.discrete()) {
    if (random_branch) {
      std::uniform_int_distribution<int> pick(0, env_.num_actions() - 1);
      d.action = Action::discrete(pick(rng));
    } else {
      d.action = Action::discrete(gumbel_softmax_sample(out, config_.gumbel_temperature, rng).index);
    }
    const Vector pi = softmax(out);
    d.prob = config_.epsilon_greedy / static_cast<double>(env_.num_actions()) +
             (1.0 - config_.epsilon_greedy) * pi[d.action.index()];
    return d;
  }
  if (random_branch) {
    d.action = env_.random_action(rng);
    return d;
  }
  std::normal_distribution<double> noise(0.0, config_.noise_std);
  Vector a = out.array().tanh().matrix();
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = std::clamp(a[i] + noise(rng), -1.0, 1.0);
  d.action = Action::continuous(std::move(a));
  return d;
}

Action Agent::act_eval(const State& s, const Goal& g) const {
  const Vector out = actor_output(s, g);
  if (env_.discrete()) return Action::discrete(argmax(out));
  return Action::continuous(out.array().tanh().matrix());
}

double Agent::q_value(const State& s, const Action& a, const Goal& g, int which, bool target) const {
  require(which == 1 || which == 2, "critic index must be 1 or 2");
  const DenseNet& net = which == 1 ? (target ? nets_.critic1_target : nets_.critic1)
                                   : (target ? nets_.critic2_target : nets_.critic2);
  const Matrix obs = observations({&s}, {&g});
  Matrix input(net.input_dim(), 1);
  input.topRows(obs.rows()) = obs;
  input.bottomRows(env_.action_dim()) = a.encode(env_.num_actions());
  return net.forward(input)(0, 0);
}

ActionValueFn Agent::q_function(int which, bool target) const {
  return [this, which, target](const State& s, const Action& a, const Goal& g) {
    return q_value(s, a, g, which, target);
  };
}

PolicyFn Agent::policy(bool target) const {
  return [this, target](const State& s, const Goal& g) {
    const Vector out = actor_output(s, g, target);
    if (env_.discrete()) return Action::discrete(argmax(out));
    return Action::continuous(out.array().tanh().matrix());
  };
}

double Agent::cdq_bootstrap(const State& s, const Goal& g) const {
  const Action a = policy(true)(s, g);
  return std::min(q_value(s, a, g, 1, true), q_value(s, a, g, 2, true));
}

void Agent::update_normalizers(const std::vector<Trajectory>& episodes) {
  std::vector<Vector> states;
  std::vector<Vector> goals;
  for (const auto& traj : episodes) {
    states.insert(states.end(), traj.states.begin(), traj.states.end());
    goals.insert(goals.end(), traj.achieved.begin(), traj.achieved.end());
    goals.push_back(traj.desired);
  }
  state_norm_.update(states);
  goal_norm_.update(goals);
}

void Agent::warmup(TrajectoryBuffer& buffer, Rng& env_rng) {
  std::vector<Trajectory> episodes;
  episodes.reserve(static_cast<std::size_t>(config_.warmup_episodes));
  for (int e = 0; e < config_.warmup_episodes; ++e) {
    const auto task = env_.sample_task(env_rng);
    const double uniform_prob = env_.discrete() ? 1.0 / env_.num_actions() : 1.0;
    episodes.push_back(rollout(
        env_, [&](const State&, const Goal&) { return Decision{env_.random_action(rng_), uniform_prob}; },
        task.goal, task.start));
  }
  if (!episodes.empty()) update_normalizers(episodes);
  for (auto& traj : episodes) buffer.store(std::move(traj));
}

std::vector<double> Agent::compute_targets(const std::vector<SampledSegment>& batch,
                                           std::vector<double>* one_step) const {
  const TargetSpec& spec = config_.target;
  const double gamma = config_.gamma;
  const bool retrace = spec.kind == TargetKind::kRetrace;
  const std::size_t batch_size = batch.size();

  // steps[j]: how many steps the estimator reads; needed[j]: 1-based offsets whose bootstrap value is used.
  std::vector<int> steps(batch_size);
  std::vector<std::vector<int>> needed(batch_size);
  std::vector<std::size_t> offset(batch_size + 1, 0);
  for (std::size_t j = 0; j < batch_size; ++j) {
    const auto& seg = batch[j];
    const int m = std::min(spec.horizon_needed(), seg.n_eff);
    steps[j] = m;
    auto& idx = needed[j];
    switch (spec.kind) {
      case TargetKind::kHer:
      case TargetKind::kMher:
        idx.push_back(1);
        if (m > 1) idx.push_back(m);
        break;
      case TargetKind::kTmher:
      case TargetKind::kTmherLambda:
        for (int i = 1; i <= m; ++i) {
          idx.push_back(i);
          if (seg.rewards[i - 1] == 0.0) break;
        }
        break;
      case TargetKind::kMherLambda:
      case TargetKind::kRetrace:
        for (int i = 1; i <= m; ++i) idx.push_back(i);
        break;
    }
    offset[j + 1] = offset[j] + idx.size();
  }
  const auto total = static_cast<Eigen::Index>(offset.back());

  std::vector<const State*> states;
  std::vector<const Goal*> goals;
  states.reserve(offset.back());
  goals.reserve(offset.back());
  for (std::size_t j = 0; j < batch_size; ++j) {
    for (int i : needed[j]) {
      states.push_back(&batch[j].state(i));
      goals.push_back(&batch[j].goal);
    }
  }
  const Matrix obs = observations(states, goals);
  const Matrix actor_out = nets_.actor_target.forward(obs);
  const Eigen::Index obs_rows = obs.rows();
  const Eigen::Index act_rows = env_.action_dim();

  std::vector<double> targets(batch_size);
  if (one_step) one_step->assign(batch_size, 0.0);

  if (!retrace) {
    Matrix input(obs_rows + act_rows, total);
    input.topRows(obs_rows) = obs;
    input.bottomRows(act_rows) = encode_policy_actions(actor_out);
    const Eigen::RowVectorXd q1 = nets_.critic1_target.forward(input).row(0);
    const Eigen::RowVectorXd q2 = nets_.critic2_target.forward(input).row(0);
    const Eigen::RowVectorXd boot_all = q1.cwiseMin(q2);
    std::vector<double> boot;
    for (std::size_t j = 0; j < batch_size; ++j) {
      const auto& seg = batch[j];
      boot.assign(static_cast<std::size_t>(steps[j]), 0.0);
      for (std::size_t k = 0; k < needed[j].size(); ++k) {
        boot[needed[j][k] - 1] = boot_all[static_cast<Eigen::Index>(offset[j] + k)];
      }
      const std::span<const double> rewards(seg.rewards.data(), static_cast<std::size_t>(steps[j]));
      targets[j] = compute_target(spec, rewards, boot, {}, gamma);
      if (one_step) (*one_step)[j] = seg.rewards[0] + gamma * boot[0];
    }
    return targets;
  }

  const int num_actions = env_.num_actions();
  Matrix input(obs_rows + act_rows, total * num_actions);
  for (int a = 0; a < num_actions; ++a) {
    auto block = input.middleCols(a * total, total);
    block.topRows(obs_rows) = obs;
    block.bottomRows(act_rows).setZero();
    block.row(obs_rows + a).setOnes();
  }
  const Eigen::RowVectorXd q1 = nets_.critic1_target.forward(input).row(0);
  const Eigen::RowVectorXd q2 = nets_.critic2_target.forward(input).row(0);
  const Eigen::RowVectorXd q_min = q1.cwiseMin(q2);
  const Matrix probs = softmax_columns(actor_out);

  std::vector<RetraceStep> trace;
  for (std::size_t j = 0; j < batch_size; ++j) {
    const auto& seg = batch[j];
    trace.assign(static_cast<std::size_t>(steps[j]), RetraceStep{});
    for (int i = 1; i <= steps[j]; ++i) {
      const Eigen::Index col = static_cast<Eigen::Index>(offset[j]) + i - 1;
      auto& step = trace[i - 1];
      step.reward = seg.rewards[i - 1];
      double expected = 0.0;
      for (int a = 0; a < num_actions; ++a) expected += probs(a, col) * q_min[a * total + col];
      step.expected_q = expected;
      if (i < steps[j]) {
        const int a = seg.action(i).index();
        step.taken_q = q_min[a * total + col];
        step.target_prob = probs(a, col);
        step.behavior_prob = seg.behavior_prob(i);
      }
    }
    targets[j] = retrace_target(trace, gamma, spec.n, spec.lambda);
    if (one_step) (*one_step)[j] = trace[0].reward + gamma * trace[0].expected_q;
  }
  return targets;
}

double Agent::train_batch(const std::vector<SampledSegment>& batch, bool update_actor, double* actor_loss) {
  require(!batch.empty(), "training batch is empty");
  BatchTrace trace;
  const bool traced = static_cast<bool>(on_batch);
  const std::vector<double> targets = compute_targets(batch, traced ? &trace.one_step_targets : nullptr);

  std::vector<const State*> states;
  std::vector<const Goal*> goals;
  states.reserve(batch.size());
  goals.reserve(batch.size());
  for (const auto& seg : batch) {
    states.push_back(&seg.state(0));
    goals.push_back(&seg.goal);
  }
  const Matrix obs = observations(states, goals);
  const Eigen::Index act_rows = env_.action_dim();
  Matrix input(obs.rows() + act_rows, obs.cols());
  input.topRows(obs.rows()) = obs;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    input.col(static_cast<Eigen::Index>(j)).tail(act_rows) = batch[j].action(0).encode(env_.num_actions());
  }

  double critic_loss_sum = 0.0;
  for (int which = 1; which <= 2; ++which) {
    DenseNet& net = which == 1 ? nets_.critic1 : nets_.critic2;
    AdamState& opt = which == 1 ? nets_.critic1_opt : nets_.critic2_opt;
    ForwardCache cache;
    const Eigen::RowVectorXd q = net.forward(input, cache).row(0);
    const LossResult loss = critic_loss(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())),
                                        targets, config_.loss_mode, config_.quantile);
    critic_loss_sum += loss.value;
    const Vector grad = net.backward(cache, loss.dq.transpose());
    opt.update(net.params(), grad);
  }

  if (update_actor) {
    const BatchCritic critic = network_critic(nets_.critic1);
    const ActorLossResult result =
        env_.discrete()
            ? (config_.actor_gradient == DiscreteActorGradient::kExpected
                   ? actor_loss_discrete_expected(nets_.actor, critic, obs, config_.action_penalty)
                   : actor_loss_discrete(nets_.actor, critic, obs, config_.action_penalty,
                                         config_.gumbel_temperature, rng_))
            : actor_loss_continuous(nets_.actor, critic, obs, config_.action_penalty);
    nets_.actor_opt.update(nets_.actor.params(), result.grad);
    if (actor_loss) *actor_loss = result.value;
  }

  nets_.soft_update(config_.tau);
  ++batches_seen_;

  if (traced) {
    trace.segments = &batch;
    trace.targets = targets;
    on_batch(trace);
  }
  return 0.5 * critic_loss_sum;
}

CycleStats Agent::train_cycle(TrajectoryBuffer& buffer, Rng& env_rng) {
  require(buffer.episodes() >= static_cast<std::size_t>(config_.warmup_episodes),
          "warm-up episodes must be stored before training");
  CycleStats stats;
  std::vector<Trajectory> fresh;
  fresh.reserve(static_cast<std::size_t>(config_.episodes_per_cycle));
  for (int e = 0; e < config_.episodes_per_cycle; ++e) {
    const auto task = env_.sample_task(env_rng);
    fresh.push_back(rollout(
        env_, [&](const State& s, const Goal& g) { return act_explore(s, g, rng_); }, task.goal, task.start));
  }
  stats.episodes_collected = static_cast<int>(fresh.size());
  update_normalizers(fresh);
  for (auto& traj : fresh) buffer.store(std::move(traj));

  const int n = config_.target.horizon_needed();
  for (int b = 0; b < config_.batches_per_cycle; ++b) {
    const auto batch = sample_segments(env_, buffer, static_cast<std::size_t>(config_.batch_size), n,
                                       config_.hindsight, rng_);
    const bool actor_step = (b + 1) % config_.actor_delay == 0;
    double actor_loss = 0.0;
    stats.critic_loss += train_batch(batch, actor_step, &actor_loss);
    ++stats.critic_updates;
    if (actor_step) {
      stats.actor_loss += actor_loss;
      ++stats.actor_updates;
    }
  }
  stats.critic_loss /= static_cast<double>(stats.critic_updates);
  if (stats.actor_updates > 0) stats.actor_loss /= static_cast<double>(stats.actor_updates);
  return stats;
}

std::vector<Trajectory> Agent::evaluate(int episodes, Rng& env_rng) const {
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    const auto task = env_.sample_task(env_rng);
    out.push_back(rollout(
        env_, [&](const State& s, const Goal& g) { return act_eval(s, g); }, task.goal, task.start));
  }
  return out;
}

namespace {

constexpr std::array<char, 8> kAgentMagic = {'G', 'C', 'R', 'L', 'A', 'G', 'T', '1'};

}  // namespace

void Agent::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  out.write(kAgentMagic.data(), kAgentMagic.size());
  const std::array<std::uint32_t, 3> header = {static_cast<std::uint32_t>(env_.spec().kind),
                                               static_cast<std::uint32_t>(env_.spec().size),
                                               static_cast<std::uint32_t>(env_.spec().horizon)};
  out.write(reinterpret_cast<const char*>(header.data()), sizeof(header));
  write_normalizer(out, state_norm_);
  write_normalizer(out, goal_norm_);
  write_net(out, nets_.actor);
  write_net(out, nets_.critic1);
  write_net(out, nets_.critic2);
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

void Agent::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kAgentMagic) throw std::runtime_error("not an agent checkpoint: " + path.string());
  std::array<std::uint32_t, 3> header{};
  in.read(reinterpret_cast<char*>(header.data()), sizeof(header));
  if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
  if (header[0] != static_cast<std::uint32_t>(env_.spec().kind) ||
      header[1] != static_cast<std::uint32_t>(env_.spec().size) ||
      header[2] != static_cast<std::uint32_t>(env_.spec().horizon)) {
    throw std::runtime_error("checkpoint was written for a different task");
  }
  state_norm_ = read_normalizer(in);
  goal_norm_ = read_normalizer(in);
  DenseNet actor = read_net(in);
  DenseNet critic1 = read_net(in);
  DenseNet critic2 = read_net(in);
  if (actor.sizes() != nets_.actor.sizes() || critic1.sizes() != nets_.critic1.sizes() ||
      critic2.sizes() != nets_.critic2.sizes()) {
    throw std::runtime_error("checkpoint network shapes do not match the configuration");
  }
  nets_.actor = actor;
  nets_.critic1 = critic1;
  nets_.critic2 = critic2;
  nets_.actor_target = std::move(actor);
  nets_.critic1_target = std::move(critic1);
  nets_.critic2_target = std::move(critic2);
}

std::vector<int> checkpoint_hidden_layers(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kAgentMagic) throw std::runtime_error("not an agent checkpoint: " + path.string());
  std::array<std::uint32_t, 3> header{};
  in.read(reinterpret_cast<char*>(header.data()), sizeof(header));
  read_normalizer(in);
  read_normalizer(in);
  const DenseNet actor = read_net(in);
  const auto& sizes = actor.sizes();
  return {sizes.begin() + 1, sizes.end() - 1};
}

}  // namespace gcrl
