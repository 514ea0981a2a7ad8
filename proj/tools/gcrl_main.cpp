#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>

#include "gcrl/bias.hpp"
#include "gcrl/experiment.hpp"
#include "gcrl/oracle_check.hpp"

namespace {

int train(const std::string& path, bool quiet) {
  const auto config = gcrl::load_config(path);
  const auto result = gcrl::run(config, quiet ? nullptr : &std::cout);
  std::cout << "wrote " << result.aggregate_csv.string() << '\n';
  return 0;
}

int eval(const std::string& checkpoint, const std::string& task, int episodes, std::uint64_t seed) {
  const gcrl::Environment env(gcrl::task_spec(task));
  gcrl::AgentConfig cfg;
  cfg.hidden = gcrl::checkpoint_hidden_layers(checkpoint);
  cfg.gamma = 1.0 - 1.0 / env.horizon();
  cfg.seed = seed;
  gcrl::Agent agent(env, cfg);
  agent.load(checkpoint);
  gcrl::Rng rng(seed);
  const auto trajectories = agent.evaluate(episodes, rng);
  const auto q = agent.q_function();
  const auto pi = agent.policy();
  const auto tsb = gcrl::tsb(env, trajectories, q, pi);
  const auto isb = gcrl::isb(env, trajectories, q, cfg.gamma, tsb);
  std::cout << "episodes " << episodes << "\nsuccess_rate " << gcrl::success_rate(env, trajectories) << '\n';
  std::cout << "tsb " << (tsb ? std::to_string(*tsb) : "-") << "\nisb " << (isb ? std::to_string(*isb) : "-")
            << '\n';
  return 0;
}

int compare(const std::vector<std::string>& files) {
  std::vector<std::filesystem::path> paths(files.begin(), files.end());
  std::cout << gcrl::format_compare(gcrl::compare(paths));
  return 0;
}

int oracle_check(std::uint64_t seed) {
  bool ok = true;
  for (const auto& check : gcrl::run_oracle_checks(seed)) {
    std::cout << (check.passed() ? "PASS " : "FAIL ") << check.name << ": max error " << std::scientific
              << std::setprecision(3) << check.max_error << " (tol " << check.tolerance << ", " << check.cases
              << " cases)\n";
    ok = ok && check.passed();
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-conditioned RL with multi-step targets"};
  app.require_subcommand(1);

  std::string config_path;
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train every seed of a config and write CSVs");
  train_cmd->add_option("config", config_path, "key=value config file")->required()->check(CLI::ExistingFile);
  train_cmd->add_flag("-q,--quiet", quiet, "Suppress per-epoch progress");

  std::string checkpoint;
  std::string task;
  int episodes = 120;
  std::uint64_t seed = 1;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint greedily");
  eval_cmd->add_option("checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("task", task, "grid<N> or point")->required();
  eval_cmd->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", seed);

  std::vector<std::string> csvs;
  auto* compare_cmd = app.add_subcommand("compare", "Summarize final epochs of run CSVs");
  compare_cmd->add_option("csv", csvs)->required();

  std::uint64_t oracle_seed = 7;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Run the tabular and identity oracle checks");
  oracle_cmd->add_option("--seed", oracle_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return train(config_path, quiet);
    if (*eval_cmd) return eval(checkpoint, task, episodes, seed);
    if (*compare_cmd) return compare(csvs);
    if (*oracle_cmd) return oracle_check(oracle_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
