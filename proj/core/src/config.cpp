#include "gcrl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace gcrl {

ConfigError::ConfigError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + message : "config: " + message),
      line_(line) {}

namespace {

const std::map<std::string, Method>& method_names() {
  static const std::map<std::string, Method> names = {
      {"her", Method::kHer},         {"mher", Method::kMher},       {"mher_lambda", Method::kMherLambda},
      {"tmher_lambda", Method::kTmherLambda}, {"qr_mher", Method::kQrMher}, {"br_mher", Method::kBrMher},
      {"is_mher", Method::kIsMher}};
  return names;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& text, int line, const std::string& key) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ConfigError(line, "invalid value '" + text + "' for " + key);
  }
  return value;
}

bool parse_bool(const std::string& text, int line, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(line, "invalid boolean '" + text + "' for " + key);
}

template <typename T>
std::vector<T> parse_list(const std::string& text, int line, const std::string& key) {
  std::vector<T> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<T>(trim(item), line, key));
  if (out.empty()) throw ConfigError(line, "empty list for " + key);
  return out;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
  return out.str();
}

}  // namespace

std::string to_string(Method method) {
  for (const auto& [name, m] : method_names()) {
    if (m == method) return name;
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  const auto it = method_names().find(name);
  if (it == method_names().end()) throw std::invalid_argument("unknown method: " + name);
  return it->second;
}

MethodSpec method_spec(Method method) {
  switch (method) {
    case Method::kHer: return {TargetKind::kHer, CriticLossMode::kHuberMean};
    case Method::kMher: return {TargetKind::kMher, CriticLossMode::kHuberMean};
    case Method::kMherLambda: return {TargetKind::kMherLambda, CriticLossMode::kHuberMean};
    case Method::kTmherLambda: return {TargetKind::kTmherLambda, CriticLossMode::kHuberMean};
    case Method::kQrMher: return {TargetKind::kMherLambda, CriticLossMode::kQuantile};
    case Method::kBrMher: return {TargetKind::kTmherLambda, CriticLossMode::kQuantile};
    case Method::kIsMher: return {TargetKind::kRetrace, CriticLossMode::kHuberMean};
  }
  throw std::invalid_argument("unknown method");
}

EnvSpec task_spec(const std::string& task) {
  if (task == "point") return EnvSpec::point();
  if (task.rfind("grid", 0) == 0 && task.size() > 4) {
    int size = 0;
    const char* first = task.data() + 4;
    const char* last = task.data() + task.size();
    const auto [ptr, ec] = std::from_chars(first, last, size);
    if (ec == std::errc() && ptr == last && size >= 2) return EnvSpec::grid(size);
  }
  throw std::invalid_argument("unknown task: " + task);
}

double ExperimentConfig::resolved_gamma() const {
  if (gamma) return *gamma;
  return 1.0 - 1.0 / env_spec().horizon;
}

TargetSpec ExperimentConfig::target_spec() const {
  TargetSpec spec;
  spec.kind = method_spec(method).target;
  spec.n = n;
  spec.lambda = lambda;
  return spec;
}

AgentConfig ExperimentConfig::agent_config(std::uint64_t seed) const {
  AgentConfig cfg;
  cfg.gamma = resolved_gamma();
  cfg.batch_size = batch_size;
  cfg.episodes_per_cycle = episodes_per_cycle;
  cfg.batches_per_cycle = batches_per_cycle;
  cfg.cycles_per_epoch = cycles_per_epoch;
  cfg.warmup_episodes = warmup_episodes;
  cfg.hidden = hidden;
  cfg.actor_lr = lr;
  cfg.critic_lr = lr;
  cfg.action_penalty = action_penalty;
  cfg.actor_gradient = actor_gradient;
  cfg.hindsight.relabel_prob = relabel_prob;
  cfg.target = target_spec();
  cfg.loss_mode = method_spec(method).loss;
  cfg.quantile.rho = rho;
  cfg.quantile.kappa = kappa;
  cfg.seed = seed;
  return cfg;
}

void ExperimentConfig::validate() const {
  EnvSpec env;
  try {
    env = env_spec();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
  if (method == Method::kHer && n != 1) throw ConfigError(0, "her fixes n=1");
  if (n < 1) throw ConfigError(0, "n must be >= 1");
  if (method == Method::kIsMher && env.kind != EnvKind::kGrid) {
    throw ConfigError(0, "is_mher needs a discrete-action task");
  }
  if (epochs < 1) throw ConfigError(0, "epochs must be >= 1");
  if (seeds.empty()) throw ConfigError(0, "at least one seed is required");
  if (eval_episodes < 1) throw ConfigError(0, "eval_episodes must be >= 1");
  try {
    agent_config(seeds.front()).validate(env.kind == EnvKind::kGrid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  out << "method=" << to_string(method) << '\n'
      << "task=" << task << '\n'
      << "n=" << n << '\n'
      << "lambda=" << format_double(lambda) << '\n'
      << "rho=" << format_double(rho) << '\n'
      << "kappa=" << format_double(kappa) << '\n'
      << "gamma=" << format_double(resolved_gamma()) << '\n'
      << "epochs=" << epochs << '\n'
      << "seeds=" << join(seeds) << '\n'
      << "output_dir=" << output_dir << '\n'
      << "eval_episodes=" << eval_episodes << '\n'
      << "cycles_per_epoch=" << cycles_per_epoch << '\n'
      << "episodes_per_cycle=" << episodes_per_cycle << '\n'
      << "batches_per_cycle=" << batches_per_cycle << '\n'
      << "batch_size=" << batch_size << '\n'
      << "warmup_episodes=" << warmup_episodes << '\n'
      << "hidden=" << join(hidden) << '\n'
      << "lr=" << format_double(lr) << '\n'
      << "relabel_prob=" << format_double(relabel_prob) << '\n'
      << "action_penalty=" << format_double(action_penalty) << '\n'
      << "actor_gradient=" << (actor_gradient == DiscreteActorGradient::kExpected ? "expected" : "straight_through")
      << '\n'
      << "bias_on_target=" << (bias_on_target ? "true" : "false") << '\n'
      << "wallclock=" << (wallclock ? "true" : "false") << '\n'
      << "checkpoint=" << (checkpoint ? "true" : "false") << '\n';
  return out.str();
}

namespace {

int count_at_least(const std::string& text, int line, const std::string& key, int lo) {
  const int value = parse_number<int>(text, line, key);
  if (value < lo) throw ConfigError(line, key + " must be >= " + std::to_string(lo));
  return value;
}

template <typename Pred>
double real_within(const std::string& text, int line, const std::string& key, Pred ok, const std::string& range) {
  const double value = parse_number<double>(text, line, key);
  if (!ok(value)) throw ConfigError(line, key + " must be " + range);
  return value;
}

bool unit_closed(double x) { return x >= 0.0 && x <= 1.0; }
bool unit_open(double x) { return x > 0.0 && x < 1.0; }
bool positive(double x) { return x > 0.0; }
bool non_negative(double x) { return x >= 0.0; }

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  using Setter = std::function<void(const std::string&, int)>;
  const std::map<std::string, Setter> setters = {
      {"method",
       [&](const std::string& v, int line) {
         const auto it = method_names().find(v);
         if (it == method_names().end()) throw ConfigError(line, "unknown method '" + v + "'");
         cfg.method = it->second;
       }},
      {"task",
       [&](const std::string& v, int line) {
         try {
           task_spec(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(line, e.what());
         }
         cfg.task = v;
       }},
      {"n", [&](const std::string& v, int line) { cfg.n = count_at_least(v, line, "n", 1); }},
      {"lambda", [&](const std::string& v, int line) {
        cfg.lambda = real_within(v, line, "lambda", unit_closed, "in [0, 1]");
      }},
      {"rho", [&](const std::string& v, int line) { cfg.rho = real_within(v, line, "rho", unit_open, "in (0, 1)"); }},
      {"kappa", [&](const std::string& v, int line) {
        cfg.kappa = real_within(v, line, "kappa", positive, "positive");
      }},
      {"gamma", [&](const std::string& v, int line) {
        cfg.gamma = real_within(v, line, "gamma", unit_open, "in (0, 1)");
      }},
      {"epochs", [&](const std::string& v, int line) { cfg.epochs = count_at_least(v, line, "epochs", 1); }},
      {"seeds",
       [&](const std::string& v, int line) { cfg.seeds = parse_list<std::uint64_t>(v, line, "seeds"); }},
      {"output_dir",
       [&](const std::string& v, int line) {
         if (v.empty()) throw ConfigError(line, "output_dir must not be empty");
         cfg.output_dir = v;
       }},
      {"eval_episodes",
       [&](const std::string& v, int line) { cfg.eval_episodes = count_at_least(v, line, "eval_episodes", 1); }},
      {"cycles_per_epoch",
       [&](const std::string& v, int line) {
         cfg.cycles_per_epoch = count_at_least(v, line, "cycles_per_epoch", 1);
       }},
      {"episodes_per_cycle",
       [&](const std::string& v, int line) {
         cfg.episodes_per_cycle = count_at_least(v, line, "episodes_per_cycle", 1);
       }},
      {"batches_per_cycle",
       [&](const std::string& v, int line) {
         cfg.batches_per_cycle = count_at_least(v, line, "batches_per_cycle", 1);
       }},
      {"batch_size",
       [&](const std::string& v, int line) { cfg.batch_size = count_at_least(v, line, "batch_size", 1); }},
      {"warmup_episodes",
       [&](const std::string& v, int line) {
         cfg.warmup_episodes = count_at_least(v, line, "warmup_episodes", 0);
       }},
      {"hidden", [&](const std::string& v, int line) { cfg.hidden = parse_list<int>(v, line, "hidden"); }},
      {"lr", [&](const std::string& v, int line) { cfg.lr = real_within(v, line, "lr", positive, "positive"); }},
      {"relabel_prob",
       [&](const std::string& v, int line) {
         cfg.relabel_prob = real_within(v, line, "relabel_prob", unit_closed, "in [0, 1]");
       }},
      {"action_penalty",
       [&](const std::string& v, int line) {
         cfg.action_penalty = real_within(v, line, "action_penalty", non_negative, ">= 0");
       }},
      {"actor_gradient",
       [&](const std::string& v, int line) {
         if (v == "expected") {
           cfg.actor_gradient = DiscreteActorGradient::kExpected;
         } else if (v == "straight_through") {
           cfg.actor_gradient = DiscreteActorGradient::kStraightThrough;
         } else {
           throw ConfigError(line, "actor_gradient must be expected or straight_through");
         }
       }},
      {"bias_on_target",
       [&](const std::string& v, int line) { cfg.bias_on_target = parse_bool(v, line, "bias_on_target"); }},
      {"wallclock", [&](const std::string& v, int line) { cfg.wallclock = parse_bool(v, line, "wallclock"); }},
      {"checkpoint", [&](const std::string& v, int line) { cfg.checkpoint = parse_bool(v, line, "checkpoint"); }},
  };

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  int n_line = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(line_no, "unknown key '" + key + "'");
    it->second(value, line_no);
    if (key == "n") n_line = line_no;
  }
  if (cfg.method == Method::kHer) {
    if (n_line > 0 && cfg.n != 1) throw ConfigError(n_line, "her fixes n=1");
    cfg.n = 1;
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace gcrl
