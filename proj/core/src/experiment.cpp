#include "gcrl/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "gcrl/bias.hpp"

namespace gcrl {

namespace {

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> parse_optional(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return std::stod(cell);
}

std::string format_moments(const Moments& m, bool with_count) {
  std::string out = format_optional(m.mean) + "," + format_optional(m.std);
  if (with_count) out += "," + std::to_string(m.count);
  return out;
}

}  // namespace

std::string format_row(const MetricsRow& row) {
  std::ostringstream out;
  out << row.method << ',' << row.task << ',' << row.n << ',' << row.seed << ',' << row.epoch << ','
      << format_double(row.success_rate) << ',' << format_optional(row.tsb) << ',' << format_optional(row.isb)
      << ',' << format_double(row.critic_loss) << ',' << format_optional(row.seconds);
  return out.str();
}

MetricsRow parse_row(const std::string& line) {
  const auto cells = split(line);
  if (cells.size() != 10) throw std::runtime_error("metrics row needs 10 columns: " + line);
  MetricsRow row;
  row.method = cells[0];
  row.task = cells[1];
  row.n = std::stoi(cells[2]);
  row.seed = std::stoull(cells[3]);
  row.epoch = std::stoi(cells[4]);
  row.success_rate = std::stod(cells[5]);
  row.tsb = parse_optional(cells[6]);
  row.isb = parse_optional(cells[7]);
  row.critic_loss = std::stod(cells[8]);
  row.seconds = parse_optional(cells[9]);
  return row;
}

void write_metrics(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open metrics file for writing: " + path.string());
  out << kMetricsHeader << '\n';
  for (const auto& row : rows) out << format_row(row) << '\n';
  if (!out) throw std::runtime_error("failed writing metrics file: " + path.string());
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error("unexpected metrics header in " + path.string());
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_row(line));
  }
  return rows;
}

Moments moments(const std::vector<double>& values) {
  Moments m;
  m.count = static_cast<int>(values.size());
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / m.count;
  m.mean = mean;
  if (m.count >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    m.std = std::sqrt(ss / (m.count - 1));
  }
  return m;
}

std::vector<AggregateRow> aggregate(const std::vector<MetricsRow>& rows) {
  struct Bucket {
    const MetricsRow* first = nullptr;
    std::vector<double> success, tsb, isb, loss;
  };
  std::vector<std::string> order;
  std::map<std::string, Bucket> buckets;
  for (const auto& row : rows) {
    const std::string key = row.method + '\x1f' + row.task + '\x1f' + std::to_string(row.n) + '\x1f' +
                            std::to_string(row.epoch);
    auto [it, inserted] = buckets.try_emplace(key);
    if (inserted) {
      order.push_back(key);
      it->second.first = &row;
    }
    it->second.success.push_back(row.success_rate);
    if (row.tsb) it->second.tsb.push_back(*row.tsb);
    if (row.isb) it->second.isb.push_back(*row.isb);
    it->second.loss.push_back(row.critic_loss);
  }
  std::vector<AggregateRow> out;
  for (const auto& key : order) {
    const auto& b = buckets.at(key);
    AggregateRow agg;
    agg.method = b.first->method;
    agg.task = b.first->task;
    agg.n = b.first->n;
    agg.epoch = b.first->epoch;
    agg.runs = static_cast<int>(b.success.size());
    agg.success_rate = moments(b.success);
    agg.tsb = moments(b.tsb);
    agg.isb = moments(b.isb);
    agg.critic_loss = moments(b.loss);
    out.push_back(std::move(agg));
  }
  return out;
}

void write_aggregate(const std::filesystem::path& path, const std::vector<AggregateRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open aggregate file for writing: " + path.string());
  out << kAggregateHeader << '\n';
  for (const auto& r : rows) {
    out << r.method << ',' << r.task << ',' << r.n << ',' << r.epoch << ',' << r.runs << ','
        << format_moments(r.success_rate, false) << ',' << format_moments(r.tsb, true) << ','
        << format_moments(r.isb, true) << ',' << format_moments(r.critic_loss, false) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing aggregate file: " + path.string());
}

std::filesystem::path run_directory(const ExperimentConfig& config) {
  std::filesystem::path base(config.output_dir);
  if (base.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') {
      base = std::filesystem::path(root) / base;
    }
  }
  return base / config.task / (to_string(config.method) + "_n" + std::to_string(config.n));
}

std::vector<MetricsRow> run_seed(const ExperimentConfig& config, std::uint64_t seed,
                                 const std::filesystem::path& csv_path, std::ostream* log) {
  config.validate();
  const Environment env(config.env_spec());
  Agent agent(env, config.agent_config(seed));
  TrajectoryBuffer buffer(agent.config().buffer_capacity);
  Rng env_rng(seed * 0x9E3779B97F4A7C15ULL + 1);
  Rng eval_rng(seed * 0xBF58476D1CE4E5B9ULL + 2);

  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot open metrics file for writing: " + csv_path.string());
  out << kMetricsHeader << '\n' << std::flush;

  const auto start = std::chrono::steady_clock::now();
  agent.warmup(buffer, env_rng);
  std::vector<MetricsRow> rows;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int c = 0; c < config.cycles_per_epoch; ++c) loss_sum += agent.train_cycle(buffer, env_rng).critic_loss;

    const auto eval = agent.evaluate(config.eval_episodes, eval_rng);
    const auto q = agent.q_function(1, config.bias_on_target);
    const auto pi = agent.policy(false);
    const double gamma = agent.config().gamma;

    MetricsRow row;
    row.method = to_string(config.method);
    row.task = config.task;
    row.n = config.n;
    row.seed = seed;
    row.epoch = epoch;
    row.success_rate = success_rate(env, eval);
    row.tsb = tsb(env, eval, q, pi);
    row.isb = isb(env, eval, q, gamma, row.tsb);
    row.critic_loss = loss_sum / config.cycles_per_epoch;
    if (config.wallclock) {
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    out << format_row(row) << '\n' << std::flush;
    if (!out) throw std::runtime_error("failed writing metrics file: " + csv_path.string());
    if (log != nullptr) {
      *log << row.method << " seed " << seed << " epoch " << epoch << " success " << row.success_rate << " tsb "
           << format_optional(row.tsb) << '\n';
    }
    rows.push_back(std::move(row));
  }
  if (config.checkpoint) {
    auto ckpt = csv_path;
    agent.save(ckpt.replace_extension(".ckpt"));
  }
  return rows;
}

RunResult run(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  RunResult result;
  result.directory = run_directory(config);
  std::filesystem::create_directories(result.directory);
  {
    std::ofstream echo(result.directory / "config.txt");
    if (!echo) throw std::runtime_error("cannot write resolved config in " + result.directory.string());
    echo << config.to_text();
  }
  for (const auto seed : config.seeds) {
    const auto csv = result.directory / ("seed" + std::to_string(seed) + ".csv");
    run_seed(config, seed, csv, log);
    result.run_csvs.push_back(csv);
  }
  for (const auto& csv : result.run_csvs) {
    auto rows = read_metrics(csv);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  result.aggregate_csv = result.directory / "aggregate.csv";
  write_aggregate(result.aggregate_csv, aggregate(result.rows));
  return result;
}

std::vector<CompareRow> compare(const std::vector<std::filesystem::path>& csvs) {
  std::vector<MetricsRow> rows;
  for (const auto& path : csvs) {
    if (!std::filesystem::exists(path)) throw std::runtime_error("missing metrics file: " + path.string());
    auto part = read_metrics(path);
    rows.insert(rows.end(), part.begin(), part.end());
  }

  struct Group {
    std::string task, method;
    int n = 1;
    int epoch = 0;
    std::vector<const MetricsRow*> rows;
  };
  std::vector<Group> groups;
  auto find_group = [&](const MetricsRow& r) -> Group& {
    for (auto& g : groups) {
      if (g.task == r.task && g.method == r.method && g.n == r.n) return g;
    }
    groups.push_back({r.task, r.method, r.n, 0, {}});
    return groups.back();
  };
  for (const auto& r : rows) {
    auto& g = find_group(r);
    g.epoch = std::max(g.epoch, r.epoch);
    g.rows.push_back(&r);
  }

  std::vector<CompareRow> out;
  for (const auto& g : groups) {
    CompareRow c;
    c.task = g.task;
    c.method = g.method;
    c.n = g.n;
    c.epoch = g.epoch;
    std::vector<double> success, tsb_abs, isb_abs;
    for (const auto* r : g.rows) {
      if (r->epoch != g.epoch) continue;
      success.push_back(r->success_rate);
      if (r->tsb) tsb_abs.push_back(std::abs(*r->tsb));
      if (r->isb) isb_abs.push_back(std::abs(*r->isb));
    }
    c.runs = static_cast<int>(success.size());
    c.success_rate = moments(success).mean.value_or(0.0);
    c.abs_tsb = moments(tsb_abs).mean;
    c.abs_isb = moments(isb_abs).mean;
    out.push_back(std::move(c));
  }

  std::map<std::string, std::vector<CompareRow*>> by_task;
  for (auto& c : out) by_task[c.task].push_back(&c);
  for (auto& [task, members] : by_task) {
    double best_success = -1.0;
    double best_tsb = INFINITY;
    double best_isb = INFINITY;
    for (const auto* c : members) {
      best_success = std::max(best_success, c->success_rate);
      if (c->abs_tsb) best_tsb = std::min(best_tsb, *c->abs_tsb);
      if (c->abs_isb) best_isb = std::min(best_isb, *c->abs_isb);
    }
    for (auto* c : members) {
      c->best_success = c->success_rate == best_success;
      c->best_tsb = c->abs_tsb && *c->abs_tsb == best_tsb;
      c->best_isb = c->abs_isb && *c->abs_isb == best_isb;
    }
  }
  return out;
}

std::string format_compare(const std::vector<CompareRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(10) << "task" << std::setw(14) << "method" << std::setw(5) << "n" << std::setw(7)
      << "epoch" << std::setw(6) << "runs" << std::setw(12) << "success" << std::setw(14) << "|tsb|" << "|isb|\n";
  auto cell = [](const std::optional<double>& v, bool best) {
    std::ostringstream s;
    if (v) {
      s << std::fixed << std::setprecision(4) << *v;
    } else {
      s << "-";
    }
    if (best) s << '*';
    return s.str();
  };
  for (const auto& r : rows) {
    out << std::left << std::setw(10) << r.task << std::setw(14) << r.method << std::setw(5) << r.n
        << std::setw(7) << r.epoch << std::setw(6) << r.runs << std::setw(12)
        << cell(r.success_rate, r.best_success) << std::setw(14) << cell(r.abs_tsb, r.best_tsb)
        << cell(r.abs_isb, r.best_isb) << '\n';
  }
  return out.str();
}

}  // namespace gcrl
