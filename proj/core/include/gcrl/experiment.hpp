#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gcrl/config.hpp"

namespace gcrl {

inline constexpr const char* kMetricsHeader = "method,task,n,seed,epoch,success_rate,tsb,isb,critic_loss,seconds";
inline constexpr const char* kAggregateHeader =
    "method,task,n,epoch,runs,success_rate_mean,success_rate_std,tsb_mean,tsb_std,tsb_count,isb_mean,isb_std,"
    "isb_count,critic_loss_mean,critic_loss_std";
/// Overrides the base of relative output directories.
inline constexpr const char* kOutputRootEnv = "GCRL_OUTPUT_ROOT";

struct MetricsRow {
  std::string method;
  std::string task;
  int n = 1;
  std::uint64_t seed = 0;
  int epoch = 0;
  double success_rate = 0.0;
  std::optional<double> tsb;
  std::optional<double> isb;
  double critic_loss = 0.0;
  std::optional<double> seconds;
};

std::string format_row(const MetricsRow& row);
MetricsRow parse_row(const std::string& line);
void write_metrics(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

/// Mean and sample standard deviation (n - 1) of the values that are present.
struct Moments {
  int count = 0;
  std::optional<double> mean;
  std::optional<double> std;
};
Moments moments(const std::vector<double>& values);

struct AggregateRow {
  std::string method;
  std::string task;
  int n = 1;
  int epoch = 0;
  int runs = 0;
  Moments success_rate;
  Moments tsb;
  Moments isb;
  Moments critic_loss;
};

/// Groups rows by (method, task, n, epoch) in first-seen order.
std::vector<AggregateRow> aggregate(const std::vector<MetricsRow>& rows);
void write_aggregate(const std::filesystem::path& path, const std::vector<AggregateRow>& rows);

struct RunResult {
  std::filesystem::path directory;
  std::vector<std::filesystem::path> run_csvs;
  std::filesystem::path aggregate_csv;
  std::vector<MetricsRow> rows;
};

/// Directory that receives a config's outputs: <root>/<task>/<method>_n<n>.
std::filesystem::path run_directory(const ExperimentConfig& config);

/// Trains one seed, appending and flushing a row per epoch to csv_path.
std::vector<MetricsRow> run_seed(const ExperimentConfig& config, std::uint64_t seed,
                                 const std::filesystem::path& csv_path, std::ostream* log = nullptr);

/// Trains every seed, then aggregates the per-run CSVs.
RunResult run(const ExperimentConfig& config, std::ostream* log = nullptr);

struct CompareRow {
  std::string task;
  std::string method;
  int n = 1;
  int epoch = 0;
  int runs = 0;
  double success_rate = 0.0;
  std::optional<double> abs_tsb;
  std::optional<double> abs_isb;
  bool best_success = false;
  bool best_tsb = false;
  bool best_isb = false;
};

/// Final-epoch means per (task, method, n) with the per-task best flagged.
std::vector<CompareRow> compare(const std::vector<std::filesystem::path>& csvs);
std::string format_compare(const std::vector<CompareRow>& rows);

}  // namespace gcrl
