#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gcrl {

struct OracleCheck {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  int cases = 0;
  bool passed() const { return max_error <= tolerance; }
};

/// Value iteration against the closed form on a grid.
OracleCheck check_value_iteration(int size, double gamma);
/// TSB and ISB of the tabular optimum with greedy acting, over every start/goal pair.
OracleCheck check_optimal_bias(int size, double gamma);
/// n-step TD identity for random critics on random grid segments.
OracleCheck check_td_identity(int draws, std::uint64_t seed);
/// Telescoping residual of the bias split for random critics.
OracleCheck check_telescoping(int draws, std::uint64_t seed);

std::vector<OracleCheck> run_oracle_checks(std::uint64_t seed = 7);

}  // namespace gcrl
