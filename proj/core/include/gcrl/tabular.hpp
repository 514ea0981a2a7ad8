#pragma once

#include <vector>

#include "gcrl/mdp.hpp"

namespace gcrl {

/// Dense table Q(cell, action, goal cell) over a square grid.
class TabularQ {
 public:
  explicit TabularQ(int size, double init = 0.0);

  int size() const { return size_; }
  double& at(int cell, int action, int goal);
  double at(int cell, int action, int goal) const;
  double operator()(const State& s, int action, const Goal& g) const;
  Vector action_values(const State& s, const Goal& g) const;
  /// Greedy action; values within tie_tol of the best go to the lowest index.
  int greedy(const State& s, const Goal& g, double tie_tol = 1e-12) const;

  int cell_index(const State& s) const;

  /// Sup-norm Bellman residual of each sweep performed by value_iteration.
  std::vector<double> residuals;

 private:
  int size_;
  std::vector<double> values_;
};

/// Optimal Q for sparse reward on the grid, iterated until the sweep residual <= tol.
TabularQ value_iteration(const Environment& env, double gamma, double tol = 1e-12, int max_sweeps = 100000);

/// Closed form -(1 - gamma^d) / (1 - gamma), d the goal distance after the action.
double optimal_grid_value(int distance_after, double gamma);

}  // namespace gcrl
