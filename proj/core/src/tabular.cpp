#include "gcrl/tabular.hpp"

#include <algorithm>
#include <cmath>

namespace gcrl {

TabularQ::TabularQ(int size, double init)
    : size_(size), values_(static_cast<std::size_t>(size) * size * kNumGridActions * size * size, init) {
  require(size >= 1, "table size must be positive");
}

int TabularQ::cell_index(const State& s) const {
  require(s.size() == 2, "grid state must be 2-D");
  const int x = static_cast<int>(std::lround(s[0]));
  const int y = static_cast<int>(std::lround(s[1]));
  require(x >= 0 && x < size_ && y >= 0 && y < size_, "cell outside the grid");
  return y * size_ + x;
}

double& TabularQ::at(int cell, int action, int goal) {
  const std::size_t cells = static_cast<std::size_t>(size_) * size_;
  return values_[(static_cast<std::size_t>(cell) * kNumGridActions + action) * cells + goal];
}

double TabularQ::at(int cell, int action, int goal) const {
  const std::size_t cells = static_cast<std::size_t>(size_) * size_;
  return values_[(static_cast<std::size_t>(cell) * kNumGridActions + action) * cells + goal];
}

double TabularQ::operator()(const State& s, int action, const Goal& g) const {
  require(action >= 0 && action < kNumGridActions, "invalid grid action index");
  return at(cell_index(s), action, cell_index(g));
}

Vector TabularQ::action_values(const State& s, const Goal& g) const {
  Vector q(kNumGridActions);
  const int cell = cell_index(s);
  const int goal = cell_index(g);
  for (int a = 0; a < kNumGridActions; ++a) q[a] = at(cell, a, goal);
  return q;
}

int TabularQ::greedy(const State& s, const Goal& g, double tie_tol) const {
  const Vector q = action_values(s, g);
  const double best = q.maxCoeff();
  for (int a = 0; a < kNumGridActions; ++a) {
    if (q[a] >= best - tie_tol) return a;
  }
  return 0;
}

TabularQ value_iteration(const Environment& env, double gamma, double tol, int max_sweeps) {
  require(env.discrete(), "value iteration is defined for grid tasks only");
  require(gamma >= 0.0 && gamma < 1.0, "discount must lie in [0, 1)");
  const int n = env.spec().size;
  const int cells = n * n;
  const auto states = env.all_cells();

  std::vector<int> next(static_cast<std::size_t>(cells) * kNumGridActions);
  for (int c = 0; c < cells; ++c) {
    for (int a = 0; a < kNumGridActions; ++a) {
      const State s2 = grid_step(states[c], a, n);
      next[c * kNumGridActions + a] = static_cast<int>(std::lround(s2[1])) * n + static_cast<int>(std::lround(s2[0]));
    }
  }

  TabularQ q(n);
  TabularQ fresh(n);
  std::vector<double> best(static_cast<std::size_t>(cells) * cells);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int c = 0; c < cells; ++c) {
      for (int g = 0; g < cells; ++g) {
        double v = q.at(c, 0, g);
        for (int a = 1; a < kNumGridActions; ++a) v = std::max(v, q.at(c, a, g));
        best[static_cast<std::size_t>(c) * cells + g] = v;
      }
    }
    double residual = 0.0;
    for (int c = 0; c < cells; ++c) {
      for (int a = 0; a < kNumGridActions; ++a) {
        const int c2 = next[c * kNumGridActions + a];
        for (int g = 0; g < cells; ++g) {
          const double r = c2 == g ? 0.0 : -1.0;
          const double v = r + gamma * best[static_cast<std::size_t>(c2) * cells + g];
          residual = std::max(residual, std::abs(v - q.at(c, a, g)));
          fresh.at(c, a, g) = v;
        }
      }
    }
    std::swap(q, fresh);
    q.residuals = fresh.residuals;
    q.residuals.push_back(residual);
    if (residual <= tol) break;
  }
  return q;
}

double optimal_grid_value(int distance_after, double gamma) {
  return -(1.0 - std::pow(gamma, distance_after)) / (1.0 - gamma);
}

}  // namespace gcrl
