// Shared fixtures and random instance generators for the test binaries.
#pragma once

#include "distobs/blocks.hpp"
#include "distobs/model.hpp"

#include <random>
#include <string>
#include <vector>

namespace distobs::test {

inline std::string problem_path(const std::string& name) { return std::string(DISTOBS_PROBLEM_DIR) + "/" + name; }

inline Matrix diag(std::initializer_list<double> d) {
  Vector v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index k = 0;
  for (double x : d) v(k++) = x;
  return v.asDiagonal();
}

inline Matrix unit_row(int n, int j) {
  Matrix r = Matrix::Zero(1, n);
  r(0, j) = 1.0;
  return r;
}

/// Directed cycle 0 -> 1 -> ... -> n-1 -> 0.
inline SensorGraph cycle(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n && n > 1; ++i) e.push_back({i, (i + 1) % n});
  return SensorGraph(n, e);
}

inline SensorGraph complete(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) e.push_back({i, j});
  return SensorGraph(n, e);
}

inline Matrix random_matrix(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale).col(0);
}

inline Matrix random_spd(std::mt19937_64& rng, int n) {
  const Matrix g = random_matrix(rng, n, n);
  return g * g.transpose() + 0.1 * Matrix::Identity(n, n);
}

inline SensorGraph random_graph(std::mt19937_64& rng, int n, double p) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && coin(rng)) e.push_back({i, j});
  return SensorGraph(n, e);
}

/// Random gains respecting the graph, with W rows summing to one.
inline GainSet random_gains(std::mt19937_64& rng, const LtiSystem& sys, const SensorGraph& g, double scale = 0.3) {
  GainSet gs;
  const int n = g.node_count(), nx = sys.state_dim();
  std::uniform_real_distribution<double> ud(-0.5, 0.5);
  gs.w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j : g.neighbors(i)) {
      gs.w(i, j) = ud(rng);
      sum += gs.w(i, j);
    }
    gs.w(i, i) = 1.0 - sum;
    gs.l.push_back(random_matrix(rng, nx, sys.output_dim(i), scale));
  }
  for (const auto& e : g.edges()) gs.m.emplace(e, random_matrix(rng, nx, nx, scale));
  return gs;
}

/// Random plant with one output row per node.
inline LtiSystem random_system(std::mt19937_64& rng, int n, int nx, double a_scale = 0.6) {
  std::vector<Matrix> c;
  for (int i = 0; i < n; ++i) c.push_back(random_matrix(rng, 1, nx));
  return LtiSystem(random_matrix(rng, nx, nx, a_scale), random_matrix(rng, nx, 1), c);
}

}  // namespace distobs::test
