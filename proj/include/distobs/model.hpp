#pragma once

#include "distobs/linalg.hpp"
#include "distobs/options.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace distobs {

/// Input validation failure. `path()` names the offending field, e.g.
/// "outputs[1]" or "graph.edges[3]".
class ProblemError : public std::runtime_error {
 public:
  ProblemError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// x(t+1) = A x(t) + B u(t),  y_i(t) = C_i x(t).
class LtiSystem {
 public:
  LtiSystem(Matrix a, Matrix b, std::vector<Matrix> outputs);

  const Matrix& a() const noexcept { return a_; }
  const Matrix& b() const noexcept { return b_; }
  const std::vector<Matrix>& outputs() const noexcept { return outputs_; }
  const Matrix& output(int node) const { return outputs_.at(static_cast<std::size_t>(node)); }

  int state_dim() const noexcept { return static_cast<int>(a_.rows()); }
  int input_dim() const noexcept { return static_cast<int>(b_.cols()); }
  int node_count() const noexcept { return static_cast<int>(outputs_.size()); }
  int output_dim(int node) const { return static_cast<int>(output(node).rows()); }
  int total_output_dim() const;

  /// Copy with node `node`'s output matrix replaced.
  LtiSystem with_output(int node, Matrix c) const;

 private:
  Matrix a_;
  Matrix b_;
  std::vector<Matrix> outputs_;
};

/// Directed edge: `to` receives from `from`. Indices are 0-based.
struct Edge {
  int from = 0;
  int to = 0;

  auto operator<=>(const Edge&) const = default;
};

class SensorGraph {
 public:
  SensorGraph(int node_count, std::vector<Edge> edges);

  int node_count() const noexcept { return node_count_; }
  /// Sorted by (from, to).
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  bool has_edge(int from, int to) const;
  /// a_ij = 1 iff (i, j) is an edge.
  const Eigen::MatrixXi& adjacency() const noexcept { return adjacency_; }
  /// In-neighbors of `node`, ascending.
  const std::vector<int>& neighbors(int node) const { return neighbors_.at(static_cast<std::size_t>(node)); }

  SensorGraph with_edge(Edge e) const;
  SensorGraph without_edge(Edge e) const;

  bool operator==(const SensorGraph& o) const { return node_count_ == o.node_count_ && edges_ == o.edges_; }

 private:
  int node_count_;
  std::vector<Edge> edges_;
  Eigen::MatrixXi adjacency_;
  std::vector<std::vector<int>> neighbors_;
};

struct Problem {
  Problem(LtiSystem system, SensorGraph graph, SynthesisOptions options = {});

  LtiSystem system;
  SensorGraph graph;
  SynthesisOptions options;
};

/// C = col(C_1, ..., C_N).
Matrix stacked_output(const LtiSystem& system);

/// N_i = { j : (j, i) in E }, each ascending.
std::vector<std::vector<int>> neighbor_sets(const SensorGraph& graph);

/// Parse a problem document (JSON). Node indices in the file are 1-based.
Problem load_problem(std::string_view document);
Problem load_problem_file(const std::string& path);
std::string save_problem(const Problem& problem);

}  // namespace distobs
