#include "distobs/analysis.hpp"

#include <algorithm>
#include <stdexcept>

namespace distobs {

std::vector<std::complex<double>> undetectable_modes(const Matrix& a, const Matrix& c, double margin) {
  if (a.rows() != a.cols()) throw std::invalid_argument("is_detectable: A must be square");
  if (c.cols() != a.rows()) throw std::invalid_argument("is_detectable: C must have as many columns as A");
  const Eigen::Index nx = a.rows();
  std::vector<std::complex<double>> bad;
  if (nx == 0) return bad;

  Eigen::EigenSolver<Matrix> es(a, false);
  const Eigen::VectorXcd lambdas = es.eigenvalues();
  Eigen::MatrixXcd pbh(nx + c.rows(), nx);
  pbh.bottomRows(c.rows()) = c.cast<std::complex<double>>();
  for (Eigen::Index k = 0; k < lambdas.size(); ++k) {
    const auto lambda = lambdas(k);
    if (std::abs(lambda) < 1.0 - margin) continue;
    pbh.topRows(nx) = lambda * Eigen::MatrixXcd::Identity(nx, nx) - a.cast<std::complex<double>>();
    if (numerical_rank(pbh) < nx) bad.push_back(lambda);
  }
  return bad;
}

bool is_detectable(const Matrix& a, const Matrix& c, double margin) {
  return undetectable_modes(a, c, margin).empty();
}

DetectabilityReport marginal_joint_detectability(const LtiSystem& system, double margin) {
  DetectabilityReport report;
  const Matrix c = stacked_output(system);
  report.undetectable_modes = undetectable_modes(system.a(), c, margin);
  report.joint_detectable = report.undetectable_modes.empty();

  const int n = system.node_count();
  for (int j = 0; j < n; ++j) {
    std::vector<Matrix> rest;
    for (int i = 0; i < n; ++i) {
      if (i != j) rest.push_back(system.output(i));
    }
    const Matrix c_without = vertical_stack(rest, system.state_dim());
    if (!is_detectable(system.a(), c_without, margin)) report.critical_nodes.push_back(j);
  }
  report.marginal = report.joint_detectable && n > 1 && static_cast<int>(report.critical_nodes.size()) == n;
  return report;
}

std::vector<std::vector<int>> strongly_connected_components(const SensorGraph& graph) {
  const int n = graph.node_count();
  std::vector<std::vector<int>> succ(static_cast<std::size_t>(n));
  for (const auto& e : graph.edges()) succ[static_cast<std::size_t>(e.from)].push_back(e.to);

  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  std::vector<std::vector<int>> components;
  int counter = 0;

  // Iterative Tarjan: frame = (vertex, next successor position).
  std::vector<std::pair<int, std::size_t>> frames;
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<std::size_t>(root)] != -1) continue;
    frames.push_back({root, 0});
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      const auto vi = static_cast<std::size_t>(v);
      if (pos == 0 && index[vi] == -1) {
        index[vi] = low[vi] = counter++;
        stack.push_back(v);
        on_stack[vi] = 1;
      }
      if (pos < succ[vi].size()) {
        const int w = succ[vi][pos++];
        const auto wi = static_cast<std::size_t>(w);
        if (index[wi] == -1) {
          frames.push_back({w, 0});
        } else if (on_stack[wi]) {
          low[vi] = std::min(low[vi], index[wi]);
        }
        continue;
      }
      if (low[vi] == index[vi]) {
        std::vector<int> comp;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[static_cast<std::size_t>(w)] = 0;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
      const int finished = v;
      frames.pop_back();
      if (!frames.empty()) {
        const auto parent = static_cast<std::size_t>(frames.back().first);
        low[parent] = std::min(low[parent], low[static_cast<std::size_t>(finished)]);
      }
    }
  }
  std::sort(components.begin(), components.end());
  return components;
}

bool is_strongly_connected(const SensorGraph& graph) {
  return strongly_connected_components(graph).size() == 1;
}

ConnectivityReport connectivity_report(const SensorGraph& graph) {
  ConnectivityReport report;
  report.components = strongly_connected_components(graph);
  report.strongly_connected = report.components.size() == 1;

  std::vector<int> component_of(static_cast<std::size_t>(graph.node_count()));
  for (std::size_t k = 0; k < report.components.size(); ++k) {
    for (int v : report.components[k]) component_of[static_cast<std::size_t>(v)] = static_cast<int>(k);
  }
  std::vector<char> has_incoming(report.components.size(), 0);
  for (const auto& e : graph.edges()) {
    const int cf = component_of[static_cast<std::size_t>(e.from)];
    const int ct = component_of[static_cast<std::size_t>(e.to)];
    if (cf != ct) has_incoming[static_cast<std::size_t>(ct)] = 1;
  }
  for (std::size_t k = 0; k < report.components.size(); ++k) {
    if (!has_incoming[k]) report.source_components.push_back(report.components[k]);
  }

  if (report.strongly_connected) {
    for (const auto& e : graph.edges()) {
      if (is_strongly_connected(graph.without_edge(e))) report.redundant_edges.push_back(e);
    }
  }
  report.minimal = report.strongly_connected && report.redundant_edges.empty();
  return report;
}

}  // namespace distobs
