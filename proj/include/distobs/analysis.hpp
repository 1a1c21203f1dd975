#pragma once

#include "distobs/model.hpp"

#include <complex>
#include <vector>

namespace distobs {

/// Eigenvalues below this distance from the unit circle still count as
/// unstable for the purposes of detectability.
inline constexpr double kDefaultDetectabilityMargin = 1e-9;

struct DetectabilityReport {
  bool joint_detectable = false;
  bool marginal = false;
  /// Nodes j whose removal from the stacked output destroys detectability.
  std::vector<int> critical_nodes;
  /// Eigenvalues of A failing the PBH test against the full stacked output.
  std::vector<std::complex<double>> undetectable_modes;
};

struct ConnectivityReport {
  bool strongly_connected = false;
  bool minimal = false;
  std::vector<Edge> redundant_edges;
  /// Strongly connected components with no incoming condensation edge.
  std::vector<std::vector<int>> source_components;
  std::vector<std::vector<int>> components;
};

/// Eigenvalues of A with |lambda| >= 1 - margin at which rank([lambda I - A; C]) < nx.
std::vector<std::complex<double>> undetectable_modes(const Matrix& a, const Matrix& c,
                                                     double margin = kDefaultDetectabilityMargin);

/// Discrete-time PBH detectability test.
bool is_detectable(const Matrix& a, const Matrix& c, double margin = kDefaultDetectabilityMargin);

/// Joint detectability of the stacked output plus the leave-one-node-out test.
/// A single-node system is never reported as marginal.
DetectabilityReport marginal_joint_detectability(const LtiSystem& system,
                                                 double margin = kDefaultDetectabilityMargin);

/// Tarjan SCC; components sorted internally and ordered by smallest member.
std::vector<std::vector<int>> strongly_connected_components(const SensorGraph& graph);

bool is_strongly_connected(const SensorGraph& graph);

ConnectivityReport connectivity_report(const SensorGraph& graph);

}  // namespace distobs
