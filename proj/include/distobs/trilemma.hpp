#pragma once

#include "distobs/model.hpp"
#include "distobs/synthesis.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace distobs {

enum class RepairKind { add_edge, augment_sensor };

struct RepairCandidate {
  RepairKind kind = RepairKind::add_edge;
  Edge edge;        ///< add_edge
  int node = -1;    ///< augment_sensor
  Matrix extra_rows;

  /// "add_edge(1,3)" or "augment_sensor(4,[0 1 0 0 0])", 1-based.
  std::string label() const;
  Problem apply(const Problem& base) const;
};

bool lexical_less(const RepairCandidate& a, const RepairCandidate& b);

struct CandidateResult {
  RepairCandidate candidate;
  SynthesisStatus status = SynthesisStatus::numerical_failure;
  int iterations = 0;
  double final_complementarity = 0.0;
  double spectral_radius = 0.0;  ///< NaN when no gains were produced
  bool simulation_ok = false;
  double simulated_ratio = 0.0;  ///< max_i ||e_i(T)|| / ||e(0)||
  std::string diagnostics;
  std::optional<SynthesisState> state;  ///< kept for converged candidates
};

struct ExploreAxes {
  bool edges = true;
  bool sensors = true;
};

struct ExploreConfig {
  ExploreAxes axes;
  int max_iter = 100;
  int jobs = 1;
  int sim_steps = 60;
  double sim_tolerance = 1e-6;
  /// Rows offered to augment_sensor; empty means the canonical basis rows.
  std::vector<Vector> dictionary;
};

struct ExploreReport {
  SynthesisStatus baseline_status = SynthesisStatus::numerical_failure;
  int baseline_iterations = 0;
  /// Converged candidates first, sorted by (iterations, rho, label); then the rest in lexical order.
  std::vector<CandidateResult> ranked;

  bool any_converged() const;
  const CandidateResult* best() const;
};

class BaselineFeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Enumerates every single-modification candidate on the enabled axes.
std::vector<RepairCandidate> enumerate_candidates(const Problem& problem, const ExploreConfig& config);

using CandidateObserver = std::function<void(const CandidateResult&)>;

/// Runs the baseline with the reduced budget, then every candidate. Throws
/// BaselineFeasible if the baseline already converges.
ExploreReport explore(const Problem& problem, const ExploreConfig& config, const CandidateObserver& observer = {});

}  // namespace distobs
