#pragma once

#include "distobs/blocks.hpp"
#include "distobs/conic.hpp"
#include "distobs/model.hpp"
#include "distobs/sdp.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace distobs {

enum class SynthesisStatus {
  converged_complementarity,
  converged_nmi_early_stop,
  iteration_limit,
  infeasible_init,
  numerical_failure,
};

const char* to_string(SynthesisStatus s);
bool converged(SynthesisStatus s);

/// Which matrix certified the NMI on success.
enum class Witness { none, q_k, p_k_inverse };

const char* to_string(Witness w);

/// Problem options with defaults filled in.
struct ResolvedOptions {
  double eps_tol = 0.0;
  int max_iter = 0;
  SdpParameters sdp;
};

ResolvedOptions resolve_options(const Problem& problem);

struct SynthesisState {
  int iteration = 0;
  Matrix q;  ///< Q_k
  Matrix p;  ///< P_k
  std::vector<double> j_history;
  std::vector<double> complementarity_history;  ///< ||Q_k P_k - I||_F, index 0 is the initial point
  std::vector<double> nmi_history;              ///< lambda_max(S^T Q_k S - rate^2 Q_k)
  SynthesisStatus status = SynthesisStatus::numerical_failure;
  std::optional<GainSet> gains;
  /// The Q for which nmi_check passed (Q_k or P_k^-1).
  Matrix certificate;
  Witness witness = Witness::none;
  double eps_tol = 0.0;
  int node_count = 0;
  int state_dim = 0;
  bool trace_cap_active = false;
  std::string diagnostics;
};

struct IterationRecord {
  int k = 0;
  double j = 0.0;
  double complementarity = 0.0;
  double nmi = 0.0;
};

/// Formats "k=.. J=.. ||QP-I||_F=.. lambda_max=..".
std::string format_iteration(const IterationRecord& r);

using IterationObserver = std::function<void(const IterationRecord&)>;

SynthesisState synthesize(const Problem& problem, const IterationObserver& observer = {},
                          const conic::Settings& settings = {});

/// lambda_max(S^T Q S - rate^2 Q). Throws std::invalid_argument if Q is not PD.
double nmi_margin(const LtiSystem& system, const SensorGraph& graph, const GainSet& gains, const Matrix& q,
                  double decay_rate = 1.0);

bool nmi_check(const LtiSystem& system, const SensorGraph& graph, const GainSet& gains, const Matrix& q,
               double decay_rate = 1.0);

struct InfimumResult {
  double value = 0.0;
  Matrix minimizer;
};

/// Closed-form minimum of f(P) = Tr(Q_k P) + Tr(P_k P^-1) over P > 0.
InfimumResult inner_infimum_oracle(const Matrix& q_k, const Matrix& p_k);

struct LemmaReport {
  bool monotone = true;
  bool bounded_below = true;
  bool complementarity_applicable = false;
  bool complementarity_ok = true;
  std::vector<std::string> violations;

  bool passed() const { return violations.empty(); }
};

LemmaReport certify_lemma_properties(const SynthesisState& state, double tol = 1e-6);

}  // namespace distobs
