#pragma once

#include <optional>

namespace distobs {

/// Tuning knobs for the iterative synthesis. Unset optionals resolve to
/// problem-dependent defaults (see resolve_options in synthesis.hpp).
struct SynthesisOptions {
  std::optional<double> eps_tol;  ///< complementarity threshold on ||QP - I||_F; default 1e-4 * N * nx
  std::optional<double> delta;    ///< strict-LMI margin; default 1e-6 * (1 + ||A||_F)
  /// Contraction target: S^T Q S <= decay_rate^2 Q. 1 recovers the plain
  /// stability condition; smaller values enforce rho(S) < decay_rate.
  double decay_rate = 1.0;
  int max_iter = 200;
  double delta_q = 1e-6;     ///< Q >= delta_q * I
  double trace_cap = 1e6;    ///< Tr(Q) <= trace_cap * N * nx
  bool nonneg_w = false;
  bool symmetric_m = false;

  bool operator==(const SynthesisOptions&) const = default;
};

}  // namespace distobs
