#include "distobs/synthesis.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace distobs {

const char* to_string(SynthesisStatus s) {
  switch (s) {
    case SynthesisStatus::converged_complementarity: return "converged_complementarity";
    case SynthesisStatus::converged_nmi_early_stop: return "converged_nmi_early_stop";
    case SynthesisStatus::iteration_limit: return "iteration_limit";
    case SynthesisStatus::infeasible_init: return "infeasible_init";
    case SynthesisStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

bool converged(SynthesisStatus s) {
  return s == SynthesisStatus::converged_complementarity || s == SynthesisStatus::converged_nmi_early_stop;
}

const char* to_string(Witness w) {
  switch (w) {
    case Witness::none: return "none";
    case Witness::q_k: return "Q_k";
    case Witness::p_k_inverse: return "P_k^-1";
  }
  return "unknown";
}

ResolvedOptions resolve_options(const Problem& problem) {
  ResolvedOptions r;
  const double dim = static_cast<double>(problem.system.node_count()) * problem.system.state_dim();
  r.eps_tol = problem.options.eps_tol.value_or(1e-4 * dim);
  r.max_iter = problem.options.max_iter;
  r.sdp = resolve_sdp_parameters(problem);
  return r;
}

std::string format_iteration(const IterationRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "k=%d J=%.10g ||QP-I||_F=%.6e lambda_max=%.6e", r.k, r.j, r.complementarity,
                r.nmi);
  return buf;
}

double nmi_margin(const LtiSystem& system, const SensorGraph& graph, const GainSet& gains, const Matrix& q,
                  double decay_rate) {
  const Matrix qs = symmetrize(q);
  if (qs.rows() != system.state_dim() * graph.node_count() || qs.cols() != qs.rows())
    throw std::invalid_argument("nmi_check: Q has the wrong size");
  if (!qs.allFinite() || !(min_eigenvalue(qs) > 0.0)) throw std::invalid_argument("nmi_check: Q is not positive definite");
  const Matrix s = assemble(system, graph, gains).s;
  return max_eigenvalue(symmetrize(s.transpose() * qs * s - decay_rate * decay_rate * qs));
}

bool nmi_check(const LtiSystem& system, const SensorGraph& graph, const GainSet& gains, const Matrix& q,
               double decay_rate) {
  return nmi_margin(system, graph, gains, q, decay_rate) < 0.0;
}

InfimumResult inner_infimum_oracle(const Matrix& q_k, const Matrix& p_k) {
  if (q_k.rows() != q_k.cols() || p_k.rows() != p_k.cols() || q_k.rows() != p_k.rows())
    throw std::invalid_argument("inner_infimum_oracle: size mismatch");
  const Matrix q = symmetrize(q_k), p = symmetrize(p_k);
  if (!(min_eigenvalue(q) > 0.0) || !(min_eigenvalue(p) > 0.0))
    throw std::invalid_argument("inner_infimum_oracle: inputs must be positive definite");
  const Matrix ph = spd_sqrt(p);
  const Matrix inner = symmetrize(ph * q * ph);
  InfimumResult r;
  r.minimizer = symmetrize(ph * spd_inv_sqrt(inner) * ph);
  r.value = 2.0 * spd_sqrt(inner).trace();
  return r;
}

namespace {

double complementarity(const Matrix& q, const Matrix& p) {
  return (q * p - Matrix::Identity(q.rows(), q.cols())).norm();
}

/// Tries Q_k, then P_k^-1.
Witness find_witness(const Problem& pr, const GainSet& g, const Matrix& q, const Matrix& p, double rate,
                     Matrix& certificate) {
  auto try_q = [&](const Matrix& cand) {
    try {
      return nmi_check(pr.system, pr.graph, g, cand, rate);
    } catch (const std::invalid_argument&) {
      return false;
    }
  };
  if (try_q(q)) {
    certificate = q;
    return Witness::q_k;
  }
  Eigen::LLT<Matrix> llt(symmetrize(p));
  if (llt.info() == Eigen::Success) {
    Matrix pinv = symmetrize(llt.solve(Matrix::Identity(p.rows(), p.cols())));
    if (try_q(pinv)) {
      certificate = pinv;
      return Witness::p_k_inverse;
    }
  }
  return Witness::none;
}

double safe_margin(const Problem& pr, const GainSet& g, const Matrix& q, double rate) {
  try {
    return nmi_margin(pr.system, pr.graph, g, q, rate);
  } catch (const std::invalid_argument&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

SynthesisState synthesize(const Problem& problem, const IterationObserver& observer,
                          const conic::Settings& settings) {
  const ResolvedOptions opts = resolve_options(problem);
  const double rate = opts.sdp.decay_rate;
  SynthesisState st;
  st.eps_tol = opts.eps_tol;
  st.node_count = problem.graph.node_count();
  st.state_dim = problem.system.state_dim();

  const SdpInstance init = build_feasibility_instance(problem);
  SdpSolution sol = solve(problem, init, settings);
  if (sol.status == SdpStatus::infeasible) {
    st.status = SynthesisStatus::infeasible_init;
    st.diagnostics = "initial feasibility problem infeasible: " + sol.solver_diagnostics;
    return st;
  }
  if (sol.status != SdpStatus::optimal) {
    st.status = SynthesisStatus::numerical_failure;
    st.diagnostics = "iteration 0 (initial feasibility): " + sol.solver_diagnostics;
    return st;
  }
  st.q = sol.q;
  st.p = sol.p;
  st.trace_cap_active = sol.verification.trace_cap_active;
  GainSet gains = sol.gains;
  st.complementarity_history.push_back(complementarity(st.q, st.p));
  st.nmi_history.push_back(safe_margin(problem, gains, st.q, rate));

  auto finish = [&](SynthesisStatus s, Witness w) {
    st.status = s;
    st.witness = w;
    st.gains = gains;
  };

  // Small complementarity without an NMI certificate does not stop the loop.
  while (st.iteration < opts.max_iter) {
    const SdpInstance lin = build_linearized_instance(problem, st.q, st.p);
    sol = solve(problem, lin, settings);
    if (sol.status != SdpStatus::optimal) {
      st.status = SynthesisStatus::numerical_failure;
      st.diagnostics = "iteration " + std::to_string(st.iteration + 1) + ": " + sol.solver_diagnostics;
      return st;
    }
    const double j = (symmetrize(st.q) * sol.p).trace() + (symmetrize(st.p) * sol.q).trace();
    st.j_history.push_back(j);
    ++st.iteration;
    st.q = sol.q;
    st.p = sol.p;
    gains = sol.gains;
    st.trace_cap_active = st.trace_cap_active || sol.verification.trace_cap_active;
    const double comp = complementarity(st.q, st.p);
    const double margin = safe_margin(problem, gains, st.q, rate);
    st.complementarity_history.push_back(comp);
    st.nmi_history.push_back(margin);
    if (observer) observer({st.iteration, j, comp, margin});

    const Witness w = find_witness(problem, gains, st.q, st.p, rate, st.certificate);
    if (w != Witness::none) {
      finish(comp <= opts.eps_tol ? SynthesisStatus::converged_complementarity
                                  : SynthesisStatus::converged_nmi_early_stop,
             w);
      return st;
    }
  }
  st.status = SynthesisStatus::iteration_limit;
  std::ostringstream os;
  os << "no certificate after " << st.iteration << " iterations; final ||QP-I||_F = "
     << st.complementarity_history.back();
  st.diagnostics = os.str();
  return st;
}

LemmaReport certify_lemma_properties(const SynthesisState& state, double tol) {
  LemmaReport r;
  const double bound = 2.0 * state.node_count * state.state_dim;
  const auto& j = state.j_history;
  for (std::size_t k = 1; k < j.size(); ++k) {
    if (j[k] > j[k - 1] + tol) {
      r.monotone = false;
      std::ostringstream os;
      os << "J increased at iteration " << k + 1 << ": " << j[k - 1] << " -> " << j[k];
      r.violations.push_back(os.str());
    }
  }
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (j[k] < bound - tol) {
      r.bounded_below = false;
      std::ostringstream os;
      os << "J below 2*N*nx at iteration " << k + 1 << ": " << j[k] << " < " << bound;
      r.violations.push_back(os.str());
    }
  }
  if (state.status == SynthesisStatus::converged_complementarity) {
    r.complementarity_applicable = true;
    const double comp = complementarity(state.q, state.p);
    // Limit value of the linearized objective at the final iterate.
    const double j_star = 2.0 * (state.q * state.p).trace();
    const double jtol = 10.0 * state.eps_tol * state.q.norm();
    if (comp > state.eps_tol) {
      r.complementarity_ok = false;
      std::ostringstream os;
      os << "||QP-I||_F = " << comp << " exceeds eps_tol = " << state.eps_tol;
      r.violations.push_back(os.str());
    }
    if (std::abs(j_star - bound) > jtol) {
      r.complementarity_ok = false;
      std::ostringstream os;
      os << "|J* - 2*N*nx| = " << std::abs(j_star - bound) << " exceeds " << jtol;
      r.violations.push_back(os.str());
    }
  }
  return r;
}

}  // namespace distobs
