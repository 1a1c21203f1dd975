#pragma once

#include "distobs/blocks.hpp"
#include "distobs/conic.hpp"
#include "distobs/model.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace distobs {

class SdpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where each decision variable lives in the conic program's y vector.
/// Q and P are packed upper-triangle row by row. The diagonal weights
/// w_ii are eliminated as 1 - sum_j w_ij.
struct VariableLayout {
  int node_count = 0;
  int state_dim = 0;
  int dim = 0;  ///< N * nx
  int q_offset = 0;
  int p_offset = 0;
  std::map<Edge, int> w_index;
  std::vector<Eigen::MatrixXi> l_index;
  std::map<Edge, Eigen::MatrixXi> m_index;
  int num_vars = 0;

  int packed(int row, int col) const;
  int q_var(int row, int col) const { return q_offset + packed(row, col); }
  int p_var(int row, int col) const { return p_offset + packed(row, col); }
};

/// Resolved numeric parameters shared by every instance of one synthesis run.
struct SdpParameters {
  double delta = 0.0;      ///< [[-Q, S^T], [S, -P]] <= -delta I
  double delta_q = 0.0;    ///< Q >= delta_q I
  double decay_rate = 1.0; ///< [[-rate^2 Q, S^T], [S, -P]]
  double trace_cap = 0.0;  ///< Tr(Q) <= trace_cap (absolute)
  bool nonneg_w = false;
  bool symmetric_m = false;
};

SdpParameters resolve_sdp_parameters(const Problem& problem);

struct SdpInstance {
  conic::Program program;
  VariableLayout layout;
  SdpParameters params;
  int stability_block = -1;
  int cone_block = -1;
  int q_block = -1;
  int trace_block = -1;
  std::vector<std::string> warnings;
};

/// Zero objective; any solution lies in the admissible set.
SdpInstance build_feasibility_instance(const Problem& problem);

/// Objective Tr(Q_k P) + Tr(P_k Q). Anchors must be SPD; slightly
/// asymmetric anchors are projected onto the symmetric part with a warning.
SdpInstance build_linearized_instance(const Problem& problem, const Matrix& q_k, const Matrix& p_k);

enum class SdpStatus { optimal, infeasible, numerical_failure, iteration_limit };

const char* to_string(SdpStatus s);

/// Independent eigenvalue re-check of a returned point.
struct SdpVerification {
  double cone_min_eig = 0.0;        ///< lambda_min([[Q, I], [I, P]])
  double stability_max_eig = 0.0;   ///< lambda_max([[-rate^2 Q, S^T], [S, -P]])
  double q_min_eig = 0.0;
  double row_sum_defect = 0.0;      ///< ||W 1 - 1||_inf
  double schur_max_eig = 0.0;       ///< lambda_max(S^T P^-1 S - rate^2 Q)
  bool trace_cap_active = false;
  bool passed = false;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::numerical_failure;
  Matrix q;
  Matrix p;
  GainSet gains;
  double objective_value = 0.0;
  SdpVerification verification;
  std::string solver_diagnostics;
};

/// Decodes a raw variable vector into (Q, P, gains).
void decode(const VariableLayout& layout, const LtiSystem& system, const Vector& y, Matrix& q, Matrix& p,
            GainSet& gains);

/// Verification against the instance's margins (tolerance 1e-7).
SdpVerification verify(const Problem& problem, const SdpParameters& params, const Matrix& q, const Matrix& p,
                       const GainSet& gains);

/// Solver adapter: a single blocking call into the interior-point backend,
/// followed by an eigenvalue re-check of every optimal return.
SdpSolution solve(const Problem& problem, const SdpInstance& instance,
                  const conic::Settings& settings = {});

}  // namespace distobs
