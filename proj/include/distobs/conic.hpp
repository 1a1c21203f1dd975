#pragma once

#include "distobs/linalg.hpp"

#include <string>
#include <vector>

/// Standard-form conic programs over products of PSD cones, and the
/// primal-dual interior-point solver that backs the SDP adapter.
///
/// The program is posed in linear-matrix-inequality form:
///
///     minimize    c^T y
///     subject to  F_b(y) = F_b0 + sum_v y_v F_bv  >= 0   for every block b
///                 E y = f
///
/// Each F_bv is symmetric and given by its upper-triangle coefficients.
/// A 1x1 block is a scalar inequality. Equalities are removed by nullspace
/// elimination before the interior-point iterations start.
namespace distobs::conic {

/// Coefficient of variable `var` at (row, col) of block `block`, with
/// row <= col; the (col, row) entry is implied. `var == kConstant` selects F_b0.
struct Coefficient {
  int block = 0;
  int var = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;
};

inline constexpr int kConstant = -1;

struct Program {
  int num_vars = 0;
  Vector objective;
  std::vector<int> block_sizes;
  std::vector<Coefficient> coefficients;
  Matrix eq_matrix;  ///< rows x num_vars; may be empty
  Vector eq_rhs;

  int add_block(int size) {
    block_sizes.push_back(size);
    return static_cast<int>(block_sizes.size()) - 1;
  }
  /// Adds `value` at (row, col) and its mirror; order of row/col is free.
  void add(int block, int var, int row, int col, double value);
  /// Dense evaluation of F_b(y).
  Matrix evaluate_block(int block, const Vector& y) const;
  void validate() const;
};

enum class Status { optimal, infeasible, unbounded, numerical_failure, iteration_limit };

const char* to_string(Status s);

struct Settings {
  double gap_tol = 1e-9;   ///< relative duality gap
  double feas_tol = 1e-9;  ///< relative primal/dual residuals
  double infeasibility_tol = 1e-8;
  /// On stall or iteration limit, residuals within this factor of the
  /// tolerances are still reported optimal (flagged in the diagnostics).
  double reduced_accuracy_factor = 100.0;
  /// After a numerical breakdown the last strictly feasible iterate is
  /// accepted if its gap is within the reduced tolerance and its relative
  /// dual residual is below this bound.
  double breakdown_dual_tol = 1e-5;
  int max_iter = 100;
};

struct Result {
  Status status = Status::numerical_failure;
  Vector y;
  std::vector<Matrix> slack;  ///< F_b(y)
  std::vector<Matrix> dual;   ///< X_b
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  std::string diagnostics;
};

/// Infeasible-start primal-dual path following with the HKM search
/// direction and Mehrotra predictor-corrector steps. Deterministic.
Result solve(const Program& program, const Settings& settings = {});

}  // namespace distobs::conic
