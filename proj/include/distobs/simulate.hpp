#pragma once

#include "distobs/blocks.hpp"
#include "distobs/model.hpp"

#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

namespace distobs {

struct ZeroInput {};
struct ConstantInput {
  Vector u;
};
struct InputSequence {
  std::vector<Vector> u;  ///< u(0) .. u(T-1)
};
using InputSignal = std::variant<ZeroInput, ConstantInput, InputSequence>;

struct SimConfig {
  int steps = 60;
  Vector x0;
  std::vector<Vector> xhat0;
  InputSignal input = ZeroInput{};
  bool record_lyapunov = false;

  /// x(0) = ones, every estimate zero, zero input.
  static SimConfig reproduction(const Problem& problem, int steps = 60);
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepResult {
  Vector x_next;
  std::vector<Vector> xhats_next;
};

/// One synchronous round: every node reads its neighbors' time-t estimates.
StepResult step(const Problem& problem, const GainSet& gains, const Vector& x, const std::vector<Vector>& xhats,
                const Vector& u);

struct Trajectory {
  std::vector<Vector> states;                    ///< x(0..T)
  std::vector<std::vector<Vector>> estimates;    ///< [t][i]
  std::vector<std::vector<double>> error_norms;  ///< [t][i]
  std::vector<Vector> stacked_errors;            ///< e(0..T)
  std::vector<double> lyapunov;                  ///< empty unless recorded
  std::vector<int> message_count;                ///< per step, T entries
  int message_dimension = 0;
  /// Largest ||e(t+1) - S e(t)|| / max(||e(t)||, tiny) seen during the run.
  double recursion_defect = 0.0;

  int steps() const { return static_cast<int>(states.size()) - 1; }
  double max_final_error() const;
  double initial_error_norm() const;
};

Trajectory run(const Problem& problem, const GainSet& gains, const SimConfig& config,
               const std::optional<Matrix>& q = std::nullopt);

/// V(t) = e(t)^T Q e(t). Throws std::invalid_argument if Q is not PD.
std::vector<double> lyapunov_trace(const Trajectory& trajectory, const Matrix& q);

/// Index of the first t with ||e(t)|| > floor and V(t+1) >= V(t), or -1.
int first_lyapunov_violation(const Trajectory& trajectory, const std::vector<double>& v, double floor = 1e-10);

/// Header "t, norm_e_1, ..., norm_e_N[, V]"; one row per time index.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory, bool full_state = false);

}  // namespace distobs
