#pragma once

#include "distobs/model.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace distobs {

/// Observer gains: consensus weights W, innovation gains L_i, and one
/// coupling block M_ij per edge (j -> i), keyed by that edge.
struct GainSet {
  Matrix w;
  std::vector<Matrix> l;
  std::map<Edge, Matrix> m;

  /// W = I, L_i = 0, M_ij = 0.
  static GainSet identity(const LtiSystem& system, const SensorGraph& graph);

  /// M_ij: the block node i applies to neighbor j's estimate.
  const Matrix& coupling(int i, int j) const { return m.at(Edge{j, i}); }
};

class GainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AssembledMatrices {
  int node_count = 0;
  int state_dim = 0;
  Matrix w_kron_a;
  Matrix c_blkdiag;
  Matrix l_blkdiag;
  Matrix m_big;
  /// W (x) A + L C - M, summed left to right.
  Matrix s;
};

/// Validates dimensions and graph sparsity, then builds the closed-loop
/// error matrix. Row sums of W are not checked here.
AssembledMatrices assemble(const LtiSystem& system, const SensorGraph& graph, const GainSet& gains);

/// Laplacian-type coupling annihilates consensus directions 1_N (x) v.
bool laplacian_nullspace_check(const AssembledMatrices& assembled);

/// (W (x) A)(1_N (x) v) == 1_N (x) (A v) for every basis vector v.
bool consensus_consistency_check(const AssembledMatrices& assembled, const LtiSystem& system);

/// Max |row sum - 1| of W.
double row_sum_defect(const Matrix& w);

}  // namespace distobs
