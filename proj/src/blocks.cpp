#include "distobs/blocks.hpp"

#include <cmath>

namespace distobs {

namespace {

std::string dims(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

std::string edge_name(const Edge& e) {
  return "M[" + std::to_string(e.to + 1) + "," + std::to_string(e.from + 1) + "]";
}

}  // namespace

GainSet GainSet::identity(const LtiSystem& system, const SensorGraph& graph) {
  GainSet g;
  const int n = graph.node_count();
  const int nx = system.state_dim();
  g.w = Matrix::Identity(n, n);
  for (int i = 0; i < n; ++i) g.l.push_back(Matrix::Zero(nx, system.output_dim(i)));
  for (const auto& e : graph.edges()) g.m.emplace(e, Matrix::Zero(nx, nx));
  return g;
}

AssembledMatrices assemble(const LtiSystem& system, const SensorGraph& graph, const GainSet& gains) {
  const int n = graph.node_count();
  const int nx = system.state_dim();
  if (system.node_count() != n) throw GainError("system and graph disagree on the node count");
  if (gains.w.rows() != n || gains.w.cols() != n)
    throw GainError("W: expected " + std::to_string(n) + "x" + std::to_string(n) + ", got " + dims(gains.w));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && gains.w(i, j) != 0.0 && !graph.has_edge(j, i)) {
        throw GainError("W[" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                        "]: sparsity violation, node " + std::to_string(i + 1) + " does not receive from node " +
                        std::to_string(j + 1));
      }
    }
  }
  if (static_cast<int>(gains.l.size()) != n)
    throw GainError("L: expected " + std::to_string(n) + " blocks, got " + std::to_string(gains.l.size()));
  for (int i = 0; i < n; ++i) {
    const auto& li = gains.l[static_cast<std::size_t>(i)];
    if (li.rows() != nx || li.cols() != system.output_dim(i))
      throw GainError("L[" + std::to_string(i + 1) + "]: expected " + std::to_string(nx) + "x" +
                      std::to_string(system.output_dim(i)) + ", got " + dims(li));
  }
  for (const auto& [e, blk] : gains.m) {
    if (!graph.has_edge(e.from, e.to)) throw GainError(edge_name(e) + ": no such edge in the graph");
    if (blk.rows() != nx || blk.cols() != nx)
      throw GainError(edge_name(e) + ": expected " + std::to_string(nx) + "x" + std::to_string(nx) + ", got " +
                      dims(blk));
  }
  for (const auto& e : graph.edges()) {
    if (!gains.m.count(e)) throw GainError(edge_name(e) + ": missing coupling block");
  }

  AssembledMatrices out;
  out.node_count = n;
  out.state_dim = nx;
  out.w_kron_a = kron(gains.w, system.a());
  out.c_blkdiag = block_diagonal(system.outputs());
  out.l_blkdiag = block_diagonal(gains.l);
  out.m_big = Matrix::Zero(n * nx, n * nx);
  for (const auto& [e, blk] : gains.m) {
    const int i = e.to, j = e.from;
    out.m_big.block(i * nx, i * nx, nx, nx) += blk;
    out.m_big.block(i * nx, j * nx, nx, nx) -= blk;
  }
  const Matrix lc = out.l_blkdiag * out.c_blkdiag;
  out.s = out.w_kron_a + lc;
  out.s -= out.m_big;
  return out;
}

bool laplacian_nullspace_check(const AssembledMatrices& assembled) {
  const int n = assembled.node_count, nx = assembled.state_dim;
  const double scale = assembled.m_big.norm();
  for (int k = 0; k < nx; ++k) {
    Vector ones_v = Vector::Zero(n * nx);
    for (int i = 0; i < n; ++i) ones_v(i * nx + k) = 1.0;
    if ((assembled.m_big * ones_v).norm() > 1e-10 * scale) return false;
  }
  return true;
}

bool consensus_consistency_check(const AssembledMatrices& assembled, const LtiSystem& system) {
  const int n = assembled.node_count, nx = assembled.state_dim;
  const Matrix& a = system.a();
  const double scale = assembled.w_kron_a.norm() + std::sqrt(static_cast<double>(n)) * a.norm();
  for (int k = 0; k < nx; ++k) {
    Vector ones_v = Vector::Zero(n * nx);
    Vector expected(n * nx);
    for (int i = 0; i < n; ++i) {
      ones_v(i * nx + k) = 1.0;
      expected.segment(i * nx, nx) = a.col(k);
    }
    if ((assembled.w_kron_a * ones_v - expected).norm() > 1e-10 * scale) return false;
  }
  return true;
}

double row_sum_defect(const Matrix& w) {
  if (w.size() == 0) return 0.0;
  return (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

}  // namespace distobs
