#include "distobs/sdp.hpp"

#include <cmath>
#include <sstream>

namespace distobs {

namespace {

constexpr double kVerifyTol = 1e-7;

VariableLayout make_layout(const Problem& problem) {
  const auto& sys = problem.system;
  const auto& graph = problem.graph;
  VariableLayout lay;
  lay.node_count = graph.node_count();
  lay.state_dim = sys.state_dim();
  lay.dim = lay.node_count * lay.state_dim;
  const int packed_size = lay.dim * (lay.dim + 1) / 2;
  int next = 0;
  lay.q_offset = next;
  next += packed_size;
  lay.p_offset = next;
  next += packed_size;
  for (const auto& e : graph.edges()) lay.w_index[e] = next++;
  const int nx = lay.state_dim;
  for (int i = 0; i < lay.node_count; ++i) {
    Eigen::MatrixXi idx(nx, sys.output_dim(i));
    for (int r = 0; r < nx; ++r)
      for (int k = 0; k < sys.output_dim(i); ++k) idx(r, k) = next++;
    lay.l_index.push_back(idx);
  }
  for (const auto& e : graph.edges()) {
    Eigen::MatrixXi idx(nx, nx);
    for (int r = 0; r < nx; ++r) {
      for (int c = 0; c < nx; ++c) {
        if (problem.options.symmetric_m && c < r) {
          idx(r, c) = idx(c, r);
        } else {
          idx(r, c) = next++;
        }
      }
    }
    lay.m_index[e] = idx;
  }
  lay.num_vars = next;
  return lay;
}

void check_anchor(const Matrix& x, const char* name, int dim, Matrix& out, std::vector<std::string>& warnings) {
  if (x.rows() != dim || x.cols() != dim) {
    throw SdpError(std::string(name) + ": expected " + std::to_string(dim) + "x" + std::to_string(dim) + " anchor");
  }
  if (!x.allFinite()) throw SdpError(std::string(name) + ": non-finite anchor");
  out = x;
  const double asym = asymmetry(x);
  if (asym > 0.0) {
    std::ostringstream ss;
    ss << name << ": anchor asymmetry " << asym << " projected onto its symmetric part";
    warnings.push_back(ss.str());
    out = symmetrize(x);
  }
  Eigen::LLT<Matrix> llt(out);
  if (llt.info() != Eigen::Success || min_eigenvalue(out) <= 0.0) {
    throw SdpError(std::string(name) + ": anchor is not positive definite");
  }
}

SdpInstance build_instance(const Problem& problem, const Matrix* q_k, const Matrix* p_k) {
  const auto& sys = problem.system;
  const auto& graph = problem.graph;
  SdpInstance inst;
  inst.params = resolve_sdp_parameters(problem);
  inst.layout = make_layout(problem);
  const auto& lay = inst.layout;
  const int d = lay.dim, nx = lay.state_dim, n = lay.node_count;
  const Matrix& a = sys.a();

  auto& prog = inst.program;
  prog.num_vars = lay.num_vars;
  prog.objective = Vector::Zero(lay.num_vars);

  if (q_k && p_k) {
    Matrix qa, pa;
    check_anchor(*q_k, "Q_k", d, qa, inst.warnings);
    check_anchor(*p_k, "P_k", d, pa, inst.warnings);
    // Tr(Q_k P) + Tr(P_k Q) over packed symmetric variables.
    for (int r = 0; r < d; ++r) {
      for (int c = r; c < d; ++c) {
        const double mult = r == c ? 1.0 : 2.0;
        prog.objective(lay.p_var(r, c)) += mult * qa(r, c);
        prog.objective(lay.q_var(r, c)) += mult * pa(r, c);
      }
    }
  }

  inst.stability_block = prog.add_block(2 * d);
  inst.cone_block = prog.add_block(2 * d);
  inst.q_block = prog.add_block(d);
  inst.trace_block = prog.add_block(1);
  const int sb = inst.stability_block, cb = inst.cone_block, qb = inst.q_block, tb = inst.trace_block;

  const double rate2 = inst.params.decay_rate * inst.params.decay_rate;
  for (int r = 0; r < d; ++r) {
    for (int c = r; c < d; ++c) {
      const int qv = lay.q_var(r, c), pv = lay.p_var(r, c);
      prog.add(sb, qv, r, c, rate2);
      prog.add(sb, pv, d + r, d + c, 1.0);
      prog.add(cb, qv, r, c, 1.0);
      prog.add(cb, pv, d + r, d + c, 1.0);
      prog.add(qb, qv, r, c, 1.0);
    }
    prog.add(tb, lay.q_var(r, r), 0, 0, -1.0);
    prog.add(cb, conic::kConstant, r, d + r, 1.0);
    prog.add(qb, conic::kConstant, r, r, -inst.params.delta_q);
  }
  for (int k = 0; k < 2 * d; ++k) prog.add(sb, conic::kConstant, k, k, -inst.params.delta);
  prog.add(tb, conic::kConstant, 0, 0, inst.params.trace_cap);

  // The lower-left block of the stability matrix is -S; `s_term` adds
  // value * (variable) at S(row, col).
  auto s_term = [&](int var, int row, int col, double value) { prog.add(sb, var, d + row, col, -value); };

  for (int i = 0; i < n; ++i) {
    // w_ii A with w_ii = 1 - sum_j w_ij.
    for (int r = 0; r < nx; ++r)
      for (int c = 0; c < nx; ++c)
        if (a(r, c) != 0.0) s_term(conic::kConstant, i * nx + r, i * nx + c, a(r, c));
    for (int j : graph.neighbors(i)) {
      const int wv = lay.w_index.at(Edge{j, i});
      for (int r = 0; r < nx; ++r) {
        for (int c = 0; c < nx; ++c) {
          if (a(r, c) == 0.0) continue;
          s_term(wv, i * nx + r, j * nx + c, a(r, c));
          s_term(wv, i * nx + r, i * nx + c, -a(r, c));
        }
      }
      const auto& mi = lay.m_index.at(Edge{j, i});
      for (int r = 0; r < nx; ++r) {
        for (int c = 0; c < nx; ++c) {
          s_term(mi(r, c), i * nx + r, j * nx + c, 1.0);
          s_term(mi(r, c), i * nx + r, i * nx + c, -1.0);
        }
      }
    }
    const Matrix& ci = sys.output(i);
    const auto& li = lay.l_index[static_cast<std::size_t>(i)];
    for (int r = 0; r < nx; ++r)
      for (int k = 0; k < ci.rows(); ++k)
        for (int c = 0; c < nx; ++c)
          if (ci(k, c) != 0.0) s_term(li(r, k), i * nx + r, i * nx + c, ci(k, c));
  }

  if (inst.params.nonneg_w) {
    for (const auto& [e, wv] : lay.w_index) {
      const int blk = prog.add_block(1);
      prog.add(blk, wv, 0, 0, 1.0);
    }
    for (int i = 0; i < n; ++i) {
      if (graph.neighbors(i).empty()) continue;
      const int blk = prog.add_block(1);
      prog.add(blk, conic::kConstant, 0, 0, 1.0);
      for (int j : graph.neighbors(i)) prog.add(blk, lay.w_index.at(Edge{j, i}), 0, 0, -1.0);
    }
  }
  return inst;
}

}  // namespace

int VariableLayout::packed(int row, int col) const {
  if (row > col) std::swap(row, col);
  // Row-major upper triangle: rows before `row` hold dim + (dim-1) + ... entries.
  return row * dim - row * (row - 1) / 2 + (col - row);
}

const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::infeasible: return "infeasible";
    case SdpStatus::numerical_failure: return "numerical_failure";
    case SdpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

SdpParameters resolve_sdp_parameters(const Problem& problem) {
  SdpParameters p;
  const double dim = static_cast<double>(problem.system.node_count()) * problem.system.state_dim();
  p.delta = problem.options.delta.value_or(1e-6 * (1.0 + problem.system.a().norm()));
  p.delta_q = problem.options.delta_q;
  p.decay_rate = problem.options.decay_rate;
  p.trace_cap = problem.options.trace_cap * dim;
  p.nonneg_w = problem.options.nonneg_w;
  p.symmetric_m = problem.options.symmetric_m;
  return p;
}

SdpInstance build_feasibility_instance(const Problem& problem) { return build_instance(problem, nullptr, nullptr); }

SdpInstance build_linearized_instance(const Problem& problem, const Matrix& q_k, const Matrix& p_k) {
  return build_instance(problem, &q_k, &p_k);
}

void decode(const VariableLayout& lay, const LtiSystem& system, const Vector& y, Matrix& q, Matrix& p,
            GainSet& gains) {
  const int d = lay.dim, nx = lay.state_dim, n = lay.node_count;
  q.resize(d, d);
  p.resize(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = r; c < d; ++c) {
      q(r, c) = q(c, r) = y(lay.q_var(r, c));
      p(r, c) = p(c, r) = y(lay.p_var(r, c));
    }
  }
  gains = GainSet{};
  gains.w = Matrix::Zero(n, n);
  for (const auto& [e, v] : lay.w_index) gains.w(e.to, e.from) = y(v);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) s += gains.w(i, j);
    gains.w(i, i) = 1.0 - s;
  }
  for (int i = 0; i < n; ++i) {
    const auto& idx = lay.l_index[static_cast<std::size_t>(i)];
    Matrix li(nx, system.output_dim(i));
    for (int r = 0; r < nx; ++r)
      for (int k = 0; k < li.cols(); ++k) li(r, k) = y(idx(r, k));
    gains.l.push_back(li);
  }
  for (const auto& [e, idx] : lay.m_index) {
    Matrix mb(nx, nx);
    for (int r = 0; r < nx; ++r)
      for (int c = 0; c < nx; ++c) mb(r, c) = y(idx(r, c));
    gains.m.emplace(e, mb);
  }
}

SdpVerification verify(const Problem& problem, const SdpParameters& params, const Matrix& q, const Matrix& p,
                       const GainSet& gains) {
  SdpVerification v;
  const int d = static_cast<int>(q.rows());
  const Matrix s = assemble(problem.system, problem.graph, gains).s;
  Matrix cone(2 * d, 2 * d);
  cone << q, Matrix::Identity(d, d), Matrix::Identity(d, d), p;
  Matrix stab(2 * d, 2 * d);
  const double rate2 = params.decay_rate * params.decay_rate;
  stab << -rate2 * q, s.transpose(), s, -p;
  v.cone_min_eig = min_eigenvalue(symmetrize(cone));
  v.stability_max_eig = max_eigenvalue(symmetrize(stab));
  v.q_min_eig = min_eigenvalue(symmetrize(q));
  v.row_sum_defect = row_sum_defect(gains.w);
  Eigen::LLT<Matrix> pl(symmetrize(p));
  if (pl.info() == Eigen::Success) {
    v.schur_max_eig = max_eigenvalue(symmetrize(s.transpose() * pl.solve(s) - rate2 * q));
  } else {
    v.schur_max_eig = std::numeric_limits<double>::infinity();
  }
  v.trace_cap_active = params.trace_cap - q.trace() <= 1e-6 * params.trace_cap;
  v.passed = v.cone_min_eig >= -kVerifyTol && v.stability_max_eig <= -params.delta + kVerifyTol &&
             v.q_min_eig >= params.delta_q - kVerifyTol && v.row_sum_defect <= kVerifyTol && v.schur_max_eig < 0.0;
  return v;
}

SdpSolution solve(const Problem& problem, const SdpInstance& instance, const conic::Settings& settings) {
  SdpSolution sol;
  const conic::Result r = conic::solve(instance.program, settings);
  std::ostringstream diag;
  diag << "backend=" << conic::to_string(r.status) << "; " << r.diagnostics;
  switch (r.status) {
    case conic::Status::optimal: sol.status = SdpStatus::optimal; break;
    case conic::Status::infeasible: sol.status = SdpStatus::infeasible; break;
    case conic::Status::iteration_limit: sol.status = SdpStatus::iteration_limit; break;
    case conic::Status::unbounded:
    case conic::Status::numerical_failure: sol.status = SdpStatus::numerical_failure; break;
  }
  if (r.y.size() == instance.layout.num_vars) {
    decode(instance.layout, problem.system, r.y, sol.q, sol.p, sol.gains);
    sol.objective_value = r.primal_objective;
    if (sol.status == SdpStatus::optimal) {
      sol.verification = verify(problem, instance.params, sol.q, sol.p, sol.gains);
      if (!sol.verification.passed) {
        sol.status = SdpStatus::numerical_failure;
        diag << "; verification failed (cone " << sol.verification.cone_min_eig << ", stability "
             << sol.verification.stability_max_eig << ", Q " << sol.verification.q_min_eig << ", rows "
             << sol.verification.row_sum_defect << ", schur " << sol.verification.schur_max_eig << ")";
      }
      if (sol.verification.trace_cap_active) diag << "; trace cap active";
    }
  }
  sol.solver_diagnostics = diag.str();
  return sol;
}

}  // namespace distobs
