#include "distobs/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace distobs::conic {

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::numerical_failure: return "numerical_failure";
    case Status::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

void Program::add(int block, int var, int row, int col, double value) {
  if (value == 0.0) return;
  if (row > col) std::swap(row, col);
  coefficients.push_back({block, var, row, col, value});
}

Matrix Program::evaluate_block(int block, const Vector& y) const {
  const int n = block_sizes.at(static_cast<std::size_t>(block));
  Matrix f = Matrix::Zero(n, n);
  for (const auto& c : coefficients) {
    if (c.block != block) continue;
    const double w = c.var == kConstant ? 1.0 : y(c.var);
    f(c.row, c.col) += w * c.value;
    if (c.row != c.col) f(c.col, c.row) += w * c.value;
  }
  return f;
}

void Program::validate() const {
  if (num_vars < 0) throw std::invalid_argument("conic program: negative variable count");
  if (objective.size() != num_vars) throw std::invalid_argument("conic program: objective size mismatch");
  for (int s : block_sizes) {
    if (s < 1) throw std::invalid_argument("conic program: block sizes must be positive");
  }
  for (const auto& c : coefficients) {
    if (c.block < 0 || c.block >= static_cast<int>(block_sizes.size()))
      throw std::invalid_argument("conic program: coefficient references a missing block");
    if (c.var < kConstant || c.var >= num_vars)
      throw std::invalid_argument("conic program: coefficient references a missing variable");
    const int n = block_sizes[static_cast<std::size_t>(c.block)];
    if (c.row < 0 || c.col < 0 || c.row >= n || c.col >= n || c.row > c.col)
      throw std::invalid_argument("conic program: coefficient position out of range");
    if (!std::isfinite(c.value)) throw std::invalid_argument("conic program: non-finite coefficient");
  }
  if (eq_matrix.rows() > 0 && (eq_matrix.cols() != num_vars || eq_rhs.size() != eq_matrix.rows()))
    throw std::invalid_argument("conic program: equality dimensions mismatch");
}

namespace {

struct Entry {
  int r;
  int c;
  double v;
};

struct Block {
  int n = 0;
  Matrix f0;
  std::vector<int> vars;
  std::vector<std::vector<Entry>> coeffs;  // both triangles
};

struct Compiled {
  int m = 0;
  Vector c;
  std::vector<Block> blocks;
  int total_dim = 0;
};

Compiled compile(const Program& p) {
  Compiled out;
  out.m = p.num_vars;
  out.c = p.objective;
  std::vector<std::map<int, std::map<std::pair<int, int>, double>>> acc(p.block_sizes.size());
  out.blocks.resize(p.block_sizes.size());
  for (std::size_t b = 0; b < p.block_sizes.size(); ++b) {
    out.blocks[b].n = p.block_sizes[b];
    out.blocks[b].f0 = Matrix::Zero(p.block_sizes[b], p.block_sizes[b]);
    out.total_dim += p.block_sizes[b];
  }
  for (const auto& c : p.coefficients) {
    auto& blk = out.blocks[static_cast<std::size_t>(c.block)];
    if (c.var == kConstant) {
      blk.f0(c.row, c.col) += c.value;
      if (c.row != c.col) blk.f0(c.col, c.row) += c.value;
    } else {
      acc[static_cast<std::size_t>(c.block)][c.var][{c.row, c.col}] += c.value;
    }
  }
  for (std::size_t b = 0; b < acc.size(); ++b) {
    for (const auto& [var, entries] : acc[b]) {
      std::vector<Entry> list;
      for (const auto& [rc, v] : entries) {
        if (v == 0.0) continue;
        list.push_back({rc.first, rc.second, v});
        if (rc.first != rc.second) list.push_back({rc.second, rc.first, v});
      }
      if (list.empty()) continue;
      out.blocks[b].vars.push_back(var);
      out.blocks[b].coeffs.push_back(std::move(list));
    }
  }
  return out;
}

double inner(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

double coeff_inner(const std::vector<Entry>& f, const Matrix& g) {
  double s = 0.0;
  for (const auto& e : f) s += e.v * g(e.r, e.c);
  return s;
}

/// sum_v y_v F_bv
Matrix apply_vars(const Block& blk, const Vector& y) {
  Matrix out = Matrix::Zero(blk.n, blk.n);
  for (std::size_t k = 0; k < blk.vars.size(); ++k) {
    const double w = y(blk.vars[k]);
    if (w == 0.0) continue;
    for (const auto& e : blk.coeffs[k]) out(e.r, e.c) += w * e.v;
  }
  return out;
}

Vector adjoint(const Compiled& cp, const std::vector<Matrix>& x) {
  Vector out = Vector::Zero(cp.m);
  for (std::size_t b = 0; b < cp.blocks.size(); ++b) {
    const auto& blk = cp.blocks[b];
    for (std::size_t k = 0; k < blk.vars.size(); ++k) out(blk.vars[k]) += coeff_inner(blk.coeffs[k], x[b]);
  }
  return out;
}

/// H_ij = sum_b tr(F_bi X_b F_bj Zinv_b)
Matrix schur_matrix(const Compiled& cp, const std::vector<Matrix>& x, const std::vector<Matrix>& zinv) {
  Matrix h = Matrix::Zero(cp.m, cp.m);
  for (std::size_t b = 0; b < cp.blocks.size(); ++b) {
    const auto& blk = cp.blocks[b];
    const Matrix& X = x[b];
    const Matrix& Zi = zinv[b];
    const std::size_t nv = blk.vars.size();
    for (std::size_t ka = 0; ka < nv; ++ka) {
      const auto& fa = blk.coeffs[ka];
      const int va = blk.vars[ka];
      for (std::size_t kb = ka; kb < nv; ++kb) {
        const auto& fb = blk.coeffs[kb];
        double s = 0.0;
        for (const auto& ea : fa) {
          // sum over (r, s) in F_b of g * X(q, r) * Zinv(s, p)
          double t = 0.0;
          for (const auto& eb : fb) t += eb.v * X(ea.c, eb.r) * Zi(eb.c, ea.r);
          s += ea.v * t;
        }
        const int vb = blk.vars[kb];
        h(va, vb) += s;
        if (va != vb) h(vb, va) += s;
      }
    }
  }
  return h;
}

/// Largest alpha with M + alpha D >= 0, given M > 0. Returns +inf if unbounded.
double max_step(const Matrix& m, const Matrix& d) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) return 0.0;
  Matrix tmp = llt.matrixL().solve(d);
  Matrix scaled = llt.matrixL().solve(tmp.transpose());
  const double lmin = min_eigenvalue(symmetrize(scaled));
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

struct Direction {
  Vector dy;
  std::vector<Matrix> dx;
  std::vector<Matrix> dz;
};

struct Metrics {
  double pobj = 0, dobj = 0, gap = 0, mu = 0, relgap = 0, pinf = 0, dinf = 0;
};

/// Nullspace elimination of E y = f:  y = y0 + N z.
struct Reduction {
  Vector y0;
  Matrix basis;
  bool consistent = true;
};

Reduction reduce_equalities(const Program& p) {
  Reduction r;
  const Eigen::Index m = p.num_vars;
  if (p.eq_matrix.rows() == 0) {
    r.y0 = Vector::Zero(m);
    r.basis = Matrix::Identity(m, m);
    return r;
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(p.eq_matrix);
  cod.setThreshold(1e-12);
  r.y0 = cod.solve(p.eq_rhs);
  const double resid = (p.eq_matrix * r.y0 - p.eq_rhs).norm();
  r.consistent = resid <= 1e-9 * (1.0 + p.eq_rhs.norm());
  Eigen::JacobiSVD<Matrix> svd(p.eq_matrix, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = 1e-12 * (sv.size() ? sv(0) : 0.0) * static_cast<double>(std::max(p.eq_matrix.rows(), m));
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > tol ? 1 : 0;
  r.basis = svd.matrixV().rightCols(m - rank);
  return r;
}

Program reduced_program(const Program& p, const Reduction& red) {
  Program q;
  q.num_vars = static_cast<int>(red.basis.cols());
  q.objective = red.basis.transpose() * p.objective;
  q.block_sizes = p.block_sizes;
  for (std::size_t b = 0; b < p.block_sizes.size(); ++b) {
    const int bi = static_cast<int>(b);
    const Matrix f0 = p.evaluate_block(bi, red.y0);
    const int n = p.block_sizes[b];
    for (int r = 0; r < n; ++r)
      for (int c = r; c < n; ++c) q.add(bi, kConstant, r, c, f0(r, c));
  }
  // F'_k = sum_v basis(v, k) F_v
  for (const auto& c : p.coefficients) {
    if (c.var == kConstant) continue;
    for (Eigen::Index k = 0; k < red.basis.cols(); ++k) {
      const double w = red.basis(c.var, k);
      if (std::abs(w) > 1e-15) q.coefficients.push_back({c.block, static_cast<int>(k), c.row, c.col, w * c.value});
    }
  }
  return q;
}

/// Marks variables whose coefficient columns are linear combinations of
/// other columns. Fixing them at zero leaves the set of F(y) unchanged;
/// later variables are preferred as the kept representatives. Returns
/// false if a dropped column carries a cost its combination does not.
bool mark_dependent(const Compiled& cp, std::vector<char>& fixed, std::string& why) {
  const int m = cp.m;
  // Gram matrix of the coefficient columns, accumulated per matrix entry.
  std::map<std::pair<int, int>, double> gram;
  for (const auto& blk : cp.blocks) {
    std::map<std::pair<int, int>, std::vector<std::pair<int, double>>> at;
    for (std::size_t k = 0; k < blk.vars.size(); ++k)
      for (const auto& e : blk.coeffs[k]) at[{e.r, e.c}].push_back({blk.vars[k], e.v});
    for (const auto& [pos, list] : at)
      for (const auto& [u, a] : list)
        for (const auto& [v, b] : list) gram[{u, v}] += a * b;
  }
  std::vector<int> parent(static_cast<std::size_t>(m));
  for (int v = 0; v < m; ++v) parent[static_cast<std::size_t>(v)] = v;
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
    return v;
  };
  for (const auto& [uv, g] : gram)
    if (uv.first != uv.second && g != 0.0) parent[static_cast<std::size_t>(find(uv.first))] = find(uv.second);
  std::map<int, std::vector<int>> comps;
  for (int v = m - 1; v >= 0; --v)
    if (!fixed[static_cast<std::size_t>(v)]) comps[find(v)].push_back(v);
  auto g = [&](int u, int v) {
    const auto it = gram.find({u, v});
    return it == gram.end() ? 0.0 : it->second;
  };
  for (const auto& [root, vars] : comps) {
    if (vars.size() < 2) continue;
    const Eigen::Index n = static_cast<Eigen::Index>(vars.size());
    std::vector<int> kept;
    Matrix lf = Matrix::Zero(n, n);  // Cholesky factor of the kept Gram block
    for (int j : vars) {
      const Eigen::Index r = static_cast<Eigen::Index>(kept.size());
      Vector kb(r);
      for (Eigen::Index i = 0; i < r; ++i) kb(i) = g(kept[static_cast<std::size_t>(i)], j);
      const Vector l = r ? Vector(lf.topLeftCorner(r, r).triangularView<Eigen::Lower>().solve(kb)) : Vector();
      const double gjj = g(j, j);
      const double d = gjj - l.squaredNorm();
      if (d > 1e-13 * gjj) {
        lf.block(r, 0, 1, r) = l.transpose();
        lf(r, r) = std::sqrt(d);
        kept.push_back(j);
        continue;
      }
      // Column j is K_B x with x = K_BB^-1 K_Bj; its cost must match.
      const Vector x = lf.topLeftCorner(r, r).transpose().triangularView<Eigen::Upper>().solve(l);
      double cb = 0.0, scale = std::abs(cp.c(j));
      for (Eigen::Index i = 0; i < r; ++i) {
        cb += cp.c(kept[static_cast<std::size_t>(i)]) * x(i);
        scale += std::abs(cp.c(kept[static_cast<std::size_t>(i)]) * x(i));
      }
      if (std::abs(cp.c(j) - cb) > 1e-9 * (1.0 + scale)) {
        why = "variable " + std::to_string(j) + " moves the objective without changing any constraint";
        return false;
      }
      fixed[static_cast<std::size_t>(j)] = 1;
    }
  }
  return true;
}

Result solve_reduced(const Program& p, const Settings& st) {
  Compiled cp = compile(p);
  const int m = cp.m;
  const std::size_t nb = cp.blocks.size();
  Result res;

  if (nb == 0) {
    res.diagnostics = "no cone blocks";
    res.y = Vector::Zero(m);
    res.status = cp.c.isZero() ? Status::optimal : Status::unbounded;
    return res;
  }

  std::vector<char> unused(static_cast<std::size_t>(m), 1);
  for (const auto& blk : cp.blocks)
    for (int v : blk.vars) unused[static_cast<std::size_t>(v)] = 0;
  for (int v = 0; v < m; ++v) {
    if (unused[static_cast<std::size_t>(v)] && cp.c(v) != 0.0) {
      res.status = Status::unbounded;
      res.y = Vector::Zero(m);
      res.diagnostics = "variable " + std::to_string(v) + " has a cost but no constraint";
      return res;
    }
  }
  std::vector<char> fixed = unused;
  {
    std::string why;
    if (!mark_dependent(cp, fixed, why)) {
      res.status = Status::unbounded;
      res.y = Vector::Zero(m);
      res.diagnostics = why;
      return res;
    }
  }
  int dependent = 0;
  for (int v = 0; v < m; ++v) dependent += fixed[static_cast<std::size_t>(v)] && !unused[static_cast<std::size_t>(v)];
  unused = fixed;

  // Starting point.
  std::vector<Matrix> X(nb), Z(nb), Zinv(nb);
  Vector y = Vector::Zero(m);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& blk = cp.blocks[b];
    double ratio = 0.0, amax = 0.0;
    for (std::size_t k = 0; k < blk.vars.size(); ++k) {
      double fn = 0.0;
      for (const auto& e : blk.coeffs[k]) fn += e.v * e.v;
      fn = std::sqrt(fn);
      amax = std::max(amax, fn);
      ratio = std::max(ratio, (1.0 + std::abs(cp.c(blk.vars[k]))) / (1.0 + fn));
    }
    const double n = blk.n;
    const double xi = std::max({10.0, std::sqrt(n), n * ratio});
    const double eta = std::max({10.0, std::sqrt(n), amax, blk.f0.norm()});
    X[b] = xi * Matrix::Identity(blk.n, blk.n);
    Z[b] = eta * Matrix::Identity(blk.n, blk.n);
  }

  double f0norm = 0.0;
  for (const auto& blk : cp.blocks) f0norm += blk.f0.squaredNorm();
  f0norm = std::sqrt(f0norm);
  const double cnorm = cp.c.norm();

  auto evaluate = [&](std::vector<Matrix>& rd, Vector& rp) {
    Metrics mt;
    rp = cp.c - adjoint(cp, X);
    double rdn = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      rd[b] = cp.blocks[b].f0 + apply_vars(cp.blocks[b], y) - Z[b];
      rdn += rd[b].squaredNorm();
      mt.dobj -= inner(cp.blocks[b].f0, X[b]);
      mt.gap += inner(X[b], Z[b]);
    }
    mt.pobj = cp.c.dot(y);
    mt.mu = mt.gap / cp.total_dim;
    mt.relgap = mt.gap / (1.0 + std::abs(mt.pobj) + std::abs(mt.dobj));
    mt.pinf = std::sqrt(rdn) / (1.0 + f0norm);
    mt.dinf = rp.norm() / (1.0 + cnorm);
    return mt;
  };

  std::vector<Matrix> Rd(nb);
  Vector Rp;
  int stall = 0;
  std::ostringstream log;
  Metrics mt;
  bool reduced_ok = false;

  auto within = [&](const Metrics& q, double factor) {
    return q.relgap < factor * st.gap_tol && q.pinf < factor * st.feas_tol && q.dinf < factor * st.feas_tol;
  };

  // The latest strictly feasible iterate is kept for breakdowns. With a zero
  // objective it solves the program outright; otherwise it is accepted only
  // with a converged gap and a dual residual below breakdown_dual_tol.
  const bool pure_feasibility = cp.c.isZero();
  std::optional<Vector> y_feasible;
  Metrics mt_feasible;
  auto strictly_feasible = [&](const Vector& yy) {
    for (const auto& blk : cp.blocks) {
      Eigen::LLT<Matrix> llt(blk.f0 + apply_vars(blk, yy));
      if (llt.info() != Eigen::Success) return false;
    }
    return true;
  };

  res.status = Status::iteration_limit;
  int iter = 0;
  int pivoted_steps = 0;
  int ridged_steps = 0;
  double max_ridge = 0.0;
  int factorizations = 0;
  for (; iter <= st.max_iter; ++iter) {
    mt = evaluate(Rd, Rp);
    if (!std::isfinite(mt.gap) || !std::isfinite(mt.pobj) || !std::isfinite(mt.dobj)) {
      res.status = Status::numerical_failure;
      log << "non-finite iterate at iteration " << iter << "; ";
      break;
    }
    if (within(mt, 1.0)) {
      res.status = Status::optimal;
      break;
    }
    if (strictly_feasible(y)) {
      y_feasible = y;
      mt_feasible = mt;
    }
    // Primal (LMI) infeasibility: X / dobj certifies emptiness.
    if (mt.dobj > 0.0) {
      const double ax = (cp.c - Rp).norm();
      if (ax / mt.dobj < st.infeasibility_tol) {
        res.status = Status::infeasible;
        log << "dual ray: ||A(X)||/(-<F0,X>) = " << ax / mt.dobj << "; ";
        break;
      }
    }
    // Dual infeasibility (unbounded LMI problem): sum y F >= 0 with c^T y < 0.
    if (mt.pobj < 0.0 && y.norm() > 1e12) {
      res.status = Status::unbounded;
      log << "primal objective diverging; ";
      break;
    }
    if (iter == st.max_iter) break;

    bool ok = true;
    for (std::size_t b = 0; b < nb; ++b) {
      Eigen::LLT<Matrix> llt(Z[b]);
      if (llt.info() != Eigen::Success) {
        ok = false;
        break;
      }
      Zinv[b] = llt.solve(Matrix::Identity(cp.blocks[b].n, cp.blocks[b].n));
      Zinv[b] = symmetrize(Zinv[b]);
    }
    if (!ok) {
      res.status = Status::numerical_failure;
      log << "slack lost definiteness at iteration " << iter << "; ";
      break;
    }

    Matrix H = schur_matrix(cp, X, Zinv);
    // Unused and dependent variables stay at their current value.
    for (int v = 0; v < m; ++v) {
      if (!unused[static_cast<std::size_t>(v)]) continue;
      H.row(v).setZero();
      H.col(v).setZero();
      H(v, v) = 1.0;
    }
    Vector dscale = H.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Matrix Hs = dscale.asDiagonal() * H * dscale.asDiagonal();
    // Redundant parametrizations make H singular. The smallest ridge that
    // factors is used and iterative refinement against H removes its bias;
    // a pivoted LDLT is the last resort.
    double ridge = 0.0;
    Eigen::LLT<Matrix> hchol(Hs);
    Eigen::LDLT<Matrix> hldlt;
    ++factorizations;
    while (hchol.info() != Eigen::Success && ridge < 1e-6) {
      ridge = ridge == 0.0 ? 1e-14 : ridge * 10.0;
      hchol.compute(Hs + ridge * Matrix::Identity(m, m));
      ++factorizations;
    }
    const bool pivoted = hchol.info() != Eigen::Success;
    if (ridge > 0.0) ++ridged_steps;
    max_ridge = std::max(max_ridge, ridge);
    if (pivoted) {
      hldlt.compute(Hs);
      ++factorizations;
      ++pivoted_steps;
      // info() flags zero pivots with nonzero columns, which rounding produces
      // routinely here; only a non-finite factor is fatal.
      if (!hldlt.vectorD().allFinite() || !Matrix(hldlt.matrixL()).allFinite()) {
        res.status = Status::numerical_failure;
        log << "Schur complement factorization failed at iteration " << iter << "; ";
        break;
      }
    }
    auto hsolve = [&](const Vector& r) -> Vector {
      return dscale.cwiseProduct(pivoted ? Vector(hldlt.solve(dscale.cwiseProduct(r)))
                                         : Vector(hchol.solve(dscale.cwiseProduct(r))));
    };
    auto schur_solve = [&](const Vector& rhs) -> Vector {
      Vector out = hsolve(rhs);
      Vector resid = rhs - H * out;
      double rn = resid.norm();
      // Refine while the residual keeps shrinking.
      for (int k = 0; k < (ridge > 0.0 || pivoted ? 8 : 1); ++k) {
        const Vector cand = out + hsolve(resid);
        const Vector cres = rhs - H * cand;
        const double cn = cres.norm();
        if (!(cn < rn)) break;
        out = cand;
        resid = cres;
        if (cn > 0.5 * rn) break;
        rn = cn;
      }
      for (int v = 0; v < m; ++v) {
        if (unused[static_cast<std::size_t>(v)]) out(v) = 0.0;
      }
      return out;
    };

    // X Rd Zinv is shared by predictor and corrector.
    std::vector<Matrix> XRdZi(nb);
    for (std::size_t b = 0; b < nb; ++b) XRdZi[b] = X[b] * Rd[b] * Zinv[b];

    auto direction = [&](double sigma_mu, const std::vector<Matrix>* corr) {
      Direction d;
      std::vector<Matrix> G(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        G[b] = sigma_mu * Zinv[b] - X[b] - XRdZi[b];
        if (corr) G[b] -= (*corr)[b];
      }
      Vector rhs = adjoint(cp, G) - Rp;
      d.dy = schur_solve(rhs);
      d.dz.resize(nb);
      d.dx.resize(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        d.dz[b] = apply_vars(cp.blocks[b], d.dy) + Rd[b];
        Matrix dx = sigma_mu * Zinv[b] - X[b] - X[b] * d.dz[b] * Zinv[b];
        if (corr) dx -= (*corr)[b];
        d.dx[b] = symmetrize(dx);
      }
      return d;
    };

    auto steps = [&](const Direction& d) {
      double ap = std::numeric_limits<double>::infinity(), ad = ap;
      for (std::size_t b = 0; b < nb; ++b) {
        ap = std::min(ap, max_step(X[b], d.dx[b]));
        ad = std::min(ad, max_step(Z[b], d.dz[b]));
      }
      return std::pair{ap, ad};
    };

    // Predictor.
    Direction pred = direction(0.0, nullptr);
    auto [ap_max, ad_max] = steps(pred);
    const double ap_a = std::min(1.0, ap_max), ad_a = std::min(1.0, ad_max);
    double gap_aff = 0.0;
    for (std::size_t b = 0; b < nb; ++b) gap_aff += inner(X[b] + ap_a * pred.dx[b], Z[b] + ad_a * pred.dz[b]);
    const double mu_aff = gap_aff / cp.total_dim;
    const double expo = std::max(1.0, 3.0 * std::pow(std::min(ap_a, ad_a), 2));
    double sigma = mt.mu > 0.0 ? std::pow(std::clamp(mu_aff / mt.mu, 0.0, 1.0), expo) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector.
    std::vector<Matrix> corr(nb);
    for (std::size_t b = 0; b < nb; ++b) corr[b] = pred.dx[b] * pred.dz[b] * Zinv[b];
    Direction d = direction(sigma * mt.mu, &corr);
    auto [ap2, ad2] = steps(d);
    const double gamma = 0.9 + 0.09 * std::min(ap_a, ad_a);
    const double ap = std::min(1.0, gamma * ap2);
    const double ad = std::min(1.0, gamma * ad2);

    for (std::size_t b = 0; b < nb; ++b) {
      X[b] = symmetrize(X[b] + ap * d.dx[b]);
      Z[b] = symmetrize(Z[b] + ad * d.dz[b]);
    }
    y += ad * d.dy;

    if (ap < 1e-8 && ad < 1e-8) {
      if (++stall >= 3) {
        log << "stalled at iteration " << iter << "; ";
        res.status = Status::numerical_failure;
        ++iter;
        mt = evaluate(Rd, Rp);
        break;
      }
    } else {
      stall = 0;
    }
  }

  if ((res.status == Status::iteration_limit || res.status == Status::numerical_failure) &&
      std::isfinite(mt.gap) && within(mt, st.reduced_accuracy_factor)) {
    reduced_ok = true;
    res.status = Status::optimal;
    log << "accepted at reduced accuracy; ";
  }
  (void)reduced_ok;
  if ((res.status == Status::iteration_limit || res.status == Status::numerical_failure) && y_feasible) {
    const bool near_optimal = mt_feasible.relgap < st.reduced_accuracy_factor * st.gap_tol &&
                              mt_feasible.pinf < st.reduced_accuracy_factor * st.feas_tol &&
                              mt_feasible.dinf < st.breakdown_dual_tol;
    if (pure_feasibility || near_optimal) {
      y = *y_feasible;
      mt = mt_feasible;
      res.status = Status::optimal;
      log << (pure_feasibility ? "zero objective: " : "breakdown: ") << "returning the last strictly feasible iterate; ";
    }
  }

  res.y = y;
  res.iterations = std::min(iter, st.max_iter);
  res.primal_objective = mt.pobj;
  res.dual_objective = mt.dobj;
  res.relative_gap = mt.relgap;
  res.primal_infeasibility = mt.pinf;
  res.dual_infeasibility = mt.dinf;
  res.dual = X;
  res.slack.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) res.slack[b] = cp.blocks[b].f0 + apply_vars(cp.blocks[b], y);
  log << "iterations=" << res.iterations << " fixed_dependent=" << dependent << " factorizations=" << factorizations << " ridged=" << ridged_steps << " max_ridge=" << max_ridge << " pivoted=" << pivoted_steps << " relgap=" << mt.relgap << " pinf=" << mt.pinf << " dinf=" << mt.dinf;
  res.diagnostics = log.str();
  return res;
}

}  // namespace

Result solve(const Program& program, const Settings& settings) {
  program.validate();
  if (program.eq_matrix.rows() == 0) return solve_reduced(program, settings);

  const Reduction red = reduce_equalities(program);
  if (!red.consistent) {
    Result r;
    r.status = Status::infeasible;
    r.y = red.y0;
    r.diagnostics = "equality constraints are inconsistent";
    return r;
  }
  const Program reduced = reduced_program(program, red);
  Result r = solve_reduced(reduced, settings);
  r.y = red.y0 + red.basis * r.y;
  r.primal_objective = program.objective.dot(r.y);
  for (std::size_t b = 0; b < program.block_sizes.size(); ++b)
    r.slack[b] = program.evaluate_block(static_cast<int>(b), r.y);
  return r;
}

}  // namespace distobs::conic
