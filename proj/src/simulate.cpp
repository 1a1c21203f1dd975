#include "distobs/simulate.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

namespace distobs {

namespace {

std::string vec_dims(const Vector& v) { return std::to_string(v.size()); }

Vector input_at(const InputSignal& in, int t, int nu) {
  if (std::holds_alternative<ZeroInput>(in)) return Vector::Zero(nu);
  if (const auto* c = std::get_if<ConstantInput>(&in)) return c->u;
  return std::get<InputSequence>(in).u.at(static_cast<std::size_t>(t));
}

void check_config(const Problem& pr, const SimConfig& cfg) {
  const int nx = pr.system.state_dim(), n = pr.graph.node_count(), nu = pr.system.input_dim();
  if (cfg.steps < 1) throw SimulationError("steps: must be at least 1");
  if (cfg.x0.size() != nx) throw SimulationError("x0: expected dimension " + std::to_string(nx) + ", got " + vec_dims(cfg.x0));
  if (static_cast<int>(cfg.xhat0.size()) != n)
    throw SimulationError("xhat0: expected " + std::to_string(n) + " estimates, got " + std::to_string(cfg.xhat0.size()));
  for (int i = 0; i < n; ++i) {
    if (cfg.xhat0[static_cast<std::size_t>(i)].size() != nx)
      throw SimulationError("xhat0[" + std::to_string(i) + "]: expected dimension " + std::to_string(nx));
  }
  if (const auto* c = std::get_if<ConstantInput>(&cfg.input)) {
    if (c->u.size() != nu) throw SimulationError("input: expected dimension " + std::to_string(nu));
    if (!c->u.allFinite()) throw SimulationError("input: non-finite entries");
  } else if (const auto* s = std::get_if<InputSequence>(&cfg.input)) {
    if (static_cast<int>(s->u.size()) < cfg.steps)
      throw SimulationError("input: sequence shorter than the horizon");
    for (std::size_t t = 0; t < s->u.size(); ++t) {
      if (s->u[t].size() != nu) throw SimulationError("input[" + std::to_string(t) + "]: expected dimension " + std::to_string(nu));
      if (!s->u[t].allFinite()) throw SimulationError("input[" + std::to_string(t) + "]: non-finite entries");
    }
  }
}

// Exact rational simulation. Doubles are dyadic rationals, so every plant
// and observer quantity is computed without rounding; only the recorded
// values are converted back. With unstable plants x(t) outgrows the error
// by many orders of magnitude and x - xhat cancels catastrophically in
// floating point.
using Rational = mpq_class;
using RVector = std::vector<Rational>;

struct RMatrix {
  Eigen::Index rows = 0, cols = 0;
  std::vector<Rational> v;

  explicit RMatrix(const Matrix& m) : rows(m.rows()), cols(m.cols()), v(static_cast<std::size_t>(m.size())) {
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) v[static_cast<std::size_t>(r * cols + c)] = m(r, c);
  }

  // out += this * x
  void mul_add(const RVector& x, RVector& out) const {
    Rational t;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        const Rational& a = v[static_cast<std::size_t>(r * cols + c)];
        if (sgn(a) == 0) continue;
        t = a * x[static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(r)] += t;
      }
    }
  }
};

RVector to_rational(const Vector& x) {
  RVector out(static_cast<std::size_t>(x.size()));
  for (Eigen::Index k = 0; k < x.size(); ++k) out[static_cast<std::size_t>(k)] = x(k);
  return out;
}

Vector to_double(const RVector& x) {
  Vector out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t k = 0; k < x.size(); ++k) out(static_cast<Eigen::Index>(k)) = x[k].get_d();
  return out;
}

struct ExactNetwork {
  int n = 0;
  std::size_t nx = 0;
  RMatrix a, b;
  std::vector<RMatrix> c, l;
  std::vector<std::vector<int>> nbrs;
  std::vector<std::vector<RMatrix>> m;      // m[i][k]: block for nbrs[i][k]
  std::vector<std::vector<Rational>> w;     // w[i][k]: weight for nbrs[i][k]
  std::vector<Rational> w_self;

  ExactNetwork(const Problem& pr, const GainSet& g)
      : n(pr.graph.node_count()), nx(static_cast<std::size_t>(pr.system.state_dim())), a(pr.system.a()),
        b(pr.system.b()) {
    for (int i = 0; i < n; ++i) {
      c.emplace_back(pr.system.output(i));
      l.emplace_back(g.l[static_cast<std::size_t>(i)]);
      nbrs.push_back(pr.graph.neighbors(i));
      std::vector<RMatrix> mi;
      std::vector<Rational> wi;
      for (int j : nbrs.back()) {
        const auto it = g.m.find(Edge{j, i});
        if (it == g.m.end()) throw SimulationError("M[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]: missing");
        mi.emplace_back(it->second);
        wi.emplace_back(g.w(i, j));
      }
      // w_ii is defined as 1 - sum_j w_ij. A stored diagonal that meets the
      // row-sum constraint only up to rounding is replaced by the exact
      // complement so that the plant state cannot leak into the error.
      double abs_sum = std::abs(g.w(i, i)), row_sum = g.w(i, i);
      Rational complement = 1;
      for (std::size_t q = 0; q < wi.size(); ++q) {
        complement -= wi[q];
        abs_sum += std::abs(g.w(i, nbrs.back()[q]));
        row_sum += g.w(i, nbrs.back()[q]);
      }
      const bool rounding_only = std::abs(row_sum - 1.0) <= 1e-12 * (1.0 + abs_sum);
      w_self.push_back(rounding_only ? complement : Rational(g.w(i, i)));
      m.push_back(std::move(mi));
      w.push_back(std::move(wi));
    }
  }

  void advance(RVector& x, std::vector<RVector>& xh, const RVector& u) const {
    RVector bu(nx);
    b.mul_add(u, bu);
    std::vector<RVector> next(static_cast<std::size_t>(n), RVector(nx));
    for (int i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const RVector& xi = xh[si];
      RVector mix(nx);
      for (std::size_t k = 0; k < nx; ++k) mix[k] = w_self[si] * xi[k];
      RVector coupling(nx), diff(nx);
      for (std::size_t q = 0; q < nbrs[si].size(); ++q) {
        const RVector& xj = xh[static_cast<std::size_t>(nbrs[si][q])];
        for (std::size_t k = 0; k < nx; ++k) {
          mix[k] += w[si][q] * xj[k];
          diff[k] = xj[k] - xi[k];
        }
        m[si][q].mul_add(diff, coupling);
      }
      const auto ny = static_cast<std::size_t>(c[si].rows);
      RVector cxi(ny), cx(ny), innov(ny);
      c[si].mul_add(xi, cxi);
      c[si].mul_add(x, cx);
      for (std::size_t k = 0; k < ny; ++k) innov[k] = cxi[k] - cx[k];
      RVector& out = next[si];
      a.mul_add(mix, out);
      l[si].mul_add(innov, out);
      for (std::size_t k = 0; k < nx; ++k) out[k] += bu[k] + coupling[k];
    }
    RVector xn(nx);
    a.mul_add(x, xn);
    for (std::size_t k = 0; k < nx; ++k) xn[k] += bu[k];
    x = std::move(xn);
    xh = std::move(next);
  }
};

}  // namespace

SimConfig SimConfig::reproduction(const Problem& problem, int steps) {
  SimConfig c;
  c.steps = steps;
  c.x0 = Vector::Ones(problem.system.state_dim());
  c.xhat0.assign(static_cast<std::size_t>(problem.graph.node_count()), Vector::Zero(problem.system.state_dim()));
  return c;
}

StepResult step(const Problem& problem, const GainSet& gains, const Vector& x, const std::vector<Vector>& xhats,
                const Vector& u) {
  const auto& sys = problem.system;
  const int nx = sys.state_dim(), n = problem.graph.node_count();
  if (x.size() != nx) throw SimulationError("x: expected dimension " + std::to_string(nx) + ", got " + vec_dims(x));
  if (u.size() != sys.input_dim())
    throw SimulationError("u: expected dimension " + std::to_string(sys.input_dim()) + ", got " + vec_dims(u));
  if (static_cast<int>(xhats.size()) != n) throw SimulationError("xhats: expected " + std::to_string(n) + " estimates");
  if (gains.w.rows() != n || gains.w.cols() != n || static_cast<int>(gains.l.size()) != n)
    throw SimulationError("gains: sized for a different node count");

  StepResult r;
  const Vector bu = sys.b() * u;
  r.x_next = sys.a() * x + bu;
  r.xhats_next.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Vector& xi = xhats[static_cast<std::size_t>(i)];
    if (xi.size() != nx) throw SimulationError("xhats[" + std::to_string(i) + "]: expected dimension " + std::to_string(nx));
    const Matrix& ci = sys.output(i);
    const Matrix& li = gains.l[static_cast<std::size_t>(i)];
    if (li.rows() != nx || li.cols() != ci.rows())
      throw SimulationError("L[" + std::to_string(i + 1) + "]: expected " + std::to_string(nx) + "x" + std::to_string(ci.rows()));
    Vector mix = gains.w(i, i) * xi;
    Vector coupling = Vector::Zero(nx);
    for (int j : problem.graph.neighbors(i)) {
      const Vector& xj = xhats[static_cast<std::size_t>(j)];
      mix += gains.w(i, j) * xj;
      const auto it = gains.m.find(Edge{j, i});
      if (it == gains.m.end()) throw SimulationError("M[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]: missing");
      coupling += it->second * (xj - xi);
    }
    const Vector innovation = ci * xi - ci * x;
    r.xhats_next[static_cast<std::size_t>(i)] = sys.a() * mix + bu + li * innovation + coupling;
  }
  return r;
}

double Trajectory::max_final_error() const {
  if (error_norms.empty() || error_norms.back().empty()) return 0.0;
  return *std::max_element(error_norms.back().begin(), error_norms.back().end());
}

double Trajectory::initial_error_norm() const { return stacked_errors.empty() ? 0.0 : stacked_errors.front().norm(); }

Trajectory run(const Problem& problem, const GainSet& gains, const SimConfig& config, const std::optional<Matrix>& q) {
  check_config(problem, config);
  if (config.record_lyapunov && !q) throw SimulationError("record_lyapunov requires Q");
  const Matrix s = assemble(problem.system, problem.graph, gains).s;
  const int n = problem.graph.node_count(), nu = problem.system.input_dim();

  // Gain validation and sparsity checks come from assemble above.
  if (!s.allFinite()) throw SimulationError("gains: non-finite entries");
  if (!config.x0.allFinite()) throw SimulationError("x0: non-finite entries");
  for (const auto& v : config.xhat0)
    if (!v.allFinite()) throw SimulationError("xhat0: non-finite entries");
  const ExactNetwork net(problem, gains);
  Trajectory tr;
  tr.message_dimension = problem.system.state_dim();
  RVector x = to_rational(config.x0);
  std::vector<RVector> xh;
  for (const auto& v : config.xhat0) xh.push_back(to_rational(v));
  auto record = [&]() {
    const Vector xd = to_double(x);
    std::vector<Vector> estimates;
    std::vector<double> norms;
    Vector stacked(static_cast<Eigen::Index>(n) * xd.size());
    for (int i = 0; i < n; ++i) {
      const RVector& xi = xh[static_cast<std::size_t>(i)];
      estimates.push_back(to_double(xi));
      Vector e(xd.size());
      for (Eigen::Index k = 0; k < e.size(); ++k) {
        const Rational d = x[static_cast<std::size_t>(k)] - xi[static_cast<std::size_t>(k)];
        e(k) = d.get_d();
      }
      norms.push_back(e.norm());
      stacked.segment(static_cast<Eigen::Index>(i) * xd.size(), xd.size()) = e;
    }
    tr.states.push_back(xd);
    tr.estimates.push_back(std::move(estimates));
    tr.error_norms.push_back(std::move(norms));
    tr.stacked_errors.push_back(std::move(stacked));
  };
  record();
  for (int t = 0; t < config.steps; ++t) {
    net.advance(x, xh, to_rational(input_at(config.input, t, nu)));
    tr.message_count.push_back(n);
    record();
    const Vector& prev = tr.stacked_errors[static_cast<std::size_t>(t)];
    const double denom = std::max(prev.norm(), 1e-300);
    tr.recursion_defect = std::max(tr.recursion_defect, (tr.stacked_errors.back() - s * prev).norm() / denom);
  }
  if (config.record_lyapunov) tr.lyapunov = lyapunov_trace(tr, *q);
  return tr;
}

std::vector<double> lyapunov_trace(const Trajectory& trajectory, const Matrix& q) {
  const Matrix qs = symmetrize(q);
  if (!trajectory.stacked_errors.empty() && qs.rows() != trajectory.stacked_errors.front().size())
    throw std::invalid_argument("lyapunov_trace: Q has the wrong size");
  if (!(min_eigenvalue(qs) > 0.0)) throw std::invalid_argument("lyapunov_trace: Q is not positive definite");
  std::vector<double> v;
  v.reserve(trajectory.stacked_errors.size());
  for (const auto& e : trajectory.stacked_errors) v.push_back(e.dot(qs * e));
  return v;
}

int first_lyapunov_violation(const Trajectory& trajectory, const std::vector<double>& v, double floor) {
  for (std::size_t t = 0; t + 1 < v.size(); ++t) {
    if (trajectory.stacked_errors[t].norm() > floor && !(v[t + 1] < v[t])) return static_cast<int>(t);
  }
  return -1;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr, bool full_state) {
  const std::size_t n = tr.error_norms.empty() ? 0 : tr.error_norms.front().size();
  const Eigen::Index nx = tr.states.empty() ? 0 : tr.states.front().size();
  const bool with_v = !tr.lyapunov.empty();
  os << "t";
  for (std::size_t i = 0; i < n; ++i) os << ",norm_e_" << i + 1;
  if (with_v) os << ",V";
  if (full_state) {
    for (Eigen::Index k = 0; k < nx; ++k) os << ",x_" << k + 1;
    for (std::size_t i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < nx; ++k) os << ",xhat_" << i + 1 << "_" << k + 1;
  }
  os << "\n";
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << "," << buf;
  };
  for (std::size_t t = 0; t < tr.states.size(); ++t) {
    os << t;
    for (double e : tr.error_norms[t]) num(e);
    if (with_v) num(tr.lyapunov[t]);
    if (full_state) {
      for (Eigen::Index k = 0; k < nx; ++k) num(tr.states[t](k));
      for (const auto& xh : tr.estimates[t])
        for (Eigen::Index k = 0; k < nx; ++k) num(xh(k));
    }
    os << "\n";
  }
}

}  // namespace distobs
