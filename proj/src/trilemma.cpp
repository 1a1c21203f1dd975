#include "distobs/trilemma.hpp"

#include "distobs/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

namespace distobs {

std::string RepairCandidate::label() const {
  std::ostringstream os;
  if (kind == RepairKind::add_edge) {
    os << "add_edge(" << edge.from + 1 << "," << edge.to + 1 << ")";
    return os.str();
  }
  os << "augment_sensor(" << node + 1 << ",[";
  for (Eigen::Index r = 0; r < extra_rows.rows(); ++r) {
    if (r) os << "; ";
    for (Eigen::Index c = 0; c < extra_rows.cols(); ++c) os << (c ? " " : "") << extra_rows(r, c);
  }
  os << "])";
  return os.str();
}

Problem RepairCandidate::apply(const Problem& base) const {
  if (kind == RepairKind::add_edge) return Problem(base.system, base.graph.with_edge(edge), base.options);
  const Matrix& c = base.system.output(node);
  Matrix aug(c.rows() + extra_rows.rows(), c.cols());
  aug << c, extra_rows;
  return Problem(base.system.with_output(node, aug), base.graph, base.options);
}

bool lexical_less(const RepairCandidate& a, const RepairCandidate& b) {
  if (a.kind != b.kind) return a.kind < b.kind;
  if (a.kind == RepairKind::add_edge) return std::tie(a.edge.from, a.edge.to) < std::tie(b.edge.from, b.edge.to);
  if (a.node != b.node) return a.node < b.node;
  // Basis rows e_j sort by j: compare reversed so a leading 1 comes first.
  const auto& ra = a.extra_rows;
  const auto& rb = b.extra_rows;
  const Eigen::Index n = std::min(ra.size(), rb.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const double va = ra.data()[k], vb = rb.data()[k];
    if (va != vb) return va > vb;
  }
  return ra.size() < rb.size();
}

bool ExploreReport::any_converged() const {
  return std::any_of(ranked.begin(), ranked.end(), [](const CandidateResult& r) { return converged(r.status); });
}

const CandidateResult* ExploreReport::best() const {
  if (ranked.empty() || !converged(ranked.front().status)) return nullptr;
  return &ranked.front();
}

std::vector<RepairCandidate> enumerate_candidates(const Problem& problem, const ExploreConfig& config) {
  std::vector<RepairCandidate> out;
  const int n = problem.graph.node_count(), nx = problem.system.state_dim();
  if (config.axes.edges) {
    for (int from = 0; from < n; ++from) {
      for (int to = 0; to < n; ++to) {
        if (from == to || problem.graph.has_edge(from, to)) continue;
        RepairCandidate c;
        c.kind = RepairKind::add_edge;
        c.edge = Edge{from, to};
        out.push_back(c);
      }
    }
  }
  if (config.axes.sensors) {
    std::vector<Vector> dict = config.dictionary;
    if (dict.empty()) {
      for (int j = 0; j < nx; ++j) dict.push_back(Vector::Unit(nx, j));
    }
    for (int i = 0; i < n; ++i) {
      const Matrix& c = problem.system.output(i);
      const int base_rank = c.rows() ? numerical_rank(c) : 0;
      for (const auto& row : dict) {
        if (row.size() != nx) throw ProblemError("dictionary", "row length differs from the state dimension");
        Matrix aug(c.rows() + 1, nx);
        aug << c, row.transpose();
        // Rows already in the node's row space add no information.
        if (numerical_rank(aug) == base_rank) continue;
        RepairCandidate cand;
        cand.kind = RepairKind::augment_sensor;
        cand.node = i;
        cand.extra_rows = row.transpose();
        out.push_back(cand);
      }
    }
  }
  return out;
}

namespace {

CandidateResult evaluate(const Problem& base, const RepairCandidate& cand, const ExploreConfig& cfg) {
  CandidateResult r;
  r.candidate = cand;
  r.spectral_radius = std::numeric_limits<double>::quiet_NaN();
  try {
    Problem pr = cand.apply(base);
    pr.options.max_iter = cfg.max_iter;
    SynthesisState st = synthesize(pr);
    r.status = st.status;
    r.iterations = st.iteration;
    r.final_complementarity = st.complementarity_history.empty() ? 0.0 : st.complementarity_history.back();
    r.diagnostics = st.diagnostics;
    if (st.gains) {
      r.spectral_radius = spectral_radius(assemble(pr.system, pr.graph, *st.gains).s);
      const Trajectory tr = run(pr, *st.gains, SimConfig::reproduction(pr, cfg.sim_steps));
      const double e0 = tr.initial_error_norm();
      r.simulated_ratio = e0 > 0.0 ? tr.max_final_error() / e0 : 0.0;
      r.simulation_ok = r.simulated_ratio < cfg.sim_tolerance;
      r.state = std::move(st);
    }
  } catch (const std::exception& e) {
    r.status = SynthesisStatus::numerical_failure;
    r.diagnostics = e.what();
  }
  return r;
}

}  // namespace

ExploreReport explore(const Problem& problem, const ExploreConfig& config, const CandidateObserver& observer) {
  ExploreReport rep;
  Problem baseline = problem;
  baseline.options.max_iter = config.max_iter;
  const SynthesisState base = synthesize(baseline);
  rep.baseline_status = base.status;
  rep.baseline_iterations = base.iteration;
  if (converged(base.status)) throw BaselineFeasible("baseline feasible: synthesis converged without repair");

  const std::vector<RepairCandidate> cands = enumerate_candidates(problem, config);
  std::vector<CandidateResult> results(cands.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  auto worker = [&]() {
    for (std::size_t k = next++; k < cands.size(); k = next++) {
      results[k] = evaluate(problem, cands[k], config);
      if (observer) {
        std::lock_guard<std::mutex> lock(report_mutex);
        observer(results[k]);
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(cands.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::sort(results.begin(), results.end(), [](const CandidateResult& a, const CandidateResult& b) {
    const bool ca = converged(a.status), cb = converged(b.status);
    if (ca != cb) return ca;
    if (ca) {
      if (a.iterations != b.iterations) return a.iterations < b.iterations;
      if (a.spectral_radius != b.spectral_radius) return a.spectral_radius < b.spectral_radius;
    }
    return lexical_less(a.candidate, b.candidate);
  });
  rep.ranked = std::move(results);
  return rep;
}

}  // namespace distobs
