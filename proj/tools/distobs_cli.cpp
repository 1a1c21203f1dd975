// distobs: check / synth / sim / explore front end.
//
// Exit codes: 0 success, 1 negative outcome (no convergence, error bound
// missed), 2 input or runtime error.

#include "distobs/analysis.hpp"
#include "distobs/serialize.hpp"
#include "distobs/simulate.hpp"
#include "distobs/synthesis.hpp"
#include "distobs/trilemma.hpp"
#include "distobs/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace distobs;

namespace {

struct CommonArgs {
  std::string problem;
  std::string out = "distobs_out";
  std::optional<double> eps_tol;
  std::optional<double> delta;
  std::optional<double> decay_rate;
  std::optional<int> max_iter;
};

struct LoadedProblem {
  Problem problem;
  std::string hash;
};

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProblemError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LoadedProblem load(const CommonArgs& a) {
  const std::string bytes = read_bytes(a.problem);
  Problem pr = load_problem(bytes);
  SynthesisOptions o = pr.options;
  if (a.eps_tol) o.eps_tol = *a.eps_tol;
  if (a.delta) o.delta = *a.delta;
  if (a.decay_rate) o.decay_rate = *a.decay_rate;
  if (a.max_iter) o.max_iter = *a.max_iter;
  // Re-validate the merged options.
  return {Problem(pr.system, pr.graph, o), sha256_hex(bytes)};
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

void write_manifest(const fs::path& dir, const std::string& command, const CommonArgs& a, const LoadedProblem& lp,
                    std::map<std::string, std::string> outcome) {
  RunManifest m;
  m.command = command;
  m.problem_path = a.problem;
  m.problem_hash = lp.hash;
  m.options = lp.problem.options;
  m.tool_version = kVersion;
  m.timestamp = utc_now();
  m.outcome = std::move(outcome);
  write_text(dir / "manifest.json", manifest_to_json(m));
}

const char* yes_no(bool b) { return b ? "YES" : "NO"; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int cmd_check(const CommonArgs& a, bool json) {
  const LoadedProblem lp = load(a);
  const auto det = marginal_joint_detectability(lp.problem.system);
  const auto conn = connectivity_report(lp.problem.graph);
  if (json) {
    std::cout << reports_to_json(det, conn);
    return 0;
  }
  std::cout << "marginal joint detectability: " << yes_no(det.marginal)
            << "; minimal strong digraph: " << yes_no(conn.minimal) << "\n";
  std::cout << "joint detectable: " << yes_no(det.joint_detectable) << "\n";
  std::cout << "critical nodes:";
  for (int v : det.critical_nodes) std::cout << " " << v + 1;
  std::cout << "\nundetectable modes:";
  for (const auto& z : det.undetectable_modes) std::cout << " " << num(z.real()) << (z.imag() >= 0 ? "+" : "") << num(z.imag()) << "i";
  std::cout << "\nstrongly connected: " << yes_no(conn.strongly_connected) << "\n";
  std::cout << "redundant edges:";
  for (const auto& e : conn.redundant_edges) std::cout << " (" << e.from + 1 << "," << e.to + 1 << ")";
  std::cout << "\nsource components:";
  for (const auto& comp : conn.source_components) {
    std::cout << " {";
    for (std::size_t k = 0; k < comp.size(); ++k) std::cout << (k ? "," : "") << comp[k] + 1;
    std::cout << "}";
  }
  std::cout << "\n";
  return 0;
}

int cmd_synth(const CommonArgs& a, bool dump_sdp) {
  const LoadedProblem lp = load(a);
  const fs::path dir = prepare_out(a.out);
  if (dump_sdp) write_text(dir / "feasibility_sdp.json", program_to_json(build_feasibility_instance(lp.problem).program));
  std::ofstream log(dir / "J_history.log", std::ios::binary);
  const SynthesisState st = synthesize(lp.problem, [&](const IterationRecord& r) {
    const std::string line = format_iteration(r);
    log << line << "\n";
    std::cerr << line << "\n";
  });
  log.close();
  write_text(dir / "state.json", state_to_json(st));
  std::map<std::string, std::string> outcome{{"status", to_string(st.status)},
                                             {"iterations", std::to_string(st.iteration)}};
  if (!st.diagnostics.empty()) outcome["diagnostics"] = st.diagnostics;
  if (st.gains) {
    write_text(dir / "gains.json", gains_to_json(*st.gains));
    outcome["witness"] = to_string(st.witness);
    outcome["spectral_radius"] = num(spectral_radius(assemble(lp.problem.system, lp.problem.graph, *st.gains).s));
  }
  if (st.trace_cap_active) outcome["trace_cap"] = "active";
  write_manifest(dir, "synth", a, lp, outcome);
  std::cout << "status: " << to_string(st.status) << " after " << st.iteration << " iterations";
  if (!st.j_history.empty()) std::cout << "; J = " << num(st.j_history.back());
  std::cout << "\n";
  if (!st.diagnostics.empty()) std::cout << st.diagnostics << "\n";
  switch (st.status) {
    case SynthesisStatus::converged_complementarity:
    case SynthesisStatus::converged_nmi_early_stop: return 0;
    case SynthesisStatus::iteration_limit:
    case SynthesisStatus::infeasible_init: return 1;
    case SynthesisStatus::numerical_failure: return 2;
  }
  return 2;
}

struct SimArgs {
  std::string gains;
  std::string certificate;
  int steps = 60;
  double tol = 1e-6;
  std::string format = "csv";
  bool full_state = false;
};

std::string trajectory_json(const Trajectory& tr) {
  nlohmann::json j;
  j["message_dimension"] = tr.message_dimension;
  j["message_count"] = tr.message_count;
  j["error_norms"] = tr.error_norms;
  if (!tr.lyapunov.empty()) j["V"] = tr.lyapunov;
  return j.dump(1) + "\n";
}

int cmd_sim(const CommonArgs& a, const SimArgs& s) {
  const LoadedProblem lp = load(a);
  const GainSet gains = load_gains_file(s.gains, lp.problem);
  SimConfig cfg = SimConfig::reproduction(lp.problem, s.steps);
  std::optional<Matrix> q;
  if (!s.certificate.empty()) {
    q = certificate_from_state_json(read_bytes(s.certificate));
    const int d = lp.problem.graph.node_count() * lp.problem.system.state_dim();
    if (q->rows() != d)
      throw ProblemError("certificate", "expected " + std::to_string(d) + "x" + std::to_string(d) + ", got " +
                                            std::to_string(q->rows()) + "x" + std::to_string(q->cols()));
    cfg.record_lyapunov = true;
  }
  const Trajectory tr = run(lp.problem, gains, cfg, q);
  const fs::path dir = prepare_out(a.out);
  if (s.format == "json") {
    write_text(dir / "trajectory.json", trajectory_json(tr));
  } else {
    std::ostringstream os;
    write_trajectory_csv(os, tr, s.full_state);
    write_text(dir / "trajectory.csv", os.str());
  }
  const double e0 = tr.initial_error_norm();
  const double bound = s.tol * e0;
  const double final_err = tr.max_final_error();
  const bool ok = final_err < bound || (e0 == 0.0 && final_err == 0.0);
  write_manifest(dir, "sim", a, lp,
                 {{"steps", std::to_string(s.steps)},
                  {"max_final_error", num(final_err)},
                  {"bound", num(bound)},
                  {"converged", ok ? "true" : "false"}});
  std::cout << "max_i ||e_i(" << s.steps << ")|| = " << num(final_err) << " (bound " << num(bound) << "): "
            << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

std::string slug(const std::string& label) {
  std::string out;
  for (char ch : label) {
    const bool keep = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.';
    if (keep) {
      out += ch;
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

int cmd_explore(const CommonArgs& a, const std::string& axis, int jobs, int steps, double tol) {
  const LoadedProblem lp = load(a);
  ExploreConfig cfg;
  cfg.axes.edges = axis == "edge" || axis == "both";
  cfg.axes.sensors = axis == "sensor" || axis == "both";
  cfg.max_iter = a.max_iter.value_or(100);
  cfg.jobs = jobs;
  cfg.sim_steps = steps;
  cfg.sim_tolerance = tol;
  const ExploreReport rep = explore(lp.problem, cfg, [](const CandidateResult& r) {
    std::cerr << r.candidate.label() << ": " << to_string(r.status) << " (" << r.iterations << " iterations)\n";
  });
  const fs::path dir = prepare_out(a.out);
  write_text(dir / "explore.json", explore_report_to_json(rep));
  std::map<std::string, std::string> outcome{{"baseline_status", to_string(rep.baseline_status)}};
  int converged_count = 0;
  for (const auto& r : rep.ranked) converged_count += converged(r.status) ? 1 : 0;
  outcome["candidates"] = std::to_string(rep.ranked.size());
  outcome["converged"] = std::to_string(converged_count);
  // Every converged candidate keeps its problem, gains and state.
  for (const auto& r : rep.ranked) {
    if (!r.state || !r.state->gains || !converged(r.status)) continue;
    const fs::path cdir = prepare_out((dir / "candidates" / slug(r.candidate.label())).string());
    write_text(cdir / "problem.json", save_problem(r.candidate.apply(lp.problem)));
    write_text(cdir / "gains.json", gains_to_json(*r.state->gains));
    write_text(cdir / "state.json", state_to_json(*r.state));
  }
  if (const CandidateResult* best = rep.best()) {
    const Problem repaired = best->candidate.apply(lp.problem);
    write_text(dir / "best_problem.json", save_problem(repaired));
    write_text(dir / "best_gains.json", gains_to_json(*best->state->gains));
    outcome["best"] = best->candidate.label();
  }
  write_manifest(dir, "explore", a, lp, outcome);
  for (const auto& r : rep.ranked) {
    std::cout << r.candidate.label() << "  " << to_string(r.status) << "  iterations=" << r.iterations
              << "  rho=" << num(r.spectral_radius) << "  sim=" << (r.simulation_ok ? "ok" : "-") << "\n";
  }
  return rep.any_converged() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed observer synthesis and simulation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonArgs common;
  auto add_common = [&](CLI::App* sub, bool synth_flags) {
    sub->add_option("--problem", common.problem, "problem file (JSON)")->required();
    sub->add_option("--out", common.out, "output directory");
    if (synth_flags) {
      sub->add_option("--eps-tol", common.eps_tol, "complementarity threshold");
      sub->add_option("--delta", common.delta, "strict-LMI margin");
      sub->add_option("--decay-rate", common.decay_rate, "contraction target in (0, 1]");
      sub->add_option("--max-iter", common.max_iter, "iteration budget");
    }
  };

  std::string format = "text";
  auto* check = app.add_subcommand("check", "report detectability and connectivity");
  add_common(check, false);
  check->add_option("--format", format, "text|json")->check(CLI::IsMember({"text", "json"}));

  bool dump_sdp = false;
  auto* synth = app.add_subcommand("synth", "run the iterative SDP synthesis");
  add_common(synth, true);
  synth->add_flag("--dump-sdp", dump_sdp, "also write the feasibility SDP instance");

  SimArgs sim_args;
  auto* sim = app.add_subcommand("sim", "simulate the observer network");
  add_common(sim, false);
  sim->add_option("--gains", sim_args.gains, "gains file")->required();
  sim->add_option("--certificate", sim_args.certificate, "state.json whose certificate Q is used for V(t)");
  sim->add_option("--steps", sim_args.steps, "horizon T")->check(CLI::PositiveNumber);
  sim->add_option("--tol", sim_args.tol, "relative error tolerance");
  sim->add_option("--format", sim_args.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  sim->add_flag("--full-state", sim_args.full_state, "include x and every estimate in the CSV");

  std::string axis = "both";
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  int explore_steps = 60;
  double explore_tol = 1e-6;
  auto* exp = app.add_subcommand("explore", "search single-modification repairs");
  add_common(exp, true);
  exp->add_option("--axis", axis, "edge|sensor|both")->check(CLI::IsMember({"edge", "sensor", "both"}));
  exp->add_option("--jobs", jobs, "worker threads (default: hardware threads)")->check(CLI::PositiveNumber);
  exp->add_option("--steps", explore_steps, "simulation horizon for candidates")->check(CLI::PositiveNumber);
  exp->add_option("--tol", explore_tol, "relative error tolerance for candidates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*check) return cmd_check(common, format == "json");
    if (*synth) return cmd_synth(common, dump_sdp);
    if (*sim) return cmd_sim(common, sim_args);
    if (*exp) return cmd_explore(common, axis, jobs, explore_steps, explore_tol);
  } catch (const BaselineFeasible& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ProblemError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
