#include "distobs/serialize.hpp"

#include "json_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>

namespace distobs {

using detail::Json;
using detail::matrix_from_json;
using detail::matrix_to_json;

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json numbers_to_json(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(number_or_null(x));
  return out;
}

Json edge_to_json(const Edge& e) { return Json::array({e.from + 1, e.to + 1}); }

Json nodes_to_json(const std::vector<int>& nodes) {
  Json out = Json::array();
  for (int v : nodes) out.push_back(v + 1);
  return out;
}

std::string expect_dims(const Matrix& m, Eigen::Index r, Eigen::Index c) {
  if (m.rows() == r && m.cols() == c) return {};
  return "expected " + std::to_string(r) + "x" + std::to_string(c) + ", got " + std::to_string(m.rows()) + "x" +
         std::to_string(m.cols());
}

}  // namespace

std::string gains_to_json(const GainSet& gains) {
  Json j;
  j["W"] = matrix_to_json(gains.w);
  Json l = Json::array();
  for (const auto& li : gains.l) l.push_back(matrix_to_json(li));
  j["L"] = std::move(l);
  Json m = Json::array();
  // Sorted by receiving node, then sender.
  std::vector<std::pair<Edge, const Matrix*>> blocks;
  for (const auto& [e, blk] : gains.m) blocks.emplace_back(e, &blk);
  std::sort(blocks.begin(), blocks.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first.to, a.first.from) < std::tie(b.first.to, b.first.from);
  });
  for (const auto& [e, blk] : blocks) {
    Json entry;
    entry["from"] = e.from + 1;
    entry["to"] = e.to + 1;
    entry["block"] = matrix_to_json(*blk);
    m.push_back(std::move(entry));
  }
  j["M"] = std::move(m);
  return j.dump(2) + "\n";
}

GainSet gains_from_json(std::string_view text, const Problem& problem) {
  const Json doc = detail::parse_document(text, "gains");
  if (!doc.is_object()) throw ProblemError("gains", "must be an object");
  detail::reject_unknown_keys(doc, "gains", {"W", "L", "M"});
  for (const char* key : {"W", "L", "M"}) {
    if (!doc.contains(key)) throw ProblemError(key, "missing required key");
  }
  const int n = problem.graph.node_count(), nx = problem.system.state_dim();
  GainSet g;
  g.w = matrix_from_json(doc["W"], "W");
  if (auto msg = expect_dims(g.w, n, n); !msg.empty()) throw ProblemError("W", msg);

  const Json& jl = doc["L"];
  if (!jl.is_array()) throw ProblemError("L", "must be an array of per-node matrices");
  if (static_cast<int>(jl.size()) != n)
    throw ProblemError("L", "expected " + std::to_string(n) + " blocks, got " + std::to_string(jl.size()));
  for (int i = 0; i < n; ++i) {
    const std::string path = "L[" + std::to_string(i) + "]";
    const int ny = problem.system.output_dim(i);
    Matrix li = matrix_from_json(jl[static_cast<std::size_t>(i)], path, ny);
    if (li.rows() == 0 && ny == 0) li = Matrix(nx, 0);
    if (auto msg = expect_dims(li, nx, ny); !msg.empty()) throw ProblemError(path, msg);
    g.l.push_back(std::move(li));
  }

  const Json& jm = doc["M"];
  if (!jm.is_array()) throw ProblemError("M", "must be an array of {from, to, block}");
  for (std::size_t k = 0; k < jm.size(); ++k) {
    const std::string path = "M[" + std::to_string(k) + "]";
    const Json& e = jm[k];
    if (!e.is_object()) throw ProblemError(path, "must be an object");
    detail::reject_unknown_keys(e, path, {"from", "to", "block"});
    if (!e.contains("from") || !e["from"].is_number_integer() || !e.contains("to") || !e["to"].is_number_integer())
      throw ProblemError(path, "from/to must be integer node indices");
    const int from = e["from"].get<int>() - 1, to = e["to"].get<int>() - 1;
    if (from < 0 || from >= n || to < 0 || to >= n)
      throw ProblemError(path, "node index out of range 1.." + std::to_string(n));
    if (!problem.graph.has_edge(from, to))
      throw ProblemError(path, "no edge [" + std::to_string(from + 1) + ", " + std::to_string(to + 1) + "] in the graph");
    if (!e.contains("block")) throw ProblemError(path + ".block", "missing required key");
    Matrix blk = matrix_from_json(e["block"], path + ".block");
    if (auto msg = expect_dims(blk, nx, nx); !msg.empty()) throw ProblemError(path + ".block", msg);
    if (!g.m.emplace(Edge{from, to}, std::move(blk)).second) throw ProblemError(path, "duplicate coupling block");
  }
  for (const auto& e : problem.graph.edges()) {
    if (!g.m.count(e))
      throw ProblemError("M", "missing block for edge [" + std::to_string(e.from + 1) + ", " + std::to_string(e.to + 1) + "]");
  }
  try {
    (void)assemble(problem.system, problem.graph, g);
  } catch (const GainError& err) {
    throw ProblemError("gains", err.what());
  }
  return g;
}

GainSet load_gains_file(const std::string& path, const Problem& problem) {
  return gains_from_json(detail::read_file(path), problem);
}

std::string state_to_json(const SynthesisState& s) {
  Json j;
  j["status"] = to_string(s.status);
  j["iterations"] = s.iteration;
  j["eps_tol"] = s.eps_tol;
  j["J_history"] = numbers_to_json(s.j_history);
  j["complementarity_history"] = numbers_to_json(s.complementarity_history);
  j["nmi_history"] = numbers_to_json(s.nmi_history);
  j["witness"] = to_string(s.witness);
  j["trace_cap_active"] = s.trace_cap_active;
  j["diagnostics"] = s.diagnostics;
  j["certificate"] = s.certificate.size() ? matrix_to_json(s.certificate) : Json::array();
  j["Q"] = s.q.size() ? matrix_to_json(s.q) : Json::array();
  j["P"] = s.p.size() ? matrix_to_json(s.p) : Json::array();
  return j.dump(2) + "\n";
}

Matrix certificate_from_state_json(std::string_view text) {
  const Json doc = detail::parse_document(text, "state");
  if (!doc.is_object() || !doc.contains("certificate")) throw ProblemError("certificate", "missing required key");
  Matrix q = matrix_from_json(doc["certificate"], "certificate");
  if (q.rows() == 0 || q.rows() != q.cols()) throw ProblemError("certificate", "must be a non-empty square matrix");
  return q;
}

std::string reports_to_json(const DetectabilityReport& det, const ConnectivityReport& conn) {
  Json j;
  Json d;
  d["joint_detectable"] = det.joint_detectable;
  d["marginal"] = det.marginal;
  d["critical_nodes"] = nodes_to_json(det.critical_nodes);
  Json modes = Json::array();
  for (const auto& z : det.undetectable_modes) modes.push_back(Json::array({z.real(), z.imag()}));
  d["undetectable_modes"] = std::move(modes);
  j["detectability"] = std::move(d);
  Json c;
  c["strongly_connected"] = conn.strongly_connected;
  c["minimal"] = conn.minimal;
  Json red = Json::array();
  for (const auto& e : conn.redundant_edges) red.push_back(edge_to_json(e));
  c["redundant_edges"] = std::move(red);
  Json src = Json::array();
  for (const auto& comp : conn.source_components) src.push_back(nodes_to_json(comp));
  c["source_components"] = std::move(src);
  Json comps = Json::array();
  for (const auto& comp : conn.components) comps.push_back(nodes_to_json(comp));
  c["components"] = std::move(comps);
  j["connectivity"] = std::move(c);
  return j.dump(2) + "\n";
}

std::string explore_report_to_json(const ExploreReport& report) {
  Json j;
  j["baseline"] = {{"status", to_string(report.baseline_status)}, {"iterations", report.baseline_iterations}};
  Json list = Json::array();
  for (const auto& r : report.ranked) {
    Json c;
    c["candidate"] = r.candidate.label();
    if (r.candidate.kind == RepairKind::add_edge) {
      c["kind"] = "add_edge";
      c["from"] = r.candidate.edge.from + 1;
      c["to"] = r.candidate.edge.to + 1;
    } else {
      c["kind"] = "augment_sensor";
      c["node"] = r.candidate.node + 1;
      c["extra_rows"] = matrix_to_json(r.candidate.extra_rows);
    }
    c["status"] = to_string(r.status);
    c["iterations"] = r.iterations;
    c["final_complementarity"] = number_or_null(r.final_complementarity);
    c["spectral_radius"] = number_or_null(r.spectral_radius);
    c["simulation_ok"] = r.simulation_ok;
    c["simulated_error_ratio"] = number_or_null(r.simulated_ratio);
    if (!r.diagnostics.empty()) c["diagnostics"] = r.diagnostics;
    list.push_back(std::move(c));
  }
  j["candidates"] = std::move(list);
  return j.dump(2) + "\n";
}

std::string program_to_json(const conic::Program& p) {
  Json j;
  j["num_vars"] = p.num_vars;
  j["objective"] = detail::vector_to_json(p.objective);
  j["cones"] = Json::array();
  for (int s : p.block_sizes) j["cones"].push_back({{"type", "psd"}, {"size", s}});
  Json coeffs = Json::array();
  for (const auto& c : p.coefficients) {
    coeffs.push_back({{"cone", c.block}, {"var", c.var == conic::kConstant ? Json(nullptr) : Json(c.var)},
                      {"row", c.row}, {"col", c.col}, {"value", c.value}});
  }
  j["coefficients"] = std::move(coeffs);
  if (p.eq_matrix.rows() > 0) {
    j["equalities"] = {{"matrix", matrix_to_json(p.eq_matrix)}, {"rhs", detail::vector_to_json(p.eq_rhs)}};
  }
  return j.dump(1) + "\n";
}

std::string manifest_to_json(const RunManifest& m) {
  Json j;
  j["command"] = m.command;
  j["problem"] = {{"path", m.problem_path}, {"sha256", m.problem_hash}};
  j["options"] = detail::options_to_json(m.options);
  j["tool_version"] = m.tool_version;
  j["timestamp"] = m.timestamp;
  Json out = Json::object();
  for (const auto& [k, v] : m.outcome) out[k] = v;
  j["outcome"] = std::move(out);
  return j.dump(2) + "\n";
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace distobs
