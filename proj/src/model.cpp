#include "distobs/model.hpp"

#include "json_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace distobs {

using detail::Json;

LtiSystem::LtiSystem(Matrix a, Matrix b, std::vector<Matrix> outputs)
    : a_(std::move(a)), b_(std::move(b)), outputs_(std::move(outputs)) {
  if (a_.rows() == 0 || a_.rows() != a_.cols()) {
    throw ProblemError("A", "must be a non-empty square matrix, got " + std::to_string(a_.rows()) + "x" +
                                std::to_string(a_.cols()));
  }
  if (b_.rows() != a_.rows()) {
    throw ProblemError("B", "expected " + std::to_string(a_.rows()) + " rows, got " + std::to_string(b_.rows()));
  }
  if (outputs_.empty()) throw ProblemError("outputs", "at least one node is required");
  for (std::size_t i = 0; i < outputs_.size(); ++i) {
    if (outputs_[i].cols() != a_.rows()) {
      throw ProblemError("outputs[" + std::to_string(i) + "]",
                         "expected " + std::to_string(a_.rows()) + " columns, got " +
                             std::to_string(outputs_[i].cols()));
    }
  }
  auto finite = [](const Matrix& m) { return m.allFinite(); };
  if (!finite(a_)) throw ProblemError("A", "non-finite entry");
  if (!finite(b_)) throw ProblemError("B", "non-finite entry");
  for (std::size_t i = 0; i < outputs_.size(); ++i) {
    if (!finite(outputs_[i])) throw ProblemError("outputs[" + std::to_string(i) + "]", "non-finite entry");
  }
}

int LtiSystem::total_output_dim() const {
  int total = 0;
  for (const auto& c : outputs_) total += static_cast<int>(c.rows());
  return total;
}

LtiSystem LtiSystem::with_output(int node, Matrix c) const {
  auto outputs = outputs_;
  outputs.at(static_cast<std::size_t>(node)) = std::move(c);
  return LtiSystem(a_, b_, std::move(outputs));
}

SensorGraph::SensorGraph(int node_count, std::vector<Edge> edges) : node_count_(node_count), edges_(std::move(edges)) {
  if (node_count_ < 1) throw ProblemError("graph", "node count must be at least 1");
  std::sort(edges_.begin(), edges_.end());
  adjacency_ = Eigen::MatrixXi::Zero(node_count_, node_count_);
  neighbors_.assign(static_cast<std::size_t>(node_count_), {});
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    const std::string path = "graph.edges[" + std::to_string(k) + "]";
    if (e.from < 0 || e.from >= node_count_ || e.to < 0 || e.to >= node_count_) {
      throw ProblemError(path, "node index out of range");
    }
    if (e.from == e.to) throw ProblemError(path, "self-loop on node " + std::to_string(e.from + 1));
    if (k > 0 && edges_[k - 1] == e) {
      throw ProblemError(path, "duplicate edge [" + std::to_string(e.from + 1) + ", " + std::to_string(e.to + 1) + "]");
    }
    adjacency_(e.from, e.to) = 1;
    neighbors_[static_cast<std::size_t>(e.to)].push_back(e.from);
  }
  for (auto& n : neighbors_) std::sort(n.begin(), n.end());
}

bool SensorGraph::has_edge(int from, int to) const {
  if (from < 0 || to < 0 || from >= node_count_ || to >= node_count_) return false;
  return adjacency_(from, to) != 0;
}

SensorGraph SensorGraph::with_edge(Edge e) const {
  auto edges = edges_;
  edges.push_back(e);
  return SensorGraph(node_count_, std::move(edges));
}

SensorGraph SensorGraph::without_edge(Edge e) const {
  auto edges = edges_;
  edges.erase(std::remove(edges.begin(), edges.end(), e), edges.end());
  return SensorGraph(node_count_, std::move(edges));
}

Problem::Problem(LtiSystem sys, SensorGraph g, SynthesisOptions opts)
    : system(std::move(sys)), graph(std::move(g)), options(opts) {
  if (graph.node_count() != system.node_count()) {
    throw ProblemError("graph", "graph has " + std::to_string(graph.node_count()) + " nodes but the system has " +
                                    std::to_string(system.node_count()) + " outputs");
  }
  if (options.eps_tol && !(*options.eps_tol > 0.0)) throw ProblemError("options.eps_tol", "must be positive");
  if (options.delta && !(*options.delta > 0.0)) throw ProblemError("options.delta", "must be positive");
  if (!(options.decay_rate > 0.0 && options.decay_rate <= 1.0))
    throw ProblemError("options.decay_rate", "must lie in (0, 1]");
  if (options.max_iter < 1) throw ProblemError("options.max_iter", "must be at least 1");
  if (!(options.delta_q > 0.0)) throw ProblemError("options.delta_q", "must be positive");
  if (!(options.trace_cap > 0.0)) throw ProblemError("options.trace_cap", "must be positive");
}

Matrix stacked_output(const LtiSystem& system) {
  return vertical_stack(system.outputs(), system.state_dim());
}

std::vector<std::vector<int>> neighbor_sets(const SensorGraph& graph) {
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(graph.node_count()));
  for (int i = 0; i < graph.node_count(); ++i) out.push_back(graph.neighbors(i));
  return out;
}

Problem load_problem(std::string_view document) {
  const Json doc = detail::parse_document(document, "problem");
  if (!doc.is_object()) throw ProblemError("$", "problem document must be an object");
  detail::reject_unknown_keys(doc, "", {"A", "B", "nodes", "graph", "options"});
  for (const char* key : {"A", "B", "nodes", "graph"}) {
    if (!doc.contains(key)) throw ProblemError(key, "missing required key");
  }

  Matrix a = detail::matrix_from_json(doc["A"], "A");
  if (a.rows() == 0 || a.rows() != a.cols()) throw ProblemError("A", "must be a non-empty square matrix");
  const Eigen::Index nx = a.rows();
  Matrix b = detail::matrix_from_json(doc["B"], "B");
  if (b.rows() == 0 && b.cols() == 0) b = Matrix(nx, 0);

  const Json& nodes = doc["nodes"];
  if (!nodes.is_array() || nodes.empty()) throw ProblemError("nodes", "must be a non-empty array");
  std::vector<Matrix> outputs;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "nodes[" + std::to_string(i) + "]";
    const Json& node = nodes[i];
    if (!node.is_object()) throw ProblemError(path, "must be an object");
    detail::reject_unknown_keys(node, path, {"C"});
    if (!node.contains("C")) throw ProblemError(path + ".C", "missing required key");
    outputs.push_back(detail::matrix_from_json(node["C"], path + ".C", nx));
  }

  const Json& graph = doc["graph"];
  if (!graph.is_object()) throw ProblemError("graph", "must be an object");
  detail::reject_unknown_keys(graph, "graph", {"edges"});
  if (!graph.contains("edges")) throw ProblemError("graph.edges", "missing required key");
  const Json& jedges = graph["edges"];
  if (!jedges.is_array()) throw ProblemError("graph.edges", "must be an array");
  std::vector<Edge> edges;
  const int n = static_cast<int>(nodes.size());
  for (std::size_t k = 0; k < jedges.size(); ++k) {
    const std::string path = "graph.edges[" + std::to_string(k) + "]";
    const Json& e = jedges[k];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
      throw ProblemError(path, "edge must be a pair of integer node indices [from, to]");
    }
    const int from = e[0].get<int>(), to = e[1].get<int>();
    if (from < 1 || from > n || to < 1 || to > n) {
      throw ProblemError(path, "node index out of range 1.." + std::to_string(n));
    }
    if (from == to) throw ProblemError(path, "self-loop on node " + std::to_string(from));
    for (const auto& prev : edges) {
      if (prev.from == from - 1 && prev.to == to - 1) {
        throw ProblemError(path, "duplicate edge [" + std::to_string(from) + ", " + std::to_string(to) + "]");
      }
    }
    edges.push_back({from - 1, to - 1});
  }

  SynthesisOptions options;
  if (doc.contains("options")) options = detail::options_from_json(doc["options"], "options");

  return Problem(LtiSystem(std::move(a), std::move(b), std::move(outputs)), SensorGraph(n, std::move(edges)), options);
}

Problem load_problem_file(const std::string& path) { return load_problem(detail::read_file(path)); }

std::string save_problem(const Problem& problem) {
  Json doc;
  doc["A"] = detail::matrix_to_json(problem.system.a());
  doc["B"] = detail::matrix_to_json(problem.system.b());
  Json nodes = Json::array();
  for (const auto& c : problem.system.outputs()) nodes.push_back({{"C", detail::matrix_to_json(c)}});
  doc["nodes"] = std::move(nodes);
  Json edges = Json::array();
  for (const auto& e : problem.graph.edges()) edges.push_back({e.from + 1, e.to + 1});
  doc["graph"] = {{"edges", std::move(edges)}};
  doc["options"] = detail::options_to_json(problem.options);
  return doc.dump(2) + "\n";
}

namespace detail {

Json parse_document(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ProblemError("$", what + " is not valid JSON: " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProblemError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void reject_unknown_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw ProblemError(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
  }
}

Matrix matrix_from_json(const Json& j, const std::string& path, Eigen::Index empty_cols) {
  if (!j.is_array()) throw ProblemError(path, "matrix must be an array of rows");
  if (j.empty()) return Matrix(0, empty_cols);
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    const std::string rpath = path + "[" + std::to_string(r) + "]";
    if (!row.is_array()) throw ProblemError(rpath, "row must be an array of numbers");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ProblemError(rpath, "ragged row: expected " + std::to_string(cols) + " entries, got " +
                                    std::to_string(row.size()));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ProblemError(rpath + "[" + std::to_string(c) + "]", "entry must be a number");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

Json matrix_to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Vector vector_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ProblemError(path, "vector must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ProblemError(path + "[" + std::to_string(i) + "]", "entry must be a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

SynthesisOptions options_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ProblemError(path, "must be an object");
  reject_unknown_keys(j, path, {"eps_tol", "delta", "decay_rate", "max_iter", "delta_Q", "trace_cap", "nonneg_W", "symmetric_M"});
  SynthesisOptions o;
  auto number = [&](const char* key) {
    const Json& v = j[key];
    if (!v.is_number()) throw ProblemError(path + "." + key, "must be a number");
    return v.get<double>();
  };
  auto boolean = [&](const char* key) {
    const Json& v = j[key];
    if (!v.is_boolean()) throw ProblemError(path + "." + key, "must be a boolean");
    return v.get<bool>();
  };
  if (j.contains("eps_tol")) o.eps_tol = number("eps_tol");
  if (j.contains("delta")) o.delta = number("delta");
  if (j.contains("decay_rate")) o.decay_rate = number("decay_rate");
  if (j.contains("max_iter")) {
    if (!j["max_iter"].is_number_integer()) throw ProblemError(path + ".max_iter", "must be an integer");
    o.max_iter = j["max_iter"].get<int>();
  }
  if (j.contains("delta_Q")) o.delta_q = number("delta_Q");
  if (j.contains("trace_cap")) o.trace_cap = number("trace_cap");
  if (j.contains("nonneg_W")) o.nonneg_w = boolean("nonneg_W");
  if (j.contains("symmetric_M")) o.symmetric_m = boolean("symmetric_M");
  return o;
}

Json options_to_json(const SynthesisOptions& o) {
  Json j = Json::object();
  if (o.eps_tol) j["eps_tol"] = *o.eps_tol;
  if (o.delta) j["delta"] = *o.delta;
  j["decay_rate"] = o.decay_rate;
  j["max_iter"] = o.max_iter;
  j["delta_Q"] = o.delta_q;
  j["trace_cap"] = o.trace_cap;
  j["nonneg_W"] = o.nonneg_w;
  j["symmetric_M"] = o.symmetric_m;
  return j;
}

}  // namespace detail
}  // namespace distobs
