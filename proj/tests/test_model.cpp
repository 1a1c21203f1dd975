#include "distobs/model.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace distobs;
using namespace distobs::test;

namespace {

const char* kSingleNode = R"({"A": [[0.5]], "B": [[1]], "nodes": [{"C": [[1]]}], "graph": {"edges": []}})";

std::string error_path(const std::string& doc) {
  try {
    (void)load_problem(doc);
  } catch (const ProblemError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST(LoadProblem, FiveNodeCycle) {
  const Problem p = load_problem_file(problem_path("five_node_cycle.json"));
  EXPECT_EQ(p.system.node_count(), 5);
  EXPECT_EQ(p.system.state_dim(), 5);
  EXPECT_EQ(p.system.input_dim(), 2);
  EXPECT_EQ(p.graph.edges().size(), 5u);
  EXPECT_DOUBLE_EQ(p.system.a()(1, 1), 10.0);
  EXPECT_DOUBLE_EQ(p.system.a()(0, 0), -1.5);
  EXPECT_TRUE(p.graph.has_edge(0, 1));
  EXPECT_TRUE(p.graph.has_edge(4, 0));
  EXPECT_FALSE(p.graph.has_edge(1, 0));
}

TEST(LoadProblem, SingleNode) {
  const Problem p = load_problem(kSingleNode);
  EXPECT_EQ(p.system.node_count(), 1);
  EXPECT_TRUE(p.graph.edges().empty());
  EXPECT_TRUE(p.graph.neighbors(0).empty());
}

TEST(LoadProblem, ColumnMismatchNamesOutput) {
  const std::string doc = R"({"A": [[1,0],[0,1]], "B": [[1],[0]],
    "nodes": [{"C": [[1, 0]]}, {"C": [[1, 0, 0]]}], "graph": {"edges": [[1,2]]}})";
  EXPECT_EQ(error_path(doc), "outputs[1]");
}

TEST(LoadProblem, FieldPathsOnSchemaErrors) {
  EXPECT_EQ(error_path(R"({"A": [[1]], "B": [[1]], "nodes": [{"C": [[1]]}], "graph": {"edges": []}, "extra": 1})"),
            "extra");
  EXPECT_EQ(error_path(R"({"A": [[1]], "B": [[1]], "nodes": [{"C": [[1]], "D": 0}], "graph": {"edges": []}})"),
            "nodes[0].D");
  EXPECT_EQ(error_path(R"({"A": [[1, 2]], "B": [[1]], "nodes": [{"C": [[1]]}], "graph": {"edges": []}})"), "A");
  EXPECT_EQ(error_path(R"({"A": [[1,0],[0]], "B": [[1],[1]], "nodes": [{"C": [[1,0]]}], "graph": {"edges": []}})"),
            "A[1]");
  EXPECT_EQ(error_path(R"({"A": [[1]], "B": [[1]], "nodes": [{"C": [[1]]}], "graph": {"edges": []},
                           "options": {"max_iter": 0}})"),
            "options.max_iter");
  EXPECT_EQ(error_path(R"({"A": [[1]], "B": [[1]], "nodes": [{"C": [[1]]}], "graph": {"edges": []},
                           "options": {"colour": 1}})"),
            "options.colour");
}

TEST(LoadProblem, GraphErrors) {
  const std::string head = R"({"A": [[1]], "B": [[1]], "nodes": [{"C": [[1]]}, {"C": [[1]]}], "graph": {"edges": )";
  EXPECT_EQ(error_path(head + "[[1,2],[1,2]]}}"), "graph.edges[1]");
  EXPECT_EQ(error_path(head + "[[2,2]]}}"), "graph.edges[0]");
  EXPECT_EQ(error_path(head + "[[1,3]]}}"), "graph.edges[0]");
  EXPECT_EQ(error_path(head + "[[1]]}}"), "graph.edges[0]");
}

TEST(LoadProblem, NodeCountMismatchIsReported) {
  EXPECT_THROW(Problem(LtiSystem(Matrix::Identity(1, 1), Matrix::Zero(1, 0), {Matrix::Ones(1, 1)}), SensorGraph(2, {})),
               ProblemError);
}

TEST(LoadProblem, ZeroRowOutputAllowed) {
  const Problem p = load_problem(
      R"({"A": [[1,0],[0,1]], "B": [], "nodes": [{"C": [[1, 0]]}, {"C": []}], "graph": {"edges": [[1,2],[2,1]]}})");
  EXPECT_EQ(p.system.output_dim(1), 0);
  EXPECT_EQ(p.system.output(1).cols(), 2);
  EXPECT_EQ(p.system.input_dim(), 0);
}

TEST(LoadProblem, RoundTrip) {
  for (const char* name : {"five_node_cycle.json", "five_node_cycle_node4_augmented.json"}) {
    const Problem p = load_problem_file(problem_path(name));
    const Problem q = load_problem(save_problem(p));
    EXPECT_EQ(p.system.a(), q.system.a());
    EXPECT_EQ(p.system.b(), q.system.b());
    ASSERT_EQ(p.system.node_count(), q.system.node_count());
    for (int i = 0; i < p.system.node_count(); ++i) EXPECT_EQ(p.system.output(i), q.system.output(i));
    EXPECT_EQ(p.graph, q.graph);
    EXPECT_EQ(p.options, q.options);
  }
}

TEST(LoadProblem, RoundTripRandomDecimals) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const LtiSystem sys = random_system(rng, 3, 3);
    SynthesisOptions o;
    o.eps_tol = 0.00125;
    o.delta = 3.5e-5;
    o.decay_rate = 0.75;
    o.max_iter = 17;
    o.nonneg_w = true;
    const Problem p(sys, random_graph(rng, 3, 0.5), o);
    const Problem q = load_problem(save_problem(p));
    EXPECT_EQ(p.system.a(), q.system.a());
    for (int i = 0; i < 3; ++i) EXPECT_EQ(p.system.output(i), q.system.output(i));
    EXPECT_EQ(p.graph, q.graph);
    EXPECT_EQ(p.options, q.options);
  }
}

TEST(StackedOutput, SectionFiveIsIdentity) {
  const Problem p = load_problem_file(problem_path("five_node_cycle.json"));
  EXPECT_EQ(stacked_output(p.system), Matrix::Identity(5, 5));
}

TEST(StackedOutput, ZeroRowAndTwoNode) {
  const LtiSystem one(Matrix::Identity(3, 3), Matrix::Zero(3, 1), {Matrix::Zero(0, 3)});
  const Matrix c = stacked_output(one);
  EXPECT_EQ(c.rows(), 0);
  EXPECT_EQ(c.cols(), 3);
  const LtiSystem two(Matrix::Identity(2, 2), Matrix::Zero(2, 1), {unit_row(2, 0), unit_row(2, 1)});
  EXPECT_EQ(stacked_output(two), Matrix::Identity(2, 2));
}

TEST(StackedOutput, BlocksPreserved) {
  std::mt19937_64 rng(3);
  const LtiSystem sys(Matrix::Identity(3, 3), Matrix::Zero(3, 1),
                      {random_matrix(rng, 2, 3), random_matrix(rng, 0, 3), random_matrix(rng, 1, 3)});
  const Matrix c = stacked_output(sys);
  ASSERT_EQ(c.rows(), sys.total_output_dim());
  EXPECT_EQ(c.topRows(2), sys.output(0));
  EXPECT_EQ(c.bottomRows(1), sys.output(2));
}

TEST(NeighborSets, Examples) {
  const auto cyc = neighbor_sets(cycle(5));
  EXPECT_EQ(cyc[0], std::vector<int>{4});
  EXPECT_EQ(cyc[1], std::vector<int>{0});
  EXPECT_EQ(cyc[4], std::vector<int>{3});
  for (const auto& s : neighbor_sets(SensorGraph(4, {}))) EXPECT_TRUE(s.empty());
  const auto k3 = neighbor_sets(complete(3));
  EXPECT_EQ(k3[0], (std::vector<int>{1, 2}));
  EXPECT_EQ(k3[1], (std::vector<int>{0, 2}));
  EXPECT_EQ(k3[2], (std::vector<int>{0, 1}));
}

TEST(SensorGraph, AdjacencyConsistentWithEdges) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const SensorGraph g = random_graph(rng, 5, 0.4);
    int count = 0;
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        EXPECT_EQ(g.adjacency()(i, j) == 1, g.has_edge(i, j));
        count += g.adjacency()(i, j);
      }
    }
    EXPECT_EQ(count, static_cast<int>(g.edges().size()));
  }
}
