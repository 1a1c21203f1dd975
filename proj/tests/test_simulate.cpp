#include "distobs/simulate.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace distobs;
using namespace distobs::test;

namespace {

struct Instance {
  Problem problem;
  GainSet gains;
};

/// Random instance whose error matrix S is contractive enough for long runs.
Instance random_stable_instance(std::mt19937_64& rng) {
  for (;;) {
    const int n = 1 + static_cast<int>(rng() % 4), nx = 1 + static_cast<int>(rng() % 3);
    const LtiSystem sys = random_system(rng, n, nx, 0.4);
    const SensorGraph g = random_graph(rng, n, 0.5);
    const GainSet gs = random_gains(rng, sys, g, 0.2);
    if (spectral_radius(assemble(sys, g, gs).s) < 0.9) return {Problem(sys, g), gs};
  }
}

SimConfig random_config(std::mt19937_64& rng, const Problem& p, int steps) {
  SimConfig c;
  c.steps = steps;
  const int nx = p.system.state_dim();
  c.x0 = random_vector(rng, nx);
  for (int i = 0; i < p.system.node_count(); ++i) c.xhat0.push_back(random_vector(rng, nx));
  return c;
}

}  // namespace

TEST(Simulate, ZeroInitialErrorStaysZero) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = random_stable_instance(rng);
    SimConfig c = random_config(rng, inst.problem, 30);
    for (auto& xh : c.xhat0) xh = c.x0;
    c.input = ConstantInput{Vector::Ones(1)};
    const auto tr = run(inst.problem, inst.gains, c);
    for (const auto& e : tr.stacked_errors) EXPECT_EQ(e.norm(), 0.0);
  }
}

TEST(Simulate, SingleNodeLuenbergerMatchesClosedForm) {
  // e(t) = (a + l c)^t e(0) for a scalar plant.
  const LtiSystem sys(diag({1.5}), Matrix::Ones(1, 1), {Matrix::Constant(1, 1, 2.0)});
  const Problem p(sys, SensorGraph(1, {}));
  GainSet gs = GainSet::identity(sys, p.graph);
  gs.l[0](0, 0) = -0.6;  // 1.5 - 1.2 = 0.3
  SimConfig c;
  c.steps = 20;
  c.x0 = Vector::Constant(1, 2.0);
  c.xhat0 = {Vector::Constant(1, -1.0)};
  c.input = ConstantInput{Vector::Constant(1, 0.7)};
  const auto tr = run(p, gs, c);
  ASSERT_EQ(tr.steps(), 20);
  for (int t = 0; t <= 20; ++t) EXPECT_NEAR(tr.stacked_errors[static_cast<std::size_t>(t)](0), 3.0 * std::pow(0.3, t), 1e-15);
}

TEST(Simulate, MatchesErrorRecursion) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_stable_instance(rng);
    const auto tr = run(inst.problem, inst.gains, random_config(rng, inst.problem, 50));
    EXPECT_LT(tr.recursion_defect, 1e-8);
    // Independent propagation of e(t+1) = S e(t).
    const Matrix s = assemble(inst.problem.system, inst.problem.graph, inst.gains).s;
    Vector e = tr.stacked_errors.front();
    for (int t = 1; t <= 50; ++t) {
      e = s * e;
      const Vector& got = tr.stacked_errors[static_cast<std::size_t>(t)];
      EXPECT_LE((got - e).norm(), 1e-8 * std::max(1.0, e.norm()) + 1e-12);
    }
  }
}

TEST(Simulate, InputCancelsFromTheError) {
  std::mt19937_64 rng(3);
  const auto inst = random_stable_instance(rng);
  const SimConfig base = random_config(rng, inst.problem, 25);
  const auto ref = run(inst.problem, inst.gains, base);
  for (int k = 0; k < 10; ++k) {
    SimConfig c = base;
    InputSequence seq;
    for (int t = 0; t < 25; ++t) seq.u.push_back(random_vector(rng, 1, 5.0));
    c.input = seq;
    const auto tr = run(inst.problem, inst.gains, c);
    for (int t = 0; t <= 25; ++t) {
      const auto& a = tr.stacked_errors[static_cast<std::size_t>(t)];
      const auto& b = ref.stacked_errors[static_cast<std::size_t>(t)];
      EXPECT_LE((a - b).norm(), 1e-12 * (1.0 + b.norm()));
    }
  }
}

TEST(Simulate, StepAgreesWithRun) {
  std::mt19937_64 rng(4);
  const auto inst = random_stable_instance(rng);
  const SimConfig c = random_config(rng, inst.problem, 5);
  const auto tr = run(inst.problem, inst.gains, c);
  Vector x = c.x0;
  std::vector<Vector> xh = c.xhat0;
  for (int t = 0; t < 5; ++t) {
    const auto r = step(inst.problem, inst.gains, x, xh, Vector::Zero(1));
    x = r.x_next;
    xh = r.xhats_next;
    EXPECT_LT((x - tr.states[static_cast<std::size_t>(t + 1)]).norm(), 1e-10 * (1.0 + x.norm()));
    for (std::size_t i = 0; i < xh.size(); ++i)
      EXPECT_LT((xh[i] - tr.estimates[static_cast<std::size_t>(t + 1)][i]).norm(), 1e-10 * (1.0 + xh[i].norm()));
  }
}

TEST(Simulate, UnstablePlantKeepsErrorExact) {
  // x grows like 10^t while the error contracts; exact arithmetic keeps the difference.
  const LtiSystem sys(diag({10.0}), Matrix::Zero(1, 1), {Matrix::Ones(1, 1)});
  const Problem p(sys, SensorGraph(1, {}));
  GainSet gs = GainSet::identity(sys, p.graph);
  gs.l[0](0, 0) = -9.5;
  SimConfig c;
  c.steps = 60;
  c.x0 = Vector::Ones(1);
  c.xhat0 = {Vector::Zero(1)};
  const auto tr = run(p, gs, c);
  EXPECT_NEAR(tr.stacked_errors.back()(0) / std::pow(0.5, 60), 1.0, 1e-12);
  EXPECT_GT(tr.states.back()(0), 1e59);
}

TEST(Simulate, MessageAccounting) {
  const Problem p = load_problem_file(problem_path("five_node_cycle.json"));
  const auto tr = run(p, GainSet::identity(p.system, p.graph), SimConfig::reproduction(p, 4));
  EXPECT_EQ(tr.message_count, std::vector<int>(4, 5));
  EXPECT_EQ(tr.message_dimension, 5);
  EXPECT_EQ(tr.initial_error_norm(), std::sqrt(25.0));
}

TEST(Simulate, ValidatesConfiguration) {
  const Problem p = load_problem_file(problem_path("five_node_cycle.json"));
  const GainSet gs = GainSet::identity(p.system, p.graph);
  SimConfig c = SimConfig::reproduction(p, 3);
  c.x0 = Vector::Ones(4);
  EXPECT_THROW((void)run(p, gs, c), SimulationError);
  c = SimConfig::reproduction(p, 3);
  c.xhat0.pop_back();
  EXPECT_THROW((void)run(p, gs, c), SimulationError);
  c = SimConfig::reproduction(p, 3);
  c.input = ConstantInput{Vector::Ones(3)};
  EXPECT_THROW((void)run(p, gs, c), SimulationError);
  c = SimConfig::reproduction(p, 3);
  c.input = InputSequence{{Vector::Ones(2)}};
  EXPECT_THROW((void)run(p, gs, c), SimulationError);
  c = SimConfig::reproduction(p, 3);
  c.record_lyapunov = true;
  EXPECT_THROW((void)run(p, gs, c), SimulationError);
}

TEST(Lyapunov, DecreasesForCertifiedGains) {
  // Scalar S = 0.5 with Q = 1: V(t) = 0.25^t V(0).
  const LtiSystem sys(diag({2.0}), Matrix::Zero(1, 1), {Matrix::Ones(1, 1)});
  const Problem p(sys, SensorGraph(1, {}));
  GainSet gs = GainSet::identity(sys, p.graph);
  gs.l[0](0, 0) = -1.5;
  SimConfig c;
  c.steps = 10;
  c.x0 = Vector::Ones(1);
  c.xhat0 = {Vector::Zero(1)};
  c.record_lyapunov = true;
  const auto tr = run(p, gs, c, Matrix::Ones(1, 1));
  ASSERT_EQ(tr.lyapunov.size(), 11u);
  for (int t = 0; t <= 10; ++t) EXPECT_NEAR(tr.lyapunov[static_cast<std::size_t>(t)], std::pow(0.25, t), 1e-15);
  EXPECT_EQ(first_lyapunov_violation(tr, tr.lyapunov), -1);
}

TEST(Lyapunov, ReportsFirstIncrease) {
  const LtiSystem sys(diag({2.0}), Matrix::Zero(1, 1), {Matrix::Ones(1, 1)});
  const Problem p(sys, SensorGraph(1, {}));
  SimConfig c;
  c.steps = 3;
  c.x0 = Vector::Ones(1);
  c.xhat0 = {Vector::Zero(1)};
  const auto tr = run(p, GainSet::identity(sys, p.graph), c);
  EXPECT_EQ(first_lyapunov_violation(tr, lyapunov_trace(tr, Matrix::Ones(1, 1))), 0);
  EXPECT_THROW((void)lyapunov_trace(tr, -Matrix::Ones(1, 1)), std::invalid_argument);
}

TEST(Lyapunov, FloorStopsTheCheck) {
  const LtiSystem sys(diag({0.0}), Matrix::Zero(1, 1), {Matrix::Ones(1, 1)});
  const Problem p(sys, SensorGraph(1, {}));
  SimConfig c;
  c.steps = 3;
  c.x0 = Vector::Ones(1);
  c.xhat0 = {Vector::Zero(1)};
  const auto tr = run(p, GainSet::identity(sys, p.graph), c);
  // e goes 1, 0, 0, 0: V stays at zero after the first step but e is below the floor.
  EXPECT_EQ(first_lyapunov_violation(tr, lyapunov_trace(tr, Matrix::Ones(1, 1))), -1);
}

TEST(TrajectoryCsv, HeaderAndRows) {
  const LtiSystem sys(diag({0.5, 0.5}), Matrix::Zero(2, 1), {unit_row(2, 0), unit_row(2, 1)});
  const Problem p(sys, cycle(2));
  SimConfig c;
  c.steps = 2;
  c.x0 = Vector::Ones(2);
  c.xhat0 = {Vector::Zero(2), Vector::Zero(2)};
  c.record_lyapunov = true;
  const auto tr = run(p, GainSet::identity(sys, p.graph), c, Matrix::Identity(4, 4));
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,norm_e_1,norm_e_2,V");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);

  std::ostringstream full;
  write_trajectory_csv(full, tr, true);
  EXPECT_EQ(full.str().substr(0, full.str().find('\n')),
            "t,norm_e_1,norm_e_2,V,x_1,x_2,xhat_1_1,xhat_1_2,xhat_2_1,xhat_2_2");
}

TEST(Reproduction, InitialConditions) {
  const Problem p = load_problem_file(problem_path("five_node_cycle.json"));
  const auto c = SimConfig::reproduction(p);
  EXPECT_EQ(c.steps, 60);
  EXPECT_EQ(c.x0, Vector::Ones(5));
  ASSERT_EQ(c.xhat0.size(), 5u);
  for (const auto& v : c.xhat0) EXPECT_EQ(v, Vector::Zero(5));
}
