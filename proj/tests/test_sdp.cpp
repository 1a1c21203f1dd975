#include "distobs/sdp.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace distobs;
using namespace distobs::test;

namespace {

/// Two nodes on a 2-cycle, each measuring one coordinate of an unstable plant.
Problem toy(SynthesisOptions o = {}) {
  const LtiSystem sys(diag({1.2, 0.5}), Matrix::Zero(2, 1), {unit_row(2, 0), unit_row(2, 1)});
  return Problem(sys, cycle(2), o);
}

Problem random_problem(std::mt19937_64& rng, SynthesisOptions o = {}) {
  const int n = 2 + static_cast<int>(rng() % 2), nx = 1 + static_cast<int>(rng() % 2);
  return Problem(random_system(rng, n, nx), random_graph(rng, n, 0.6), o);
}

}  // namespace

TEST(SdpLayout, PackedIndicesAreABijection) {
  std::mt19937_64 rng(1);
  const Problem p = random_problem(rng);
  const auto inst = build_feasibility_instance(p);
  const auto& lay = inst.layout;
  std::set<int> seen;
  for (int r = 0; r < lay.dim; ++r) {
    for (int c = r; c < lay.dim; ++c) {
      EXPECT_EQ(lay.q_var(r, c), lay.q_var(c, r));
      seen.insert(lay.q_var(r, c));
      seen.insert(lay.p_var(r, c));
    }
  }
  EXPECT_EQ(static_cast<int>(seen.size()), lay.dim * (lay.dim + 1));
  EXPECT_EQ(*seen.begin(), 0);
  EXPECT_EQ(*seen.rbegin(), lay.dim * (lay.dim + 1) - 1);
  EXPECT_LE(*seen.rbegin(), lay.num_vars - 1);
}

TEST(SdpInstance, BlocksAreAffineInTheDecisionVariables) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    SynthesisOptions o;
    o.decay_rate = trial % 2 ? 1.0 : 0.7;
    const Problem p = random_problem(rng, o);
    const auto inst = build_feasibility_instance(p);
    const Vector y = random_vector(rng, inst.layout.num_vars);
    Matrix q, pm;
    GainSet gains;
    decode(inst.layout, p.system, y, q, pm, gains);
    const Matrix s = assemble(p.system, p.graph, gains).s;
    const int d = inst.layout.dim;
    const double rate2 = o.decay_rate * o.decay_rate;

    Matrix stab(2 * d, 2 * d);
    stab << rate2 * q, -s.transpose(), -s, pm;
    stab -= inst.params.delta * Matrix::Identity(2 * d, 2 * d);
    EXPECT_LT((inst.program.evaluate_block(inst.stability_block, y) - stab).norm(), 1e-12 * (1.0 + stab.norm()));

    Matrix cone(2 * d, 2 * d);
    cone << q, Matrix::Identity(d, d), Matrix::Identity(d, d), pm;
    EXPECT_LT((inst.program.evaluate_block(inst.cone_block, y) - cone).norm(), 1e-12 * (1.0 + cone.norm()));

    const Matrix qb = q - inst.params.delta_q * Matrix::Identity(d, d);
    EXPECT_LT((inst.program.evaluate_block(inst.q_block, y) - qb).norm(), 1e-12 * (1.0 + qb.norm()));
    EXPECT_NEAR(inst.program.evaluate_block(inst.trace_block, y)(0, 0), inst.params.trace_cap - q.trace(),
                1e-9 * inst.params.trace_cap);

    EXPECT_LT(row_sum_defect(gains.w), 1e-14);
    EXPECT_TRUE(laplacian_nullspace_check(assemble(p.system, p.graph, gains)));
  }
}

TEST(SdpInstance, LinearizedObjectiveIsTraceSum) {
  std::mt19937_64 rng(3);
  const Problem p = random_problem(rng);
  const int d = p.system.node_count() * p.system.state_dim();
  const Matrix qk = random_spd(rng, d), pk = random_spd(rng, d);
  const auto inst = build_linearized_instance(p, qk, pk);
  EXPECT_TRUE(inst.warnings.empty());
  for (int trial = 0; trial < 5; ++trial) {
    const Vector y = random_vector(rng, inst.layout.num_vars);
    Matrix q, pm;
    GainSet gains;
    decode(inst.layout, p.system, y, q, pm, gains);
    const double expected = (qk * pm).trace() + (pk * q).trace();
    EXPECT_NEAR(inst.program.objective.dot(y), expected, 1e-10 * (1.0 + std::abs(expected)));
  }
}

TEST(SdpInstance, AsymmetricAnchorWarns) {
  const Problem p = toy();
  Matrix qk = Matrix::Identity(4, 4);
  qk(0, 1) = 1e-3;
  const auto inst = build_linearized_instance(p, qk, Matrix::Identity(4, 4));
  EXPECT_EQ(inst.warnings.size(), 1u);
  EXPECT_THROW((void)build_linearized_instance(p, Matrix::Identity(3, 3), Matrix::Identity(4, 4)), SdpError);
}

TEST(SdpInstance, OptionalConstraints) {
  SynthesisOptions o;
  o.nonneg_w = true;
  o.symmetric_m = true;
  const Problem p = toy(o);
  const auto plain = build_feasibility_instance(toy());
  const auto inst = build_feasibility_instance(p);
  // Two w_ij >= 0 blocks and two row-sum blocks.
  EXPECT_EQ(inst.program.block_sizes.size(), plain.program.block_sizes.size() + 4);
  // Symmetric 2x2 coupling blocks share their off-diagonal variable.
  EXPECT_EQ(plain.layout.num_vars - inst.layout.num_vars, 2);
  for (const auto& [e, idx] : inst.layout.m_index) EXPECT_EQ(idx(0, 1), idx(1, 0));
}

TEST(SdpSolve, ToyFeasibilityPassesVerification) {
  const Problem p = toy();
  const auto sol = solve(p, build_feasibility_instance(p));
  ASSERT_EQ(sol.status, SdpStatus::optimal) << sol.solver_diagnostics;
  EXPECT_TRUE(sol.verification.passed);
  EXPECT_LT(sol.verification.schur_max_eig, 0.0);
  EXPECT_LT(spectral_radius(assemble(p.system, p.graph, sol.gains).s), 1.0);
  const auto v = verify(p, resolve_sdp_parameters(p), sol.q, sol.p, sol.gains);
  EXPECT_EQ(v.passed, sol.verification.passed);
}

TEST(SdpSolve, DecayRateIsEnforced) {
  SynthesisOptions o;
  o.decay_rate = 0.5;
  const Problem p = toy(o);
  const auto sol = solve(p, build_feasibility_instance(p));
  ASSERT_EQ(sol.status, SdpStatus::optimal) << sol.solver_diagnostics;
  // Before complementarity only alpha^2 Q - S^T P^-1 S >= 0 is certified.
  const Matrix s = assemble(p.system, p.graph, sol.gains).s;
  const Matrix gap = 0.25 * sol.q - s.transpose() * sol.p.inverse() * s;
  EXPECT_GE(min_eigenvalue(symmetrize(gap)), -1e-8 * sol.q.norm());
}

TEST(SdpSolve, EnormousMarginIsInfeasible) {
  SynthesisOptions o;
  o.delta = 1e7;  // alpha^2 Q >= delta I then forces Tr Q past the cap
  const Problem p = toy(o);
  const auto sol = solve(p, build_feasibility_instance(p));
  EXPECT_EQ(sol.status, SdpStatus::infeasible) << sol.solver_diagnostics;
}

TEST(SdpVerify, RejectsCorruptedPoint) {
  const Problem p = toy();
  const auto sol = solve(p, build_feasibility_instance(p));
  ASSERT_EQ(sol.status, SdpStatus::optimal);
  const auto params = resolve_sdp_parameters(p);
  EXPECT_FALSE(verify(p, params, sol.q, Matrix::Zero(sol.p.rows(), sol.p.cols()), sol.gains).passed);
  GainSet bad = sol.gains;
  bad.w(0, 0) += 1e-3;
  EXPECT_FALSE(verify(p, params, sol.q, sol.p, bad).passed);
}

TEST(SdpParameters, Defaults) {
  const Problem p = toy();
  const auto params = resolve_sdp_parameters(p);
  EXPECT_DOUBLE_EQ(params.delta, 1e-6 * (1.0 + p.system.a().norm()));
  EXPECT_DOUBLE_EQ(params.delta_q, 1e-6);
  EXPECT_DOUBLE_EQ(params.trace_cap, 4e6);
  EXPECT_DOUBLE_EQ(params.decay_rate, 1.0);
}
