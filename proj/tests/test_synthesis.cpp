#include "distobs/synthesis.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <regex>

using namespace distobs;
using namespace distobs::test;

namespace {

Problem toy(SynthesisOptions o = {}) {
  const LtiSystem sys(diag({1.2, 0.5}), Matrix::Zero(2, 1), {unit_row(2, 0), unit_row(2, 1)});
  return Problem(sys, cycle(2), o);
}

struct Scalar {
  LtiSystem sys{diag({2.0}), Matrix::Zero(1, 1), {Matrix::Ones(1, 1)}};
  SensorGraph g{1, {}};
  GainSet gains(double l) const {
    GainSet gs = GainSet::identity(sys, g);
    gs.l[0](0, 0) = l;
    return gs;
  }
};

}  // namespace

TEST(NmiCheck, ScalarLuenberger) {
  const Scalar s;
  const Matrix q = Matrix::Ones(1, 1);
  // S = 2 + l
  EXPECT_TRUE(nmi_check(s.sys, s.g, s.gains(-1.5), q));
  EXPECT_NEAR(nmi_margin(s.sys, s.g, s.gains(-1.5), q), 0.25 - 1.0, 1e-15);
  EXPECT_FALSE(nmi_check(s.sys, s.g, s.gains(0.0), q));
  EXPECT_FALSE(nmi_check(s.sys, s.g, s.gains(-1.0), q));  // S = 1 sits on the boundary
  EXPECT_TRUE(nmi_check(s.sys, s.g, s.gains(-1.5), q, 0.6));
  EXPECT_FALSE(nmi_check(s.sys, s.g, s.gains(-1.5), q, 0.4));
}

TEST(NmiCheck, RejectsBadQ) {
  const Scalar s;
  EXPECT_THROW((void)nmi_check(s.sys, s.g, s.gains(-1.5), Matrix::Zero(1, 1)), std::invalid_argument);
  EXPECT_THROW((void)nmi_check(s.sys, s.g, s.gains(-1.5), -Matrix::Ones(1, 1)), std::invalid_argument);
  EXPECT_THROW((void)nmi_check(s.sys, s.g, s.gains(-1.5), Matrix::Identity(2, 2)), std::invalid_argument);
}

TEST(NmiCheck, AgreesWithSpectralRadiusForLyapunovSolution) {
  // For stable S the discrete Lyapunov solution Q = sum (S^T)^k S^k certifies the NMI.
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const LtiSystem sys = random_system(rng, 2, 2, 0.3);
    const SensorGraph g = cycle(2);
    const GainSet gs = random_gains(rng, sys, g, 0.1);
    const Matrix s = assemble(sys, g, gs).s;
    if (spectral_radius(s) >= 0.95) continue;
    Matrix q = Matrix::Identity(4, 4), term = Matrix::Identity(4, 4);
    for (int k = 0; k < 2000; ++k) {
      term = s.transpose() * term * s;
      q += term;
    }
    EXPECT_TRUE(nmi_check(sys, g, gs, q));
  }
}

TEST(InnerInfimum, ScalarMultipleOfIdentity) {
  for (int n : {1, 2, 5}) {
    const auto r = inner_infimum_oracle(4.0 * Matrix::Identity(n, n), Matrix::Identity(n, n));
    EXPECT_NEAR(r.value, 4.0 * n, 1e-12);
    EXPECT_LT((r.minimizer - 0.5 * Matrix::Identity(n, n)).norm(), 1e-12);
  }
}

TEST(InnerInfimum, MatchesNumericalMinimization) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + trial % 5;
    const Matrix qk = random_spd(rng, n), pk = random_spd(rng, n);
    const auto r = inner_infimum_oracle(qk, pk);
    const auto num = oracle::minimize_trace_pair(qk, pk);
    EXPECT_NEAR(r.value, num.value, 1e-6 * std::abs(num.value)) << "trial " << trial;
    EXPECT_LE((r.minimizer * qk * r.minimizer - pk).norm(), 1e-8 * pk.norm()) << "trial " << trial;
    const double f = (qk * r.minimizer).trace() + (pk * r.minimizer.inverse()).trace();
    EXPECT_NEAR(f, r.value, 1e-10 * r.value);
  }
}

TEST(InnerInfimum, RejectsNonPd) {
  EXPECT_THROW((void)inner_infimum_oracle(Matrix::Identity(2, 2), -Matrix::Identity(2, 2)), std::invalid_argument);
  EXPECT_THROW((void)inner_infimum_oracle(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), std::invalid_argument);
}

TEST(Synthesize, ToyConverges) {
  const Problem p = toy();
  std::vector<IterationRecord> seen;
  const auto st = synthesize(p, [&](const IterationRecord& r) { seen.push_back(r); });
  ASSERT_TRUE(converged(st.status)) << to_string(st.status) << " " << st.diagnostics;
  ASSERT_TRUE(st.gains.has_value());
  EXPECT_EQ(seen.size(), st.j_history.size());
  EXPECT_EQ(st.complementarity_history.size(), st.j_history.size() + 1);
  EXPECT_EQ(st.nmi_history.size(), st.j_history.size() + 1);
  EXPECT_EQ(st.iteration, static_cast<int>(st.j_history.size()));
  EXPECT_NE(st.witness, Witness::none);
  EXPECT_TRUE(nmi_check(p.system, p.graph, *st.gains, st.certificate));
  EXPECT_LT(spectral_radius(assemble(p.system, p.graph, *st.gains).s), 1.0);
  EXPECT_TRUE(certify_lemma_properties(st).passed());
  EXPECT_DOUBLE_EQ(st.eps_tol, 1e-4 * 4);
}

TEST(Synthesize, TightEpsilonRunsTheLinearizationToComplementarity) {
  // A decay rate near the optimum forces several iterations.
  SynthesisOptions o;
  o.decay_rate = 0.3;
  o.max_iter = 60;
  const Problem p = toy(o);
  const auto st = synthesize(p);
  ASSERT_TRUE(converged(st.status)) << to_string(st.status) << " " << st.diagnostics;
  const auto rep = certify_lemma_properties(st);
  EXPECT_TRUE(rep.passed()) << (rep.violations.empty() ? "" : rep.violations[0]);
  EXPECT_LT(spectral_radius(assemble(p.system, p.graph, *st.gains).s), 0.3);
  for (double j : st.j_history) EXPECT_GE(j, 2.0 * 4 - 1e-6);
}

TEST(Synthesize, InfeasibleInitialization) {
  SynthesisOptions o;
  o.delta = 1e7;
  const auto st = synthesize(toy(o));
  EXPECT_EQ(st.status, SynthesisStatus::infeasible_init);
  EXPECT_FALSE(st.gains.has_value());
  EXPECT_TRUE(st.j_history.empty());
}

TEST(Synthesize, UndetectablePlantHitsIterationLimit) {
  // The unstable mode 1.5 is seen by nobody, so no gains can stabilize it.
  SynthesisOptions o;
  o.max_iter = 3;
  const LtiSystem sys(diag({1.5, 0.5}), Matrix::Zero(2, 1), {unit_row(2, 1), unit_row(2, 1)});
  const auto st = synthesize(Problem(sys, cycle(2), o));
  EXPECT_TRUE(st.status == SynthesisStatus::infeasible_init || st.status == SynthesisStatus::iteration_limit)
      << to_string(st.status);
  EXPECT_FALSE(st.gains.has_value());
}

TEST(Synthesize, Deterministic) {
  const Problem p = toy();
  const auto a = synthesize(p), b = synthesize(p);
  EXPECT_EQ(a.j_history, b.j_history);
  EXPECT_EQ(a.q, b.q);
}

TEST(LemmaProperties, FlagsCorruptedHistories) {
  SynthesisState st;
  st.node_count = 2;
  st.state_dim = 2;
  st.status = SynthesisStatus::iteration_limit;
  st.j_history = {10.0, 9.0, 9.0 + 1e-7, 8.5};
  EXPECT_TRUE(certify_lemma_properties(st).passed());
  st.j_history = {10.0, 9.0, 9.5, 8.5};
  auto rep = certify_lemma_properties(st);
  EXPECT_FALSE(rep.monotone);
  EXPECT_TRUE(rep.bounded_below);
  st.j_history = {10.0, 7.9};
  rep = certify_lemma_properties(st);
  EXPECT_TRUE(rep.monotone);
  EXPECT_FALSE(rep.bounded_below);
}

TEST(LemmaProperties, ComplementarityOnConvergence) {
  SynthesisState st;
  st.node_count = 1;
  st.state_dim = 2;
  st.eps_tol = 1e-4;
  st.status = SynthesisStatus::converged_complementarity;
  st.j_history = {5.0, 4.0};
  st.q = 2.0 * Matrix::Identity(2, 2);
  st.p = 0.5 * Matrix::Identity(2, 2);
  EXPECT_TRUE(certify_lemma_properties(st).passed());
  st.p(0, 0) = 0.6;
  const auto rep = certify_lemma_properties(st);
  EXPECT_TRUE(rep.complementarity_applicable);
  EXPECT_FALSE(rep.complementarity_ok);
}

TEST(FormatIteration, Layout) {
  const std::string s = format_iteration({3, 51.25, 1.5e-3, -2e-4});
  EXPECT_TRUE(std::regex_match(s, std::regex(R"(k=3 J=51\.25 \|\|QP-I\|\|_F=1\.500000e-03 lambda_max=-2\.000000e-04)")))
      << s;
}

TEST(ResolveOptions, Defaults) {
  const auto r = resolve_options(toy());
  EXPECT_DOUBLE_EQ(r.eps_tol, 4e-4);
  EXPECT_EQ(r.max_iter, 200);
  SynthesisOptions o;
  o.eps_tol = 0.5;
  o.max_iter = 7;
  const auto r2 = resolve_options(toy(o));
  EXPECT_DOUBLE_EQ(r2.eps_tol, 0.5);
  EXPECT_EQ(r2.max_iter, 7);
}
