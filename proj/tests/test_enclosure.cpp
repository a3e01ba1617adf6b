#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "gapbound/enclosure.hpp"
#include "gapbound/models.hpp"
#include "support.hpp"

using namespace gapbound;

namespace {

TruncatedPair mirrored(const TruncatedPair& p) {
  SymMatrix m = p.m_mat;
  m *= -1.0;
  return {m, p.d_mat, p.exact_d};
}

GapProblem candidates(const TruncatedPair& p, double alpha, double beta) {
  const auto s = scan(p, alpha, beta, 513);
  GapProblem g{alpha, beta, {}};
  for (const auto& m : filter_candidates(local_minima(s, p, 1e-12), alpha, beta)) g.sigmas.push_back(m.sigma);
  return g;
}

}  // namespace

TEST(SolveLeftRight, MirrorSymmetry) {
  // With M -> -M, F(lambda) -> F(-lambda), so left and right solves swap.
  std::mt19937_64 rng(31);
  const auto gp = testing_support::gapped_problem(12, {0.5}, 0.0, 1.0, 2, 0.05, rng);
  const TruncatedPair q = mirrored(gp.pair);
  const auto mins = local_minima(scan(gp.pair, 0.0, 1.0, 257), gp.pair, 1e-12);
  const double sigma = mins.front().sigma;
  const auto s = solve_left(gp.pair, 0.0, sigma);
  const auto t_mirror = solve_right(q, 0.0, -sigma);
  EXPECT_NEAR(s.root, -t_mirror.root, 1e-11);
  EXPECT_NEAR(s.f_value, t_mirror.f_value, 1e-11);
  const auto t = solve_right(gp.pair, 1.0, sigma);
  const auto s_mirror = solve_left(q, -1.0, -sigma);
  EXPECT_NEAR(t.root, -s_mirror.root, 1e-11);
}

TEST(SolveLeftRight, RootsSatisfyDefiningEquations) {
  const TruncatedPair p = build_step({std::numbers::pi / 2.0}, 10);
  const auto s = solve_left(p, 0.0, 0.5);
  const auto t = solve_right(p, 1.0, 0.5);
  EXPECT_NEAR(s.f_value, s.root - 0.0, 1e-9);
  EXPECT_NEAR(t.f_value, 1.0 - t.root, 1e-9);
  // The returned points are on the certified side.
  EXPECT_LE(s.f_value, s.root + 1e-15);
  EXPECT_LE(t.f_value, 1.0 - t.root + 1e-15);
}

TEST(SolveLeftRight, EmptyOrSignlessBracketRejected) {
  const TruncatedPair p = build_step({1.0}, 6);
  EXPECT_THROW(solve_left(p, 0.5, 0.4), Error);
  try {
    solve_left(p, 0.0, 0.1);  // g > 0 on the whole bracket
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BracketInvalid);
  }
}

TEST(Enclosure, TwoEigenvalueSyntheticModel) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    const auto gp = testing_support::gapped_problem(20, {0.3, 0.7}, 0.0, 1.0, 4, 0.005, rng, false);
    const GapProblem g = candidates(gp.pair, 0.0, 1.0);
    ASSERT_EQ(g.sigmas.size(), 2u);
    const auto rep = enclose({gp.pair}, g);
    const auto& iv = rep.state.intervals;
    EXPECT_LE(iv[0].lower, 0.3);
    EXPECT_GE(iv[0].upper, 0.3);
    EXPECT_LE(iv[1].lower, 0.7);
    EXPECT_GE(iv[1].upper, 0.7);
    EXPECT_LT(iv[0].upper, iv[1].lower);
  }
}

TEST(Enclosure, RefinementShrinksMonotonically) {
  std::mt19937_64 rng(33);
  const auto gp = testing_support::gapped_problem(18, {0.25, 0.5, 0.8}, 0.0, 1.0, 3, 0.005, rng, false);
  const GapProblem g = candidates(gp.pair, 0.0, 1.0);
  ASSERT_EQ(g.sigmas.size(), 3u);
  EnclosureState st = initial_enclosure(gp.pair, g);
  for (const auto& iv : st.intervals) {
    EXPECT_GE(iv.lower, iv.mu);
    EXPECT_LE(iv.upper, iv.nu);
  }
  for (int k = 0; k < 6; ++k) {
    const EnclosureState next = refine(gp.pair, st);
    for (std::size_t r = 0; r < st.r_count(); ++r) {
      EXPECT_GE(next.intervals[r].lower, st.intervals[r].lower);
      EXPECT_LE(next.intervals[r].upper, st.intervals[r].upper);
    }
    EXPECT_EQ(next.iteration, st.iteration + 1);
    st = next;
  }
  for (std::size_t r = 0; r < 3; ++r) {
    const double m = std::array{0.25, 0.5, 0.8}[r];
    EXPECT_LE(st.intervals[r].lower, m);
    EXPECT_GE(st.intervals[r].upper, m);
  }
}

TEST(Enclosure, HypothesisViolationReportsIndices) {
  const TruncatedPair p = build_step({1.0}, 8);
  // A candidate whose outer interval reaches the gap edge.
  GapProblem g{0.0, 1.0, {0.1, 0.697669}};
  try {
    initial_enclosure(p, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HypothesisHViolated);
    ASSERT_FALSE(e.indices().empty());
    EXPECT_EQ(e.indices().front(), 1u);
  }
}

TEST(Enclosure, NestedSequenceContainsEigenvalueAndNeverWidens) {
  const StepCoefficient c{1.0};
  const double m = step_eigenvalue(c);
  std::vector<TruncatedPair> pairs;
  for (std::size_t n : {6u, 8u, 12u, 20u}) pairs.push_back(build_step(c, n));
  const GapProblem g = candidates(pairs.front(), 0.0, 1.0);
  ASSERT_EQ(g.sigmas.size(), 1u);
  const auto rep = enclose(pairs, g);
  EXPECT_EQ(rep.widening_events, 0);
  double prev_w = std::numeric_limits<double>::infinity();
  for (const auto& h : rep.history) {
    EXPECT_LE(h.lower[0], m);
    EXPECT_GE(h.upper[0], m);
    EXPECT_LE(h.upper[0] - h.lower[0], prev_w + 1e-15);
    prev_w = h.upper[0] - h.lower[0];
  }
}

TEST(Enclosure, SafeguardedBoundsAreLooserButValid) {
  const StepCoefficient c{1.0};
  const TruncatedPair p = build_step(c, 8);
  const GapProblem g = candidates(p, 0.0, 1.0);
  const auto plain = enclose({p}, g);
  EnclosureOptions opts;
  opts.epsilon = 1e-6;
  const auto safe = enclose({p}, g, opts);
  const auto& a = plain.state.intervals[0];
  const auto& b = safe.state.intervals[0];
  EXPECT_LE(b.lower, a.lower + 1e-15);
  EXPECT_GE(b.upper, a.upper - 1e-15);
  EXPECT_LE(b.lower, step_eigenvalue(c));
  EXPECT_GE(b.upper, step_eigenvalue(c));
}

TEST(FilterCandidates, EdgeAndSpuriousRules) {
  const std::vector<Minimum> mins{{0.001, 0.01}, {0.3, 0.01}, {0.4, 0.2}, {0.7, 0.02}, {0.99, 0.05}};
  const auto kept = filter_candidates(mins, 0.0, 1.0);
  // Edge minima dropped; threshold 0.25 * min spacing (0.1) = 0.025.
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].sigma, 0.3);
  EXPECT_EQ(kept[1].sigma, 0.7);
  const auto loose = filter_candidates(mins, 0.0, 1.0, 1.0);
  EXPECT_EQ(loose.size(), 3u);
  const auto single = filter_candidates({{0.5, 0.3}}, 0.0, 1.0);
  EXPECT_EQ(single.size(), 1u);
}
