#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gapbound/lehmann.hpp"
#include "gapbound/models.hpp"
#include "support.hpp"

using namespace gapbound;

TEST(AMatrices, Definitions) {
  std::mt19937_64 rng(41);
  const TruncatedPair p = testing_support::random_pair(5, 8, rng);
  const auto a = assemble_a_matrices(p, 0.4);
  EXPECT_EQ(a.a0, SymMatrix::identity(5));
  SymMatrix a1 = p.m_mat;
  a1.shift_diagonal(-0.4);
  EXPECT_EQ(a.a1, a1);
  EXPECT_EQ(a.a2, assemble_b(p, 0.4));
  // A_2 = (M - rho)^2 + (D - M^2) in the PSD sense: A_2 - A_1^2 = D - M^2.
  const SymMatrix lhs = a.a2 - a.a1.square();
  const SymMatrix rhs = p.d_mat - p.m_mat.square();
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(lhs(i, j), rhs(i, j), 1e-12);
}

TEST(TauExtremes, BoundsContainEigenvalue) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gp = testing_support::gapped_problem(14, {0.5}, 0.0, 1.0, 4, 0.05, rng);
    if (!check_condition_a(gp.pair, 0.0, 1.0)) continue;
    const auto r = tau_extremes(gp.pair, 0.0, 1.0);
    EXPECT_LE(r.lower_bound, 0.5 + 1e-12);
    EXPECT_GE(r.upper_bound, 0.5 - 1e-12);
    EXPECT_GT(r.tau_plus, 0.0);
    EXPECT_LT(r.tau_minus, 0.0);
  }
}

TEST(TauExtremes, ConditionAViolated) {
  const TruncatedPair p = build_step({1.0}, 8);
  try {
    tau_extremes(p, 1.5, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConditionAViolated);
  }
  EXPECT_THROW(tau_extremes(p, 0.5, 0.5), Error);
}

TEST(TauExtremes, SingularShiftIsPerturbed) {
  // nu equal to an eigenvalue of an invariant trial space makes A_2(nu) singular.
  const SymMatrix k = SymMatrix::diagonal(Vector{0.0, 0.5, 1.0});
  const TruncatedPair p = compress_pair(k, 0, 3, 0, 3);
  const auto r = tau_extremes(p, 0.0, 1.0);
  EXPECT_TRUE(r.rho_perturbed);
  EXPECT_GT(r.rho_low, 0.0);
  EXPECT_LT(r.rho_high, 1.0);
  EXPECT_NEAR(r.upper_bound, 0.5, 1e-6);
  EXPECT_NEAR(r.lower_bound, 0.5, 1e-6);
}

TEST(Equivalence, RandomPairsWithVerifiedGap) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  int checked = 0;
  for (int trial = 0; checked < 50 && trial < 500; ++trial) {
    const std::size_t n = 6 + static_cast<std::size_t>(trial % 7);
    const auto gp = testing_support::gapped_problem(n + 4, {0.4 + 0.2 * u(rng)}, 0.0, 1.0, n - 1, 0.1, rng);
    const double nu = u(rng), mu = 1.0 - u(rng);
    if (!check_condition_a(gp.pair, nu, mu)) continue;
    const auto rep = equivalence_check(gp.pair, nu, mu);
    EXPECT_LT(rep.max_discrepancy(), 1e-8 * (1.0 + std::abs(nu) + std::abs(mu))) << "trial " << trial;
    EXPECT_TRUE(rep.passed()) << rep.max_discrepancy();
    ++checked;
  }
  EXPECT_EQ(checked, 50);
}

TEST(Equivalence, StepAndLinearModels) {
  const auto a = equivalence_check(build_step({1.0}, 8), 0.0, 1.0);
  EXPECT_TRUE(a.passed()) << a.max_discrepancy();
  const auto b = equivalence_check(build_linear({}, 20), -1.0, 1.0);
  EXPECT_TRUE(b.passed()) << b.max_discrepancy();
}
