#pragma once

// Right-definite Lehmann bounds in the resolvent-free A_1/A_2 form and their
// agreement with the distance-function bounds.
//
// With an orthonormal trial basis, A_0 = I, A_1(rho) = M_n - rho I and
// A_2(rho) = D_n - 2 rho M_n + rho^2 I. For a gap (nu, mu) holding a single
// eigenvalue m:
//   tau+ = largest eigenvalue of  A_1(nu) x = tau A_2(nu) x,
//   tau- = smallest eigenvalue of A_1(mu) x = tau A_2(mu) x,
//   mu + 1/tau- <= m <= nu + 1/tau+.

#include <algorithm>
#include <cmath>
#include <string>

#include "gapbound/enclosure.hpp"
#include "gapbound/error.hpp"
#include "gapbound/linalg.hpp"
#include "gapbound/operator.hpp"

namespace gapbound {

struct AMatrices {
  SymMatrix a0;
  SymMatrix a1;
  SymMatrix a2;
};

inline AMatrices assemble_a_matrices(const TruncatedPair& pair, double rho) {
  SymMatrix a1 = pair.m_mat;
  a1.shift_diagonal(-rho);
  return {SymMatrix::identity(pair.dim()), std::move(a1), assemble_b(pair, rho)};
}

/// Some trial Rayleigh quotient exceeds nu and some falls below mu.
inline bool check_condition_a(const TruncatedPair& pair, double nu, double mu) {
  const Vector ritz = ritz_spectrum(pair);
  return ritz.back() > nu && ritz.front() < mu;
}

struct LehmannResult {
  double rho_low = 0.0;   ///< nu actually used
  double rho_high = 0.0;  ///< mu actually used
  double tau_plus = 0.0;
  double tau_minus = 0.0;
  double lower_bound = 0.0;  ///< mu + 1/tau-
  double upper_bound = 0.0;  ///< nu + 1/tau+
  bool condition_a = false;
  bool rho_perturbed = false;
};

/// Lehmann bounds for the single eigenvalue in (nu, mu). If nu or mu hits a
/// point where A_2 is singular, it is moved inwards by 1e-10 (mu - nu),
/// growing 100-fold per retry up to 1e-6 (mu - nu), and `rho_perturbed` is set.
inline LehmannResult tau_extremes(const TruncatedPair& pair, double nu, double mu) {
  if (!(nu < mu)) throw Error(ErrorCode::InvalidArgument, "tau_extremes requires nu < mu");
  LehmannResult res;
  res.condition_a = check_condition_a(pair, nu, mu);
  if (!res.condition_a)
    throw Error(ErrorCode::ConditionAViolated, "no trial Rayleigh quotient above nu=" + std::to_string(nu) +
                                                   " or none below mu=" + std::to_string(mu));
  const double delta = 1e-10 * (mu - nu);

  auto solve = [&](double rho, double inward, Which which, double& used) {
    double step = 0.0;
    for (int attempt = 0; attempt < 4; ++attempt) {
      used = rho + step;
      const AMatrices a = assemble_a_matrices(pair, used);
      try {
        return gen_eig_extreme(a.a1, a.a2, which).value;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotPositiveDefinite || attempt == 3) throw;
        res.rho_perturbed = true;
      }
      step = step == 0.0 ? inward : 100.0 * step;
    }
    throw Error(ErrorCode::NotPositiveDefinite, "unreachable");
  };

  res.tau_plus = solve(nu, delta, Which::Largest, res.rho_low);
  res.tau_minus = solve(mu, -delta, Which::Smallest, res.rho_high);
  res.upper_bound = res.rho_low + 1.0 / res.tau_plus;
  res.lower_bound = res.rho_high + 1.0 / res.tau_minus;
  return res;
}

struct EquivalenceReport {
  double nu = 0.0;
  double mu = 0.0;
  double s = 0.0;
  double f_s = 0.0;
  double t = 0.0;
  double f_t = 0.0;
  LehmannResult lehmann;
  double upper_discrepancy = 0.0;  ///< |s + F(s) - (nu + 1/tau+)|
  double lower_discrepancy = 0.0;  ///< |t - F(t) - (mu + 1/tau-)|
  double s_discrepancy = 0.0;      ///< |s - (nu + 1/(2 tau+))|
  double t_discrepancy = 0.0;      ///< |t - (mu + 1/(2 tau-))|
  double tolerance = 0.0;

  double max_discrepancy() const {
    return std::max({upper_discrepancy, lower_discrepancy, s_discrepancy, t_discrepancy});
  }
  bool passed() const { return max_discrepancy() < tolerance; }
};

namespace detail {

// Expands a bracket end away from `from` until phi changes sign. phi is
// monotone in the search direction under condition (A).
template <class Phi>
double find_sign_change(Phi&& phi, double from, double step, double want_sign) {
  for (int k = 0; k < 60; ++k) {
    const double x = from + step;
    if (want_sign * phi(x) > 0.0) return x;
    step *= 2.0;
  }
  throw Error(ErrorCode::BracketInvalid, "no sign change found while expanding bracket");
}

}  // namespace detail

/// Runs both methods on the same pair and reports how far apart they are.
/// Brackets for s and t are located from F_n alone, without the Lehmann
/// values.
inline EquivalenceReport equivalence_check(const TruncatedPair& pair, double nu, double mu,
                                           const EnclosureOptions& opts = {}) {
  EquivalenceReport rep;
  rep.nu = nu;
  rep.mu = mu;
  rep.lehmann = tau_extremes(pair, nu, mu);
  const double width = mu - nu;

  auto phi_left = [&](double x) { return eval_f(pair, x).f_value - x + nu; };
  auto phi_right = [&](double x) { return eval_f(pair, x).f_value + x - mu; };
  const double hi = detail::find_sign_change(phi_left, nu, width / 8.0, -1.0);
  const double lo = detail::find_sign_change(phi_right, mu, -width / 8.0, -1.0);
  const RootResult s = solve_left(pair, nu, hi, opts);
  const RootResult t = solve_right(pair, mu, lo, opts);
  rep.s = s.root;
  rep.f_s = s.f_value;
  rep.t = t.root;
  rep.f_t = t.f_value;

  const auto& L = rep.lehmann;
  rep.upper_discrepancy = std::abs(s.root + s.f_value - L.upper_bound);
  rep.lower_discrepancy = std::abs(t.root - t.f_value - L.lower_bound);
  rep.s_discrepancy = std::abs(s.root - (L.rho_low + 0.5 / L.tau_plus));
  rep.t_discrepancy = std::abs(t.root - (L.rho_high + 0.5 / L.tau_minus));
  rep.tolerance = 1e-9 * (1.0 + std::abs(nu) + std::abs(mu));
  return rep;
}

}  // namespace gapbound
