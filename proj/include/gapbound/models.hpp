#pragma once

// Closed-form model operators M f = b f - <b f, e> e on mean-zero functions
// (e the normalized constant), with analytic spectra for use as oracles.
//
//  * Step coefficient on (0, pi): b = 1 on (0, cut), 0 elsewhere. Basis
//    sqrt(2/pi) cos(r x), r >= 1. Essential spectrum {0, 1}, one isolated
//    eigenvalue (pi - cut) / pi.
//  * Piecewise-linear coefficient on (-2, 2): b = a- + b- x for x < 0 and
//    a+ + b+ x for x > 0, in shifted normalized Legendre bases on each half.
//    The matrix is tridiagonal, indexed -n..n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "gapbound/error.hpp"
#include "gapbound/linalg.hpp"
#include "gapbound/operator.hpp"

namespace gapbound {

struct StepCoefficient {
  double cut = 1.0;

  void validate() const {
    if (!(cut > 0.0 && cut < std::numbers::pi))
      throw Error(ErrorCode::InvalidArgument, "step cut must lie in (0, pi)");
  }
};

struct PiecewiseLinearCoefficient {
  double alpha_minus = -1.0;
  double alpha_plus = 1.0;
  double beta_minus = 30.0;
  double beta_plus = 40.0;

  /// Slopes must be non-negative to assemble; the gap (alpha-, alpha+) and
  /// its eigenvalue need strictly positive slopes.
  void validate(bool strict = true) const {
    const bool slopes_ok = strict ? (beta_minus > 0.0 && beta_plus > 0.0) : (beta_minus >= 0.0 && beta_plus >= 0.0);
    if (!slopes_ok) throw Error(ErrorCode::InvalidArgument, "piecewise-linear slopes must be positive");
    if (!(alpha_minus < alpha_plus))
      throw Error(ErrorCode::InvalidArgument, "piecewise-linear model needs alpha- < alpha+");
  }
};

/// Union of closed bands and isolated points, for distance and inclusion
/// oracles.
struct KnownSpectrum {
  std::vector<std::pair<double, double>> bands;
  std::vector<double> eigenvalues;

  double distance(double x) const {
    double d = std::numeric_limits<double>::infinity();
    for (auto [a, b] : bands) d = std::min(d, x < a ? a - x : (x > b ? x - b : 0.0));
    for (double e : eigenvalues) d = std::min(d, std::abs(x - e));
    return d;
  }

  bool intersects(double lo, double hi) const {
    for (auto [a, b] : bands)
      if (b >= lo && a <= hi) return true;
    for (double e : eigenvalues)
      if (e >= lo && e <= hi) return true;
    return false;
  }
};

// ---------------------------------------------------------------- step model

/// (2/pi) * integral_0^cut cos(r x) cos(s x) dx for r, s >= 1.
inline double step_entry(double cut, int r, int s) {
  const double pi = std::numbers::pi;
  if (r == s) return (cut + std::sin(2.0 * r * cut) / (2.0 * r)) / pi;
  const int dm = r - s, dp = r + s;
  return (std::sin(dm * cut) / dm + std::sin(dp * cut) / dp) / pi;
}

/// <b psi_r, psi_0> = (sqrt 2 / pi) sin(r cut) / r.
inline double step_constant_overlap(double cut, int r) {
  return std::numbers::sqrt2 / std::numbers::pi * std::sin(r * cut) / r;
}

inline TruncatedPair build_step(const StepCoefficient& coeff, std::size_t n) {
  coeff.validate();
  check_dim(n);
  SymMatrix m(n), d(n);
  std::vector<double> c(n);
  for (std::size_t r = 0; r < n; ++r) c[r] = step_constant_overlap(coeff.cut, static_cast<int>(r + 1));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t s = r; s < n; ++s) {
      const double a = step_entry(coeff.cut, static_cast<int>(r + 1), static_cast<int>(s + 1));
      m.set(r, s, a);
      // b^2 = b, so <M*M psi_r, psi_s> = A_rs - c_r c_s.
      d.set(r, s, a - c[r] * c[s]);
    }
  }
  return TruncatedPair{std::move(m), std::move(d), true};
}

inline double step_eigenvalue(const StepCoefficient& coeff) {
  coeff.validate();
  return (std::numbers::pi - coeff.cut) / std::numbers::pi;
}

inline KnownSpectrum step_spectrum(const StepCoefficient& coeff) {
  return {{{0.0, 0.0}, {1.0, 1.0}}, {step_eigenvalue(coeff)}};
}

// ------------------------------------------------------ piecewise-linear model

/// Recurrence coefficient of the normalized Legendre polynomials,
/// x Q_k = gamma_{k+1} Q_{k+1} + gamma_k Q_{k-1}.
inline double legendre_gamma(int k) {
  const double kk = static_cast<double>(k);
  return kk / std::sqrt(4.0 * kk * kk - 1.0);
}

/// Storage position of basis index r in -n..n.
constexpr std::size_t linear_index(int r, std::size_t n) noexcept {
  return static_cast<std::size_t>(r + static_cast<int>(n));
}

/// Tridiagonal compression on span{psi_-n..psi_n} (dimension 2n+1) with
/// D_n = M_n^2 + E_n, where E_n holds the two corner couplings leaving the
/// trial space.
inline TruncatedPair build_linear(const PiecewiseLinearCoefficient& cf, std::size_t n) {
  cf.validate(false);
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "linear model needs n >= 1");
  const std::size_t dim = 2 * n + 1;
  check_dim(dim);
  const int N = static_cast<int>(n);
  SymMatrix m(dim);
  for (int r = -N; r <= N; ++r) {
    double diag;
    if (r >= 1) diag = cf.alpha_plus + cf.beta_plus;
    else if (r <= -1) diag = cf.alpha_minus - cf.beta_minus;
    else diag = 0.5 * (cf.alpha_plus + cf.beta_plus + cf.alpha_minus - cf.beta_minus);
    m.set(linear_index(r, n), linear_index(r, n), diag);
  }
  for (int r = -N; r < N; ++r) {
    double off;
    if (r >= 1) off = cf.beta_plus * legendre_gamma(r + 1);
    else if (r == 0) off = cf.beta_plus * legendre_gamma(1) / std::numbers::sqrt2;
    else if (r == -1) off = cf.beta_minus * legendre_gamma(1) / std::numbers::sqrt2;
    else off = cf.beta_minus * legendre_gamma(-r);
    m.set(linear_index(r, n), linear_index(r + 1, n), off);
  }
  SymMatrix d = m.square();
  const double g = legendre_gamma(N + 1);
  d.add(linear_index(-N, n), linear_index(-N, n), (cf.beta_minus * g) * (cf.beta_minus * g));
  d.add(linear_index(N, n), linear_index(N, n), (cf.beta_plus * g) * (cf.beta_plus * g));
  return TruncatedPair{std::move(m), std::move(d), true};
}

// ------------------------------------------------------------ secular equation

namespace detail {

// integral of dx / (a + beta x - lambda) over an interval of length 2 on
// which the linear function runs from `from` to `from + 2 beta`.
inline double reciprocal_integral(double from, double beta, double lambda) {
  const double lo = from - lambda, hi = from + 2.0 * beta - lambda;
  if (beta == 0.0) return 2.0 / lo;
  return std::log(std::abs(hi / lo)) / beta;
}

}  // namespace detail

/// h(lambda) = integral 1 / (b - lambda) dx. Isolated eigenvalues in a gap
/// are the zeros of h; Xi(lambda) = |domain| + lambda h(lambda).
inline double secular_reduced(const StepCoefficient& c, double lambda) {
  return c.cut / (1.0 - lambda) - (std::numbers::pi - c.cut) / lambda;
}

inline double secular_reduced(const PiecewiseLinearCoefficient& c, double lambda) {
  return detail::reciprocal_integral(c.alpha_plus, c.beta_plus, lambda) +
         detail::reciprocal_integral(c.alpha_minus - 2.0 * c.beta_minus, c.beta_minus, lambda);
}

inline double domain_length(const StepCoefficient&) { return std::numbers::pi; }
inline double domain_length(const PiecewiseLinearCoefficient&) { return 4.0; }

/// Xi(lambda) = integral b / (b - lambda) dx over the whole domain.
template <class Coeff>
double xi(const Coeff& c, double lambda) {
  return domain_length(c) + lambda * secular_reduced(c, lambda);
}

/// Root of Xi(lambda) = |domain| inside `gap`, by bisection on the reduced
/// function h (which is strictly increasing between bands and has the same
/// nonzero roots).
template <class Coeff>
double xi_solve(const Coeff& c, std::pair<double, double> gap) {
  c.validate();
  auto [lo, hi] = gap;
  if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "gap must be nondegenerate");
  double h_lo = secular_reduced(c, lo), h_hi = secular_reduced(c, hi);
  if (std::isnan(h_lo) || std::isnan(h_hi) || !(h_lo < 0.0 && h_hi > 0.0)) {
    if (h_lo == 0.0) return lo;
    if (h_hi == 0.0) return hi;
    throw Error(ErrorCode::NoRootInGap, "secular function does not change sign on the gap");
  }
  while (hi - lo > 1e-15 * std::max(1.0, std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double h = secular_reduced(c, mid);
    if (h == 0.0) return mid;
    if (h < 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline KnownSpectrum linear_spectrum(const PiecewiseLinearCoefficient& c) {
  c.validate();
  return {{{c.alpha_minus - 2.0 * c.beta_minus, c.alpha_minus}, {c.alpha_plus, c.alpha_plus + 2.0 * c.beta_plus}},
          {xi_solve(c, {c.alpha_minus, c.alpha_plus})}};
}

// ------------------------------------------------------------------ pollution

/// Trial functions psi_n = cos(a_n) f0_n + sin(a_n) f1_n built from two
/// families of exact eigenfunctions, each with Rayleigh quotient mu.
struct PollutionConstruction {
  double target_mu = 0.0;
  std::vector<double> lambda0;
  std::vector<double> lambda1;
  std::vector<double> angles;  ///< a_n in [0, pi/2]
};

inline PollutionConstruction synthesize_pollution(const std::vector<double>& lambda0,
                                                  const std::vector<double>& lambda1, double mu) {
  if (lambda0.size() != lambda1.size() || lambda0.empty())
    throw Error(ErrorCode::InvalidArgument, "eigenvalue sequences must be non-empty and of equal length");
  PollutionConstruction pc{mu, lambda0, lambda1, {}};
  for (std::size_t k = 0; k < lambda0.size(); ++k) {
    if (!(lambda0[k] < mu && mu < lambda1[k]))
      throw Error(ErrorCode::MuOutsideBrackets, "need lambda0 < mu < lambda1 at position " + std::to_string(k),
                  {k});
    const double cos2 = (lambda1[k] - mu) / (lambda1[k] - lambda0[k]);
    pc.angles.push_back(std::acos(std::sqrt(cos2)));
  }
  return pc;
}

/// Finite proxy: diagonal operator diag(l0_1, l1_1, ..., l0_N, l1_N) in its
/// own orthonormal eigenbasis, and the first N rotated trial vectors as
/// columns (2N x N, row-major).
struct PollutionProxy {
  SymMatrix op;
  std::vector<double> basis;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

inline PollutionProxy pollution_proxy(const PollutionConstruction& pc, std::size_t count) {
  if (count == 0 || count > pc.angles.size())
    throw Error(ErrorCode::IndexOutOfRange, "requested more trial vectors than constructed");
  PollutionProxy px{SymMatrix(2 * count), std::vector<double>(2 * count * count, 0.0), 2 * count, count};
  for (std::size_t k = 0; k < count; ++k) {
    px.op.set(2 * k, 2 * k, pc.lambda0[k]);
    px.op.set(2 * k + 1, 2 * k + 1, pc.lambda1[k]);
    px.basis[(2 * k) * count + k] = std::cos(pc.angles[k]);
    px.basis[(2 * k + 1) * count + k] = std::sin(pc.angles[k]);
  }
  return px;
}

/// Ritz matrix Psi^T K Psi of the proxy on its first `count` trial vectors.
inline SymMatrix pollution_ritz_matrix(const PollutionConstruction& pc, std::size_t count) {
  const PollutionProxy px = pollution_proxy(pc, count);
  SymMatrix out(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i; j < count; ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < px.rows; ++a) {
        double ka = 0.0;
        for (std::size_t b = 0; b < px.rows; ++b) ka += px.op(a, b) * px.basis[b * count + j];
        acc += px.basis[a * count + i] * ka;
      }
      out.set(i, j, acc);
    }
  }
  return out;
}

/// Ratio ||chi|| / |||chi|||_H for a Ritz vector with psi-coefficients c
/// (normalized to sum c_r^2 = 1), when H has eigenvalues r^2:
/// sqrt(sum c_r^2 / r^2).
inline double collapse_quotient(std::span<const double> coefficients) {
  double num = 0.0, den = 0.0;
  for (std::size_t r = 0; r < coefficients.size(); ++r) {
    const double k = static_cast<double>(r + 1);
    num += coefficients[r] * coefficients[r] / (k * k);
    den += coefficients[r] * coefficients[r];
  }
  return std::sqrt(num / den);
}

/// Collapse quotient of the `which_ritz`-th (ascending) Ritz vector of the
/// step model truncated to n.
inline double collapse_quotient(const StepCoefficient& coeff, std::size_t n, std::size_t which_ritz) {
  if (which_ritz >= n) throw Error(ErrorCode::IndexOutOfRange, "Ritz index out of range");
  const auto pairs = eig_sym(build_step(coeff, n).m_mat);
  return collapse_quotient(pairs[which_ritz].vector);
}

}  // namespace gapbound
