#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "gapbound/gapbound.hpp"

namespace testing_support {

using gapbound::SymMatrix;
using gapbound::TruncatedPair;
using gapbound::Vector;

inline SymMatrix random_symmetric(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  SymMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a.set(i, j, dist(rng));
  return a;
}

/// Random orthogonal matrix (row-major) via Gram-Schmidt.
inline std::vector<double> random_orthogonal(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  std::vector<double> q(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    Vector v(n);
    for (auto& x : v) x = dist(rng);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) d += q[i * n + k] * v[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= d * q[i * n + k];
      }
    }
    gapbound::normalize(v);
    for (std::size_t i = 0; i < n; ++i) q[i * n + j] = v[i];
  }
  return q;
}

/// Q^T A Q.
inline SymMatrix similarity(const SymMatrix& a, const std::vector<double>& q) {
  const std::size_t n = a.dim();
  SymMatrix out(n);
  std::vector<double> aq(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) aq[i * n + j] += a(i, k) * q[k * n + j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += q[k * n + i] * aq[k * n + j];
      out.set(i, j, s);
    }
  return out;
}

/// Symmetric matrix with prescribed eigenvalues.
inline SymMatrix with_spectrum(const Vector& eigenvalues, std::mt19937_64& rng) {
  return similarity(SymMatrix::diagonal(eigenvalues), random_orthogonal(eigenvalues.size(), rng));
}

/// Pair (M_n, D_n) compressed from a random ambient operator on its first
/// n coordinates; D_n is exact for the ambient operator.
inline TruncatedPair random_pair(std::size_t n, std::size_t ambient, std::mt19937_64& rng) {
  return gapbound::compress_pair(random_symmetric(ambient, rng), 0, n, 0, ambient);
}

/// Ambient operator with spectrum {lo band} u {isolated} u {hi band}.
struct AmbientModel {
  SymMatrix op;
  Vector spectrum;
};

inline AmbientModel gapped_operator(std::size_t ambient, const std::vector<double>& isolated, double band_lo_hi,
                                    double band_hi_lo, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> below(band_lo_hi - 1.0, band_lo_hi);
  std::uniform_real_distribution<double> above(band_hi_lo, band_hi_lo + 1.0);
  Vector ev = isolated;
  while (ev.size() < ambient) {
    ev.push_back(below(rng));
    if (ev.size() < ambient) ev.push_back(above(rng));
  }
  std::sort(ev.begin(), ev.end());
  return {with_spectrum(ev, rng), ev};
}

/// Exact pair for the span of `cols` (orthonormalized) in the ambient
/// operator k: M = V^T K V, D = (K V)^T (K V).
inline TruncatedPair subspace_pair(const SymMatrix& k, std::vector<Vector> cols) {
  const std::size_t n = cols.size();
  for (std::size_t j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i < j; ++i) {
        const double d = gapbound::dot(cols[i], cols[j]);
        for (std::size_t r = 0; r < cols[j].size(); ++r) cols[j][r] -= d * cols[i][r];
      }
    gapbound::normalize(cols[j]);
  }
  std::vector<Vector> kv;
  for (const auto& c : cols) kv.push_back(k.multiply(c));
  SymMatrix m(n), d(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      m.set(i, j, gapbound::dot(cols[i], kv[j]));
      d.set(i, j, gapbound::dot(kv[i], kv[j]));
    }
  return TruncatedPair{std::move(m), std::move(d), true};
}

/// Ambient operator with eigenvalues `isolated` plus band eigenvalues in
/// [lo_band_top - 1, lo_band_top] and [hi_band_bottom, hi_band_bottom + 1];
/// the trial space holds each isolated eigenvector up to a perturbation of
/// size `leak`, plus `extra` random directions.
struct GappedProblem {
  SymMatrix op;
  Vector spectrum;
  TruncatedPair pair;
};

inline GappedProblem gapped_problem(std::size_t ambient, const Vector& isolated, double lo_band_top,
                                    double hi_band_bottom, std::size_t extra, double leak, std::mt19937_64& rng,
                                    bool mix_bands = true) {
  std::uniform_real_distribution<double> below(lo_band_top - 1.0, lo_band_top);
  std::uniform_real_distribution<double> above(hi_band_bottom, hi_band_bottom + 1.0);
  Vector ev = isolated;
  bool low = true;
  while (ev.size() < ambient) {
    ev.push_back(low ? below(rng) : above(rng));
    low = !low;
  }
  const auto q = random_orthogonal(ambient, rng);
  const SymMatrix op = similarity(SymMatrix::diagonal(ev), q);
  // Eigenvector k of Q^T diag(ev) Q is row k of Q.
  std::normal_distribution<double> g;
  std::vector<Vector> cols;
  for (std::size_t k = 0; k < isolated.size(); ++k) {
    Vector v(ambient);
    for (std::size_t i = 0; i < ambient; ++i) v[i] = q[k * ambient + i] + leak * g(rng);
    cols.push_back(v);
  }
  // Mixed columns pollute the gap; aligned ones are perturbed band eigenvectors.
  for (std::size_t e = 0; e < extra; ++e) {
    Vector v(ambient);
    const std::size_t k = isolated.size() + e;
    for (std::size_t i = 0; i < ambient; ++i)
      v[i] = mix_bands || k >= ambient ? g(rng) : q[k * ambient + i] + leak * g(rng);
    cols.push_back(v);
  }
  std::sort(ev.begin(), ev.end());
  return {op, ev, subspace_pair(op, cols)};
}

inline double distance_to(const Vector& spectrum, double x) {
  double d = std::numeric_limits<double>::infinity();
  for (double e : spectrum) d = std::min(d, std::abs(e - x));
  return d;
}

// -------------------------------------------------------------- quadrature

/// Adaptive Simpson on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 50) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double a0, double b0, double fa, double fm, double fb, double whole, double eps, int d) {
        const double m = 0.5 * (a0 + b0), lm = 0.5 * (a0 + m), rm = 0.5 * (m + b0);
        const double flm = f(lm), frm = f(rm);
        const double left = (m - a0) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b0 - m) / 6.0 * (fm + 4.0 * frm + fb);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
          return left + right + (left + right - whole) / 15.0;
        return rec(a0, m, fa, flm, fm, left, 0.5 * eps, d - 1) + rec(m, b0, fm, frm, fb, right, 0.5 * eps, d - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<Vector, Vector> gauss_legendre(int n) {
  Vector x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Legendre P_k(x) by recurrence.
inline double legendre_p(int k, double x) {
  if (k == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int j = 2; j <= k; ++j) {
    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// ---------------------------------------------------------- finite models

/// Central difference of F_n.
inline double fd_derivative(const TruncatedPair& p, double x, double h) {
  return (gapbound::eval_f(p, x + h).f_value - gapbound::eval_f(p, x - h).f_value) / (2.0 * h);
}

}  // namespace testing_support
