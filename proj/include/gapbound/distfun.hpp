#pragma once

// The residual distance function
//
//   F_n(lambda) = min { ||M f - lambda f|| : f in L_n, ||f|| = 1 }
//               = sqrt(lambda_min(D_n - 2 lambda M_n + lambda^2 I)),
//
// its exact derivative F_n' = (lambda - <M_n f, f>) / F_n taken at the
// minimizing vector f, the graph scan and the local minima of F_n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gapbound/error.hpp"
#include "gapbound/linalg.hpp"
#include "gapbound/operator.hpp"

namespace gapbound {

/// Below this value of G_n = F_n^2 the derivative is not formed.
inline constexpr double kDegenerateG = 1e-24;

struct ResidualPoint {
  double lambda = 0.0;
  double f_value = 0.0;  ///< F_n(lambda) >= 0
  double f_prime = 0.0;  ///< F_n'(lambda), in [-1, 1]
  Vector minimizer;      ///< unit vector attaining the minimum
  int iterations = 0;    ///< inverse-iteration steps; -1 after a dense fallback
  bool degenerate = false;

  double g_value() const noexcept { return f_value * f_value; }
};

/// Evaluates F_n and F_n' at `lambda`. `warm` seeds the inverse iteration;
/// it changes the iteration count, not the value.
inline ResidualPoint eval_f(const TruncatedPair& pair, double lambda, std::span<const double> warm = {}) {
  const SymMatrix b = assemble_b(pair, lambda);
  EigenPair bottom;
  int iterations = 0;
  try {
    auto r = smallest_eig(b, warm);
    bottom = std::move(r.pair);
    iterations = r.iterations;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::IterationCapExceeded && e.code() != ErrorCode::SingularShift) throw;
    bottom = eig_sym(b).front();
    iterations = -1;
  }

  ResidualPoint p;
  p.lambda = lambda;
  p.iterations = iterations;
  const double g = std::max(bottom.value, 0.0);
  p.f_value = std::sqrt(g);
  if (g < kDegenerateG) {
    p.degenerate = true;
    p.f_prime = 0.0;
  } else {
    const double rayleigh = pair.m_mat.quadratic_form(bottom.vector);
    p.f_prime = std::clamp((lambda - rayleigh) / p.f_value, -1.0, 1.0);
  }
  p.minimizer = std::move(bottom.vector);
  return p;
}

/// Safeguarded value F + eps * exp(-F); strictly above F with slope below 1.
inline double hat_f(double f_value, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "hat_f requires epsilon > 0");
  return f_value + epsilon * std::exp(-f_value);
}

inline double hat_f(const ResidualPoint& point, double epsilon) { return hat_f(point.f_value, epsilon); }

/// Derivative of the safeguarded value by the chain rule.
inline double hat_f_prime(const ResidualPoint& point, double epsilon) {
  return point.f_prime * (1.0 - epsilon * std::exp(-point.f_value));
}

struct Minimum {
  double sigma = 0.0;
  double f_value = 0.0;
};

struct ScanResult {
  std::vector<ResidualPoint> points;  ///< ascending in lambda
  std::vector<Minimum> minima;        ///< grid-level local minima
};

namespace detail {

inline Vector blend(std::span<const double> a, std::span<const double> b) {
  Vector v(a.size());
  // Align signs first; eigenvectors are only defined up to sign.
  const double sgn = dot(a, b) < 0.0 ? -1.0 : 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i] + sgn * b[i];
  if (normalize(v) == 0.0) v.assign(a.begin(), a.end());
  return v;
}

inline std::vector<Minimum> grid_minima(const std::vector<ResidualPoint>& pts) {
  std::vector<Minimum> out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i].f_prime < 0.0 && pts[i + 1].f_prime >= 0.0) {
      const auto& best = pts[i].f_value <= pts[i + 1].f_value ? pts[i] : pts[i + 1];
      out.push_back({best.lambda, best.f_value});
    }
  }
  return out;
}

}  // namespace detail

/// Evaluates F_n on `grid_count` equispaced points of [lo, hi].
///
/// Between consecutive Ritz values lambda_r < lambda_{r+1} the left half is
/// swept upwards from the Ritz vector g_r and the right half downwards from
/// g_{r+1}, each point warm-started from the previous one. The grid point
/// nearest the midpoint is evaluated last, started from the normalized sum
/// of the minimizers on either side of it. Below the first and above the
/// last Ritz value the sweep runs away from that Ritz value.
inline ScanResult scan(const TruncatedPair& pair, double lo, double hi, std::size_t grid_count) {
  if (grid_count < 2) throw Error(ErrorCode::InvalidArgument, "scan needs at least two grid points");
  if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "scan interval must be nondegenerate");

  std::vector<double> grid(grid_count);
  for (std::size_t i = 0; i < grid_count; ++i)
    grid[i] = i + 1 == grid_count ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_count - 1);

  const auto ritz = eig_sym(pair.m_mat);
  std::vector<ResidualPoint> pts(grid_count);
  std::vector<bool> done(grid_count, false);

  auto sweep = [&](std::size_t first, std::size_t last_exclusive, bool ascending, Vector start) {
    if (first >= last_exclusive) return;
    Vector warm = std::move(start);
    for (std::size_t k = 0; k < last_exclusive - first; ++k) {
      const std::size_t i = ascending ? first + k : last_exclusive - 1 - k;
      if (done[i]) continue;
      pts[i] = eval_f(pair, grid[i], warm);
      done[i] = true;
      warm = pts[i].minimizer;
    }
  };
  // Index of the first grid point >= x.
  auto lower_index = [&](double x) {
    return static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), x) - grid.begin());
  };

  // Ritz values strictly inside the scan window act as breakpoints.
  std::vector<std::size_t> inside;
  for (std::size_t r = 0; r < ritz.size(); ++r)
    if (ritz[r].value > lo && ritz[r].value < hi) inside.push_back(r);

  if (inside.empty()) {
    // Start from the Ritz vector nearest the window.
    std::size_t best = 0;
    for (std::size_t r = 1; r < ritz.size(); ++r) {
      auto dist = [&](double v) { return v <= lo ? lo - v : v - hi; };
      if (dist(ritz[r].value) < dist(ritz[best].value)) best = r;
    }
    const bool ascending = ritz[best].value <= lo;
    sweep(0, grid_count, ascending, ritz[best].vector);
  } else {
    // Below the first breakpoint: descend from it.
    sweep(0, lower_index(ritz[inside.front()].value), false, ritz[inside.front()].vector);
    // Above the last breakpoint: ascend from it.
    sweep(lower_index(ritz[inside.back()].value), grid_count, true, ritz[inside.back()].vector);

    for (std::size_t k = 0; k + 1 < inside.size(); ++k) {
      const auto& left = ritz[inside[k]];
      const auto& right = ritz[inside[k + 1]];
      const std::size_t a = lower_index(left.value);
      const std::size_t b = lower_index(right.value);  // segment grid points: [a, b)
      if (a >= b) continue;
      const double mid = 0.5 * (left.value + right.value);
      std::size_t nearest = a;
      for (std::size_t i = a; i < b; ++i)
        if (std::abs(grid[i] - mid) < std::abs(grid[nearest] - mid)) nearest = i;
      const std::size_t m = lower_index(mid);
      done[nearest] = true;  // reserved for the blended restart
      sweep(a, std::max(m, a), true, left.vector);
      sweep(std::min(m, b), b, false, right.vector);
      done[nearest] = false;
      Vector start;
      const bool has_l = nearest > a, has_r = nearest + 1 < b;
      if (has_l && has_r) start = detail::blend(pts[nearest - 1].minimizer, pts[nearest + 1].minimizer);
      else if (has_l) start = pts[nearest - 1].minimizer;
      else if (has_r) start = pts[nearest + 1].minimizer;
      else start = detail::blend(left.vector, right.vector);
      pts[nearest] = eval_f(pair, grid[nearest], start);
      done[nearest] = true;
    }
  }

  for (std::size_t i = 0; i < grid_count; ++i)
    if (!done[i]) pts[i] = eval_f(pair, grid[i]);

  ScanResult out;
  out.minima = detail::grid_minima(pts);
  out.points = std::move(pts);
  return out;
}

enum class MinimumMethod {
  Bisection,  ///< bisection on the sign of F_n'
  Secant,     ///< Illinois steps on F_n', safeguarded by the bracket
};

/// Refines every grid-detected minimum of `scanres` (a sign change of F_n'
/// from negative to non-negative) until the bracket is shorter than
/// `refine_tol`. Only minima strictly inside the scanned interval are kept.
inline std::vector<Minimum> local_minima(const ScanResult& scanres, const TruncatedPair& pair, double refine_tol,
                                         MinimumMethod method = MinimumMethod::Bisection) {
  if (!(refine_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "refine_tol must be positive");
  const auto& pts = scanres.points;
  std::vector<Minimum> out;
  if (pts.size() < 2) throw Error(ErrorCode::NoMinimumFound, "scan has fewer than two points");
  const double lo_end = pts.front().lambda, hi_end = pts.back().lambda;

  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (!(pts[i].f_prime < 0.0 && pts[i + 1].f_prime >= 0.0)) continue;
    double a = pts[i].lambda, b = pts[i + 1].lambda;
    double fa = pts[i].f_prime, fb = pts[i + 1].f_prime;
    ResidualPoint best = pts[i].f_value <= pts[i + 1].f_value ? pts[i] : pts[i + 1];
    if (pts[i + 1].degenerate) {
      best = pts[i + 1];
      a = b;
    }
    Vector warm = best.minimizer;
    int side = 0;
    while (b - a >= refine_tol) {
      double c = 0.5 * (a + b);
      if (method == MinimumMethod::Secant && fb > fa) {
        c = b - fb * (b - a) / (fb - fa);
        if (!(c > a && c < b)) c = 0.5 * (a + b);
      }
      ResidualPoint pc = eval_f(pair, c, warm);
      warm = pc.minimizer;
      if (pc.f_value < best.f_value) best = pc;
      if (pc.degenerate) {
        best = pc;
        a = b = c;
        break;
      }
      if (pc.f_prime < 0.0) {
        a = c;
        fa = pc.f_prime;
        if (side == -1) fb *= 0.5;
        side = -1;
      } else {
        b = c;
        fb = pc.f_prime;
        if (side == 1) fa *= 0.5;
        side = 1;
      }
      if (method == MinimumMethod::Secant && b - a < refine_tol) break;
    }
    double sigma = 0.5 * (a + b);
    ResidualPoint at = eval_f(pair, sigma, warm);
    if (best.f_value < at.f_value && std::abs(best.lambda - sigma) <= refine_tol) at = best;
    if (at.lambda > lo_end && at.lambda < hi_end) out.push_back({at.lambda, at.f_value});
  }
  if (out.empty()) throw Error(ErrorCode::NoMinimumFound, "no interior sign change of F_n' on the grid");
  return out;
}

}  // namespace gapbound
