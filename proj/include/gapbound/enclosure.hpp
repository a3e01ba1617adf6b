#pragma once

// Certified eigenvalue enclosures inside a spectral gap (alpha, beta).
//
// For candidate minima sigma_1 < ... < sigma_R of F_n the outer intervals
// [mu_r, nu_r] = [sigma_r - F_n(sigma_r), sigma_r + F_n(sigma_r)] each
// contain spectrum. Assuming each contains exactly one eigenvalue m_r and
// the stretches between them are spectrum-free (hypothesis (H)), solving
//
//   F_n(s_r) = s_r - nu_{r-1},   F_n(t_r) = mu_{r+1} - t_r
//
// yields mu_r < t_r - F_n(t_r) < m_r < s_r + F_n(s_r) < nu_r. Feeding the
// improved bounds back in as nu_{r-1}, mu_{r+1} can only tighten them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gapbound/distfun.hpp"
#include "gapbound/error.hpp"
#include "gapbound/operator.hpp"

namespace gapbound {

struct EnclosureOptions {
  /// Safeguard epsilon; 0 evaluates F_n itself, > 0 uses F_n + eps e^{-F_n}.
  double epsilon = 0.0;
  /// Bisection stops at this bracket width.
  double root_width = 1e-12;
  /// Upper bound on Newton polish steps after bisection.
  int newton_steps = 3;
  /// A point certifies only when g < -certify_margin (1 + |x|), which covers
  /// the rounding error of F_n.
  double certify_margin = 1e-13;
  /// Refinement stops when no bound improves by more than this.
  double tol = 1e-12;
  int max_sweeps = 100;
};

struct RootResult {
  double root = 0.0;
  double f_value = 0.0;  ///< F_n (or its safeguarded value) at the root
  double residual = 0.0;
};

namespace detail {

struct FValue {
  double value;
  double deriv;
  Vector minimizer;
};

inline FValue f_with_safeguard(const TruncatedPair& pair, double x, std::span<const double> warm, double eps) {
  ResidualPoint p = eval_f(pair, x, warm);
  if (eps > 0.0) return {hat_f(p, eps), hat_f_prime(p, eps), std::move(p.minimizer)};
  return {p.f_value, p.f_prime, std::move(p.minimizer)};
}

// Root of a monotone g(x) = F(x) + sign * x + offset on [lo, hi]. Points
// with g clearly below 0 give rigorous bounds, so the result is the end of
// the final bracket on that side: hi side for the left solve (sign -1), lo
// side for the right solve (sign +1).
inline RootResult monotone_root(const TruncatedPair& pair, double lo, double hi, double sign, double offset,
                                const EnclosureOptions& opts, const char* who) {
  // Shifted by the margin, so that certified simply means g < 0.
  auto g = [&](double x, std::span<const double> warm) {
    FValue f = f_with_safeguard(pair, x, warm, opts.epsilon);
    const double margin = opts.certify_margin * (1.0 + std::abs(x));
    return std::pair<double, FValue>{f.value + sign * x + offset + margin, std::move(f)};
  };
  const bool left = sign < 0.0;
  double u = left ? lo : hi;  // g >= 0
  double c = left ? hi : lo;  // g < 0
  auto [g_u, f_u] = g(u, {});
  auto [g_c, f_c] = g(c, f_u.minimizer);
  if (!(g_u >= 0.0) || !(g_c < 0.0))
    throw Error(ErrorCode::BracketInvalid, std::string(who) + ": no sign change on [" + std::to_string(lo) + ", " +
                                               std::to_string(hi) + "]");

  RootResult best{c, f_c.value, std::abs(g_c)};
  double deriv_c = f_c.deriv + sign;
  Vector warm = std::move(f_c.minimizer);
  auto take = [&](double x, double gx, FValue&& fx) {
    if (gx < 0.0) {
      c = x;
      best = {x, fx.value, std::abs(gx)};
      deriv_c = fx.deriv + sign;
    } else {
      u = x;
    }
    warm = std::move(fx.minimizer);
  };
  while (std::abs(c - u) > opts.root_width) {
    const double mid = 0.5 * (u + c);
    if (mid == u || mid == c) break;
    auto [gm, fm] = g(mid, warm);
    take(mid, gm, std::move(fm));
  }
  // Newton polish from the certified end, kept inside the bracket.
  for (int k = 0; k < opts.newton_steps && best.residual > 0.0; ++k) {
    if (deriv_c == 0.0) break;
    const double next = c + best.residual / deriv_c;  // g(c) = -residual
    if (!(std::min(u, c) < next && next < std::max(u, c))) break;
    auto [gn, fn] = g(next, warm);
    take(next, gn, std::move(fn));
  }
  return best;
}

}  // namespace detail

/// Solves F_n(s) = s - nu_prev on (nu_prev, bracket_hi).
inline RootResult solve_left(const TruncatedPair& pair, double nu_prev, double bracket_hi,
                             const EnclosureOptions& opts = {}) {
  if (!(bracket_hi > nu_prev)) throw Error(ErrorCode::BracketInvalid, "solve_left: empty bracket");
  return detail::monotone_root(pair, nu_prev, bracket_hi, -1.0, nu_prev, opts, "solve_left");
}

/// Solves F_n(t) = mu_next - t on (bracket_lo, mu_next).
inline RootResult solve_right(const TruncatedPair& pair, double mu_next, double bracket_lo,
                              const EnclosureOptions& opts = {}) {
  if (!(mu_next > bracket_lo)) throw Error(ErrorCode::BracketInvalid, "solve_right: empty bracket");
  return detail::monotone_root(pair, bracket_lo, mu_next, +1.0, -mu_next, opts, "solve_right");
}

struct EnclosureInterval {
  double sigma = 0.0;
  double f_sigma = 0.0;
  double mu = 0.0;     ///< outer lower end sigma - F_n(sigma)
  double nu = 0.0;     ///< outer upper end sigma + F_n(sigma)
  double lower = 0.0;  ///< certified lower bound t - F_n(t)
  double upper = 0.0;  ///< certified upper bound s + F_n(s)
  double s = 0.0;
  double f_s = 0.0;
  double t = 0.0;
  double f_t = 0.0;
  /// Bounds from the most recent solves, before intersecting with the old ones.
  double raw_lower = 0.0;
  double raw_upper = 0.0;

  double width() const noexcept { return upper - lower; }
};

struct EnclosureState {
  double alpha = 0.0;  ///< nu_0, never refined
  double beta = 0.0;   ///< mu_{R+1}, never refined
  std::vector<EnclosureInterval> intervals;
  int iteration = 0;

  std::size_t r_count() const noexcept { return intervals.size(); }

  /// Current left boundary of the spectrum-free stretch before interval r.
  double left_free(std::size_t r) const { return r == 0 ? alpha : intervals[r - 1].upper; }
  /// Current right boundary of the spectrum-free stretch after interval r.
  double right_free(std::size_t r) const { return r + 1 == intervals.size() ? beta : intervals[r + 1].lower; }
};

namespace detail {

inline void require_lower_below_upper(const EnclosureState& st) {
  std::vector<std::size_t> bad;
  for (std::size_t r = 0; r < st.intervals.size(); ++r)
    if (!(st.intervals[r].lower < st.intervals[r].upper)) bad.push_back(r + 1);
  if (!bad.empty())
    throw Error(ErrorCode::HypothesisHViolated, "computed lower bound is not below the upper bound", bad);
}

}  // namespace detail

/// Bounds from the outer intervals of the candidate minima; hypothesis (H)
/// is assumed and checked for consistency.
inline EnclosureState initial_enclosure(const TruncatedPair& pair, const GapProblem& gap,
                                        const EnclosureOptions& opts = {}) {
  gap.validate();
  if (gap.sigmas.empty()) throw Error(ErrorCode::InvalidArgument, "no candidate minima in the gap");
  EnclosureState st;
  st.alpha = gap.alpha;
  st.beta = gap.beta;
  for (double sigma : gap.sigmas) {
    auto f = detail::f_with_safeguard(pair, sigma, {}, opts.epsilon);
    EnclosureInterval iv;
    iv.sigma = sigma;
    iv.f_sigma = f.value;
    iv.mu = sigma - f.value;
    iv.nu = sigma + f.value;
    st.intervals.push_back(iv);
  }
  // (H): nu_0 < mu_1 < nu_1 < mu_2 < ... < nu_R < mu_{R+1}.
  std::vector<std::size_t> bad;
  double prev = gap.alpha;
  for (std::size_t r = 0; r < st.intervals.size(); ++r) {
    const auto& iv = st.intervals[r];
    if (!(prev < iv.mu) || !(iv.mu < iv.nu)) bad.push_back(r + 1);
    prev = iv.nu;
  }
  if (!(prev < gap.beta)) bad.push_back(st.intervals.size());
  if (!bad.empty()) throw Error(ErrorCode::HypothesisHViolated, "outer intervals do not interlace in the gap", bad);

  const std::size_t R = st.intervals.size();
  std::vector<EnclosureInterval> next = st.intervals;
  for (std::size_t r = 0; r < R; ++r) {
    const double nu_prev = r == 0 ? gap.alpha : st.intervals[r - 1].nu;
    const double mu_next = r + 1 == R ? gap.beta : st.intervals[r + 1].mu;
    auto& iv = next[r];
    const RootResult s = solve_left(pair, nu_prev, iv.sigma, opts);
    const RootResult t = solve_right(pair, mu_next, iv.sigma, opts);
    iv.s = s.root;
    iv.f_s = s.f_value;
    iv.t = t.root;
    iv.f_t = t.f_value;
    iv.raw_upper = s.root + s.f_value;
    iv.raw_lower = t.root - t.f_value;
    iv.upper = std::min(iv.raw_upper, iv.nu);
    iv.lower = std::max(iv.raw_lower, iv.mu);
  }
  st.intervals = std::move(next);
  detail::require_lower_below_upper(st);
  return st;
}

/// One refinement sweep: every interval is re-solved against the bounds of
/// its neighbours from the incoming state, so the per-interval solves are
/// independent of each other. Bounds never loosen.
inline EnclosureState refine(const TruncatedPair& pair, const EnclosureState& state,
                             const EnclosureOptions& opts = {}) {
  EnclosureState out = state;
  for (std::size_t r = 0; r < state.r_count(); ++r) {
    const auto& iv = state.intervals[r];
    auto& nv = out.intervals[r];
    const RootResult s = solve_left(pair, state.left_free(r), iv.sigma, opts);
    const RootResult t = solve_right(pair, state.right_free(r), iv.sigma, opts);
    const double upper = s.root + s.f_value;
    const double lower = t.root - t.f_value;
    nv.raw_upper = upper;
    nv.raw_lower = lower;
    if (upper < iv.upper) {
      nv.upper = upper;
      nv.s = s.root;
      nv.f_s = s.f_value;
    }
    if (lower > iv.lower) {
      nv.lower = lower;
      nv.t = t.root;
      nv.f_t = t.f_value;
    }
  }
  ++out.iteration;
  detail::require_lower_below_upper(out);
  return out;
}

/// Candidate minima that can stand for isolated eigenvalues of the gap.
///
/// A minimum whose outer interval [sigma - F, sigma + F] reaches alpha or
/// beta is attributed to the essential spectrum at that edge and dropped.
/// Of the rest, a minimum is rejected as spurious when F_n(sigma) exceeds
/// `threshold`, by default a quarter of the smallest spacing between the
/// surviving candidates (no limit with a single candidate).
inline std::vector<Minimum> filter_candidates(const std::vector<Minimum>& minima, double alpha, double beta,
                                              std::optional<double> threshold = std::nullopt) {
  std::vector<Minimum> inner;
  for (const auto& m : minima)
    if (m.sigma > alpha && m.sigma < beta && m.sigma - m.f_value > alpha && m.sigma + m.f_value < beta)
      inner.push_back(m);
  double limit = std::numeric_limits<double>::infinity();
  if (threshold) {
    limit = *threshold;
  } else {
    for (std::size_t i = 0; i + 1 < inner.size(); ++i)
      limit = std::min(limit, 0.25 * (inner[i + 1].sigma - inner[i].sigma));
  }
  std::vector<Minimum> out;
  for (const auto& m : inner)
    if (m.f_value <= limit) out.push_back(m);
  return out;
}

struct EnclosureStep {
  std::size_t pair_index = 0;
  std::size_t n = 0;
  int iteration = 0;
  std::vector<double> lower;
  std::vector<double> upper;
};

struct EnclosureReport {
  EnclosureState state;
  std::vector<EnclosureStep> history;
  std::vector<double> widths;
  /// Bounds that would have loosened at a pair switch before clamping.
  int widening_events = 0;
};

/// Initial bounds on the first pair, refinement to stagnation, then the same
/// on each following (larger) pair of the nested sequence.
inline EnclosureReport enclose(const std::vector<TruncatedPair>& pairs, const GapProblem& gap,
                               const EnclosureOptions& opts = {}) {
  if (pairs.empty()) throw Error(ErrorCode::InvalidArgument, "enclose needs at least one pair");
  EnclosureReport rep;
  auto record = [&](std::size_t k, const EnclosureState& st) {
    EnclosureStep step{k, pairs[k].dim(), st.iteration, {}, {}};
    for (const auto& iv : st.intervals) {
      step.lower.push_back(iv.lower);
      step.upper.push_back(iv.upper);
    }
    rep.history.push_back(std::move(step));
  };

  EnclosureState st = initial_enclosure(pairs[0], gap, opts);
  record(0, st);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      EnclosureState next = refine(pairs[k], st, opts);
      double improvement = 0.0;
      for (std::size_t r = 0; r < st.r_count(); ++r) {
        improvement = std::max(improvement, next.intervals[r].lower - st.intervals[r].lower);
        improvement = std::max(improvement, st.intervals[r].upper - next.intervals[r].upper);
      }
      if (k > 0 && sweep == 0) {
        // Unclamped check at the switch: F_{n'} <= F_n means no bound loosens.
        for (std::size_t r = 0; r < st.r_count(); ++r) {
          const auto& iv = next.intervals[r];
          if (iv.raw_upper > st.intervals[r].upper + 1e-12 || iv.raw_lower < st.intervals[r].lower - 1e-12)
            ++rep.widening_events;
        }
      }
      st = std::move(next);
      record(k, st);
      if (improvement <= opts.tol) break;
    }
  }
  for (const auto& iv : st.intervals) rep.widths.push_back(iv.width());
  rep.state = std::move(st);
  return rep;
}

}  // namespace gapbound
