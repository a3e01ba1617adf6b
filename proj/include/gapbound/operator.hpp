#pragma once

// A truncated self-adjoint operator is carried entirely by the pair
// (M_n, D_n): the compression P_n M P_n and the Gram matrix P_n M* M P_n.

#include <cstddef>
#include <string>
#include <vector>

#include "gapbound/error.hpp"
#include "gapbound/linalg.hpp"

namespace gapbound {

/// Relative tolerance used for every "numerically positive semidefinite" test.
inline constexpr double kPsdTolerance = 1e-10;

struct TruncatedPair {
  SymMatrix m_mat;  ///< compression M_n
  SymMatrix d_mat;  ///< Gram matrix D_n, or the two-level surrogate P_n M P_m M P_n
  bool exact_d = true;

  std::size_t dim() const noexcept { return m_mat.dim(); }
};

/// Builds a pair, checking that the two matrices agree in dimension.
inline TruncatedPair make_pair(SymMatrix m, SymMatrix d, bool exact_d) {
  if (m.dim() != d.dim()) throw Error(ErrorCode::InvalidArgument, "M_n and D_n dimensions differ");
  return TruncatedPair{std::move(m), std::move(d), exact_d};
}

/// Smallest eigenvalue of D_n - M_n^2 relative to ||D_n||; the pair is
/// admissible when this is >= -kPsdTolerance.
inline double residual_gram_margin(const TruncatedPair& pair) {
  const SymMatrix e = pair.d_mat - pair.m_mat.square();
  const double scale = std::max(pair.d_mat.frobenius_norm(), 1.0);
  return eigenvalues_sym(e).front() / scale;
}

/// Matrix of the family D_n - 2 lambda M_n + lambda^2 I.
inline SymMatrix assemble_b(const TruncatedPair& pair, double lambda) {
  SymMatrix b = pair.d_mat;
  const std::size_t n = pair.dim();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) b.add(i, j, -2.0 * lambda * pair.m_mat(i, j));
  b.shift_diagonal(lambda * lambda);
  return b;
}

/// Pair for the trial block [inner_first, inner_first + n) of an ambient
/// matrix, with the Gram surrogate taken through the outer block
/// [outer_first, outer_first + m) that must contain it:
/// D_{rs} = sum_{k in outer} M_{rk} M_{ks}. An outer block covering the
/// whole ambient matrix gives its exact Gram matrix.
inline TruncatedPair compress_pair(const SymMatrix& big, std::size_t inner_first, std::size_t n,
                                   std::size_t outer_first, std::size_t m) {
  if (n == 0 || inner_first + n > big.dim()) throw Error(ErrorCode::InvalidArgument, "trial block out of range");
  if (outer_first + m > big.dim() || outer_first > inner_first || outer_first + m < inner_first + n)
    throw Error(ErrorCode::InvalidArgument, "outer block must contain the trial block");

  SymMatrix mm = big.block(inner_first, n);
  SymMatrix d(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t s = r; s < n; ++s) {
      double acc = 0.0;
      for (std::size_t k = outer_first; k < outer_first + m; ++k)
        acc += big(inner_first + r, k) * big(k, inner_first + s);
      d.set(r, s, acc);
    }
  }
  return TruncatedPair{std::move(mm), std::move(d), m == big.dim()};
}

/// Leading-block version: trial space is the first n coordinates, outer
/// level the first m.
inline TruncatedPair two_level_pair(const SymMatrix& big, std::size_t n, std::size_t m) {
  return compress_pair(big, 0, n, 0, m);
}

/// B(m, n, lambda) = P_n M P_m M P_n - 2 lambda P_n M P_n + lambda^2 P_n on
/// the leading n coordinates of `m_big`, outer level m = m_big.dim().
inline SymMatrix assemble_b_two_level(const SymMatrix& m_big, std::size_t n, double lambda) {
  if (n == 0 || n > m_big.dim()) throw Error(ErrorCode::InvalidArgument, "require 1 <= n <= dim(m_big)");
  return assemble_b(two_level_pair(m_big, n, m_big.dim()), lambda);
}

/// Plain Ritz values: eigenvalues of M_n, unfiltered.
inline Vector ritz_spectrum(const TruncatedPair& pair) { return eigenvalues_sym(pair.m_mat); }

/// Gap (alpha, beta) with ascending candidate minima strictly inside.
struct GapProblem {
  double alpha = 0.0;
  double beta = 1.0;
  std::vector<double> sigmas;

  void validate() const {
    if (!(alpha < beta)) throw Error(ErrorCode::InvalidArgument, "gap endpoints must satisfy alpha < beta");
    double prev = alpha;
    for (double s : sigmas) {
      if (!(s > prev)) throw Error(ErrorCode::InvalidArgument, "candidate minima must be ascending inside the gap");
      prev = s;
    }
    if (!sigmas.empty() && !(sigmas.back() < beta))
      throw Error(ErrorCode::InvalidArgument, "candidate minima must lie below beta");
  }
};

}  // namespace gapbound
