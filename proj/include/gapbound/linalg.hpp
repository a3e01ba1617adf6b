#pragma once

// Dense real symmetric linear algebra: cyclic Jacobi eigendecomposition,
// Cholesky, shifted inverse iteration for the bottom eigenpair and the
// symmetric-definite generalized problem A x = tau B x.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gapbound/error.hpp"

namespace gapbound {

using Vector = std::vector<double>;

/// Largest dimension accepted anywhere in the library.
inline constexpr std::size_t kMaxDim = 2048;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Scales `v` to unit Euclidean norm; returns the original norm.
inline double normalize(std::span<double> v) {
  const double nrm = norm2(v);
  if (nrm > 0.0)
    for (auto& x : v) x /= nrm;
  return nrm;
}

inline void check_dim(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "matrix dimension must be at least 1");
  if (n > kMaxDim)
    throw Error(ErrorCode::DimensionTooLarge,
                "dimension " + std::to_string(n) + " exceeds cap " + std::to_string(kMaxDim));
}

/// Dense symmetric matrix, row-major storage. Every mutator writes both
/// (i,j) and (j,i) so the stored array is exactly symmetric at all times.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) { check_dim(n); }

  static SymMatrix identity(std::size_t n) {
    SymMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m.a_[i * n + i] = 1.0;
    return m;
  }

  static SymMatrix diagonal(std::span<const double> d) {
    SymMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m.a_[i * d.size() + i] = d[i];
    return m;
  }

  /// Builds from nested rows. Entries must agree with their transpose to
  /// `tol` relative to the largest entry; the stored matrix is the average.
  static SymMatrix from_rows(const std::vector<std::vector<double>>& rows, double tol = 1e-12) {
    const std::size_t n = rows.size();
    SymMatrix m(n);
    double scale = 0.0;
    for (const auto& row : rows) {
      if (row.size() != n) throw Error(ErrorCode::InvalidArgument, "matrix rows must be square");
      for (double x : row) scale = std::max(scale, std::abs(x));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        if (std::abs(rows[i][j] - rows[j][i]) > tol * std::max(scale, 1.0))
          throw Error(ErrorCode::InvalidArgument,
                      "matrix is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        m.set(i, j, 0.5 * (rows[i][j] + rows[j][i]));
      }
    }
    return m;
  }

  std::size_t dim() const noexcept { return n_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * n_ + j]; }

  void set(std::size_t i, std::size_t j, double v) noexcept {
    a_[i * n_ + j] = v;
    a_[j * n_ + i] = v;
  }

  void add(std::size_t i, std::size_t j, double v) noexcept {
    a_[i * n_ + j] += v;
    if (i != j) a_[j * n_ + i] += v;
  }

  std::span<const double> row(std::size_t i) const noexcept { return {a_.data() + i * n_, n_}; }
  std::span<const double> data() const noexcept { return a_; }

  std::vector<std::vector<double>> to_rows() const {
    std::vector<std::vector<double>> out(n_, std::vector<double>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) out[i][j] = (*this)(i, j);
    return out;
  }

  Vector multiply(std::span<const double> x) const {
    Vector y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) y[i] = dot(row(i), x);
    return y;
  }

  double quadratic_form(std::span<const double> x) const { return dot(x, multiply(x)); }

  double frobenius_norm() const noexcept {
    double s = 0.0;
    for (double x : a_) s += x * x;
    return std::sqrt(s);
  }

  double max_abs() const noexcept {
    double s = 0.0;
    for (double x : a_) s = std::max(s, std::abs(x));
    return s;
  }

  double trace() const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += a_[i * n_ + i];
    return s;
  }

  /// this^2, symmetric by construction; symmetrized explicitly against
  /// summation-order differences between (i,j) and (j,i).
  SymMatrix square() const {
    SymMatrix out(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i; j < n_; ++j) out.set(i, j, dot(row(i), row(j)));
    return out;
  }

  /// Principal block of rows/columns [first, first + count).
  SymMatrix block(std::size_t first, std::size_t count) const {
    if (count == 0 || first + count > n_)
      throw Error(ErrorCode::InvalidArgument, "principal block out of range");
    SymMatrix out(count);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = i; j < count; ++j) out.set(i, j, (*this)(first + i, first + j));
    return out;
  }

  SymMatrix& operator+=(const SymMatrix& o) {
    require_same(o);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  SymMatrix& operator-=(const SymMatrix& o) {
    require_same(o);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  SymMatrix& operator*=(double s) noexcept {
    for (auto& x : a_) x *= s;
    return *this;
  }
  SymMatrix& shift_diagonal(double s) noexcept {
    for (std::size_t i = 0; i < n_; ++i) a_[i * n_ + i] += s;
    return *this;
  }

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  void require_same(const SymMatrix& o) const {
    if (o.n_ != n_) throw Error(ErrorCode::InvalidArgument, "matrix dimension mismatch");
  }

  std::size_t n_ = 0;
  std::vector<double> a_;
};

struct EigenPair {
  double value = 0.0;
  Vector vector;
};

namespace detail {

// Cyclic Jacobi on a row-major copy. Returns eigenvalues (unsorted) and,
// when `vectors` is non-null, accumulates eigenvectors as its columns.
inline Vector jacobi(std::vector<double> a, std::size_t n, std::vector<double>* vectors) {
  constexpr int kMaxSweeps = 100;
  constexpr double kRelTol = 1e-14;
  if (vectors) {
    vectors->assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) (*vectors)[i * n + i] = 1.0;
  }
  double total = 0.0;
  for (double x : a) total += x * x;
  const double norm = std::sqrt(total);

  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
    off = std::sqrt(2.0 * off);
    if (off <= kRelTol * norm) {
      Vector d(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = at(i, i);
      return d;
    }
    // Rotation threshold for the first sweeps, as in the classical scheme.
    const double thresh = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(at(p, p)) + g == std::abs(at(p, p)) &&
            std::abs(at(q, q)) + g == std::abs(at(q, q))) {
          at(p, q) = 0.0;
          at(q, p) = 0.0;
          continue;
        }
        if (std::abs(apq) <= thresh || apq == 0.0) continue;

        const double h = at(q, q) - at(p, p);
        double t;
        if (std::abs(h) + g == std::abs(h)) {
          t = apq / h;
        } else {
          const double theta = 0.5 * h / apq;
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        at(p, p) -= t * apq;
        at(q, q) += t * apq;
        at(p, q) = 0.0;
        at(q, p) = 0.0;
        double* rowp = &a[p * n];
        double* rowq = &a[q * n];
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = rowp[k];
          const double akq = rowq[k];
          const double np = akp - s * (akq + akp * tau);
          const double nq = akq + s * (akp - akq * tau);
          rowp[k] = np;
          rowq[k] = nq;
          a[k * n + p] = np;
          a[k * n + q] = nq;
        }
        if (vectors) {
          auto& v = *vectors;
          for (std::size_t k = 0; k < n; ++k) {
            const double vkp = v[k * n + p];
            const double vkq = v[k * n + q];
            v[k * n + p] = vkp - s * (vkq + vkp * tau);
            v[k * n + q] = vkq + s * (vkp - vkq * tau);
          }
        }
      }
    }
  }
  throw Error(ErrorCode::NonConvergence, "Jacobi eigensolver exceeded sweep cap");
}

}  // namespace detail

/// All eigenvalues of `a`, ascending.
inline Vector eigenvalues_sym(const SymMatrix& a) {
  check_dim(a.dim());
  Vector d = detail::jacobi(Vector(a.data().begin(), a.data().end()), a.dim(), nullptr);
  std::sort(d.begin(), d.end());
  return d;
}

/// Full eigendecomposition, ascending by value, orthonormal vectors.
inline std::vector<EigenPair> eig_sym(const SymMatrix& a) {
  check_dim(a.dim());
  const std::size_t n = a.dim();
  Vector v;
  Vector d = detail::jacobi(Vector(a.data().begin(), a.data().end()), n, &v);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d[i] < d[j]; });
  std::vector<EigenPair> out;
  out.reserve(n);
  for (std::size_t k : order) {
    EigenPair p{d[k], Vector(n)};
    for (std::size_t i = 0; i < n; ++i) p.vector[i] = v[i * n + k];
    // Sign convention: largest-magnitude component positive.
    std::size_t imax = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(p.vector[i]) > std::abs(p.vector[imax])) imax = i;
    if (p.vector[imax] < 0.0)
      for (auto& x : p.vector) x = -x;
    out.push_back(std::move(p));
  }
  return out;
}

/// Lower-triangular Cholesky factor L with A = L L^T.
class Cholesky {
 public:
  /// Returns nullopt when a pivot is not strictly positive.
  static std::optional<Cholesky> factor(const SymMatrix& a) {
    const std::size_t n = a.dim();
    Cholesky c;
    c.n_ = n;
    c.l_.assign(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double d = a(j, j);
      const double* lj = &c.l_[j * n];
      for (std::size_t k = 0; k < j; ++k) d -= lj[k] * lj[k];
      if (!(d > 0.0)) return std::nullopt;
      const double ljj = std::sqrt(d);
      c.l_[j * n + j] = ljj;
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = a(i, j);
        const double* li = &c.l_[i * n];
        for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
        c.l_[i * n + j] = s / ljj;
      }
    }
    return c;
  }

  std::size_t dim() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return l_[i * n_ + j]; }

  /// Solves L y = b in place.
  void forward(std::span<double> b) const noexcept {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = b[i];
      const double* li = &l_[i * n_];
      for (std::size_t k = 0; k < i; ++k) s -= li[k] * b[k];
      b[i] = s / li[i];
    }
  }

  /// Solves L^T x = y in place.
  void backward(std::span<double> b) const noexcept {
    for (std::size_t ii = n_; ii-- > 0;) {
      double s = b[ii];
      for (std::size_t k = ii + 1; k < n_; ++k) s -= l_[k * n_ + ii] * b[k];
      b[ii] = s / l_[ii * n_ + ii];
    }
  }

  Vector solve(Vector b) const {
    forward(b);
    backward(b);
    return b;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> l_;
};

struct InverseIterationOptions {
  int max_iterations = 500;
};

struct InverseIterationResult {
  EigenPair pair;
  int iterations = 0;
};

/// Bottom eigenpair of a symmetric (typically positive semidefinite) matrix
/// by shifted inverse iteration.
///
/// The first two steps use the shift 0 with the regularization
/// 1e-14 * trace/dim. Afterwards the shift tracks the current Rayleigh
/// quotient from below: shift = rho - margin, accepted only if the Cholesky
/// factorization of A - shift I succeeds. A successful factorization
/// certifies shift < lambda_min, so the iteration can only converge to the
/// bottom of the spectrum.
///
/// A stall well above rounding level is resolved by eig_sym. Throws
/// SingularShift when no admissible shift can be factored and
/// IterationCapExceeded after `max_iterations`; callers fall back to
/// eig_sym in both cases.
inline InverseIterationResult smallest_eig(const SymMatrix& a, std::span<const double> start = {},
                                           const InverseIterationOptions& opts = {}) {
  check_dim(a.dim());
  const std::size_t n = a.dim();
  const double eps = std::numeric_limits<double>::epsilon();
  const double anorm = std::max(a.frobenius_norm(), std::numeric_limits<double>::min());

  if (n == 1) return {{a(0, 0), Vector{1.0}}, 0};

  Vector x(n);
  if (start.size() == n && norm2(start) > 0.0) {
    std::copy(start.begin(), start.end(), x.begin());
  } else {
    std::fill(x.begin(), x.end(), 1.0);
  }
  normalize(x);

  // Initial shift: 0 with trace regularization, or a Gershgorin lower bound
  // when A is not numerically semidefinite.
  const double reg = a.trace() > 0.0 ? 1e-14 * a.trace() / static_cast<double>(n) : 1e-14 * anorm;
  double shift = -reg;
  auto shifted_factor = [&](double s) {
    SymMatrix b = a;
    b.shift_diagonal(-s);
    return Cholesky::factor(b);
  };
  std::optional<Cholesky> chol = shifted_factor(shift);
  if (!chol) {
    double gersh = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) r += std::abs(a(i, j));
      gersh = std::min(gersh, a(i, i) - r);
    }
    shift = gersh - 1e-14 * anorm - reg;
    chol = shifted_factor(shift);
    if (!chol) {
      shift -= 1e-14 * anorm;
      chol = shifted_factor(shift);
    }
    if (!chol) throw Error(ErrorCode::SingularShift, "no admissible shift below the spectrum");
  }

  double norm_inf = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (double v : a.row(i)) r += std::abs(v);
    norm_inf = std::max(norm_inf, r);
  }

  double rho = a.quadratic_form(x);
  double prev_res = std::numeric_limits<double>::infinity();
  int stalls = 0;
  const double res_tol = 64.0 * eps * anorm;

  // A converged pair is accepted only if A - (rho - delta) I factors, i.e.
  // nothing in the spectrum lies more than delta below rho.
  // Afterwards lambda_min is located in [rho - delta, rho] by bisection on
  // the same test, down to rounding level.
  const double floor_delta = 8.0 * std::sqrt(static_cast<double>(n)) * eps * norm_inf;
  auto certified = [&](double res) -> std::optional<double> {
    double lo = rho - std::max(8.0 * res, floor_delta), hi = rho;
    if (!shifted_factor(lo)) return std::nullopt;
    while (hi - lo > floor_delta) {
      const double mid = 0.5 * (lo + hi);
      (shifted_factor(mid) ? lo : hi) = mid;
    }
    return hi;
  };

  for (int it = 1; it <= opts.max_iterations; ++it) {
    Vector y = chol->solve(x);
    if (normalize(y) == 0.0 || !std::isfinite(y[0]))
      throw Error(ErrorCode::SingularShift, "inverse iteration produced a degenerate vector");
    x = std::move(y);
    Vector ax = a.multiply(x);
    const double prev_rho = rho;
    rho = dot(x, ax);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res += (ax[i] - rho * x[i]) * (ax[i] - rho * x[i]);
    res = std::sqrt(res);

    bool converged = res <= res_tol;
    if (!converged && res < 1e-9 * anorm) {
      // A residual that grows while rho keeps dropping is a vector still
      // migrating inside a cluster, not a stall.
      if (res > 0.5 * prev_res && prev_rho - rho <= 16.0 * eps * anorm) converged = ++stalls >= 2;
      else stalls = 0;
    }
    if (converged) {
      if (res <= 16.0 * res_tol)
        if (const auto value = certified(res)) return {{*value, x}, it};
      // Stalled inside a cluster, or stuck on a vector just above the
      // bottom: inverse iteration cannot separate these cheaply.
      return {eig_sym(a).front(), it};
    }
    prev_res = res;

    if (it >= 2) {
      // Move the shift up towards rho, keeping it provably below lambda_min.
      double margin = std::max(2.0 * res, 1e-13 * anorm);
      for (int attempt = 0; attempt < 8; ++attempt) {
        const double trial = rho - margin;
        if (trial <= shift) break;
        if (auto c = shifted_factor(trial)) {
          chol = std::move(c);
          shift = trial;
          break;
        }
        margin *= 10.0;
      }
    }
  }
  throw Error(ErrorCode::IterationCapExceeded,
              "inverse iteration did not converge in " + std::to_string(opts.max_iterations) + " steps");
}

enum class Which { Smallest, Largest };

/// Extreme eigenpair of A x = tau B x with B symmetric positive definite,
/// via the Cholesky reduction L^{-1} A L^{-T}. The returned vector has
/// x^T B x = 1.
inline EigenPair gen_eig_extreme(const SymMatrix& a, const SymMatrix& b, Which which) {
  check_dim(a.dim());
  if (b.dim() != a.dim()) throw Error(ErrorCode::InvalidArgument, "generalized problem dimension mismatch");
  const std::size_t n = a.dim();
  auto chol = Cholesky::factor(b);
  if (!chol) throw Error(ErrorCode::NotPositiveDefinite, "right-hand matrix is not positive definite");

  // C = L^{-1} A L^{-T}: first W = L^{-1} A (column by column), then C = L^{-1} W^T.
  std::vector<Vector> w(n, Vector(n));
  for (std::size_t j = 0; j < n; ++j) {
    Vector col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = a(i, j);
    chol->forward(col);
    for (std::size_t i = 0; i < n; ++i) w[i][j] = col[i];
  }
  SymMatrix c(n);
  std::vector<Vector> full(n, Vector(n));
  for (std::size_t i = 0; i < n; ++i) {
    Vector col = w[i];  // row i of W, i.e. column i of W^T
    chol->forward(col);
    for (std::size_t k = 0; k < n; ++k) full[k][i] = col[k];
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) c.set(i, j, 0.5 * (full[i][j] + full[j][i]));

  auto pairs = eig_sym(c);
  EigenPair p = which == Which::Smallest ? pairs.front() : pairs.back();
  chol->backward(p.vector);
  return p;
}

}  // namespace gapbound
