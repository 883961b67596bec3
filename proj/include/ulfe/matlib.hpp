#ifndef ULFE_MATLIB_HPP
#define ULFE_MATLIB_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ulfe/errors.hpp"

namespace ulfe {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kDefaultRankTol = 1e-10;
inline constexpr double kHurwitzThreshold = -1e-9;

inline bool all_finite(const Mat& m) { return m.allFinite(); }

// Throws NonFiniteValue naming `what` when any entry is NaN/Inf.
inline const Mat& require_finite(const Mat& m, const std::string& what) {
  if (!m.allFinite()) throw NonFiniteValue(what + " has non-finite entries");
  return m;
}

// Row-major construction with the dimension/finiteness invariants checked.
inline Mat make_mat(Eigen::Index rows, Eigen::Index cols,
                    const std::vector<double>& entries) {
  if (rows < 0 || cols < 0 ||
      static_cast<std::size_t>(rows * cols) != entries.size()) {
    throw std::invalid_argument("make_mat: entries length != rows*cols");
  }
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = entries[i * cols + j];
  return require_finite(m, "make_mat");
}

inline double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

namespace detail {

inline Eigen::Index numerical_rank(const Vec& sv, double tol) {
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  const double cut = tol * sv(0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > cut) ++r;
  return r;
}

}  // namespace detail

inline Eigen::Index numerical_rank(const Mat& m, double tol = kDefaultRankTol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  return detail::numerical_rank(svd.singularValues(), tol);
}

/// Moore-Penrose pseudoinverse. Singular values at or below tol * sigma_max
/// are treated as zero.
inline Mat pseudo_inverse(const Mat& s, double tol = kDefaultRankTol) {
  if (!(tol > 0.0)) throw std::invalid_argument("pseudo_inverse: tol must be > 0");
  if (s.size() == 0) throw std::invalid_argument("pseudo_inverse: empty matrix");
  require_finite(s, "pseudo_inverse input");
  Eigen::JacobiSVD<Mat> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const Eigen::Index r = detail::numerical_rank(sv, tol);
  Mat out = Mat::Zero(s.cols(), s.rows());
  for (Eigen::Index k = 0; k < r; ++k)
    out += svd.matrixV().col(k) * (1.0 / sv(k)) * svd.matrixU().col(k).transpose();
  return out;
}

struct RankFactors {
  Mat q;  // full column rank
  Mat r;  // full row rank
};

/// F = Q R with inner dimension equal to the numerical rank of F. The
/// singular values are split evenly between the factors.
inline RankFactors rank_factorization(const Mat& f, double tol = kDefaultRankTol) {
  if (!(tol > 0.0))
    throw std::invalid_argument("rank_factorization: tol must be > 0");
  require_finite(f, "rank_factorization input");
  if (f.size() == 0) return {Mat(f.rows(), 0), Mat(0, f.cols())};
  Eigen::JacobiSVD<Mat> svd(f, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const Eigen::Index k = detail::numerical_rank(sv, tol);
  const Vec root = sv.head(k).cwiseSqrt();
  RankFactors out;
  out.q = svd.matrixU().leftCols(k) * root.asDiagonal();
  out.r = root.asDiagonal() * svd.matrixV().leftCols(k).transpose();
  return out;
}

/// Minimum-norm left inverse. Zero-column input yields a 0 x rows result.
inline Mat left_inverse(const Mat& m, double tol = kDefaultRankTol) {
  if (m.cols() == 0) return Mat(0, m.rows());
  if (numerical_rank(m, tol) < m.cols()) {
    throw ColumnRankDeficient("left_inverse: matrix (" + std::to_string(m.rows()) +
                              "x" + std::to_string(m.cols()) +
                              ") does not have full column rank");
  }
  return pseudo_inverse(m, tol);
}

inline Eigen::VectorXcd eigenvalues(const Mat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eigenvalues: non-square");
  if (a.size() == 0) return Eigen::VectorXcd(0);
  Eigen::EigenSolver<Mat> es(a, false);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigenvalue solver failed");
  return es.eigenvalues();
}

/// Largest real part over the spectrum; -inf for 0x0.
inline double spectral_abscissa(const Mat& a) {
  const auto ev = eigenvalues(a);
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) m = std::max(m, ev(i).real());
  return m;
}

inline bool is_hurwitz(const Mat& a) {
  return spectral_abscissa(a) < kHurwitzThreshold;
}

inline void require_hurwitz(const Mat& a) {
  const double abscissa = spectral_abscissa(a);
  if (!(abscissa < kHurwitzThreshold)) throw NotHurwitz(abscissa);
}

/// Solves F X + X G = H by complex Schur reduction of F and G (Bartels-Stewart).
inline Mat solve_sylvester(const Mat& f, const Mat& g, const Mat& h) {
  if (f.rows() != f.cols() || g.rows() != g.cols() || h.rows() != f.rows() ||
      h.cols() != g.rows()) {
    throw std::invalid_argument("solve_sylvester: dimension mismatch");
  }
  const Eigen::Index n = f.rows(), m = g.rows();
  if (n == 0 || m == 0) return Mat::Zero(n, m);
  Eigen::ComplexSchur<Mat> sf(f), sg(g);
  const CMat& t1 = sf.matrixT();
  const CMat& u1 = sf.matrixU();
  const CMat& t2 = sg.matrixT();
  const CMat& u2 = sg.matrixU();
  const CMat rhs = u1.adjoint() * h.cast<std::complex<double>>() * u2;
  CMat y(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::VectorXcd col = rhs.col(j);
    for (Eigen::Index k = 0; k < j; ++k) col -= t2(k, j) * y.col(k);
    CMat sys = t1;
    sys.diagonal().array() += t2(j, j);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(sys(i, i)) < 1e-14 * (1.0 + t1.cwiseAbs().maxCoeff())) {
        throw NumericalFailure("solve_sylvester: equation is (near) singular");
      }
    }
    y.col(j) = sys.triangularView<Eigen::Upper>().solve(col);
  }
  return (u1 * y * u2.adjoint()).real();
}

/// Solves A^T P + P A + Q = 0 for Hurwitz A.
inline Mat solve_lyapunov(const Mat& a, const Mat& q) {
  if (a.rows() != a.cols() || q.rows() != a.rows() || q.cols() != a.cols())
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  require_hurwitz(a);
  Mat p = solve_sylvester(a.transpose(), a, -q);
  return 0.5 * (p + p.transpose());
}

/// A W + W A^T + B B^T = 0.
inline Mat controllability_gramian(const Mat& a, const Mat& b) {
  return solve_lyapunov(a.transpose(), b * b.transpose());
}

/// A^T W + W A + C^T C = 0.
inline Mat observability_gramian(const Mat& a, const Mat& c) {
  return solve_lyapunov(a, c.transpose() * c);
}

/// Largest singular value of C (i w I - A)^{-1} B.
inline double sigma_max_at(const Mat& a, const Mat& b, const Mat& c, double w) {
  if (b.cols() == 0 || c.rows() == 0) return 0.0;
  CMat sys = -a.cast<std::complex<double>>();
  sys.diagonal().array() += std::complex<double>(0.0, w);
  const CMat x = sys.partialPivLu().solve(b.cast<std::complex<double>>());
  const CMat t = c.cast<std::complex<double>>() * x;
  Eigen::JacobiSVD<CMat> svd(t);
  return svd.singularValues()(0);
}

namespace detail {

inline void check_state_space(const Mat& a, const Mat& b, const Mat& c,
                              const char* who) {
  if (a.rows() != a.cols() || b.rows() != a.rows() || c.cols() != a.rows())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

}  // namespace detail

/// H-infinity norm of C (sI - A)^{-1} B for Hurwitz A, to relative tolerance
/// `tol`. Bisection on the Hamiltonian imaginary-axis eigenvalue test; every
/// candidate crossing is confirmed by evaluating the frequency response there,
/// so the lower end of the bracket is always an attained value.
inline double hinf_norm(const Mat& a, const Mat& b, const Mat& c, double tol = 1e-6) {
  detail::check_state_space(a, b, c, "hinf_norm");
  if (!(tol > 0.0)) throw std::invalid_argument("hinf_norm: tol must be > 0");
  require_hurwitz(a);
  if (b.cols() == 0 || c.rows() == 0 || b.isZero(0.0) || c.isZero(0.0)) return 0.0;

  const Eigen::Index n = a.rows();
  // Initial bracket: DC gain, 100 log-spaced points around the natural
  // frequencies of A, and the natural frequencies themselves.
  const auto ev = eigenvalues(a);
  double w_lo = std::numeric_limits<double>::infinity(), w_hi = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double mag = std::abs(ev(i));
    w_lo = std::min(w_lo, mag);
    w_hi = std::max(w_hi, mag);
  }
  w_lo = std::max(w_lo, 1e-12) * 1e-2;
  w_hi = std::max(w_hi, 1e-12) * 1e2;
  double lo = sigma_max_at(a, b, c, 0.0);
  for (int k = 0; k < 100; ++k) {
    const double w = w_lo * std::pow(w_hi / w_lo, k / 99.0);
    lo = std::max(lo, sigma_max_at(a, b, c, w));
  }
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    lo = std::max(lo, sigma_max_at(a, b, c, std::abs(ev(i).imag())));
  double hi = 2.0 * lo + 1.0;

  const Mat bbt = b * b.transpose();
  const Mat ctc = c.transpose() * c;
  Mat ham(2 * n, 2 * n);
  for (int iter = 0; iter < 200 && hi - lo > tol * lo; ++iter) {
    const double g = 0.5 * (lo + hi);
    ham << a, bbt / g, -ctc / g, -a.transpose();
    const auto hev = eigenvalues(ham);
    const double scale = 1.0 + ham.cwiseAbs().maxCoeff();
    bool crossed = false;
    for (Eigen::Index i = 0; i < hev.size(); ++i) {
      if (std::abs(hev(i).real()) > 1e-6 * (scale + std::abs(hev(i)))) continue;
      const double s = sigma_max_at(a, b, c, std::abs(hev(i).imag()));
      if (s >= g * (1.0 - 1e-12)) {
        lo = std::max(lo, s);
        crossed = true;
      }
    }
    if (!crossed) hi = g;
  }
  return lo;
}

/// H2 norm via the controllability Gramian.
inline double h2_norm(const Mat& a, const Mat& b, const Mat& c) {
  detail::check_state_space(a, b, c, "h2_norm");
  require_hurwitz(a);
  if (b.cols() == 0 || c.rows() == 0) return 0.0;
  const Mat w = controllability_gramian(a, b);
  return std::sqrt(std::max(0.0, (c * w * c.transpose()).trace()));
}

/// H2 norm via the observability Gramian; independent route to h2_norm.
inline double h2_norm_observability(const Mat& a, const Mat& b, const Mat& c) {
  detail::check_state_space(a, b, c, "h2_norm_observability");
  require_hurwitz(a);
  if (b.cols() == 0 || c.rows() == 0) return 0.0;
  const Mat w = observability_gramian(a, c);
  return std::sqrt(std::max(0.0, (b.transpose() * w * b).trace()));
}

/// Vertical concatenation that tolerates zero-row operands.
inline Mat vstack(std::initializer_list<Mat> parts) {
  Eigen::Index rows = 0, cols = -1;
  for (const auto& p : parts) {
    rows += p.rows();
    if (cols < 0) cols = p.cols();
    else if (p.cols() != cols) throw std::invalid_argument("vstack: column mismatch");
  }
  Mat out(rows, std::max<Eigen::Index>(cols, 0));
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p;
    r += p.rows();
  }
  return out;
}

inline Mat hstack(std::initializer_list<Mat> parts) {
  Eigen::Index cols = 0, rows = -1;
  for (const auto& p : parts) {
    cols += p.cols();
    if (rows < 0) rows = p.rows();
    else if (p.rows() != rows) throw std::invalid_argument("hstack: row mismatch");
  }
  Mat out(std::max<Eigen::Index>(rows, 0), cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p;
    c += p.cols();
  }
  return out;
}

}  // namespace ulfe

#endif  // ULFE_MATLIB_HPP
