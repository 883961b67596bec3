#ifndef ULFE_TESTS_SUPPORT_HPP
#define ULFE_TESTS_SUPPORT_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "ulfe/augment.hpp"
#include "ulfe/matlib.hpp"
#include "ulfe/model.hpp"

// Random instances and independent oracles shared by the test binaries.
namespace ulfe::testing {

inline Mat random_mat(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(gen);
  return m;
}

/// Random matrix of a given rank.
inline Mat random_rank(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c, Eigen::Index k) {
  if (k == 0) return Mat::Zero(r, c);
  return random_mat(gen, r, k) * random_mat(gen, k, c);
}

/// Random Hurwitz matrix with spectral abscissa at most -margin.
inline Mat random_hurwitz(std::mt19937_64& gen, Eigen::Index n, double margin = 0.5) {
  Mat a = random_mat(gen, n, n);
  const double shift = spectral_abscissa(a) + margin;
  a.diagonal().array() -= shift;
  return a;
}

/// Small random plant with one S-aligned nonlinearity channel, a process fault
/// that has both an S-aligned and a complementary part, one disturbance, and
/// g = 0. Output count m >= 2 keeps the augmented pair detectable.
inline PlantModel random_plant(std::mt19937_64& gen, Eigen::Index n = 3, Eigen::Index m = 2) {
  PlantModel p = make_plant(random_hurwitz(gen, n), random_mat(gen, m, n));
  p.B = random_mat(gen, n, 1);
  p.S = random_mat(gen, n, 1);
  p.V = Mat::Identity(n, n);
  p.Fx = random_mat(gen, n, 1);
  p.D = random_mat(gen, n, 1);
  p.g = [](const Vec&, const Vec&, double) -> Vec { return Vec::Zero(1); };
  return p;
}

/// max over a log grid of sigma_max(C (iw - A)^-1 B).
inline double hinf_grid(const Mat& a, const Mat& b, const Mat& c, double lo, double hi, int points) {
  double best = 0.0;
  for (int k = 0; k < points; ++k) {
    const double w = lo * std::pow(hi / lo, static_cast<double>(k) / (points - 1));
    CMat sys = -a.cast<std::complex<double>>();
    sys.diagonal().array() += std::complex<double>(0.0, w);
    const CMat t = c.cast<std::complex<double>>() *
                   sys.fullPivLu().solve(b.cast<std::complex<double>>());
    Eigen::JacobiSVD<CMat> svd(t);
    best = std::max(best, svd.singularValues()(0));
  }
  return best;
}

/// sqrt((1/pi) int_0^inf ||T(iw)||_F^2 dw) by composite Simpson on w = tan(theta).
inline double h2_quadrature(const Mat& a, const Mat& b, const Mat& c, int intervals = 20000) {
  const double h = (std::numbers::pi / 2.0) / intervals;
  auto f = [&](double th) {
    if (th >= std::numbers::pi / 2.0) {
      // ||T(iw)||^2 (1 + w^2) -> ||C B||^2 as w -> inf.
      return (c * b).squaredNorm();
    }
    const double w = std::tan(th);
    CMat sys = -a.cast<std::complex<double>>();
    sys.diagonal().array() += std::complex<double>(0.0, w);
    const CMat t = c.cast<std::complex<double>>() *
                   sys.fullPivLu().solve(b.cast<std::complex<double>>());
    return t.squaredNorm() * (1.0 + w * w);
  };
  double s = f(0.0) + f(std::numbers::pi / 2.0);
  for (int k = 1; k < intervals; ++k) s += (k % 2 ? 4.0 : 2.0) * f(k * h);
  return std::sqrt(s * h / 3.0 / std::numbers::pi);
}

}  // namespace ulfe::testing

#endif  // ULFE_TESTS_SUPPORT_HPP
