#ifndef ULFE_MANIPULATOR_HPP
#define ULFE_MANIPULATOR_HPP

#include <cmath>
#include <stdexcept>

#include "ulfe/errors.hpp"
#include "ulfe/matlib.hpp"
#include "ulfe/model.hpp"

// Two-link planar manipulator with revolute joints,
//   M(q) qdd + C(q, qd) qd + G(q) = tau + tau_f - D qd,   q = [theta, phi].
// State x = [theta, phi, theta_dot, phi_dot].
namespace ulfe::manipulator {

struct Params {
  double m1 = 0.263, m2 = 0.1306;   // kg
  double I1 = 0.002, I2 = 0.00098;  // kg m^2
  double l1 = 0.3, l2 = 0.3;        // m
  double lc1 = 0.15, lc2 = 0.15;    // m
  double d1 = 0.03, d2 = 0.005;     // N m s / rad
  double g = 9.81;                  // m / s^2

  void validate() const {
    for (double v : {m1, m2, I1, I2, l1, l2, lc1, lc2, d1, d2, g})
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("manipulator::Params: every parameter must be positive");
  }
};

inline Mat mass(const Params& p, double phi) {
  const double c = std::cos(phi);
  const double m22 = p.m2 * p.lc2 * p.lc2 + p.I2;
  const double m12 = m22 + p.m2 * p.l1 * p.lc2 * c;
  const double m11 = p.m1 * p.lc1 * p.lc1 + p.m2 * p.l1 * p.l1 + p.m2 * p.lc2 * p.lc2 +
                     2.0 * p.m2 * p.l1 * p.lc2 * c + p.I1 + p.I2;
  Mat m(2, 2);
  m << m11, m12, m12, m22;
  return m;
}

inline Mat coriolis(const Params& p, const Vec& q, const Vec& qd) {
  const double h = p.m2 * p.l1 * p.lc2 * std::sin(q(1));
  Mat c(2, 2);
  c << -2.0 * h * qd(1), -h * qd(1), h * qd(0), 0.0;
  return c;
}

inline Vec gravity(const Params& p, const Vec& q) {
  const double s12 = p.m2 * p.lc2 * p.g * std::sin(q(0) + q(1));
  Vec g(2);
  g << (p.m1 * p.lc1 + p.m2 * p.l1) * p.g * std::sin(q(0)) + s12, s12;
  return g;
}

inline Mat damping(const Params& p) {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = p.d1;
  d(1, 1) = p.d2;
  return d;
}

inline Vec solve_mass(const Params& p, double phi, const Vec& rhs) {
  const Mat m = mass(p, phi);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (!(std::abs(det) > 1e-14 * m.squaredNorm()))
    throw SingularMassMatrix("manipulator: mass matrix is singular");
  return m.partialPivLu().solve(rhs);
}

/// [qd; M(q)^-1 (tau + tau_f - D qd - C(q, qd) qd - G(q))]
inline Vec derivative(const Params& p, const Vec& x, const Vec& tau, const Vec& tau_f) {
  if (x.size() != 4 || tau.size() != 2 || tau_f.size() != 2)
    throw std::invalid_argument("manipulator::derivative: expected x in R^4, tau and tau_f in R^2");
  const Vec q = x.head(2), qd = x.tail(2);
  const Vec rhs = tau + tau_f - damping(p) * qd - coriolis(p, q, qd) * qd - gravity(p, q);
  Vec out(4);
  out << qd, solve_mass(p, q(1), rhs);
  return out;
}

/// Lumped fault M(q)^-1 tau_f.
inline Vec lumped_fault(const Params& p, const Vec& x, const Vec& tau_f) {
  return solve_mass(p, x(1), tau_f);
}

/// Kinetic plus potential energy, zero at the downward rest position.
inline double energy(const Params& p, const Vec& x) {
  const Vec qd = x.tail(2);
  const double kin = 0.5 * qd.dot(mass(p, x(1)) * qd);
  const double pot = (p.m1 * p.lc1 + p.m2 * p.l1) * p.g * (1.0 - std::cos(x(0))) +
                     p.m2 * p.lc2 * p.g * (1.0 - std::cos(x(0) + x(1)));
  return kin + pot;
}

/// g(Vx, u) = M^-1(q) (u - D qd - C qd - G(q)) + M_l^-1 D qd with M_l = M(0).
inline Nonlinearity nonlinearity(const Params& p) {
  const Mat ml_inv_d = mass(p, 0.0).inverse() * damping(p);
  return [p, ml_inv_d](const Vec& vx, const Vec& u, double) -> Vec {
    const Vec q = vx.head(2), qd = vx.tail(2);
    const Vec rhs = u - damping(p) * qd - coriolis(p, q, qd) * qd - gravity(p, q);
    return solve_mass(p, q(1), rhs) + ml_inv_d * qd;
  };
}

/// Plant in the form xdot = A x + S g(Vx, u) + F_x f_x, y = C x with
/// A = [0 I; 0 -M_l^-1 D], S = F_x = [0; I], C = [I 0], V = I, B = 0.
inline PlantModel plant(const Params& p = {}) {
  p.validate();
  Mat a = Mat::Zero(4, 4);
  a.topRightCorner(2, 2).setIdentity();
  a.bottomRightCorner(2, 2) = -mass(p, 0.0).inverse() * damping(p);
  Mat c = Mat::Zero(2, 4);
  c.leftCols(2).setIdentity();
  PlantModel pm = make_plant(a, c);
  pm.B = Mat::Zero(4, 2);
  pm.S = Mat::Zero(4, 2);
  pm.S.bottomRows(2).setIdentity();
  pm.Fx = pm.S;
  pm.V = Mat::Identity(4, 4);
  pm.g = nonlinearity(p);
  return pm;
}

}  // namespace ulfe::manipulator

#endif  // ULFE_MANIPULATOR_HPP
