#ifndef ULFE_MODEL_HPP
#define ULFE_MODEL_HPP

#include <functional>
#include <stdexcept>
#include <string>

#include "ulfe/matlib.hpp"

namespace ulfe {

/// Known nonlinearity g(Vx, u, t). Must be re-entrant: the simulator and the
/// fault reconstruction call it from independent code paths.
using Nonlinearity = std::function<Vec(const Vec& vx, const Vec& u, double t)>;

/// Nonlinear plant
///   xdot = A x + B u + S g(V x, u, t) + D w + F_x f_x
///   y    = C x + F_y f_y + nu
/// Absent channels are represented by zero-width matrices.
struct PlantModel {
  Mat A, B, S, V, C, Fx, Fy, D;
  Nonlinearity g;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return C.rows(); }
  Eigen::Index l() const { return B.cols(); }
  Eigen::Index n_g() const { return S.cols(); }
  Eigen::Index n_v() const { return V.rows(); }
  Eigen::Index n_fx() const { return Fx.cols(); }
  Eigen::Index n_fy() const { return Fy.cols(); }
  Eigen::Index n_d() const { return D.cols(); }

  void validate() const {
    const Eigen::Index nn = n();
    auto need = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("PlantModel: ") + what);
    };
    need(A.cols() == nn, "A must be square");
    need(B.rows() == nn, "B must have n rows");
    need(S.rows() == nn, "S must have n rows");
    need(V.cols() == nn, "V must have n columns");
    need(C.cols() == nn, "C must have n columns");
    need(Fx.rows() == nn, "F_x must have n rows");
    need(Fy.rows() == C.rows(), "F_y must have m rows");
    need(D.rows() == nn, "D must have n rows");
    for (const Mat* p : {&A, &B, &S, &V, &C, &Fx, &Fy, &D})
      require_finite(*p, "PlantModel matrix");
  }
};

/// A plant with every channel empty except the ones given; g defaults to 0.
inline PlantModel make_plant(Mat a, Mat c) {
  const Eigen::Index n = a.rows(), m = c.rows();
  PlantModel p;
  p.A = std::move(a);
  p.C = std::move(c);
  p.B = Mat(n, 0);
  p.S = Mat(n, 0);
  p.V = Mat(0, n);
  p.Fx = Mat(n, 0);
  p.Fy = Mat(m, 0);
  p.D = Mat(n, 0);
  return p;
}

/// Plant after splitting the process fault into the part aligned with S and
/// its complement: Q1 R1 = S^+ F_x and Q2 R2 = (I - S S^+) F_x. The lumped
/// faults f_n = R1 f_x and f_l = R2 f_x are implied, not stored.
struct TransformedPlant {
  PlantModel base;
  Mat S_pinv;
  Mat Q1, R1, Q2, R2;

  Eigen::Index n_fl() const { return Q2.cols(); }
};

inline TransformedPlant transform(const PlantModel& plant, double tol = kDefaultRankTol) {
  plant.validate();
  TransformedPlant tp;
  tp.base = plant;
  const Eigen::Index n = plant.n();
  tp.S_pinv = plant.S.size() == 0 ? Mat(Mat::Zero(plant.n_g(), n))
                                  : pseudo_inverse(plant.S, tol);
  const Mat aligned = tp.S_pinv * plant.Fx;
  const Mat complement = (Mat::Identity(n, n) - plant.S * tp.S_pinv) * plant.Fx;
  auto f1 = rank_factorization(aligned, tol);
  auto f2 = rank_factorization(complement, tol);
  tp.Q1 = std::move(f1.q);
  tp.R1 = std::move(f1.r);
  tp.Q2 = std::move(f2.q);
  tp.R2 = std::move(f2.r);
  return tp;
}

inline Vec eval_nonlinearity(const PlantModel& plant, const Vec& x, const Vec& u, double t) {
  if (x.size() != plant.n() || u.size() != plant.l())
    throw std::invalid_argument("eval_nonlinearity: x/u length mismatch");
  if (!plant.g) return Vec::Zero(plant.n_g());
  Vec out = plant.g(plant.V * x, u, t);
  if (out.size() != plant.n_g())
    throw std::invalid_argument("eval_nonlinearity: g returned wrong length");
  if (!out.allFinite())
    throw NonFiniteNonlinearity("nonlinearity returned non-finite value at t=" +
                                std::to_string(t));
  return out;
}

}  // namespace ulfe

#endif  // ULFE_MODEL_HPP
