#ifndef ULFE_AUGMENT_HPP
#define ULFE_AUGMENT_HPP

#include <array>
#include <stdexcept>
#include <string>

#include "ulfe/matlib.hpp"
#include "ulfe/model.hpp"

namespace ulfe {

/// Number of time derivatives kept in each ultra-local chain: r1 for the
/// nonlinearity-plus-aligned-fault signal, r2 for the complementary process
/// fault, r3 for the sensor fault.
struct UltraLocalOrders {
  int r1 = 1, r2 = 1, r3 = 1;

  static UltraLocalOrders uniform(int r) { return {r, r, r}; }

  void validate() const {
    if (r1 < 1 || r2 < 1 || r3 < 1)
      throw std::invalid_argument("UltraLocalOrders: every order must be >= 1");
  }
};

/// Augmented linear model with state x_a = [x; b1; rho1; b2; rho2; b3; rho3],
/// where b_k is a lumped signal and rho_k stacks its derivatives up to order
/// r_k - 1.
struct AugmentedSystem {
  Mat A_a, B_a, C_a, D_a;
  Mat Cbar1, Cbar2, Cbar3, V_a, Cbar_a;
  Eigen::Index n_z = 0;

  // Offsets of each chain head in x_a and the chain widths.
  std::array<Eigen::Index, 3> chain_offset{};
  std::array<Eigen::Index, 3> chain_width{};
  std::array<int, 3> chain_order{};
};

namespace detail {

// Block-shift integrator chain of `order` copies of a width-w signal.
inline void place_chain(Mat& a, Eigen::Index offset, Eigen::Index width, int order) {
  for (int j = 0; j + 1 < order; ++j) {
    a.block(offset + j * width, offset + (j + 1) * width, width, width).setIdentity();
  }
}

}  // namespace detail

inline AugmentedSystem build_augmented(const TransformedPlant& tp, UltraLocalOrders orders) {
  orders.validate();
  const PlantModel& p = tp.base;
  if (tp.Q2.cols() != tp.R2.rows()) {
    throw std::logic_error("build_augmented: Q2 columns != R2 rows (" +
                           std::to_string(tp.Q2.cols()) + " vs " +
                           std::to_string(tp.R2.rows()) + ")");
  }
  const Eigen::Index n = p.n(), m = p.m(), l = p.l();
  const std::array<Eigen::Index, 3> width{p.n_g(), tp.n_fl(), p.n_fy()};
  const std::array<int, 3> order{orders.r1, orders.r2, orders.r3};

  AugmentedSystem aug;
  aug.chain_width = width;
  aug.chain_order = order;
  Eigen::Index nz = n;
  for (int k = 0; k < 3; ++k) {
    aug.chain_offset[k] = nz;
    nz += order[k] * width[k];
  }
  aug.n_z = nz;

  aug.A_a = Mat::Zero(nz, nz);
  aug.A_a.topLeftCorner(n, n) = p.A;
  aug.A_a.block(0, aug.chain_offset[0], n, width[0]) = p.S;
  aug.A_a.block(0, aug.chain_offset[1], n, width[1]) = tp.Q2;
  for (int k = 0; k < 3; ++k) detail::place_chain(aug.A_a, aug.chain_offset[k], width[k], order[k]);

  aug.B_a = Mat::Zero(nz, l);
  aug.B_a.topRows(n) = p.B;

  aug.C_a = Mat::Zero(m, nz);
  aug.C_a.leftCols(n) = p.C;
  aug.C_a.middleCols(aug.chain_offset[2], width[2]) = p.Fy;

  // Disturbance columns: [w, b1^(r1), b2^(r2), b3^(r3)]; each derivative
  // enters the last element of its chain.
  const Eigen::Index n_d = p.n_d();
  aug.D_a = Mat::Zero(nz, n_d + width[0] + width[1] + width[2]);
  aug.D_a.topLeftCorner(n, n_d) = p.D;
  Eigen::Index col = n_d;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Index last = aug.chain_offset[k] + (order[k] - 1) * width[k];
    aug.D_a.block(last, col, width[k], width[k]).setIdentity();
    col += width[k];
  }

  auto selector = [&](int k) {
    Mat s = Mat::Zero(width[k], nz);
    s.middleCols(aug.chain_offset[k], width[k]).setIdentity();
    return s;
  };
  aug.Cbar1 = selector(0);
  aug.Cbar2 = selector(1);
  aug.Cbar3 = selector(2);
  aug.V_a = Mat::Zero(p.n_v(), nz);
  aug.V_a.leftCols(n) = p.V;
  aug.Cbar_a = vstack({aug.V_a, aug.Cbar1, aug.Cbar2, aug.Cbar3});
  return aug;
}

/// Algebraic fault reconstruction from an augmented-state estimate. The left
/// inverses are formed once from the constant factors.
class FaultReconstructor {
 public:
  FaultReconstructor(const TransformedPlant& tp, const AugmentedSystem& aug,
                     double tol = kDefaultRankTol)
      : plant_(tp.base), aug_(aug) {
    q1_left_ = left_inverse(tp.Q1, tol);
    r_left_ = left_inverse(vstack({tp.R1, tp.R2}), tol);
  }

  struct Estimate {
    Vec fx;
    Vec fy;
  };

  Estimate operator()(const Vec& xhat_a, const Vec& u, double t) const {
    if (xhat_a.size() != aug_.n_z)
      throw std::invalid_argument("extract_fault_estimates: xhat_a length != n_z");
    Estimate out;
    const Eigen::Index n = plant_.n();
    const Vec xhat = xhat_a.head(n);
    const Vec g = eval_nonlinearity(plant_, xhat, u, t);
    const Vec aligned = q1_left_ * (aug_.Cbar1 * xhat_a - g);
    const Vec complement = aug_.Cbar2 * xhat_a;
    Vec stacked(aligned.size() + complement.size());
    stacked << aligned, complement;
    out.fx = r_left_ * stacked;
    out.fy = aug_.Cbar3 * xhat_a;
    return out;
  }

  const Mat& q1_left() const { return q1_left_; }
  const Mat& r_left() const { return r_left_; }

 private:
  PlantModel plant_;
  AugmentedSystem aug_;
  Mat q1_left_, r_left_;
};

inline FaultReconstructor::Estimate extract_fault_estimates(const AugmentedSystem& aug,
                                                            const TransformedPlant& tp,
                                                            const Vec& xhat_a, const Vec& u,
                                                            double t) {
  return FaultReconstructor(tp, aug)(xhat_a, u, t);
}

}  // namespace ulfe

#endif  // ULFE_AUGMENT_HPP
