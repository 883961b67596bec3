#ifndef ULFE_SDP_HPP
#define ULFE_SDP_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ulfe/matlib.hpp"

// Small dense semidefinite programming solver for LMI problems
//
//   minimize  c^T y   subject to   F(y) = F_0 + sum_i y_i F_i >= 0,
//
// with F block diagonal. Internally this is the dual-form SDP
//   min b^T y  s.t.  S = sum_i y_i A_i - C >= 0   (A_i = F_i, C = -F_0)
// paired with  max <C, X>  s.t.  <A_i, X> = b_i, X >= 0,
// solved by an infeasible-start primal-dual path-following method using the
// HKM search direction and Mehrotra's predictor-corrector.
namespace ulfe::sdp {

using SpMat = Eigen::SparseMatrix<double>;

struct Coefficient {
  int block = 0;
  SpMat matrix;  // symmetric, full storage
};

struct Problem {
  std::vector<Mat> f0;                           // one symmetric matrix per block
  std::vector<std::vector<Coefficient>> coeffs;  // coeffs[i]: blocks where y_i appears
  Vec objective;                                 // c

  int num_blocks() const { return static_cast<int>(f0.size()); }
  int num_vars() const { return static_cast<int>(coeffs.size()); }
};

enum class Status { Optimal, Infeasible, NumericalFailure };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

struct Settings {
  double tolerance = 1e-9;          // relative complementarity gap and dual residual
  double primal_tolerance = 1e-6;   // relative residual of the multiplier X
  int max_iterations = 250;
  double step_fraction = 0.99;  // upper bound on the fraction to the boundary
  // Largest relative objective gap accepted when the primal step is stuck.
  double stuck_gap_limit = 1e-2;
  bool detect_infeasibility = true;
  bool verbose = false;  // per-iteration log on stderr
};

struct Result {
  Status status = Status::NumericalFailure;
  Vec y;
  double objective = std::numeric_limits<double>::quiet_NaN();
  // max over blocks of max(0, -lambda_min(F_b(y))).
  double worst_block_residual = std::numeric_limits<double>::quiet_NaN();
  // Phase-I value: min t with F(y) + t I >= 0, clipped at -1. Negative means
  // strictly feasible.
  double feasibility_margin = std::numeric_limits<double>::quiet_NaN();
  // Relative gap between the returned objective and the multiplier bound.
  double objective_gap = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::string message;
};

inline Mat evaluate_block(const Problem& p, int block, const Vec& y) {
  Mat f = p.f0[block];
  for (int i = 0; i < p.num_vars(); ++i)
    for (const auto& c : p.coeffs[i])
      if (c.block == block) f += y(i) * Mat(c.matrix);
  return f;
}

inline double min_eigenvalue(const Mat& sym) {
  if (sym.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// max over blocks of max(0, -lambda_min(F_b(y))).
inline double worst_block_residual(const Problem& p, const Vec& y) {
  double worst = 0.0;
  for (int b = 0; b < p.num_blocks(); ++b)
    worst = std::max(worst, -min_eigenvalue(evaluate_block(p, b, y)));
  return worst;
}

namespace detail {

using StopFn = std::function<bool(const Vec& y)>;

struct CoreResult {
  bool converged = false;
  bool stopped = false;
  bool reduced_accuracy = false;
  double objective_gap = 0.0;
  Vec y;
  int iterations = 0;
  std::string message;
};

inline double inner(const SpMat& a, const Mat& w) {
  double s = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it) s += it.value() * w(it.row(), it.col());
  return s;
}

// Largest alpha with M + alpha dM >= 0 (inf if unbounded), M positive definite.
inline double max_step(const Mat& m, const Mat& dm) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) return 0.0;
  const Mat linv_dm = llt.matrixL().solve(dm);
  const Mat t = llt.matrixL().solve(linv_dm.transpose());
  const double lmin = min_eigenvalue(0.5 * (t + t.transpose()));
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

inline CoreResult interior_point(const Problem& p, const Settings& set, const StopFn& stop) {
  const int nb = p.num_blocks(), nv = p.num_vars();
  CoreResult out;
  std::vector<Eigen::Index> dim(nb);
  Eigen::Index ntot = 0;
  for (int b = 0; b < nb; ++b) {
    dim[b] = p.f0[b].rows();
    ntot += dim[b];
  }
  std::vector<std::vector<std::pair<int, const SpMat*>>> by_block(nb);
  double max_a = 0.0, ratio = 0.0;
  for (int i = 0; i < nv; ++i) {
    double na2 = 0.0;
    for (const auto& c : p.coeffs[i]) {
      by_block[c.block].push_back({i, &c.matrix});
      na2 += c.matrix.squaredNorm();
    }
    max_a = std::max(max_a, std::sqrt(na2));
    ratio = std::max(ratio, (1.0 + std::abs(p.objective(i))) / (1.0 + std::sqrt(na2)));
  }
  std::vector<Mat> cmat(nb);
  double norm_c2 = 0.0;
  for (int b = 0; b < nb; ++b) {
    cmat[b] = -p.f0[b];
    norm_c2 += cmat[b].squaredNorm();
  }
  const double norm_c = std::sqrt(norm_c2);
  const double norm_b = p.objective.norm();
  const double sq = std::sqrt(static_cast<double>(ntot));
  const double xi = std::max({10.0, sq, static_cast<double>(ntot) * ratio});
  const double eta = std::max({10.0, sq, norm_c, max_a});

  std::vector<Mat> X(nb), S(nb), Sinv(nb), Rd(nb);
  for (int b = 0; b < nb; ++b) {
    X[b] = xi * Mat::Identity(dim[b], dim[b]);
    S[b] = eta * Mat::Identity(dim[b], dim[b]);
  }
  Vec y = Vec::Zero(nv);

  std::vector<Mat> dX(nb), dS(nb), dXa(nb), dSa(nb), corr(nb);
  Mat schur(nv, nv);

  auto solve_direction = [&](const Eigen::LDLT<Mat>& fact, double target,
                             bool use_corr, std::vector<Mat>& dx, std::vector<Mat>& ds,
                             Vec& dy) {
    Vec rhs = -p.objective;
    for (int b = 0; b < nb; ++b) {
      Mat w = target * Sinv[b] + X[b] * Rd[b] * Sinv[b];
      if (use_corr) w -= corr[b] * Sinv[b];
      for (const auto& [i, a] : by_block[b]) rhs(i) += inner(*a, w);
    }
    dy = fact.solve(rhs);
    for (int k = 0; k < 2; ++k) dy += fact.solve(rhs - schur * dy);
    for (int b = 0; b < nb; ++b) {
      ds[b] = -Rd[b];
      for (const auto& [i, a] : by_block[b]) ds[b] += dy(i) * (*a);
      Mat t = X[b] * ds[b];
      if (use_corr) t += corr[b];
      Mat d = target * Sinv[b] - X[b] - t * Sinv[b];
      dx[b] = 0.5 * (d + d.transpose());
    }
  };

  Vec fallback;
  int stalled = 0, primal_stuck = 0;
  double last_obj_gap = 0.0;
  double last_by = std::numeric_limits<double>::quiet_NaN();
  auto accept_fallback = [&]() {
    out.converged = true;
    out.reduced_accuracy = true;
    out.y = fallback;
    out.objective_gap = last_obj_gap;
    return out;
  };

  auto step_lengths = [&](const std::vector<Mat>& dx, const std::vector<Mat>& ds) {
    double ap = std::numeric_limits<double>::infinity(), ad = ap;
    for (int b = 0; b < nb; ++b) {
      ap = std::min(ap, max_step(X[b], dx[b]));
      ad = std::min(ad, max_step(S[b], ds[b]));
    }
    return std::pair{ap, ad};
  };

  for (int iter = 0; iter < set.max_iterations; ++iter) {
    out.iterations = iter;
    // Residuals and measures.
    Vec ax = Vec::Zero(nv);
    double xs = 0.0, cx = 0.0, rd2 = 0.0, ss2 = 0.0;
    for (int b = 0; b < nb; ++b) {
      for (const auto& [i, a] : by_block[b]) ax(i) += inner(*a, X[b]);
      Rd[b] = cmat[b] + S[b];
      for (const auto& [i, a] : by_block[b]) Rd[b] -= y(i) * (*a);
      xs += (X[b].cwiseProduct(S[b])).sum();
      cx += (cmat[b].cwiseProduct(X[b])).sum();
      rd2 += Rd[b].squaredNorm();
      ss2 += S[b].squaredNorm();
    }
    const double by = p.objective.dot(y);
    const double pinf = (p.objective - ax).norm() / (1.0 + norm_b);
    // Relative to the slack as well: large iterates carry round-off of that size.
    const double dinf = std::sqrt(rd2) / (1.0 + std::max(norm_c, std::sqrt(ss2)));
    const double scale = 1.0 + std::abs(by) + std::abs(cx);
    const double gap = xs / scale;                      // complementarity
    const double obj_gap = std::abs(by - cx) / scale;  // objective mismatch
    if (set.verbose)
      std::fprintf(stderr, "%3d  b'y=% .9e  <C,X>=% .9e  gap=%.2e  pinf=%.2e  dinf=%.2e\n", iter,
                   by, cx, gap, pinf, dinf);
    if (!y.allFinite() || !std::isfinite(xs)) {
      out.message = "non-finite iterate";
      return out;
    }
    if (stop && stop(y)) {
      out.stopped = true;
      out.y = y;
      return out;
    }
    // y is the returned point, so dual feasibility is held to the full
    // tolerance; the multiplier X only certifies optimality.
    if (gap < set.tolerance && dinf < set.tolerance && pinf < set.primal_tolerance &&
        obj_gap < set.primal_tolerance) {
      out.converged = true;
      out.y = y;
      return out;
    }
    // On ill-conditioned problems the Schur solve loses the primal residual
    // before y stops improving. Keep a nearly-converged y and accept it once
    // the objective stalls.
    if (gap < 1e3 * set.tolerance && dinf < 1e3 * set.tolerance && obj_gap < 1e-4) {
      fallback = y;
      if (std::abs(by - last_by) <= 10.0 * set.tolerance * (1.0 + std::abs(by))) ++stalled;
      else stalled = 0;
      if (stalled >= 5) return accept_fallback();
    }
    last_by = by;
    last_obj_gap = obj_gap;
    const double mu = xs / static_cast<double>(ntot);

    // Schur complement M_ij = tr(A_i X A_j S^-1).
    schur.setZero();
    for (int b = 0; b < nb; ++b) {
      Eigen::LLT<Mat> llt(S[b]);
      if (llt.info() != Eigen::Success) {
        out.message = "slack lost positive definiteness";
        return fallback.size() ? accept_fallback() : out;
      }
      Sinv[b] = llt.solve(Mat::Identity(dim[b], dim[b]));
      for (const auto& [j, aj] : by_block[b]) {
        const Mat g = (X[b] * (*aj)) * Sinv[b];
        for (const auto& [i, ai] : by_block[b]) {
          if (i > j) continue;
          double s = 0.0;
          for (int k = 0; k < ai->outerSize(); ++k)
            for (SpMat::InnerIterator it(*ai, k); it; ++it) s += it.value() * g(it.col(), it.row());
          schur(i, j) += s;
        }
      }
    }
    schur = schur.selfadjointView<Eigen::Upper>();
    const double diag_max = schur.diagonal().cwiseAbs().maxCoeff();
    schur.diagonal().array() += 1e-14 * std::max(diag_max, 1.0);
    Eigen::LDLT<Mat> fact(schur);
    if (fact.info() != Eigen::Success) {
      out.message = "Schur complement factorization failed";
      return fallback.size() ? accept_fallback() : out;
    }

    // Predictor.
    Vec dy;
    solve_direction(fact, 0.0, false, dXa, dSa, dy);
    auto [ap, ad] = step_lengths(dXa, dSa);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double xs_aff = 0.0;
    for (int b = 0; b < nb; ++b)
      xs_aff += ((X[b] + ap * dXa[b]).cwiseProduct(S[b] + ad * dSa[b])).sum();
    // Centering exponent shrinks when the predictor step is short, so mu does
    // not outrun the infeasibilities.
    const double short_step = 3.0 * std::min(ap, ad) * std::min(ap, ad);
    const double expon = mu > 1e-6 ? std::max(1.0, short_step) : std::max(1.0, std::min(3.0, short_step));
    double sigma = std::pow(std::max(0.0, xs_aff) / xs, expon);
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector.
    for (int b = 0; b < nb; ++b) corr[b] = dXa[b] * dSa[b];
    solve_direction(fact, sigma * mu, true, dX, dS, dy);
    auto [ap2, ad2] = step_lengths(dX, dS);
    const double tau = std::min(set.step_fraction, 0.9 + 0.09 * std::min(ap, ad));
    ap2 = std::min(1.0, tau * ap2);
    ad2 = std::min(1.0, tau * ad2);
    if (!(ap2 > 1e-12) && !(ad2 > 1e-12)) {
      if (fallback.size()) return accept_fallback();
      out.message = "step length collapsed";
      return out;
    }
    // A degenerate multiplier can pin the primal step at zero while y stays
    // strictly feasible. After a run of such steps y is returned as a
    // feasible point with the remaining objective gap reported.
    if (ap2 < 1e-10 && dinf < 1e3 * set.tolerance) {
      if (++primal_stuck >= 10 && obj_gap < set.stuck_gap_limit) {
        fallback = y;
        return accept_fallback();
      }
    } else {
      primal_stuck = 0;
    }
    // Step-to-boundary rounding can leave S singular; back off until it factors.
    for (int tries = 0; tries < 30; ++tries) {
      bool ok = true;
      for (int b = 0; b < nb && ok; ++b)
        ok = Eigen::LLT<Mat>(S[b] + ad2 * dS[b]).info() == Eigen::Success;
      if (ok) break;
      ad2 *= 0.5;
    }
    if (set.verbose)
      std::fprintf(stderr, "     mu=%.2e sigma=%.2e ap=%.2e ad=%.2e |y|=%.2e\n", mu, sigma, ap2, ad2,
                   y.norm());
    for (int b = 0; b < nb; ++b) {
      X[b] += ap2 * dX[b];
      S[b] += ad2 * dS[b];
    }
    y += ad2 * dy;
  }
  if (fallback.size()) return accept_fallback();
  out.message = "iteration limit reached";
  out.y = y;
  return out;
}

}  // namespace detail

/// Solves the LMI program. With detect_infeasibility, a phase-I problem
///   min t  s.t.  F(y) + t I >= 0,  t >= -1
/// runs first and stops at the first strictly feasible y; if none exists the
/// result is Infeasible.
inline Result solve(const Problem& p, const Settings& set = {}) {
  if (static_cast<int>(p.objective.size()) != p.num_vars())
    throw std::invalid_argument("sdp::solve: objective length != number of variables");
  for (int b = 0; b < p.num_blocks(); ++b)
    if (p.f0[b].rows() != p.f0[b].cols())
      throw std::invalid_argument("sdp::solve: non-square block");

  Result res;
  const int nv = p.num_vars();
  auto strictly_feasible = [&](const Vec& y) {
    for (int b = 0; b < p.num_blocks(); ++b)
      if (!(min_eigenvalue(evaluate_block(p, b, y)) > 0.0)) return false;
    return true;
  };

  if (set.detect_infeasibility) {
    Problem ph;
    ph.f0 = p.f0;
    ph.f0.push_back(Mat::Ones(1, 1));
    ph.coeffs = p.coeffs;
    std::vector<Coefficient> t_coeffs;
    for (int b = 0; b < p.num_blocks(); ++b) {
      const Eigen::Index d = p.f0[b].rows();
      SpMat eye(d, d);
      eye.setIdentity();
      t_coeffs.push_back({b, eye});
    }
    SpMat one(1, 1);
    one.insert(0, 0) = 1.0;
    t_coeffs.push_back({p.num_blocks(), one});
    ph.coeffs.push_back(std::move(t_coeffs));
    ph.objective = Vec::Zero(nv + 1);
    ph.objective(nv) = 1.0;
    auto core = detail::interior_point(
        ph, set, [&](const Vec& yt) { return strictly_feasible(yt.head(nv)); });
    res.iterations += core.iterations;
    if (!core.stopped) {
      if (core.converged) {
        res.feasibility_margin = core.y(nv);
        res.y = core.y.head(nv);
        res.status = Status::Infeasible;
        res.message = "no strictly feasible point (phase-I optimum t* = " +
                      std::to_string(core.y(nv)) + ")";
      } else {
        res.status = Status::NumericalFailure;
        res.message = "phase I: " + core.message;
      }
      return res;
    }
    res.feasibility_margin = core.y(nv);
  }

  auto core = detail::interior_point(p, set, {});
  res.iterations += core.iterations;
  if (!core.converged) {
    res.status = Status::NumericalFailure;
    res.message = core.message;
    if (core.y.size() == nv) res.y = core.y;
    return res;
  }
  res.status = Status::Optimal;
  res.y = core.y;
  res.objective = p.objective.dot(core.y);
  res.worst_block_residual = worst_block_residual(p, core.y);
  res.objective_gap = core.objective_gap;
  if (core.reduced_accuracy)
    res.message = "reduced accuracy (relative objective gap " + std::to_string(core.objective_gap) + ")";
  return res;
}

}  // namespace ulfe::sdp

#endif  // ULFE_SDP_HPP
