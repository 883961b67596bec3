#ifndef ULFE_SYNTH_HPP
#define ULFE_SYNTH_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "ulfe/augment.hpp"
#include "ulfe/errors.hpp"
#include "ulfe/lmi.hpp"
#include "ulfe/matlib.hpp"
#include "ulfe/sdp.hpp"

namespace ulfe {

enum class DesignMode { Iss, Hinf, H2, MixedHinf, MixedH2 };

inline const char* to_string(DesignMode m) {
  switch (m) {
    case DesignMode::Iss: return "iss";
    case DesignMode::Hinf: return "hinf";
    case DesignMode::H2: return "h2";
    case DesignMode::MixedHinf: return "mixed-hinf";
    case DesignMode::MixedH2: return "mixed-h2";
  }
  return "?";
}

inline std::optional<DesignMode> parse_mode(const std::string& s) {
  for (auto m : {DesignMode::Iss, DesignMode::Hinf, DesignMode::H2, DesignMode::MixedHinf,
                 DesignMode::MixedH2})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

struct SynthesisOptions {
  double epsilon = 1e-3;
  double gamma_max = std::numeric_limits<double>::infinity();
  double lambda_max = std::numeric_limits<double>::infinity();
  // Radius of the disk that must contain eig(N); 0 disables the constraint.
  double pole_radius = 300.0;
  // Upper bound P <= p_max I; 0 disables the constraint.
  double p_max = 100.0;
  // Strictness margin; negative selects 1e-6 * (1 + ||A_a||).
  double margin = -1.0;
  double cond_limit = 1e10;
  sdp::Settings solver{};
};

struct Certificates {
  Mat P, R, Q, Z;
  double lambda_star = std::numeric_limits<double>::quiet_NaN();
  double gamma_star = std::numeric_limits<double>::quiet_NaN();
  double iss_gain_bound = std::numeric_limits<double>::quiet_NaN();
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double margin = 0.0;
  double pole_radius = 0.0;
  double solver_residual = 0.0;
  double cond_P = std::numeric_limits<double>::quiet_NaN();
  int solver_iterations = 0;
  DesignMode mode = DesignMode::Iss;
};

struct IdentityResiduals {
  double g_mb = 0.0;       // max|G - M B_a|
  double nm_lc_ma = 0.0;   // max|N M + L C_a - M A_a|
  double ne_l_k = 0.0;     // max|N E + L - K|
  double worst() const { return std::max({g_mb, nm_lc_ma, ne_l_k}); }
};

/// Observer  zdot = N z + G u + L y,  xhat_a = z - E y.
struct ObserverDesign {
  Mat E, K, N, G, L, M;
  Certificates cert;
  IdentityResiduals identities;

  Mat Bbar() const { return hstack({K, Mat(-E)}); }
};

inline double default_margin(const AugmentedSystem& aug) {
  return 1e-6 * (1.0 + spectral_norm(aug.A_a));
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline IdentityResiduals identity_residuals(const ObserverDesign& d, const AugmentedSystem& aug) {
  IdentityResiduals r;
  r.g_mb = max_abs(d.G - d.M * aug.B_a);
  r.nm_lc_ma = max_abs(d.N * d.M + d.L * aug.C_a - d.M * aug.A_a);
  r.ne_l_k = max_abs(d.N * d.E + d.L - d.K);
  return r;
}

/// Observer matrices from gains: M = I + E C_a, N = M A_a - K C_a, G = M B_a,
/// L = K (I + C_a E) - M A_a E.
inline ObserverDesign observer_from_gains(const Mat& E, const Mat& K, const AugmentedSystem& aug) {
  const Eigen::Index nz = aug.n_z, m = aug.C_a.rows();
  if (E.rows() != nz || E.cols() != m || K.rows() != nz || K.cols() != m)
    throw std::invalid_argument("observer_from_gains: E and K must be n_z x m");
  ObserverDesign d;
  d.E = E;
  d.K = K;
  d.M = Mat::Identity(nz, nz) + E * aug.C_a;
  d.N = d.M * aug.A_a - K * aug.C_a;
  d.G = d.M * aug.B_a;
  d.L = K * (Mat::Identity(m, m) + aug.C_a * E) - d.M * aug.A_a * E;
  d.identities = identity_residuals(d, aug);
  return d;
}

/// E = P^-1 R, K = P^-1 Q, then the observer matrices and identity checks.
inline ObserverDesign recover_gains(const Mat& P, const Mat& R, const Mat& Q,
                                    const AugmentedSystem& aug) {
  const Mat Ps = 0.5 * (P + P.transpose());
  Eigen::LLT<Mat> llt(Ps);
  if (llt.info() != Eigen::Success || eigenvalues(Ps).real().minCoeff() <= 0.0)
    throw PNotPositiveDefinite("recover_gains: P is not positive definite");
  ObserverDesign d = observer_from_gains(llt.solve(R), llt.solve(Q), aug);
  const double scale = 1.0 + max_abs(d.N) * (1.0 + max_abs(d.E)) + max_abs(d.K) +
                       max_abs(d.M) * max_abs(aug.A_a);
  if (d.identities.worst() > 1e-8 * scale)
    throw IdentityViolation("recover_gains: observer identities violated (worst residual " +
                            std::to_string(d.identities.worst()) + ")");
  d.cert.P = Ps;
  d.cert.R = R;
  d.cert.Q = Q;
  return d;
}

/// P A_a + R C_a A_a - Q C_a, i.e. P N after the change of variables.
inline lmi::Affine build_PN(const AugmentedSystem& aug, const lmi::Affine& P,
                            const lmi::Affine& R, const lmi::Affine& Q) {
  return P * aug.A_a + R * Mat(aug.C_a * aug.A_a) - Q * aug.C_a;
}

/// X = A_a^T P + A_a^T C_a^T R^T - C_a^T Q^T + P A_a + R C_a A_a - Q C_a.
inline lmi::Affine build_X(const AugmentedSystem& aug, const lmi::Affine& P,
                           const lmi::Affine& R, const lmi::Affine& Q) {
  return lmi::sym(build_PN(aug, P, R, Q));
}

/// Numeric X for fixed (P, R, Q).
inline Mat build_X(const AugmentedSystem& aug, const Mat& P, const Mat& R, const Mat& Q) {
  const Mat pn = P * aug.A_a + R * aug.C_a * aug.A_a - Q * aug.C_a;
  return pn + pn.transpose();
}

/// 2 ||P [(I + E C_a) D_a, -K, E]|| / epsilon.
inline double iss_gain_bound(const ObserverDesign& d, const AugmentedSystem& aug, double epsilon) {
  const Mat w = hstack({Mat(d.M * aug.D_a), Mat(-d.K), d.E});
  return 2.0 * spectral_norm(d.cert.P * w) / epsilon;
}

namespace detail {

struct Layout {
  lmi::Program prog;
  lmi::Affine P, R, Q, Z, lambda, gamma;
  bool has_lambda = false, has_gamma = false;
};

inline Layout assemble(const AugmentedSystem& aug, DesignMode mode, const SynthesisOptions& o,
                       double delta) {
  const Eigen::Index nz = aug.n_z, m = aug.C_a.rows(), q = aug.Cbar_a.rows();
  const bool hinf = mode == DesignMode::Hinf || mode == DesignMode::MixedHinf ||
                    mode == DesignMode::MixedH2;
  const bool h2 = mode == DesignMode::H2 || mode == DesignMode::MixedHinf ||
                  mode == DesignMode::MixedH2;
  Layout L;
  auto& pr = L.prog;
  L.P = pr.symmetric(nz);
  L.R = pr.full(nz, m);
  L.Q = pr.full(nz, m);
  const lmi::Affine PN = build_PN(aug, L.P, L.R, L.Q);
  const lmi::Affine X = lmi::sym(PN);
  const Mat I = Mat::Identity(nz, nz);

  // The ISS program is homogeneous in (P, R, Q) apart from eps, so it fixes
  // the scale with P >= I and then minimizes the gain bound below.
  const bool iss = mode == DesignMode::Iss;
  if (iss && !(o.p_max <= 0.0 || o.p_max > 1.0))
    throw std::invalid_argument("synthesize: iss mode needs p_max > 1");
  pr.require_psd(L.P, iss ? 1.0 : delta, "P > 0");
  if (o.p_max > 0.0) pr.require_psd(lmi::Affine(Mat(o.p_max * I)) - L.P, 0.0, "P <= p_max I");
  pr.require_nsd(X + Mat(o.epsilon * I), 0.0, "X + eps I <= 0");
  if (o.pole_radius > 0.0) {
    const lmi::Affine rP = L.P * o.pole_radius;
    pr.require_nsd(lmi::block({{-rP, PN}, {PN.transpose(), -rP}}), 0.0, "pole disk");
  }
  if (hinf) {
    L.has_lambda = true;
    L.lambda = pr.scalar();
    const Eigen::Index nw = aug.D_a.cols();
    const lmi::Affine PD = -(L.P * aug.D_a + L.R * Mat(aug.C_a * aug.D_a));
    const lmi::Affine Cbt(Mat(aug.Cbar_a.transpose()));
    auto scaled_identity = [&](Eigen::Index k) {
      lmi::Affine out(k, k);
      for (const auto& [idx, c] : L.lambda.terms()) out.add_term(idx, c(0, 0) * Mat::Identity(k, k));
      return out;
    };
    pr.require_nsd(lmi::block({{X, PD, Cbt},
                               {PD.transpose(), -scaled_identity(nw), lmi::Affine::zero(nw, q)},
                               {Cbt.transpose(), lmi::Affine::zero(q, nw), -scaled_identity(q)}}),
                   delta, "H-infinity");
    pr.require_psd(L.lambda, delta, "lambda > 0");
    if (mode == DesignMode::MixedH2 && std::isfinite(o.lambda_max))
      pr.require_psd(lmi::Affine(Mat::Constant(1, 1, o.lambda_max)) - L.lambda, 0.0, "lambda <= lambda_max");
  }
  if (h2) {
    L.has_gamma = true;
    L.gamma = pr.scalar();
    L.Z = pr.symmetric(q);
    lmi::Affine gI(2 * m, 2 * m);
    for (const auto& [idx, c] : L.gamma.terms())
      gI.add_term(idx, c(0, 0) * Mat::Identity(2 * m, 2 * m));
    const lmi::Affine PB = lmi::block({{L.Q, -L.R}});
    pr.require_nsd(lmi::block({{X, PB}, {PB.transpose(), -gI}}), delta, "H2 dissipation");
    const lmi::Affine Cb(aug.Cbar_a);
    pr.require_psd(lmi::block({{L.P, Cb.transpose()}, {Cb, L.Z}}), delta, "H2 output");
    lmi::Affine tr(1, 1);
    for (const auto& [idx, c] : L.Z.terms()) tr.add_term(idx, Mat::Constant(1, 1, c.trace()));
    pr.require_psd(L.gamma - tr, delta, "trace Z < gamma");
    pr.require_psd(L.gamma, delta, "gamma > 0");
    if (mode == DesignMode::MixedHinf && std::isfinite(o.gamma_max))
      pr.require_psd(lmi::Affine(Mat::Constant(1, 1, o.gamma_max)) - L.gamma, 0.0, "gamma <= gamma_max");
  }

  switch (mode) {
    case DesignMode::Iss: {
      // ||[R Q]|| <= kappa, so ||E||, ||K|| <= kappa since P >= I.
      const lmi::Affine kappa = pr.scalar();
      auto kI = [&](Eigen::Index k) {
        lmi::Affine out(k, k);
        for (const auto& [idx, c] : kappa.terms()) out.add_term(idx, c(0, 0) * Mat::Identity(k, k));
        return out;
      };
      const lmi::Affine RQ = lmi::block({{L.R, L.Q}});
      pr.require_psd(lmi::block({{kI(nz), RQ}, {RQ.transpose(), kI(2 * m)}}), 0.0, "gain bound");
      pr.minimize(kappa);
      break;
    }
    case DesignMode::Hinf:
    case DesignMode::MixedHinf: pr.minimize(L.lambda); break;
    case DesignMode::H2:
    case DesignMode::MixedH2: pr.minimize(L.gamma); break;
  }
  return L;
}

}  // namespace detail

/// Solves the program for `mode` and recovers the observer. Throws Infeasible,
/// NumericalFailure, PNotPositiveDefinite or IdentityViolation.
inline ObserverDesign synthesize(const AugmentedSystem& aug, DesignMode mode,
                                 const SynthesisOptions& opts = {}) {
  if (!(opts.epsilon > 0.0)) throw std::invalid_argument("synthesize: epsilon must be > 0");
  if (mode == DesignMode::MixedHinf && !(opts.gamma_max > 0.0))
    throw std::invalid_argument("synthesize: gamma_max must be > 0");
  if (mode == DesignMode::MixedH2 && !(opts.lambda_max > 0.0))
    throw std::invalid_argument("synthesize: lambda_max must be > 0");
  if (mode != DesignMode::Iss && mode != DesignMode::H2 && aug.D_a.cols() == 0)
    throw std::invalid_argument("synthesize: H-infinity program needs at least one disturbance channel");
  if (aug.C_a.rows() == 0 && mode != DesignMode::Iss)
    throw std::invalid_argument("synthesize: plant has no outputs");

  const double delta = opts.margin >= 0.0 ? opts.margin : default_margin(aug);
  detail::Layout L = detail::assemble(aug, mode, opts, delta);
  const sdp::Problem problem = L.prog.to_sdp();
  const sdp::Result res = sdp::solve(problem, opts.solver);
  if (res.status == sdp::Status::Infeasible)
    throw Infeasible(std::string("synthesis (") + to_string(mode) + "): " + res.message);
  if (res.status != sdp::Status::Optimal)
    throw NumericalFailure(std::string("synthesis (") + to_string(mode) + "): " + res.message);

  const Mat P = L.P.evaluate(res.y);
  const Mat R = L.R.evaluate(res.y);
  const Mat Q = L.Q.evaluate(res.y);
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (P + P.transpose()), Eigen::EigenvaluesOnly);
  const double pmin = es.eigenvalues()(0), pmax = es.eigenvalues()(es.eigenvalues().size() - 1);
  if (pmin <= 0.0) throw PNotPositiveDefinite("synthesis: solver returned P with min eigenvalue " +
                                              std::to_string(pmin));
  const double cond = pmax / pmin;
  if (cond > opts.cond_limit)
    throw NumericalFailure("synthesis: cond(P) = " + std::to_string(cond) + " exceeds limit");

  ObserverDesign d = recover_gains(P, R, Q, aug);
  Certificates& c = d.cert;
  c.mode = mode;
  c.epsilon = opts.epsilon;
  c.margin = delta;
  c.pole_radius = opts.pole_radius;
  c.solver_residual = res.worst_block_residual;
  c.solver_iterations = res.iterations;
  c.cond_P = cond;
  if (L.has_lambda) c.lambda_star = L.lambda.evaluate(res.y)(0, 0);
  if (L.has_gamma) {
    c.gamma_star = L.gamma.evaluate(res.y)(0, 0);
    c.Z = L.Z.evaluate(res.y);
  }
  c.iss_gain_bound = iss_gain_bound(d, aug, opts.epsilon);
  return d;
}

inline ObserverDesign solve_iss(const AugmentedSystem& aug, double epsilon,
                                SynthesisOptions opts = {}) {
  opts.epsilon = epsilon;
  return synthesize(aug, DesignMode::Iss, opts);
}

inline ObserverDesign solve_hinf(const AugmentedSystem& aug, double epsilon,
                                 SynthesisOptions opts = {}) {
  opts.epsilon = epsilon;
  return synthesize(aug, DesignMode::Hinf, opts);
}

inline ObserverDesign solve_h2(const AugmentedSystem& aug, double epsilon,
                               SynthesisOptions opts = {}) {
  opts.epsilon = epsilon;
  return synthesize(aug, DesignMode::H2, opts);
}

inline ObserverDesign solve_mixed_hinf_min(const AugmentedSystem& aug, double epsilon,
                                           double gamma_max, SynthesisOptions opts = {}) {
  opts.epsilon = epsilon;
  opts.gamma_max = gamma_max;
  return synthesize(aug, DesignMode::MixedHinf, opts);
}

inline ObserverDesign solve_mixed_h2_min(const AugmentedSystem& aug, double epsilon,
                                         double lambda_max, SynthesisOptions opts = {}) {
  opts.epsilon = epsilon;
  opts.lambda_max = lambda_max;
  return synthesize(aug, DesignMode::MixedH2, opts);
}

}  // namespace ulfe

#endif  // ULFE_SYNTH_HPP
