#ifndef ULFE_ANALYZE_HPP
#define ULFE_ANALYZE_HPP

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ulfe/augment.hpp"
#include "ulfe/matlib.hpp"
#include "ulfe/synth.hpp"

// Post-hoc checks of an observer design against its certificates.
namespace ulfe {

/// edot = N e + B_omega omega_a + B_nu nu_a,  e_d = C_out e,  nu_a = [nu; nudot].
struct ErrorSystem {
  Mat N, B_omega, B_nu, C_out;
};

inline ErrorSystem build_error_system(const ObserverDesign& d, const AugmentedSystem& aug) {
  if (d.N.rows() != aug.n_z || d.M.rows() != aug.n_z)
    throw std::invalid_argument("build_error_system: design does not match the augmented system");
  return {d.N, Mat(-d.M * aug.D_a), d.Bbar(), aug.Cbar_a};
}

/// Transfer matrix C_out (sI - N)^-1 B at a complex frequency.
inline CMat transfer_at(const Mat& n, const Mat& b, const Mat& c, std::complex<double> s) {
  CMat sys = -n.cast<std::complex<double>>();
  sys.diagonal().array() += s;
  return c.cast<std::complex<double>>() *
         sys.partialPivLu().solve(b.cast<std::complex<double>>());
}

/// n log-spaced frequencies over [lo, hi] rad/s.
inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2)
    throw std::invalid_argument("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> w(n);
  for (int k = 0; k < n; ++k) w[k] = lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1));
  return w;
}

inline std::vector<double> default_grid() { return log_grid(1e-3, 1e3, 2000); }

struct SigmaPoint {
  double w, sigma_omega, sigma_nu;
};

struct VerificationReport {
  DesignMode mode = DesignMode::Iss;
  double hurwitz_margin = std::numeric_limits<double>::quiet_NaN();  // -max Re eig(N)

  double lambda_star = std::numeric_limits<double>::quiet_NaN();
  double hinf_bisection = std::numeric_limits<double>::quiet_NaN();
  double hinf_grid = std::numeric_limits<double>::quiet_NaN();

  double gamma_star = std::numeric_limits<double>::quiet_NaN();
  double h2_controllability = std::numeric_limits<double>::quiet_NaN();
  double h2_observability = std::numeric_limits<double>::quiet_NaN();

  IdentityResiduals identities;
  double identity_tolerance = 0.0;

  // lambda_max(A_N^T P + P A_N + eps I) for the certified P; <= 0 when the
  // dissipation inequality holds.
  double dissipation_max_eig = std::numeric_limits<double>::quiet_NaN();
  double iss_gain_bound = std::numeric_limits<double>::quiet_NaN();
  double solver_residual = 0.0;

  std::vector<SigmaPoint> sigma;

  // Problem items: bounded error (ISS), H-infinity bound, H2 bound, internal stability.
  bool item_bounded_error = false;
  bool item_hinf_bound = false;
  bool item_h2_bound = false;
  bool item_internal_stability = false;
  bool identities_pass = false;

  bool all_pass() const {
    return item_bounded_error && item_hinf_bound && item_h2_bound && item_internal_stability &&
           identities_pass;
  }
};

namespace detail {

// Tolerance for a measured norm against its certificate: the solver residual
// plus round-off of the norm computation.
inline double certificate_slack(double certified, double solver_residual) {
  return solver_residual + 1e-6 * (1.0 + std::abs(certified));
}

}  // namespace detail

/// Runs every check; failures are recorded in the report, never thrown.
inline VerificationReport verify_design(const ObserverDesign& d, const AugmentedSystem& aug,
                                        const std::vector<double>& grid = default_grid()) {
  VerificationReport r;
  r.mode = d.cert.mode;
  r.lambda_star = d.cert.lambda_star;
  r.gamma_star = d.cert.gamma_star;
  r.iss_gain_bound = d.cert.iss_gain_bound;
  r.solver_residual = d.cert.solver_residual;

  const ErrorSystem es = build_error_system(d, aug);
  r.identities = identity_residuals(d, aug);
  r.identity_tolerance = 1e-8 * (1.0 + max_abs(d.N) * (1.0 + max_abs(d.E)) + max_abs(d.K) +
                                 max_abs(d.M) * max_abs(aug.A_a));
  r.identities_pass = r.identities.worst() <= r.identity_tolerance;

  r.hurwitz_margin = -spectral_abscissa(es.N);
  r.item_internal_stability = r.hurwitz_margin > 0.0;

  if (d.cert.P.rows() == es.N.rows() && std::isfinite(d.cert.epsilon)) {
    const Mat pn = d.cert.P * es.N;
    Mat x = pn + pn.transpose();
    x.diagonal().array() += d.cert.epsilon;
    Eigen::SelfAdjointEigenSolver<Mat> eig(x, Eigen::EigenvaluesOnly);
    r.dissipation_max_eig = eig.eigenvalues().maxCoeff();
  }
  const double p_scale = d.cert.P.size() ? spectral_norm(d.cert.P) * spectral_norm(es.N) : 0.0;
  r.item_bounded_error = r.item_internal_stability && std::isfinite(r.dissipation_max_eig) &&
                         r.dissipation_max_eig <= r.solver_residual + 1e-9 * (1.0 + p_scale);

  r.sigma.reserve(grid.size());
  for (double w : grid)
    r.sigma.push_back({w, sigma_max_at(es.N, es.B_omega, es.C_out, w),
                       sigma_max_at(es.N, es.B_nu, es.C_out, w)});

  if (r.item_internal_stability) {
    r.hinf_bisection = hinf_norm(es.N, es.B_omega, es.C_out);
    r.hinf_grid = 0.0;
    for (const auto& p : r.sigma) r.hinf_grid = std::max(r.hinf_grid, p.sigma_omega);
    r.h2_controllability = h2_norm(es.N, es.B_nu, es.C_out);
    r.h2_observability = h2_norm_observability(es.N, es.B_nu, es.C_out);
  }

  // A bound that was not part of the program is not a claim, so it passes.
  const bool stable = r.item_internal_stability;
  r.item_hinf_bound = !std::isfinite(r.lambda_star) ||
                      (stable && r.hinf_bisection <=
                                     r.lambda_star + detail::certificate_slack(r.lambda_star, r.solver_residual));
  r.item_h2_bound = !std::isfinite(r.gamma_star) ||
                    (stable && r.h2_controllability <=
                                   r.gamma_star + detail::certificate_slack(r.gamma_star, r.solver_residual));
  return r;
}

}  // namespace ulfe

#endif  // ULFE_ANALYZE_HPP
