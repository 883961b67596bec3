#ifndef ULFE_IO_HPP
#define ULFE_IO_HPP

#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "ulfe/analyze.hpp"
#include "ulfe/errors.hpp"
#include "ulfe/sim.hpp"
#include "ulfe/synth.hpp"

// Plain-text design artifact and verification report.
//
// Design artifact grammar, one item per line:
//   ulfe-design 1
//   scalar <name> <value>
//   matrix <name> <rows> <cols>
//   <row 0 values> ... <row rows-1 values>
// Values use 17 significant digits, so a written design reloads bit-exactly.
namespace ulfe {

namespace detail {

inline void write_matrix(std::ostream& os, const char* name, const Mat& m) {
  os << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << format_double(m(i, j));
    os << '\n';
  }
}

inline double parse_double(const std::string& tok, int line) {
  const char* s = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw Error("design artifact line " + std::to_string(line) + ": bad number '" + tok + "'");
  return v;
}

}  // namespace detail

inline void write_design(std::ostream& os, const ObserverDesign& d) {
  const Certificates& c = d.cert;
  os << "ulfe-design 1\n";
  os << "scalar mode " << static_cast<int>(c.mode) << '\n';
  auto scalar = [&](const char* n, double v) { os << "scalar " << n << ' ' << format_double(v) << '\n'; };
  scalar("lambda_star", c.lambda_star);
  scalar("gamma_star", c.gamma_star);
  scalar("iss_gain_bound", c.iss_gain_bound);
  scalar("epsilon", c.epsilon);
  scalar("margin", c.margin);
  scalar("pole_radius", c.pole_radius);
  scalar("solver_residual", c.solver_residual);
  scalar("cond_P", c.cond_P);
  scalar("solver_iterations", c.solver_iterations);
  for (const auto& [name, m] : {std::pair<const char*, const Mat*>{"E", &d.E}, {"K", &d.K},
                                {"N", &d.N}, {"G", &d.G}, {"L", &d.L}, {"M", &d.M},
                                {"P", &c.P}, {"R", &c.R}, {"Q", &c.Q}, {"Z", &c.Z}})
    detail::write_matrix(os, name, *m);
}

/// Inverse of write_design. Identity residuals are recomputed by the caller
/// when the augmented system is at hand.
inline ObserverDesign read_design(std::istream& is) {
  ObserverDesign d;
  std::map<std::string, Mat*> mats{{"E", &d.E}, {"K", &d.K}, {"N", &d.N}, {"G", &d.G},
                                   {"L", &d.L}, {"M", &d.M}, {"P", &d.cert.P}, {"R", &d.cert.R},
                                   {"Q", &d.cert.Q}, {"Z", &d.cert.Z}};
  std::map<std::string, double*> scalars{
      {"lambda_star", &d.cert.lambda_star}, {"gamma_star", &d.cert.gamma_star},
      {"iss_gain_bound", &d.cert.iss_gain_bound}, {"epsilon", &d.cert.epsilon},
      {"margin", &d.cert.margin}, {"pole_radius", &d.cert.pole_radius},
      {"solver_residual", &d.cert.solver_residual}, {"cond_P", &d.cert.cond_P}};
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw Error("design artifact line " + std::to_string(lineno) + ": " + why);
  };
  if (!std::getline(is, line) || line != "ulfe-design 1") fail("missing 'ulfe-design 1' header");
  ++lineno;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind, name;
    ls >> kind >> name;
    if (kind == "scalar") {
      std::string tok;
      ls >> tok;
      const double v = detail::parse_double(tok, lineno);
      if (name == "mode") d.cert.mode = static_cast<DesignMode>(static_cast<int>(v));
      else if (name == "solver_iterations") d.cert.solver_iterations = static_cast<int>(v);
      else if (auto it = scalars.find(name); it != scalars.end()) *it->second = v;
      else fail("unknown scalar '" + name + "'");
    } else if (kind == "matrix") {
      auto it = mats.find(name);
      if (it == mats.end()) fail("unknown matrix '" + name + "'");
      long r = -1, c = -1;
      ls >> r >> c;
      if (r < 0 || c < 0) fail("bad matrix shape");
      Mat m(r, c);
      for (long i = 0; i < r; ++i) {
        if (!std::getline(is, line)) fail("truncated matrix '" + name + "'");
        ++lineno;
        std::istringstream rs(line);
        std::string tok;
        for (long j = 0; j < c; ++j) {
          if (!(rs >> tok)) fail("short row in matrix '" + name + "'");
          m(i, j) = detail::parse_double(tok, lineno);
        }
      }
      *it->second = std::move(m);
    } else {
      fail("expected 'scalar' or 'matrix'");
    }
  }
  return d;
}

inline void write_report(std::ostream& os, const VerificationReport& r) {
  auto num = [](double v) { return format_double(v); };
  auto flag = [](bool b) { return b ? "pass" : "FAIL"; };
  os << "# verification report\n";
  os << "mode = " << to_string(r.mode) << '\n';
  os << "hurwitz_margin = " << num(r.hurwitz_margin) << '\n';
  os << "lambda_star = " << num(r.lambda_star) << '\n';
  os << "hinf_bisection = " << num(r.hinf_bisection) << '\n';
  os << "hinf_grid = " << num(r.hinf_grid) << '\n';
  os << "gamma_star = " << num(r.gamma_star) << '\n';
  os << "h2_controllability = " << num(r.h2_controllability) << '\n';
  os << "h2_observability = " << num(r.h2_observability) << '\n';
  os << "identity_G_minus_MBa = " << num(r.identities.g_mb) << '\n';
  os << "identity_NM_plus_LCa_minus_MAa = " << num(r.identities.nm_lc_ma) << '\n';
  os << "identity_NE_plus_L_minus_K = " << num(r.identities.ne_l_k) << '\n';
  os << "identity_tolerance = " << num(r.identity_tolerance) << '\n';
  os << "dissipation_max_eig = " << num(r.dissipation_max_eig) << '\n';
  os << "iss_gain_bound = " << num(r.iss_gain_bound) << '\n';
  os << "# iss_gain_bound = 2 ||P [M D_a, -K, E]|| / epsilon; the derivation's gain carries an\n"
        "# extra factor 1/theta for any theta in (0, 1), which this value omits.\n";
  os << "solver_residual = " << num(r.solver_residual) << '\n';
  os << "item_bounded_error = " << flag(r.item_bounded_error) << '\n';
  os << "item_hinf_bound = " << flag(r.item_hinf_bound) << '\n';
  os << "item_h2_bound = " << flag(r.item_h2_bound) << '\n';
  os << "item_internal_stability = " << flag(r.item_internal_stability) << '\n';
  os << "identities = " << flag(r.identities_pass) << '\n';
  os << "overall = " << flag(r.all_pass()) << '\n';
  os << "\n# sigma_max grid: w sigma_omega sigma_nu\n";
  for (const auto& p : r.sigma)
    os << num(p.w) << ' ' << num(p.sigma_omega) << ' ' << num(p.sigma_nu) << '\n';
}

}  // namespace ulfe

#endif  // ULFE_IO_HPP
