#ifndef ULFE_PIPELINE_HPP
#define ULFE_PIPELINE_HPP

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "ulfe/analyze.hpp"
#include "ulfe/augment.hpp"
#include "ulfe/config.hpp"
#include "ulfe/errors.hpp"
#include "ulfe/io.hpp"
#include "ulfe/model.hpp"
#include "ulfe/sim.hpp"
#include "ulfe/synth.hpp"

// transform -> augment -> synthesize -> verify -> simulate, with file output.
namespace ulfe {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitInfeasible = 3,
  kExitNumerical = 4,
  kExitDivergence = 5,
};

inline std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

struct SummaryRow {
  std::string mode;
  std::string status = "ok";  // ok | infeasible | numerical-failure | diverged | config-error | verify-failed
  std::string stage;          // failing stage, empty on success
  std::string message;
  double lambda_star = std::numeric_limits<double>::quiet_NaN();
  double gamma_star = std::numeric_limits<double>::quiet_NaN();
  double hinf_measured = std::numeric_limits<double>::quiet_NaN();
  double h2_measured = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double post_onset_rmse = std::numeric_limits<double>::quiet_NaN();
  double noise_std = std::numeric_limits<double>::quiet_NaN();
  double peak_error = std::numeric_limits<double>::quiet_NaN();
  double hurwitz_margin = std::numeric_limits<double>::quiet_NaN();
};

struct PipelineResult {
  int exit_code = kExitOk;
  SummaryRow row;
  std::optional<ObserverDesign> design;
  std::optional<VerificationReport> report;
  std::optional<RunMetrics> metrics;
};

inline void write_summary_header(std::ostream& os) {
  os << "config_sha256,mode,status,stage,lambda_star,gamma_star,hinf_measured,h2_measured,rmse,"
        "post_onset_rmse,noise_std,peak_error,hurwitz_margin,message\n";
}

inline void write_summary_row(std::ostream& os, const std::string& hash, const SummaryRow& r) {
  std::string msg = r.message;
  for (char& ch : msg)
    if (ch == '"' || ch == '\n' || ch == ',') ch = ch == ',' ? ';' : ' ';
  os << hash << ',' << r.mode << ',' << r.status << ',' << r.stage;
  for (double v : {r.lambda_star, r.gamma_star, r.hinf_measured, r.h2_measured, r.rmse,
                   r.post_onset_rmse, r.noise_std, r.peak_error, r.hurwitz_margin})
    os << ',' << format_double(v);
  os << ",\"" << msg << "\"\n";
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  return f;
}

// Runs one mode and writes its files into `dir`. Never throws for expected
// failures; the row and exit code carry them.
inline PipelineResult run_mode(const RunConfig& cfg, DesignMode mode,
                               const std::filesystem::path& dir) {
  PipelineResult res;
  SummaryRow& row = res.row;
  row.mode = to_string(mode);
  auto fail = [&](int code, const char* status, const char* stage, const std::string& msg) {
    res.exit_code = code;
    row.status = status;
    row.stage = stage;
    row.message = msg;
  };

  try {
    cfg.validate_for(mode);
  } catch (const ConfigError& e) {
    fail(kExitConfig, "config-error", "config", e.what());
    return res;
  }

  std::optional<TransformedPlant> tp;
  std::optional<AugmentedSystem> aug;
  const char* stage = "transform";
  try {
    tp = transform(cfg.plant());
    stage = "augment";
    aug = build_augmented(*tp, cfg.orders);
    stage = "synth";
    res.design = synthesize(*aug, mode, cfg.synth);
  } catch (const Infeasible& e) {
    fail(kExitInfeasible, "infeasible", stage, e.what());
    return res;
  } catch (const Error& e) {
    fail(kExitNumerical, "numerical-failure", stage, e.what());
    return res;
  } catch (const std::invalid_argument& e) {
    fail(kExitConfig, "config-error", stage, e.what());
    return res;
  }

  const ObserverDesign& d = *res.design;
  row.lambda_star = d.cert.lambda_star;
  row.gamma_star = d.cert.gamma_star;
  res.report = verify_design(d, *aug);
  const VerificationReport& rep = *res.report;
  row.hinf_measured = rep.hinf_bisection;
  row.h2_measured = rep.h2_controllability;
  row.hurwitz_margin = rep.hurwitz_margin;

  std::filesystem::create_directories(dir);
  {
    auto f = open_out(dir / "design.txt");
    write_design(f, d);
  }
  {
    auto f = open_out(dir / "report.txt");
    write_report(f, rep);
  }
  if (!rep.all_pass()) {
    fail(kExitNumerical, "verify-failed", "verify", "verification report has failing items");
    return res;
  }

  try {
    const SimulationTrace tr = simulate(cfg.truth(), d, *aug, *tp, cfg.input(), cfg.scenario(),
                                        cfg.noise(), cfg.sim_options());
    res.metrics = run_metrics(tr, cfg.sim.transient_cut);
    auto f = open_out(dir / "trace.csv");
    write_trace_csv(f, tr);
  } catch (const Error& e) {
    fail(kExitDivergence, "diverged", "simulate", e.what());
    return res;
  }
  row.rmse = res.metrics->rmse_total;
  row.post_onset_rmse = res.metrics->post_onset_rmse_total;
  row.noise_std = res.metrics->noise_std_total;
  row.peak_error = res.metrics->peak_error_max;
  return res;
}

}  // namespace detail

/// Single-mode run. Writes design.txt, report.txt, trace.csv and summary.csv
/// into cfg.out_dir (the summary is written even when a stage fails).
inline PipelineResult run_pipeline(const RunConfig& cfg) {
  const std::filesystem::path dir(cfg.out_dir);
  PipelineResult res = detail::run_mode(cfg, cfg.mode, dir);
  std::filesystem::create_directories(dir);
  auto f = detail::open_out(dir / "summary.csv");
  write_summary_header(f);
  write_summary_row(f, sha256_hex(cfg.source_text), res.row);
  return res;
}

inline const std::array<DesignMode, 4>& compared_modes() {
  static const std::array<DesignMode, 4> modes{DesignMode::Hinf, DesignMode::H2,
                                               DesignMode::MixedHinf, DesignMode::MixedH2};
  return modes;
}

/// Runs every design mode into cfg.out_dir/<mode>/ and writes the table to
/// cfg.out_dir/comparison.csv. Per-mode failures become table rows.
inline std::vector<SummaryRow> compare_modes(const RunConfig& cfg) {
  const std::filesystem::path dir(cfg.out_dir);
  std::vector<SummaryRow> rows;
  for (DesignMode m : compared_modes()) rows.push_back(detail::run_mode(cfg, m, dir / to_string(m)).row);
  std::filesystem::create_directories(dir);
  auto f = detail::open_out(dir / "comparison.csv");
  write_summary_header(f);
  const std::string hash = sha256_hex(cfg.source_text);
  for (const auto& r : rows) write_summary_row(f, hash, r);
  return rows;
}

}  // namespace ulfe

#endif  // ULFE_PIPELINE_HPP
