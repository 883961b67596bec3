#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ulfe/config.hpp"
#include "ulfe/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fault estimator synthesis and validation"};
  std::string config_path, mode_name, out_dir;
  long long seed = -1;
  bool compare = false;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--mode", mode_name, "iss, hinf, h2, mixed-hinf or mixed-h2 (overrides config)");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--seed", seed, "noise seed (overrides config)")->check(CLI::NonNegativeNumber);
  app.add_flag("--compare", compare, "run hinf, h2, mixed-hinf and mixed-h2 and tabulate");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ulfe::kExitConfig;
  }

  ulfe::RunConfig cfg;
  try {
    cfg = ulfe::load_config(config_path);
    if (!mode_name.empty()) {
      const auto m = ulfe::parse_mode(mode_name);
      if (!m) throw ulfe::ConfigError("--mode", "unknown mode '" + mode_name + "'");
      cfg.mode = *m;
      cfg.has_mode = true;
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed >= 0) cfg.sim.seed = static_cast<std::uint64_t>(seed);
    if (!compare && !cfg.has_mode) throw ulfe::ConfigError("design.mode", "missing");
  } catch (const ulfe::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return ulfe::kExitConfig;
  }

  try {
    if (compare) {
      const auto rows = ulfe::compare_modes(cfg);
      std::printf("%-11s %-18s %12s %12s %12s %12s %12s %12s\n", "mode", "status", "lambda*",
                  "gamma*", "hinf", "h2", "rmse_post", "noise_std");
      for (const auto& r : rows)
        std::printf("%-11s %-18s %12.6g %12.6g %12.6g %12.6g %12.6g %12.6g\n", r.mode.c_str(),
                    r.status.c_str(), r.lambda_star, r.gamma_star, r.hinf_measured, r.h2_measured,
                    r.post_onset_rmse, r.noise_std);
      std::printf("table written to %s/comparison.csv\n", cfg.out_dir.c_str());
      return ulfe::kExitOk;
    }
    const auto res = ulfe::run_pipeline(cfg);
    const auto& r = res.row;
    if (res.exit_code != ulfe::kExitOk) {
      std::fprintf(stderr, "%s failed at stage '%s': %s\n", r.mode.c_str(), r.stage.c_str(),
                   r.message.c_str());
      return res.exit_code;
    }
    std::printf("mode %s: lambda* %.6g gamma* %.6g | hinf %.6g h2 %.6g | rmse %.6g post-onset %.6g noise %.6g\n",
                r.mode.c_str(), r.lambda_star, r.gamma_star, r.hinf_measured, r.h2_measured, r.rmse,
                r.post_onset_rmse, r.noise_std);
    std::printf("outputs written to %s\n", cfg.out_dir.c_str());
    return ulfe::kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return ulfe::kExitNumerical;
  }
}
