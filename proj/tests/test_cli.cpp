#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ulfe/config.hpp"
#include "ulfe/io.hpp"
#include "ulfe/pipeline.hpp"

using namespace ulfe;
namespace fs = std::filesystem;

namespace {

fs::path config_dir() { return fs::path(ULFE_CONFIG_DIR); }

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ulfe_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string field_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

RunConfig short_manipulator(const std::string& name) {
  RunConfig cfg = load_config((config_dir() / "manipulator.json").string());
  cfg.sim.t_end = 5.0;
  cfg.sim.transient_cut = 1.0;
  cfg.sim.fault.onset = 3.0;
  cfg.out_dir = fresh_dir(name).string();
  return cfg;
}

}  // namespace

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"manipulator.json", "manipulator_sensor_faults.json", "small_linear.json"})
    EXPECT_NO_THROW(load_config((config_dir() / name).string())) << name;
}

TEST(Config, MinimalDocumentUsesDefaults) {
  const RunConfig c = parse_config(R"({"plant": "two_link_manipulator"})");
  EXPECT_EQ(c.plant_kind, PlantKind::Manipulator);
  EXPECT_EQ(c.orders.r1, 4);
  EXPECT_FALSE(c.has_mode);
  EXPECT_EQ(c.sim.seed, 1u);
}

TEST(Config, SyntaxErrorReportsLine) {
  try {
    parse_config("{\n  \"plant\": \"two_link_manipulator\",\n  \"orders\": 4,,\n}");
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Config, UnknownKeyNamesField) {
  EXPECT_EQ(field_of(R"({"plant": "two_link_manipulator", "design": {"gama_max": 3}})"),
            "design.gama_max");
  EXPECT_EQ(field_of(R"({"plant": "two_link_manipulator", "colour": 1})"), "colour");
}

TEST(Config, BadValuesNameField) {
  EXPECT_EQ(field_of(R"({"plant": "two_link_manipulator", "design": {"epsilon": -1}})"),
            "design.epsilon");
  EXPECT_EQ(field_of(R"({"plant": "two_link_manipulator", "design": {"mode": "fastest"}})"),
            "design.mode");
  EXPECT_EQ(field_of(R"({"plant": "two_link_manipulator", "orders": [4, 0, 1]})"), "orders[1]");
  EXPECT_EQ(field_of(R"({"plant": {"type": "linear", "A": [[1, 2]], "C": [[1]]}})"), "plant.A");
}

TEST(Config, MixedModesRequireTheirBound) {
  const RunConfig c = parse_config(R"({"plant": "two_link_manipulator"})");
  try {
    c.validate_for(DesignMode::MixedHinf);
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "design.gamma_max");
  }
  EXPECT_NO_THROW(c.validate_for(DesignMode::Hinf));
}

TEST(DesignArtifact, BitExactRoundTrip) {
  const auto tp = transform(manipulator::plant());
  const auto aug = build_augmented(tp, UltraLocalOrders::uniform(4));
  const ObserverDesign d = solve_h2(aug, 1e-3);
  std::ostringstream a;
  write_design(a, d);
  std::istringstream in(a.str());
  const ObserverDesign back = read_design(in);
  EXPECT_EQ(back.E, d.E);
  EXPECT_EQ(back.K, d.K);
  EXPECT_EQ(back.N, d.N);
  EXPECT_EQ(back.cert.P, d.cert.P);
  EXPECT_EQ(back.cert.gamma_star, d.cert.gamma_star);
  EXPECT_EQ(back.cert.mode, d.cert.mode);
  std::ostringstream b;
  write_design(b, back);
  EXPECT_EQ(a.str(), b.str());
}

TEST(DesignArtifact, MalformedInputReportsLine) {
  std::istringstream in("ulfe-design 1\nscalar lambda_star 1.5\nmatrix E 1 2\n1 x\n");
  try {
    read_design(in);
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
  std::istringstream bad_header("design 1\n");
  EXPECT_THROW(read_design(bad_header), Error);
}

TEST(Pipeline, SuccessfulRunWritesArtifacts) {
  const RunConfig cfg = short_manipulator("ok");
  const PipelineResult res = run_pipeline(cfg);
  ASSERT_EQ(res.exit_code, kExitOk) << res.row.message;
  for (const char* f : {"design.txt", "report.txt", "trace.csv", "summary.csv"})
    EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / f)) << f;
  const std::string summary = slurp(fs::path(cfg.out_dir) / "summary.csv");
  EXPECT_NE(summary.find(sha256_hex(cfg.source_text)), std::string::npos);
  EXPECT_NE(summary.find(",mixed-hinf,ok,"), std::string::npos);
  EXPECT_LE(res.row.lambda_star, 1e9);
  EXPECT_LE(res.row.gamma_star, cfg.synth.gamma_max * (1 + 1e-9));
}

TEST(Pipeline, RerunIsBitIdentical) {
  const RunConfig cfg = short_manipulator("det");
  ASSERT_EQ(run_pipeline(cfg).exit_code, kExitOk);
  const std::string first = slurp(fs::path(cfg.out_dir) / "trace.csv");
  ASSERT_EQ(run_pipeline(cfg).exit_code, kExitOk);
  EXPECT_EQ(first, slurp(fs::path(cfg.out_dir) / "trace.csv"));
}

TEST(Pipeline, CapBelowFloorExitsInfeasible) {
  RunConfig cfg = short_manipulator("infeasible");
  cfg.synth.gamma_max = 1.0;
  const PipelineResult res = run_pipeline(cfg);
  EXPECT_EQ(res.exit_code, kExitInfeasible);
  EXPECT_EQ(res.row.status, "infeasible");
  EXPECT_EQ(res.row.stage, "synth");
  EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / "summary.csv"));
  EXPECT_FALSE(fs::exists(fs::path(cfg.out_dir) / "trace.csv"));
}

TEST(Pipeline, MissingBoundExitsConfig) {
  RunConfig cfg = short_manipulator("config");
  cfg.mode = DesignMode::MixedH2;
  cfg.has_lambda_max = false;
  const PipelineResult res = run_pipeline(cfg);
  EXPECT_EQ(res.exit_code, kExitConfig);
  EXPECT_NE(res.row.message.find("design.lambda_max"), std::string::npos);
}

TEST(Compare, SensorFaultPlantAllInfeasible) {
  RunConfig cfg = load_config((config_dir() / "manipulator_sensor_faults.json").string());
  cfg.out_dir = fresh_dir("sensor").string();
  const auto rows = compare_modes(cfg);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) EXPECT_EQ(r.status, "infeasible") << r.mode;
  EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / "comparison.csv"));
}

TEST(Compare, SmallLinearPlantCompletes) {
  RunConfig cfg = load_config((config_dir() / "small_linear.json").string());
  cfg.out_dir = fresh_dir("small").string();
  const auto rows = compare_modes(cfg);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.status, "ok") << r.mode << ": " << r.message;
    EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / r.mode / "trace.csv"));
  }
}
