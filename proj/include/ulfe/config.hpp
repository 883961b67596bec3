#ifndef ULFE_CONFIG_HPP
#define ULFE_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ulfe/augment.hpp"
#include "ulfe/errors.hpp"
#include "ulfe/manipulator.hpp"
#include "ulfe/model.hpp"
#include "ulfe/sim.hpp"
#include "ulfe/synth.hpp"

// Run configuration read from a JSON file. Unknown keys are rejected so typos
// surface as errors naming the field.
namespace ulfe {

enum class PlantKind { Manipulator, Linear };
enum class FaultKind { None, Manipulator, Polynomial };

struct FaultConfig {
  FaultKind kind = FaultKind::Manipulator;
  double onset = 50.0;
  // Polynomial: channel i is sum_j coeffs[i][j] (t - onset)^j.
  std::vector<std::vector<double>> coeffs;
};

struct SimConfig {
  double t_end = 100.0;
  double dt = 1e-3;
  double transient_cut = 10.0;
  int record_every = 10;
  double z0 = 0.01;
  std::uint64_t seed = 1;
  double noise_amplitude = 0.1;
  double noise_period = 0.1;
  std::vector<double> input_amplitude;  // empty -> plant default
  double input_period = 40.0;
  FaultConfig fault;
};

struct RunConfig {
  PlantKind plant_kind = PlantKind::Manipulator;
  manipulator::Params params;
  PlantModel linear;            // PlantKind::Linear (g = 0)
  std::optional<Mat> sensor_fault;  // F_y override for the manipulator
  UltraLocalOrders orders = UltraLocalOrders::uniform(4);
  DesignMode mode = DesignMode::MixedHinf;
  bool has_mode = false;
  SynthesisOptions synth;
  bool has_gamma_max = false, has_lambda_max = false;
  SimConfig sim;
  std::string out_dir = "out";
  std::string source_text;  // raw file contents, hashed into the summary

  PlantModel plant() const {
    if (plant_kind == PlantKind::Linear) return linear;
    PlantModel p = manipulator::plant(params);
    if (sensor_fault) p.Fy = *sensor_fault;
    return p;
  }

  TrueSystem truth() const {
    if (plant_kind == PlantKind::Linear) return true_system(linear);
    TrueSystem s = manipulator_system(params);
    if (sensor_fault) {
      const Eigen::Index nfy = sensor_fault->cols();
      auto base = s;
      s.rhs = [base](double t, const Vec& x, const Vec& u, const Vec& f) {
        return base.rhs(t, x, u, f.head(2));
      };
      s.fx = [base](const Vec& x, const Vec& f) { return base.fx(x, f.head(2)); };
      s.fy = [nfy](const Vec& f) -> Vec { return f.segment(2, nfy); };
    }
    return s;
  }

  /// Width of the raw fault vector the scenario must produce.
  Eigen::Index fault_width() const {
    if (plant_kind == PlantKind::Linear) return linear.n_fx() + linear.n_fy();
    return 2 + (sensor_fault ? sensor_fault->cols() : 0);
  }

  FaultScenario scenario() const {
    const Eigen::Index w = fault_width();
    const FaultConfig& f = sim.fault;
    switch (f.kind) {
      case FaultKind::None: return FaultScenario::none(w);
      case FaultKind::Manipulator: {
        FaultScenario s = manipulator_fault(f.onset);
        s.width = w;
        auto base = s.fault_fn;
        s.fault_fn = [base, w](double t) {
          Vec out = Vec::Zero(w);
          out.head(2) = base(t);
          return out;
        };
        return s;
      }
      case FaultKind::Polynomial: {
        auto coeffs = f.coeffs;
        const double onset = f.onset;
        return {onset,
                [coeffs, onset, w](double t) {
                  Vec out = Vec::Zero(w);
                  const double tau = t - onset;
                  for (Eigen::Index i = 0; i < w; ++i) {
                    double v = 0.0;
                    for (auto it = coeffs[i].rbegin(); it != coeffs[i].rend(); ++it) v = v * tau + *it;
                    out(i) = v;
                  }
                  return out;
                },
                w};
      }
    }
    return FaultScenario::none(w);
  }

  TimeSignal input() const {
    std::vector<double> amp = sim.input_amplitude;
    const Eigen::Index l = plant().l();
    if (amp.empty()) {
      amp.assign(l, 0.0);
      if (plant_kind == PlantKind::Manipulator) amp[0] = 0.5;
    }
    const double period = sim.input_period;
    return [amp, period](double t) {
      Vec u(static_cast<Eigen::Index>(amp.size()));
      for (std::size_t i = 0; i < amp.size(); ++i)
        u(i) = amp[i] * std::sin(2.0 * std::numbers::pi * t / period);
      return u;
    };
  }

  NoiseModel noise() const { return {sim.noise_amplitude, sim.noise_period, sim.seed}; }

  SimOptions sim_options() const {
    SimOptions o;
    o.t_end = sim.t_end;
    o.dt = sim.dt;
    o.record_every = sim.record_every;
    o.z0 = sim.z0;
    return o;
  }

  /// Mode-dependent checks; run after command-line overrides.
  void validate_for(DesignMode m) const {
    if (m == DesignMode::MixedHinf && !has_gamma_max)
      throw ConfigError("design.gamma_max", "required for mode mixed-hinf");
    if (m == DesignMode::MixedH2 && !has_lambda_max)
      throw ConfigError("design.lambda_max", "required for mode mixed-h2");
  }
};

namespace detail {

using json = nlohmann::json;

inline int line_of(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& at(const std::string& key) const { return j_.at(key); }

  void only(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : j_.items()) {
      bool known = false;
      for (const char* a : keys) known = known || k == a;
      if (!known) throw ConfigError(field(k), "unknown key");
    }
  }

  double number(const std::string& key, double fallback, bool positive = true) const {
    if (!has(key)) return fallback;
    return number_value(at(key), field(key), positive);
  }

  static double number_value(const json& v, const std::string& f, bool positive) {
    if (!v.is_number()) throw ConfigError(f, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(f, "must be finite");
    if (positive && !(x > 0.0)) throw ConfigError(f, "must be positive");
    return x;
  }

  int integer(const std::string& key, int fallback, int min) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    const long long x = v.get<long long>();
    if (x < min || x > 1000000000) throw ConfigError(field(key), "out of range");
    return static_cast<int>(x);
  }

  std::string string(const std::string& key, std::string fallback) const {
    if (!has(key)) return fallback;
    if (!at(key).is_string()) throw ConfigError(field(key), "expected a string");
    return at(key).get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(number_value(v[i], field(key) + "[" + std::to_string(i) + "]", false));
    return out;
  }

  /// Nested array of rows; [] is a 0x0 matrix, [[]] is not accepted.
  Mat matrix(const std::string& key, Eigen::Index rows_if_empty, Eigen::Index cols_if_empty) const {
    const json& v = at(key);
    const std::string f = field(key);
    if (!v.is_array()) throw ConfigError(f, "expected a nested array of rows");
    if (v.empty()) return Mat::Zero(rows_if_empty, cols_if_empty);
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    if (cols == 0) throw ConfigError(f, "rows must be non-empty arrays");
    Mat m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_array() || v[i].size() != cols)
        throw ConfigError(f + "[" + std::to_string(i) + "]", "ragged matrix row");
      for (std::size_t k = 0; k < cols; ++k)
        m(i, k) = number_value(v[i][k], f + "[" + std::to_string(i) + "][" + std::to_string(k) + "]",
                               false);
    }
    return m;
  }

  Reader sub(const std::string& key) const { return Reader(at(key), field(key)); }

 private:
  const json& j_;
  std::string path_;
};

inline PlantModel read_linear(const Reader& r) {
  r.only({"type", "A", "B", "C", "S", "V", "Fx", "Fy", "D"});
  for (const char* k : {"A", "C"})
    if (!r.has(k)) throw ConfigError(r.field(k), "required for a linear plant");
  const Mat a = r.matrix("A", 0, 0);
  if (a.rows() != a.cols()) throw ConfigError(r.field("A"), "must be square");
  const Mat c = r.matrix("C", 0, 0);
  if (c.cols() != a.rows()) throw ConfigError(r.field("C"), "must have n columns");
  PlantModel p = make_plant(a, c);
  const Eigen::Index n = a.rows(), m = c.rows();
  auto opt = [&](const char* key, Mat& dst, Eigen::Index r0, Eigen::Index c0, bool rows_fixed) {
    if (!r.has(key)) return;
    dst = r.matrix(key, r0, c0);
    if (rows_fixed ? dst.rows() != r0 : dst.cols() != c0)
      throw ConfigError(r.field(key), "dimension does not match the plant");
  };
  opt("B", p.B, n, 0, true);
  opt("S", p.S, n, 0, true);
  opt("Fx", p.Fx, n, 0, true);
  opt("Fy", p.Fy, m, 0, true);
  opt("D", p.D, n, 0, true);
  opt("V", p.V, 0, n, false);
  if (p.S.cols() && !r.has("V")) p.V = Mat::Identity(n, n);
  p.g = [ng = p.S.cols()](const Vec&, const Vec&, double) -> Vec { return Vec::Zero(ng); };
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(r.field("type"), e.what());
  }
  return p;
}

inline manipulator::Params read_params(const Reader& r) {
  r.only({"m1", "m2", "I1", "I2", "l1", "l2", "lc1", "lc2", "d1", "d2", "g"});
  manipulator::Params p;
  p.m1 = r.number("m1", p.m1);
  p.m2 = r.number("m2", p.m2);
  p.I1 = r.number("I1", p.I1);
  p.I2 = r.number("I2", p.I2);
  p.l1 = r.number("l1", p.l1);
  p.l2 = r.number("l2", p.l2);
  p.lc1 = r.number("lc1", p.lc1);
  p.lc2 = r.number("lc2", p.lc2);
  p.d1 = r.number("d1", p.d1);
  p.d2 = r.number("d2", p.d2);
  p.g = r.number("g", p.g);
  return p;
}

}  // namespace detail

/// Parses a config document. Syntax errors carry the line number; value
/// errors name the offending field.
inline RunConfig parse_config(const std::string& text) {
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const int line = detail::line_of(text, e.byte ? e.byte - 1 : 0);
    throw ConfigError("", "syntax error at line " + std::to_string(line) + ": " + e.what());
  }
  RunConfig c;
  c.source_text = text;
  const detail::Reader root(j, "");
  root.only({"plant", "orders", "design", "simulation", "output"});

  if (!root.has("plant")) throw ConfigError("plant", "missing");
  if (root.at("plant").is_string()) {
    if (root.at("plant").get<std::string>() != "two_link_manipulator")
      throw ConfigError("plant", "unknown built-in plant (expected two_link_manipulator)");
  } else {
    const detail::Reader pr = root.sub("plant");
    const std::string type = pr.string("type", "");
    if (type == "two_link_manipulator") {
      pr.only({"type", "params", "Fy"});
      if (pr.has("params")) c.params = detail::read_params(pr.sub("params"));
      if (pr.has("Fy")) {
        Mat fy = pr.matrix("Fy", 2, 0);
        if (fy.rows() != 2) throw ConfigError(pr.field("Fy"), "must have 2 rows");
        c.sensor_fault = fy;
      }
    } else if (type == "linear") {
      c.plant_kind = PlantKind::Linear;
      c.linear = detail::read_linear(pr);
    } else {
      throw ConfigError(pr.field("type"), "expected two_link_manipulator or linear");
    }
  }

  if (root.has("orders")) {
    const json& o = root.at("orders");
    if (o.is_number_integer()) {
      c.orders = UltraLocalOrders::uniform(root.integer("orders", 4, 1));
    } else {
      const auto v = root.numbers("orders");
      if (v.size() != 3) throw ConfigError("orders", "expected an integer or [r1, r2, r3]");
      int r[3];
      for (int k = 0; k < 3; ++k) {
        if (v[k] < 1 || v[k] != std::floor(v[k]) || v[k] > 64)
          throw ConfigError("orders[" + std::to_string(k) + "]", "must be an integer in [1, 64]");
        r[k] = static_cast<int>(v[k]);
      }
      c.orders = {r[0], r[1], r[2]};
    }
  }

  if (root.has("design")) {
    const detail::Reader d = root.sub("design");
    d.only({"mode", "epsilon", "gamma_max", "lambda_max", "pole_radius", "p_max"});
    if (d.has("mode")) {
      const auto m = parse_mode(d.string("mode", ""));
      if (!m) throw ConfigError("design.mode", "expected one of iss, hinf, h2, mixed-hinf, mixed-h2");
      c.mode = *m;
      c.has_mode = true;
    }
    c.synth.epsilon = d.number("epsilon", c.synth.epsilon);
    c.has_gamma_max = d.has("gamma_max");
    c.synth.gamma_max = d.number("gamma_max", c.synth.gamma_max);
    c.has_lambda_max = d.has("lambda_max");
    c.synth.lambda_max = d.number("lambda_max", c.synth.lambda_max);
    if (d.has("pole_radius")) c.synth.pole_radius = d.number("pole_radius", 0.0, false);
    if (d.has("p_max")) c.synth.p_max = d.number("p_max", 0.0, false);
    if (c.synth.pole_radius < 0.0) throw ConfigError("design.pole_radius", "must be >= 0");
    if (c.synth.p_max < 0.0) throw ConfigError("design.p_max", "must be >= 0");
  }

  if (root.has("simulation")) {
    const detail::Reader s = root.sub("simulation");
    s.only({"t_end", "dt", "transient_cut", "record_every", "z0", "seed", "noise", "input", "fault"});
    SimConfig& sc = c.sim;
    sc.t_end = s.number("t_end", sc.t_end);
    sc.dt = s.number("dt", sc.dt);
    sc.transient_cut = s.number("transient_cut", sc.transient_cut, false);
    sc.record_every = s.integer("record_every", sc.record_every, 1);
    sc.z0 = s.number("z0", sc.z0, false);
    sc.seed = static_cast<std::uint64_t>(s.integer("seed", static_cast<int>(sc.seed), 0));
    if (!(sc.t_end > sc.dt)) throw ConfigError("simulation.t_end", "must exceed dt");
    if (!(sc.transient_cut >= 0.0 && sc.transient_cut < sc.t_end))
      throw ConfigError("simulation.transient_cut", "must lie in [0, t_end)");
    if (s.has("noise")) {
      const detail::Reader nz = s.sub("noise");
      nz.only({"amplitude", "sample_period"});
      sc.noise_amplitude = nz.number("amplitude", sc.noise_amplitude, false);
      if (sc.noise_amplitude < 0.0) throw ConfigError(nz.field("amplitude"), "must be >= 0");
      sc.noise_period = nz.number("sample_period", sc.noise_period);
    }
    if (s.has("input")) {
      const detail::Reader in = s.sub("input");
      in.only({"amplitude", "period"});
      if (in.has("amplitude")) sc.input_amplitude = in.numbers("amplitude");
      sc.input_period = in.number("period", sc.input_period);
    }
    if (s.has("fault")) {
      const detail::Reader f = s.sub("fault");
      f.only({"kind", "onset", "coefficients"});
      const std::string kind = f.string("kind", "manipulator");
      if (kind == "none") sc.fault.kind = FaultKind::None;
      else if (kind == "manipulator") sc.fault.kind = FaultKind::Manipulator;
      else if (kind == "polynomial") sc.fault.kind = FaultKind::Polynomial;
      else throw ConfigError(f.field("kind"), "expected none, manipulator or polynomial");
      sc.fault.onset = f.number("onset", sc.fault.onset, false);
      if (sc.fault.kind == FaultKind::Polynomial) {
        if (!f.has("coefficients")) throw ConfigError(f.field("coefficients"), "required for polynomial faults");
        const Mat k = f.matrix("coefficients", 0, 0);
        for (Eigen::Index i = 0; i < k.rows(); ++i) {
          std::vector<double> row(k.cols());
          for (Eigen::Index j = 0; j < k.cols(); ++j) row[j] = k(i, j);
          sc.fault.coeffs.push_back(std::move(row));
        }
      }
    }
  }

  if (root.has("output")) c.out_dir = root.string("output", c.out_dir);

  // Cross-field checks.
  const Eigen::Index w = c.fault_width();
  if (c.sim.fault.kind == FaultKind::Polynomial && static_cast<Eigen::Index>(c.sim.fault.coeffs.size()) != w)
    throw ConfigError("simulation.fault.coefficients", "needs one row per fault channel (" +
                                                           std::to_string(w) + ")");
  if (c.sim.fault.kind == FaultKind::Manipulator && c.plant_kind == PlantKind::Linear)
    throw ConfigError("simulation.fault.kind", "manipulator fault needs the manipulator plant");
  if (!c.sim.input_amplitude.empty() &&
      static_cast<Eigen::Index>(c.sim.input_amplitude.size()) != c.plant().l())
    throw ConfigError("simulation.input.amplitude", "needs one entry per input");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ulfe

#endif  // ULFE_CONFIG_HPP
