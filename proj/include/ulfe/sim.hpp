#ifndef ULFE_SIM_HPP
#define ULFE_SIM_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ulfe/augment.hpp"
#include "ulfe/errors.hpp"
#include "ulfe/manipulator.hpp"
#include "ulfe/matlib.hpp"
#include "ulfe/model.hpp"
#include "ulfe/synth.hpp"

// Closed-loop simulation of a plant and its observer with fault injection and
// sampled measurement noise.
namespace ulfe {

using TimeSignal = std::function<Vec(double t)>;

/// Raw fault signal; zero before the onset.
struct FaultScenario {
  double onset = 50.0;
  TimeSignal fault_fn;
  Eigen::Index width = 0;

  Vec operator()(double t) const {
    if (t < onset || !fault_fn) return Vec::Zero(width);
    return fault_fn(t);
  }

  static FaultScenario none(Eigen::Index width) { return {0.0, {}, width}; }
};

/// Joint torque fault [0.2 sin(2 pi (t - onset) / 10), -0.05] from `onset` on.
inline FaultScenario manipulator_fault(double onset = 50.0) {
  return {onset,
          [onset](double t) {
            Vec f(2);
            f << 0.2 * std::sin(2.0 * std::numbers::pi * (t - onset) / 10.0), -0.05;
            return f;
          },
          2};
}

/// u = [0.5 sin(2 pi t / 40), 0].
inline TimeSignal manipulator_input() {
  return [](double t) {
    Vec u(2);
    u << 0.5 * std::sin(2.0 * std::numbers::pi * t / 40.0), 0.0;
    return u;
  };
}

/// Uniform noise on [-amplitude, amplitude], redrawn every sample_period and
/// held in between. Draws come from std::mt19937_64 mapped to [0, 1) with the
/// top 53 bits, so sequences agree across standard libraries.
struct NoiseModel {
  double amplitude = 0.1;
  double sample_period = 0.1;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(amplitude >= 0.0)) throw std::invalid_argument("NoiseModel: amplitude must be >= 0");
    if (!(sample_period > 0.0)) throw std::invalid_argument("NoiseModel: sample_period must be > 0");
  }
};

inline double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// The true system driven by the raw fault. fx and fy map the raw fault (and
/// state) to the plant's f_x and f_y so the error output can be formed.
struct TrueSystem {
  std::function<Vec(double t, const Vec& x, const Vec& u, const Vec& fault)> rhs;
  std::function<Vec(const Vec& x, const Vec& fault)> fx;
  std::function<Vec(const Vec& fault)> fy;
};

/// Plant model as its own truth; the raw fault is [f_x; f_y].
inline TrueSystem true_system(const PlantModel& p) {
  const Eigen::Index nfx = p.n_fx(), nfy = p.n_fy();
  TrueSystem s;
  s.rhs = [p, nfx](double t, const Vec& x, const Vec& u, const Vec& f) -> Vec {
    return p.A * x + p.B * u + p.S * eval_nonlinearity(p, x, u, t) + p.Fx * f.head(nfx);
  };
  s.fx = [nfx](const Vec&, const Vec& f) -> Vec { return f.head(nfx); };
  s.fy = [nfx, nfy](const Vec& f) -> Vec { return f.segment(nfx, nfy); };
  return s;
}

/// Euler-Lagrange manipulator; the raw fault is tau_f and f_x = M(q)^-1 tau_f.
inline TrueSystem manipulator_system(const manipulator::Params& prm) {
  prm.validate();
  TrueSystem s;
  s.rhs = [prm](double, const Vec& x, const Vec& u, const Vec& f) -> Vec {
    return manipulator::derivative(prm, x, u, f);
  };
  s.fx = [prm](const Vec& x, const Vec& f) -> Vec { return manipulator::lumped_fault(prm, x, f); };
  s.fy = [](const Vec&) -> Vec { return Vec(0); };
  return s;
}

/// One classical RK4 step of xdot = f(t, x).
template <class F>
Vec rk4_step(const F& f, double t, const Vec& x, double dt) {
  const Vec k1 = f(t, x);
  const Vec k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
  const Vec k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
  const Vec k4 = f(t + dt, x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Observer  zdot = N z + G u + L y,  xhat_a = z - E y. Only (u, y) enter.
class Observer {
 public:
  explicit Observer(const ObserverDesign& d) : N_(d.N), G_(d.G), L_(d.L), E_(d.E) {}

  Vec derivative(const Vec& z, const Vec& u, const Vec& y) const {
    Vec out = N_ * z + L_ * y;
    if (G_.cols()) out += G_ * u;
    return out;
  }
  Vec estimate(const Vec& z, const Vec& y) const { return z - E_ * y; }
  Eigen::Index order() const { return N_.rows(); }

 private:
  Mat N_, G_, L_, E_;
};

struct SimOptions {
  double t_end = 100.0;
  double dt = 1e-3;
  int record_every = 1;  // keep every k-th step (the last step is always kept)
  Vec x0;                // empty -> zeros
  double z0 = 0.01;      // every observer state starts here
  bool noise_enabled = true;
};

struct SimulationTrace {
  std::vector<double> t;
  std::vector<Vec> x, y, xhat_a, fault_true, fault_hat, ed;
  double onset = 0.0;
  std::size_t size() const { return t.size(); }
};

namespace detail {

// True augmented chain heads [V x; b1; b2; b3] for the error output.
inline Vec true_output(const TransformedPlant& tp, const Vec& x, const Vec& u, double t,
                       const Vec& fx, const Vec& fy) {
  const PlantModel& p = tp.base;
  const Vec b1 = eval_nonlinearity(p, x, u, t) + tp.S_pinv * (p.Fx * fx);
  const Vec b2 = tp.R2 * fx;
  Vec out(p.n_v() + b1.size() + b2.size() + fy.size());
  out << p.V * x, b1, b2, fy;
  return out;
}

}  // namespace detail

/// Fixed-step RK4 of plant and observer together. The measurement noise is
/// constant over each integration step, so sample_period must be a multiple
/// of dt.
inline SimulationTrace simulate(const TrueSystem& sys, const ObserverDesign& design,
                                const AugmentedSystem& aug, const TransformedPlant& tp,
                                const TimeSignal& input, const FaultScenario& scenario,
                                const NoiseModel& noise, const SimOptions& opt) {
  const PlantModel& p = tp.base;
  const Eigen::Index n = p.n(), m = p.m(), nz = aug.n_z;
  if (!(opt.dt > 0.0) || !(opt.t_end > opt.dt))
    throw std::invalid_argument("simulate: need dt > 0 and t_end > dt");
  if (opt.record_every < 1) throw std::invalid_argument("simulate: record_every must be >= 1");
  noise.validate();
  const double ratio = noise.sample_period / opt.dt;
  const long per_sample = std::lround(ratio);
  if (per_sample < 1 || std::abs(ratio - per_sample) > 1e-9 * ratio)
    throw std::invalid_argument("simulate: noise sample_period must be an integer multiple of dt");
  if (design.N.rows() != nz) throw std::invalid_argument("simulate: design order != n_z");
  if (opt.x0.size() && opt.x0.size() != n) throw std::invalid_argument("simulate: x0 length != n");

  const Observer obs(design);
  const FaultReconstructor recon(tp, aug);
  std::mt19937_64 gen(noise.seed);
  const bool noisy = opt.noise_enabled && noise.amplitude > 0.0;
  Vec nu = Vec::Zero(m);

  const long steps = std::lround(std::ceil(opt.t_end / opt.dt - 1e-9));
  Vec w(n + nz);
  w.head(n) = opt.x0.size() ? opt.x0 : Vec(Vec::Zero(n));
  w.tail(nz).setConstant(opt.z0);

  auto measure = [&](double t, const Vec& x) -> Vec {
    Vec y = p.C * x + nu;
    if (p.n_fy()) y += p.Fy * sys.fy(scenario(t));
    return y;
  };
  auto joint = [&](double t, const Vec& s) -> Vec {
    const Vec x = s.head(n), z = s.tail(nz);
    const Vec u = input(t);
    Vec out(n + nz);
    out.head(n) = sys.rhs(t, x, u, scenario(t));
    out.tail(nz) = obs.derivative(z, u, measure(t, x));
    return out;
  };

  SimulationTrace tr;
  tr.onset = scenario.onset;
  const std::size_t rows = static_cast<std::size_t>(steps / opt.record_every + 2);
  for (auto* v : {&tr.x, &tr.y, &tr.xhat_a, &tr.fault_true, &tr.fault_hat, &tr.ed}) v->reserve(rows);
  tr.t.reserve(rows);

  auto record = [&](double t, const Vec& s) {
    const Vec x = s.head(n), z = s.tail(nz);
    const Vec u = input(t);
    const Vec raw = scenario(t);
    const Vec y = measure(t, x);
    const Vec xa = obs.estimate(z, y);
    const auto est = recon(xa, u, t);
    const Vec fx = sys.fx(x, raw), fy = sys.fy(raw);
    Vec ftrue(fx.size() + fy.size()), fhat(est.fx.size() + est.fy.size());
    ftrue << fx, fy;
    fhat << est.fx, est.fy;
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.y.push_back(y);
    tr.xhat_a.push_back(xa);
    tr.fault_true.push_back(ftrue);
    tr.fault_hat.push_back(fhat);
    tr.ed.push_back(detail::true_output(tp, x, u, t, fx, fy) - aug.Cbar_a * xa);
  };

  auto diverged = [](double when) {
    throw NonFiniteState(when, "simulate: state diverged at t = " + std::to_string(when));
  };
  for (long k = 0; k < steps; ++k) {
    const double t = k * opt.dt;
    if (noisy && k % per_sample == 0)
      for (Eigen::Index i = 0; i < m; ++i)
        nu(i) = noise.amplitude * (2.0 * unit_uniform(gen) - 1.0);
    try {
      if (k % opt.record_every == 0) record(t, w);
      w = rk4_step(joint, t, w, opt.dt);
    } catch (const NonFiniteNonlinearity&) {
      diverged(t);  // g evaluated at a runaway estimate
    }
    if (!w.allFinite()) diverged((k + 1) * opt.dt);
  }
  // Noise held from the last sample; the final state is always recorded.
  try {
    record(steps * opt.dt, w);
  } catch (const NonFiniteNonlinearity&) {
    diverged(steps * opt.dt);
  }
  return tr;
}

/// Manipulator experiment: Euler-Lagrange truth, sinusoidal torque input.
inline SimulationTrace simulate_manipulator(const manipulator::Params& prm,
                                            const ObserverDesign& design,
                                            const AugmentedSystem& aug,
                                            const TransformedPlant& tp,
                                            const FaultScenario& scenario,
                                            const NoiseModel& noise, const SimOptions& opt) {
  return simulate(manipulator_system(prm), design, aug, tp, manipulator_input(), scenario, noise,
                  opt);
}

struct RunMetrics {
  std::vector<double> rmse;             // per fault channel over [cut, t_end]
  std::vector<double> post_onset_rmse;  // per channel over [onset, t_end]
  std::vector<double> noise_std;        // per channel std of the estimate over [cut, onset)
  std::vector<double> peak_error;       // per channel over [cut, t_end]
  // Channel aggregates: root mean square of the per-channel values.
  double rmse_total = 0.0, post_onset_rmse_total = 0.0, noise_std_total = 0.0;
  double peak_error_max = 0.0;
};

inline RunMetrics run_metrics(const SimulationTrace& tr, double transient_cut) {
  if (tr.size() == 0) throw std::invalid_argument("run_metrics: empty trace");
  if (!(transient_cut < tr.t.back()))
    throw std::invalid_argument("run_metrics: transient_cut must be < t_end");
  const Eigen::Index c = tr.fault_true.front().size();
  RunMetrics mt;
  mt.rmse.assign(c, 0.0);
  mt.post_onset_rmse.assign(c, 0.0);
  mt.noise_std.assign(c, 0.0);
  mt.peak_error.assign(c, 0.0);
  std::vector<double> mean(c, 0.0), sq(c, 0.0);
  long n_all = 0, n_post = 0, n_pre = 0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double t = tr.t[k];
    if (t < transient_cut) continue;
    const Vec err = tr.fault_hat[k] - tr.fault_true[k];
    ++n_all;
    const bool post = t >= tr.onset;
    if (post) ++n_post;
    else ++n_pre;
    for (Eigen::Index i = 0; i < c; ++i) {
      mt.rmse[i] += err(i) * err(i);
      mt.peak_error[i] = std::max(mt.peak_error[i], std::abs(err(i)));
      if (post) mt.post_onset_rmse[i] += err(i) * err(i);
      else {
        mean[i] += tr.fault_hat[k](i);
        sq[i] += tr.fault_hat[k](i) * tr.fault_hat[k](i);
      }
    }
  }
  auto total = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return c ? std::sqrt(s / static_cast<double>(c)) : 0.0;
  };
  for (Eigen::Index i = 0; i < c; ++i) {
    mt.rmse[i] = n_all ? std::sqrt(mt.rmse[i] / n_all) : 0.0;
    mt.post_onset_rmse[i] = n_post ? std::sqrt(mt.post_onset_rmse[i] / n_post) : 0.0;
    if (n_pre > 1) {
      const double mu = mean[i] / n_pre;
      mt.noise_std[i] = std::sqrt(std::max(0.0, sq[i] / n_pre - mu * mu));
    }
    mt.peak_error_max = std::max(mt.peak_error_max, mt.peak_error[i]);
  }
  mt.rmse_total = total(mt.rmse);
  mt.post_onset_rmse_total = total(mt.post_onset_rmse);
  mt.noise_std_total = total(mt.noise_std);
  return mt;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Columns t, x1.., y1.., fn{i}_true.., fn{i}_hat.., ed_1..; 17 significant digits.
inline void write_trace_csv(std::ostream& os, const SimulationTrace& tr) {
  if (tr.size() == 0) throw std::invalid_argument("write_trace_csv: empty trace");
  os << "t";
  auto names = [&](const char* pre, const char* post, Eigen::Index k, bool underscore) {
    for (Eigen::Index i = 1; i <= k; ++i) os << ',' << pre << (underscore ? "_" : "") << i << post;
  };
  names("x", "", tr.x[0].size(), false);
  names("y", "", tr.y[0].size(), false);
  names("fn", "_true", tr.fault_true[0].size(), false);
  names("fn", "_hat", tr.fault_hat[0].size(), false);
  names("ed", "", tr.ed[0].size(), true);
  os << '\n';
  for (std::size_t k = 0; k < tr.size(); ++k) {
    os << format_double(tr.t[k]);
    for (const auto* v : {&tr.x[k], &tr.y[k], &tr.fault_true[k], &tr.fault_hat[k], &tr.ed[k]})
      for (Eigen::Index i = 0; i < v->size(); ++i) os << ',' << format_double((*v)(i));
    os << '\n';
  }
}

}  // namespace ulfe

#endif  // ULFE_SIM_HPP
