#include "flexstage/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "flexstage/error.hpp"
#include "flexstage/parallel.hpp"

namespace flexstage {

Complex RationalTf::eval(Complex s) const {
  auto horner = [&](const std::vector<double>& p) {
    Complex v = 0.0;
    for (double c : p) v = v * s + c;
    return v;
  };
  return horner(num) / horner(den);
}

void ChannelController::validate() const {
  if (!(omega_bw > 0.0) || !(alpha > 1.0) || !(z_lp > 0.0) ||
      !std::isfinite(kp)) {
    throw Error(ErrorKind::kInvalidArgument,
                "controller needs ω_bw > 0, α > 1, z_lp > 0 and finite K_p");
  }
}

Complex ChannelController::response(double omega) const {
  if (!(omega > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "controller response excludes ω = 0 (integrator pole)");
  }
  const Complex s(0.0, omega);
  const double wl = omega_lp();
  return kp * ((s + omega_i()) / s) * (s / omega_d() + 1.0) *
         (wl * wl / (s * s + 2.0 * z_lp * wl * s + wl * wl));
}

RationalTf ChannelController::rational() const {
  const double wi = omega_i();
  const double wd = omega_d();
  const double wl = omega_lp();
  const double g = kp * wl * wl / wd;
  return {{g, g * (wi + wd), g * wi * wd}, {1.0, 2.0 * z_lp * wl, wl * wl, 0.0}};
}

ChannelController make_controller(double omega_bw, double alpha, double z_lp,
                                  double kp) {
  ChannelController c{kp, omega_bw, alpha, z_lp};
  c.validate();
  return c;
}

FrequencyResponse controller_frf(const ChannelController& controller,
                                 const Eigen::VectorXd& grid) {
  controller.validate();
  FrequencyResponse f{grid, Eigen::VectorXcd(grid.size())};
  for (int i = 0; i < grid.size(); ++i) f.values[i] = controller.response(grid[i]);
  return f;
}

Complex effective_loop(const ChannelPlant& plant,
                       const ChannelController& controller, double omega,
                       LoopSign sign) {
  const Complex l = plant.response(omega) * controller.response(omega);
  return sign == LoopSign::kNegative ? l : -l;
}

namespace {

double loop_sign(LoopSign s) { return s == LoopSign::kNegative ? 1.0 : -1.0; }

// Low-frequency asymptote L_eff ≈ K0 / s^p.
struct Asymptote {
  int poles = 0;
  double k0 = 0.0;
};

Asymptote asymptote(const ChannelPlant& plant, const ChannelController& c,
                    LoopSign sign) {
  Asymptote a;
  double g0 = plant.rigid_residue;
  a.poles = 1 + plant.origin_poles();
  if (plant.origin_poles() == 0) {
    g0 = 0.0;
    for (const auto& t : plant.modes) g0 += t.residue / (t.omega * t.omega);
  }
  a.k0 = loop_sign(sign) * c.kp * c.omega_i() * g0;
  return a;
}

std::vector<double> loop_grid(const ChannelPlant& plant,
                              const ChannelController& c, int per_decade) {
  double lo = c.omega_i();
  double hi = c.omega_lp();
  for (const auto& t : plant.modes) {
    if (t.residue == 0.0) continue;
    lo = std::min(lo, t.omega);
    hi = std::max(hi, t.omega);
  }
  const Eigen::VectorXd base = log_grid(1e-3 * lo, 1e3 * hi, per_decade);
  std::vector<double> g(base.data(), base.data() + base.size());
  for (const auto& t : plant.modes) {
    if (t.residue == 0.0) continue;
    for (int k = -12; k <= 12; ++k) g.push_back(t.omega * (1.0 + 0.5 * k * t.zeta));
    g.push_back(t.omega * std::sqrt(std::max(0.0, 1.0 - 2.0 * t.zeta * t.zeta)));
  }
  std::sort(g.begin(), g.end());
  std::vector<double> out;
  for (double w : g) {
    if (w > 0.0 && (out.empty() || w > out.back() * (1.0 + 1e-12))) out.push_back(w);
  }
  return out;
}

struct NyquistCount {
  double z = 0.0;
  bool integral = false;  // z within 0.1 of an integer ≥ 0
};

NyquistCount nyquist(const ChannelPlant& plant, const ChannelController& c,
                     LoopSign sign, const std::vector<double>& grid,
                     std::vector<Complex>& f) {
  const Asymptote a = asymptote(plant, c, sign);
  f.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    f[k] = 1.0 + effective_loop(plant, c, grid[k], sign);
  }
  double delta = 0.0;
  for (std::size_t k = 1; k < f.size(); ++k) delta += std::arg(f[k] / f[k - 1]);
  const Complex s0(0.0, grid.front());
  const double offset =
      std::arg(f.front() * std::pow(s0, a.poles) * (a.k0 > 0.0 ? 1.0 : -1.0));
  NyquistCount n;
  n.z = 0.5 * a.poles - delta / M_PI - offset / M_PI;
  n.integral = std::abs(n.z - std::round(n.z)) < 0.1 && std::round(n.z) >= 0.0;
  return n;
}

template <class F>
double golden_max(F f, double a, double b) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 80 && b - a > 1e-13 * std::abs(b); ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    }
  }
  return f1 > f2 ? x1 : x2;
}

bool zero_loop(const ChannelPlant& plant, const ChannelController& c) {
  if (c.kp == 0.0) return true;
  if (plant.rigid_residue != 0.0) return false;
  return std::all_of(plant.modes.begin(), plant.modes.end(),
                     [](const auto& t) { return t.residue == 0.0; });
}

}  // namespace

SensitivityResult sensitivity_peak(const ChannelPlant& plant,
                                   const ChannelController& controller,
                                   const LoopOptions& options) {
  controller.validate();
  SensitivityResult r;
  if (zero_loop(plant, controller)) {
    r.peak = 1.0;
    r.omega_peak = controller.omega_bw;
    r.stable = true;
    return r;
  }
  if (asymptote(plant, controller, options.sign).k0 == 0.0) {
    throw Error(ErrorKind::kInvalidArgument,
                "loop has no integral path (zero static plant gain)");
  }

  std::vector<double> grid;
  std::vector<Complex> f;
  int previous = -1;
  bool settled = false;
  for (int d = 0; d <= options.max_doublings; ++d) {
    grid = loop_grid(plant, controller, options.per_decade << d);
    const NyquistCount n = nyquist(plant, controller, options.sign, grid, f);
    const int z = n.integral ? static_cast<int>(std::lround(n.z)) : -1;
    if (z >= 0 && z == previous) {
      settled = true;
      break;
    }
    previous = z;
  }
  r.grid_points = static_cast<int>(grid.size());
  if (!settled || previous != 0) {
    r.stable = false;
    r.unstable_poles = settled ? previous : -1;
    r.peak = std::numeric_limits<double>::infinity();
    return r;
  }
  r.stable = true;

  std::size_t best = 0;
  for (std::size_t k = 1; k < f.size(); ++k) {
    if (std::abs(f[k]) < std::abs(f[best])) best = k;
  }
  const double a = std::log(grid[best > 0 ? best - 1 : best]);
  const double b = std::log(grid[std::min(best + 1, grid.size() - 1)]);
  auto s_mag = [&](double lw) {
    return 1.0 / std::abs(1.0 + effective_loop(plant, controller, std::exp(lw),
                                               options.sign));
  };
  const double lw = golden_max(s_mag, a, b);
  r.peak = std::max(s_mag(lw), 1.0 / std::abs(f[best]));
  r.omega_peak = s_mag(lw) >= 1.0 / std::abs(f[best]) ? std::exp(lw) : grid[best];
  return r;
}

Margins stability_margins(const ChannelPlant& plant,
                          const ChannelController& controller,
                          const LoopOptions& options) {
  controller.validate();
  Margins m;
  m.gain_margin = std::numeric_limits<double>::infinity();
  m.phase_margin_deg = std::numeric_limits<double>::infinity();
  if (zero_loop(plant, controller)) return m;

  const auto grid = loop_grid(plant, controller, 4 * options.per_decade);
  auto loop = [&](double w) {
    return effective_loop(plant, controller, w, options.sign);
  };
  auto bisect = [&](double lo, double hi, auto&& side) {
    const bool s_lo = side(lo);
    for (int i = 0; i < 80; ++i) {
      const double mid = std::sqrt(lo * hi);
      if (side(mid) == s_lo) lo = mid; else hi = mid;
    }
    return std::sqrt(lo * hi);
  };

  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const Complex l0 = loop(grid[k - 1]);
    const Complex l1 = loop(grid[k]);
    if ((std::abs(l0) > 1.0) != (std::abs(l1) > 1.0)) {
      const double w = bisect(grid[k - 1], grid[k],
                              [&](double x) { return std::abs(loop(x)) > 1.0; });
      // Angular distance of the crossing from −180°, either direction.
      const double pm = std::abs(180.0 - std::abs(std::arg(loop(w))) * 180.0 / M_PI);
      m.phase_margin_deg = std::min(m.phase_margin_deg, pm);
      const double dist = std::abs(std::log(w / controller.omega_bw));
      if (std::abs(l0) > 1.0 && dist < nearest) {
        m.omega_gain_cross = w;
        nearest = dist;
      }
    }
    if ((l0.imag() > 0.0) != (l1.imag() > 0.0) &&
        (l0.real() < 0.0 || l1.real() < 0.0)) {
      const double w = bisect(grid[k - 1], grid[k],
                              [&](double x) { return loop(x).imag() > 0.0; });
      const Complex l = loop(w);
      if (l.real() >= 0.0) continue;
      const double g = 1.0 / std::abs(l);
      if (g > 1.0) {
        if (g < m.gain_margin) {
          m.gain_margin = g;
          m.omega_phase_cross = w;
        }
      } else {
        m.lower_gain_margin = std::max(m.lower_gain_margin, g);
      }
    }
  }
  return m;
}

double crossover_gain(const ChannelPlant& plant, double omega_bw, double alpha,
                      double z_lp, LoopSign sign) {
  const ChannelController unit = make_controller(omega_bw, alpha, z_lp, 1.0);
  const double mag = std::abs(plant.response(omega_bw) * unit.response(omega_bw));
  if (!(mag > 0.0) || !std::isfinite(mag)) {
    throw Error(ErrorKind::kInvalidArgument,
                "plant response vanishes at the requested bandwidth");
  }
  // Sign so the low-frequency loop is negative feedback.
  const double k0 = asymptote(plant, unit, sign).k0;
  return (k0 >= 0.0 ? 1.0 : -1.0) / mag;
}

namespace {

struct Attempt {
  ChannelController controller;
  SensitivityResult sens;
  bool feasible = false;
};

Attempt attempt(const ChannelPlant& plant, double omega_bw,
                const TuningOptions& o) {
  Attempt a;
  a.controller = make_controller(omega_bw, o.alpha, o.z_lp,
                                 crossover_gain(plant, omega_bw, o.alpha,
                                                o.z_lp, o.loop.sign));
  a.sens = sensitivity_peak(plant, a.controller, o.loop);
  a.feasible = a.sens.stable && a.sens.peak <= o.peak_bound;
  return a;
}

}  // namespace

TuningResult tune_channel(const ChannelPlant& plant,
                          const TuningOptions& options) {
  if (!(options.omega_min > 0.0 && options.omega_max > options.omega_min) ||
      !(options.scan_factor > 1.0) || !(options.resolution > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid tuning search range");
  }
  TuningResult out;
  out.label = plant.label;

  std::vector<double> scan;
  for (double w = options.omega_min; w < options.omega_max;
       w *= options.scan_factor) {
    scan.push_back(w);
  }
  scan.push_back(options.omega_max);

  std::vector<Attempt> tried;
  int top = -1;
  for (std::size_t k = 0; k < scan.size(); ++k) {
    tried.push_back(attempt(plant, scan[k], options));
    if (tried.back().feasible) top = static_cast<int>(k);
  }
  out.evaluations = static_cast<int>(scan.size());

  Attempt chosen;
  if (top < 0) {
    chosen = *std::min_element(tried.begin(), tried.end(),
                               [](const Attempt& a, const Attempt& b) {
                                 return a.sens.peak < b.sens.peak;
                               });
  } else {
    chosen = tried[top];
    if (top + 1 < static_cast<int>(scan.size())) {
      double lo = scan[top];
      double hi = scan[top + 1];
      while (hi / lo > 1.0 + options.resolution) {
        const double mid = std::sqrt(lo * hi);
        Attempt a = attempt(plant, mid, options);
        ++out.evaluations;
        if (a.feasible) {
          lo = mid;
          chosen = std::move(a);
        } else {
          hi = mid;
        }
      }
    }
  }

  out.controller = chosen.controller;
  out.sensitivity_peak = chosen.sens.peak;
  out.omega_peak = chosen.sens.omega_peak;
  out.feasible = chosen.feasible;
  const Margins m = stability_margins(plant, chosen.controller, options.loop);
  out.achieved_crossover = m.omega_gain_cross;
  out.gain_margin = m.gain_margin;
  out.lower_gain_margin = m.lower_gain_margin;
  out.phase_margin_deg = m.phase_margin_deg;

  std::ostringstream os;
  os << "channel " << plant.label << ": "
     << (out.feasible ? "feasible" : "no feasible bandwidth in range") << '\n'
     << "  bandwidth " << out.controller.omega_bw / (2.0 * M_PI)
     << " Hz, crossover " << out.achieved_crossover / (2.0 * M_PI)
     << " Hz, K_p " << out.controller.kp << '\n'
     << "  |S| peak " << out.sensitivity_peak << " at "
     << out.omega_peak / (2.0 * M_PI) << " Hz, GM " << out.gain_margin
     << ", PM " << out.phase_margin_deg << " deg\n";
  out.report = os.str();
  return out;
}

std::vector<TuningResult> tune_channels(const std::vector<ChannelPlant>& plants,
                                        const TuningOptions& options) {
  std::vector<TuningResult> out(plants.size());
  parallel_for(static_cast<int>(plants.size()),
               [&](int i) { out[i] = tune_channel(plants[i], options); });
  return out;
}

std::vector<TuningResult> tune_channels_serial(
    const std::vector<ChannelPlant>& plants, const TuningOptions& options) {
  std::vector<TuningResult> out(plants.size());
  serial_for(static_cast<int>(plants.size()),
             [&](int i) { out[i] = tune_channel(plants[i], options); });
  return out;
}

}  // namespace flexstage
