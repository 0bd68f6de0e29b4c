#include "flexstage/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "flexstage/error.hpp"

namespace flexstage {

double acceleration_capability(double mass, double force) {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw Error(ErrorKind::kInvalidArgument, "mass must be positive");
  }
  return force / mass;
}

// ---------------------------------------------------------------- s-curve

SCurve::SCurve(double distance, double v_max, double a_max, double j_max,
               double start_time)
    : distance_(distance), start_(start_time) {
  if (!(v_max > 0.0) || !(a_max > 0.0) || !(j_max > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "s-curve limits must be positive");
  }
  const double d = std::abs(distance);
  // Accel phase reaching velocity v: returns (Tj, Ta, peak acceleration).
  auto phase = [&](double v, double& tj, double& ta) {
    if (v * j_max >= a_max * a_max) {
      tj = a_max / j_max;
      ta = v / a_max - tj;
      return a_max;
    }
    tj = std::sqrt(v / j_max);
    ta = 0.0;
    return j_max * tj;
  };
  double tj = 0.0, ta = 0.0;
  double v = v_max;
  a_peak_ = phase(v, tj, ta);
  if (v * (2.0 * tj + ta) > d) {
    double lo = 0.0, hi = v_max;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      phase(mid, tj, ta);
      (mid * (2.0 * tj + ta) > d ? hi : lo) = mid;
    }
    v = lo;
    a_peak_ = phase(v, tj, ta);
  }
  v_peak_ = d > 0.0 ? v : 0.0;
  const double tv = d > 0.0 ? (d - v * (2.0 * tj + ta)) / v : 0.0;
  const double sgn = distance < 0.0 ? -1.0 : 1.0;
  const double jerk = sgn * j_max;
  const std::pair<double, double> plan[] = {{jerk, tj},  {0.0, ta}, {-jerk, tj},
                                            {0.0, tv},   {-jerk, tj}, {0.0, ta},
                                            {jerk, tj}};
  double t = 0.0, p = 0.0, vel = 0.0, a = 0.0;
  for (const auto& [jk, dt] : plan) {
    if (d == 0.0) break;
    segments_.push_back({t, jk, p, vel, a});
    p += vel * dt + a * dt * dt / 2.0 + jk * dt * dt * dt / 6.0;
    vel += a * dt + jk * dt * dt / 2.0;
    a += jk * dt;
    t += dt;
  }
  duration_ = t;
}

const SCurve::Segment& SCurve::segment(double tau) const {
  auto it = std::upper_bound(
      segments_.begin(), segments_.end(), tau,
      [](double x, const Segment& s) { return x < s.t0; });
  return *(it - 1);
}

double SCurve::position(double t) const {
  const double tau = t - start_;
  if (segments_.empty() || tau <= 0.0) return 0.0;
  if (tau >= duration_) return distance_;
  const Segment& s = segment(tau);
  const double dt = tau - s.t0;
  return s.p0 + s.v0 * dt + s.a0 * dt * dt / 2.0 + s.jerk * dt * dt * dt / 6.0;
}

double SCurve::velocity(double t) const {
  const double tau = t - start_;
  if (segments_.empty() || tau <= 0.0 || tau >= duration_) return 0.0;
  const Segment& s = segment(tau);
  const double dt = tau - s.t0;
  return s.v0 + s.a0 * dt + s.jerk * dt * dt / 2.0;
}

double SCurve::acceleration(double t) const {
  const double tau = t - start_;
  if (segments_.empty() || tau <= 0.0 || tau >= duration_) return 0.0;
  const Segment& s = segment(tau);
  return s.a0 + s.jerk * (tau - s.t0);
}

// ------------------------------------------------------------- simulation

double fastest_dynamics_hz(const PlantModel& plant,
                           const std::vector<ChannelController>& controllers) {
  double w = 0.0;
  for (const auto& t : plant.terms) w = std::max(w, t.omega);
  for (const auto& c : controllers) w = std::max(w, c.omega_lp());
  return w / (2.0 * M_PI);
}

namespace {

double sigma_of(LoopSign s) { return s == LoopSign::kNegative ? 1.0 : -1.0; }

// Bilinear discretization of the controller written as a PI stage feeding
// the lead/low-pass stage; states [∫e, p, ṗ].
struct DiscreteController {
  Eigen::Matrix3d ad;
  Eigen::Vector3d bd;
  Eigen::RowVector3d cd;
  double dd = 0.0;
  Eigen::Vector3d x = Eigen::Vector3d::Zero();

  DiscreteController(const ChannelController& c, double h) {
    const double wl = c.omega_lp();
    Eigen::Matrix3d a;
    a << 0.0, 0.0, 0.0,
         0.0, 0.0, 1.0,
         wl * wl * c.kp * c.omega_i(), -wl * wl, -2.0 * c.z_lp * wl;
    const Eigen::Vector3d b(1.0, 0.0, wl * wl * c.kp);
    const Eigen::RowVector3d cc(0.0, 1.0, 1.0 / c.omega_d());
    const Eigen::Matrix3d m =
        (Eigen::Matrix3d::Identity() - 0.5 * h * a).inverse();
    ad = m * (Eigen::Matrix3d::Identity() + 0.5 * h * a);
    bd = m * b * h;
    cd = cc * m;
    dd = 0.5 * h * (cc * m * b)(0);
  }
  double output(double e) const { return cd.dot(x) + dd * e; }
  void advance(double e) { x = ad * x + bd * e; }
};

}  // namespace

SimulationTrace simulate_closed_loop(const PlantModel& plant,
                                     const DecouplingPair& pair,
                                     const std::vector<ChannelController>& controllers,
                                     const std::vector<Reference>& references,
                                     const SimulationOptions& options) {
  const int nch = pair.channel_count();
  if (static_cast<int>(controllers.size()) != nch) {
    throw Error(ErrorKind::kInvalidArgument,
                "need one controller per channel (" + std::to_string(nch) + ")");
  }
  if (!references.empty() && static_cast<int>(references.size()) != nch) {
    throw Error(ErrorKind::kInvalidArgument,
                "need one reference per channel or none");
  }
  const double h = options.step;
  if (!(h > 0.0) || !(options.duration > 0.0) || options.record_every < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "step, duration and record interval must be positive");
  }
  for (const auto& c : controllers) c.validate();
  const double fmax = fastest_dynamics_hz(plant, controllers);
  if (h > (1.0 + 1e-12) / (20.0 * fmax)) {
    std::ostringstream os;
    os << "step " << h << " s exceeds 1/(20 f_max) with f_max = " << fmax
       << " Hz";
    throw Error(ErrorKind::kInvalidArgument, os.str());
  }
  for (int k = 0; k < nch; ++k) {
    LoopOptions lo;
    lo.sign = options.sign;
    if (!sensitivity_peak(channel_plant(plant, pair, k), controllers[k], lo).stable) {
      throw Error(ErrorKind::kInvalidArgument,
                  "channel " + pair.channel_labels[k] + " loop is unstable");
    }
  }

  const int nt = static_cast<int>(plant.terms.size());
  Eigen::MatrixXd cq(plant.n_outputs(), nt), bq(nt, plant.n_inputs());
  std::vector<Eigen::Matrix2d> phi(nt);
  std::vector<Eigen::Vector2d> gam(nt);
  for (int k = 0; k < nt; ++k) {
    const auto& t = plant.terms[k];
    cq.col(k) = t.output;
    bq.row(k) = t.input;
    Eigen::Matrix3d aug = Eigen::Matrix3d::Zero();
    aug(0, 1) = 1.0;
    aug(1, 0) = -t.omega * t.omega;
    aug(1, 1) = -2.0 * t.zeta * t.omega;
    aug(1, 2) = 1.0;
    const Eigen::Matrix3d e = (aug * h).exp();
    phi[k] = e.topLeftCorner<2, 2>();
    gam[k] = e.block<2, 1>(0, 2);
  }
  const Eigen::MatrixXd meas = pair.t_y * cq;   // channels × coordinates
  const Eigen::MatrixXd force = bq * pair.t_u;  // coordinates × channels

  std::vector<DiscreteController> ctrl;
  for (const auto& c : controllers) ctrl.emplace_back(c, h);
  const double sigma = sigma_of(options.sign);

  const long steps = std::lround(options.duration / h);
  const long samples = (steps + options.record_every - 1) / options.record_every;
  SimulationTrace tr;
  tr.channels = pair.channel_labels;
  tr.time.resize(samples);
  tr.reference.resize(samples, nch);
  tr.measurement.resize(samples, nch);
  tr.command.resize(samples, nch);
  tr.actuator_force.resize(samples, plant.n_inputs());
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(nch);
  tr.max_error = Eigen::VectorXd::Zero(nch);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, options.noise_rms);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nt), qd = Eigen::VectorXd::Zero(nt);
  Eigen::VectorXd m(nch), r(nch), e(nch), f(nch), y(plant.n_outputs());
  for (long i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * h;
    m.noalias() = meas * q;
    if (options.noise_rms > 0.0) {
      for (int s = 0; s < y.size(); ++s) y[s] = noise(rng);
      m.noalias() += pair.t_y * y;
    }
    for (int k = 0; k < nch; ++k) {
      r[k] = references.empty() || !references[k] ? 0.0 : references[k](t);
      e[k] = r[k] - m[k];
      f[k] = sigma * ctrl[k].output(e[k]);
      sq[k] += e[k] * e[k];
      tr.max_error[k] = std::max(tr.max_error[k], std::abs(e[k]));
    }
    if (i % options.record_every == 0) {
      const long row = i / options.record_every;
      tr.time[row] = t;
      tr.reference.row(row) = r;
      tr.measurement.row(row) = m;
      tr.command.row(row) = f;
      tr.actuator_force.row(row) = pair.t_u * f;
    }
    const Eigen::VectorXd fm = force * f;
    for (int k = 0; k < nt; ++k) {
      const double q0 = q[k], v0 = qd[k];
      q[k] = phi[k](0, 0) * q0 + phi[k](0, 1) * v0 + gam[k][0] * fm[k];
      qd[k] = phi[k](1, 0) * q0 + phi[k](1, 1) * v0 + gam[k][1] * fm[k];
      if (!(std::abs(q[k]) <= options.divergence_bound) ||
          !(std::abs(qd[k]) <= options.divergence_bound)) {
        std::ostringstream os;
        os << "closed loop diverged at t = " << t + h << " s (coordinate " << k
           << ")";
        throw Error(ErrorKind::kDivergence, os.str());
      }
    }
    for (int k = 0; k < nch; ++k) ctrl[k].advance(e[k]);
  }
  tr.rms_error = (sq / static_cast<double>(std::max<long>(steps, 1))).cwiseSqrt();
  return tr;
}

Eigen::MatrixXcd closed_loop_response(const PlantModel& plant,
                                      const DecouplingPair& pair,
                                      const std::vector<ChannelController>& controllers,
                                      double omega, LoopSign sign) {
  const int nch = pair.channel_count();
  if (static_cast<int>(controllers.size()) != nch) {
    throw Error(ErrorKind::kInvalidArgument, "need one controller per channel");
  }
  const Eigen::MatrixXcd g = decoupled_response(plant, pair, omega);
  Eigen::MatrixXcd gk(nch, nch);
  for (int k = 0; k < nch; ++k) {
    gk.col(k) = g.col(k) * (sigma_of(sign) * controllers[k].response(omega));
  }
  const Eigen::MatrixXcd rd = Eigen::MatrixXcd::Identity(nch, nch) + gk;
  return rd.partialPivLu().solve(gk);
}

double sine_amplitude(const Eigen::VectorXd& time, const Eigen::VectorXd& signal,
                      double omega, double t_from) {
  std::vector<long> idx;
  for (long i = 0; i < time.size(); ++i) {
    if (time[i] >= t_from) idx.push_back(i);
  }
  if (idx.size() < 3) {
    throw Error(ErrorKind::kInvalidArgument, "too few samples for a sine fit");
  }
  const long n = static_cast<long>(idx.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (long i = 0; i < n; ++i) {
    const double t = time[idx[i]];
    a(i, 0) = std::sin(omega * t);
    a(i, 1) = std::cos(omega * t);
    a(i, 2) = 1.0;
    b[i] = signal[idx[i]];
  }
  const Eigen::Vector3d x = a.colPivHouseholderQr().solve(b);
  return std::hypot(x[0], x[1]);
}

void write_trace_csv(const std::string& path, const SimulationTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << "time_s";
  for (const auto& c : trace.channels) {
    out << ',' << c << "_reference," << c << "_measurement," << c << "_command";
  }
  for (long a = 0; a < trace.actuator_force.cols(); ++a) {
    out << ",actuator" << a << "_force";
  }
  out << '\n' << std::setprecision(12);
  for (long i = 0; i < trace.time.size(); ++i) {
    out << trace.time[i];
    for (long k = 0; k < trace.reference.cols(); ++k) {
      out << ',' << trace.reference(i, k) << ',' << trace.measurement(i, k) << ','
          << trace.command(i, k);
    }
    for (long a = 0; a < trace.actuator_force.cols(); ++a) {
      out << ',' << trace.actuator_force(i, a);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

// ---------------------------------------------------------------- reports

BodeData to_bode(const FrequencyResponse& frf) {
  const long n = frf.omega.size();
  BodeData b;
  b.frequency_hz = frf.omega / (2.0 * M_PI);
  b.magnitude_db.resize(n);
  b.phase_deg.resize(n);
  double prev = 0.0, shift = 0.0;
  for (long i = 0; i < n; ++i) {
    const Complex v = frf.values[i];
    b.magnitude_db[i] = 20.0 * std::log10(std::abs(v));
    const double p = std::arg(v) * 180.0 / M_PI;
    if (i > 0) {
      while (p + shift - prev > 180.0) shift -= 360.0;
      while (p + shift - prev < -180.0) shift += 360.0;
    }
    b.phase_deg[i] = p + shift;
    prev = b.phase_deg[i];
  }
  return b;
}

void write_bode_csv(const std::string& path, const BodeData& bode) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << "frequency_hz,magnitude_db,phase_deg\n" << std::setprecision(12);
  for (long i = 0; i < bode.frequency_hz.size(); ++i) {
    out << bode.frequency_hz[i] << ',' << bode.magnitude_db[i] << ','
        << bode.phase_deg[i] << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

void write_bode_svg(const std::string& path, const std::vector<BodeData>& curves,
                    const std::vector<std::string>& names) {
  if (curves.empty()) throw Error(ErrorKind::kInvalidArgument, "no curves");
  double f0 = 1e300, f1 = 0.0, m0 = 1e300, m1 = -1e300, p0 = 1e300, p1 = -1e300;
  for (const auto& c : curves) {
    f0 = std::min(f0, c.frequency_hz.minCoeff());
    f1 = std::max(f1, c.frequency_hz.maxCoeff());
    m0 = std::min(m0, c.magnitude_db.minCoeff());
    m1 = std::max(m1, c.magnitude_db.maxCoeff());
    p0 = std::min(p0, c.phase_deg.minCoeff());
    p1 = std::max(p1, c.phase_deg.maxCoeff());
  }
  if (m1 <= m0) m1 = m0 + 1.0;
  if (p1 <= p0) p1 = p0 + 1.0;
  const double w = 800, ph = 260, left = 70, top = 20, gap = 40;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w + left + 20
      << "\" height=\"" << 2 * ph + gap + top + 40 << "\">\n";
  auto x_of = [&](double f) {
    return left + w * (std::log10(f) - std::log10(f0)) /
                      std::max(std::log10(f1) - std::log10(f0), 1e-12);
  };
  auto panel = [&](double y0, double lo, double hi, const char* label,
                   auto&& value) {
    out << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << w
        << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#888\"/>\n";
    out << "<text x=\"5\" y=\"" << y0 + ph / 2 << "\" font-size=\"12\">" << label
        << "</text>\n";
    out << "<text x=\"" << left - 5 << "\" y=\"" << y0 + 10
        << "\" font-size=\"10\" text-anchor=\"end\">" << hi << "</text>\n";
    out << "<text x=\"" << left - 5 << "\" y=\"" << y0 + ph
        << "\" font-size=\"10\" text-anchor=\"end\">" << lo << "</text>\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
      out << "<polyline fill=\"none\" stroke=\"" << colors[c % 5]
          << "\" points=\"";
      for (long i = 0; i < curves[c].frequency_hz.size(); ++i) {
        const double y = y0 + ph * (hi - value(curves[c], i)) / (hi - lo);
        out << x_of(curves[c].frequency_hz[i]) << ',' << y << ' ';
      }
      out << "\"/>\n";
    }
  };
  out << std::setprecision(6);
  panel(top, m0, m1, "dB",
        [](const BodeData& b, long i) { return b.magnitude_db[i]; });
  panel(top + ph + gap, p0, p1, "deg",
        [](const BodeData& b, long i) { return b.phase_deg[i]; });
  const double yb = top + 2 * ph + gap + 15;
  out << "<text x=\"" << left << "\" y=\"" << yb << "\" font-size=\"10\">" << f0
      << " Hz</text>\n<text x=\"" << left + w << "\" y=\"" << yb
      << "\" font-size=\"10\" text-anchor=\"end\">" << f1 << " Hz</text>\n";
  for (std::size_t c = 0; c < names.size() && c < curves.size(); ++c) {
    out << "<text x=\"" << left + 10 + 150 * c << "\" y=\"" << yb + 15
        << "\" font-size=\"12\" fill=\"" << colors[c % 5] << "\">" << names[c]
        << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

std::vector<LoopGainRow> loop_gain_report(const std::vector<DesignLoops>& designs,
                                          const Eigen::VectorXd& grid,
                                          const std::string& dir) {
  std::vector<LoopGainRow> rows;
  for (const auto& d : designs) {
    for (std::size_t k = 0; k < d.plants.size(); ++k) {
      LoopGainRow row;
      row.design = d.name;
      row.channel = d.plants[k].label;
      if (k < d.tuning.size()) {
        const TuningResult& t = d.tuning[k];
        row.tuned = true;
        row.bandwidth_hz = t.controller.omega_bw / (2.0 * M_PI);
        row.crossover_hz = t.achieved_crossover / (2.0 * M_PI);
        row.sensitivity_peak = t.sensitivity_peak;
        row.gain_margin = t.gain_margin;
        row.phase_margin_deg = t.phase_margin_deg;
        if (!dir.empty()) {
          FrequencyResponse l{grid, Eigen::VectorXcd(grid.size())};
          for (long i = 0; i < grid.size(); ++i) {
            l.values[i] = effective_loop(d.plants[k], t.controller, grid[i], d.sign);
          }
          write_bode_csv(dir + "/" + d.name + "_" + row.channel + "_loop.csv",
                         to_bode(l));
        }
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_loop_table(const std::vector<LoopGainRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "design" << std::setw(8) << "channel"
     << std::right << std::setw(12) << "bw_hz" << std::setw(12) << "cross_hz"
     << std::setw(10) << "|S|max" << std::setw(10) << "GM" << std::setw(10)
     << "PM_deg" << '\n';
  os << std::fixed;
  for (const auto& r : rows) {
    os << std::left << std::setw(12) << r.design << std::setw(8) << r.channel
       << std::right;
    if (!r.tuned) {
      os << std::setw(12) << "missing" << '\n';
      continue;
    }
    os << std::setprecision(2) << std::setw(12) << r.bandwidth_hz << std::setw(12)
       << r.crossover_hz << std::setprecision(3) << std::setw(10)
       << r.sensitivity_peak << std::setw(10) << r.gain_margin
       << std::setprecision(1) << std::setw(10) << r.phase_margin_deg << '\n';
  }
  return os.str();
}

}  // namespace flexstage
