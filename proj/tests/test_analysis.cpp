#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/Dense>

#include "flexstage/analysis.hpp"
#include "flexstage/error.hpp"

using namespace flexstage;
namespace fs = std::filesystem;

namespace {

struct Loop {
  PlantModel plant;
  DecouplingPair pair;
  std::vector<ChannelPlant> channels;
  std::vector<ChannelController> controllers;
};

const Loop& stage_loop() {
  static const Loop loop = [] {
    RibbedStageOptions o;
    o.nx = o.ny = 10;
    const ModalModel m = analyze_geometry(make_ribbed_stage(o), Material{}, 8);
    Loop l;
    l.plant = assemble_plant(m, default_placement(m.geometry), 1);
    l.pair = decoupling_matrices(l.plant);
    for (int k = 0; k < l.pair.channel_count(); ++k) {
      l.channels.push_back(channel_plant(l.plant, l.pair, k));
    }
    for (const auto& t : tune_channels(l.channels)) l.controllers.push_back(t.controller);
    return l;
  }();
  return loop;
}

SimulationOptions options_for(const Loop& l, double duration) {
  SimulationOptions o;
  o.step = 1.0 / (40.0 * fastest_dynamics_hz(l.plant, l.controllers));
  o.duration = duration;
  o.record_every = 4;
  return o;
}

std::vector<Reference> only(int channel, Reference r, int n = 7) {
  std::vector<Reference> refs(n);
  refs[channel] = std::move(r);
  return refs;
}

}  // namespace

TEST(Acceleration, ForceOverMass) {
  EXPECT_DOUBLE_EQ(acceleration_capability(2.0, 10.0), 5.0);
  EXPECT_NEAR(acceleration_capability(1.68, 40.0) / acceleration_capability(2.21, 40.0),
              2.21 / 1.68, 1e-12);
  EXPECT_THROW(acceleration_capability(0.0, 1.0), Error);
}

TEST(SCurve, EndpointsLimitsAndContinuity) {
  const SCurve s(0.02, 0.2, 10.0, 2000.0, 0.01);
  EXPECT_EQ(s.position(0.0), 0.0);
  EXPECT_EQ(s.position(0.01), 0.0);
  const double end = s.start_time() + s.duration();
  EXPECT_NEAR(s.position(end), 0.02, 1e-12);
  EXPECT_NEAR(s.position(end + 1.0), 0.02, 1e-12);
  EXPECT_NEAR(s.velocity(end + 1.0), 0.0, 1e-12);
  const double h = 1e-6;
  double vmax = 0.0, amax = 0.0;
  for (double t = 0.0; t < end + 0.01; t += h * 37) {
    const double v = s.velocity(t), a = s.acceleration(t);
    vmax = std::max(vmax, std::abs(v));
    amax = std::max(amax, std::abs(a));
    // Position and velocity are consistent derivatives.
    EXPECT_NEAR((s.position(t + h) - s.position(t - h)) / (2 * h), v, 1e-6);
    EXPECT_NEAR((s.velocity(t + h) - s.velocity(t - h)) / (2 * h), a, 2000.0 * h * 2);
    ASSERT_GE(v, -1e-12);
  }
  EXPECT_LE(vmax, 0.2 + 1e-12);
  EXPECT_LE(amax, 10.0 + 1e-9);
  EXPECT_NEAR(vmax, s.peak_velocity(), 1e-4);
}

TEST(SCurve, ShortMoveLowersPeaks) {
  const SCurve s(1e-5, 1.0, 10.0, 1000.0);
  EXPECT_LT(s.peak_velocity(), 1.0);
  EXPECT_LT(s.peak_acceleration(), 10.0);
  EXPECT_NEAR(s.position(s.duration()), 1e-5, 1e-15);
  const SCurve back(-0.01, 0.1, 5.0, 500.0);
  EXPECT_NEAR(back.position(back.duration()), -0.01, 1e-12);
}

TEST(Simulation, ZeroReferenceStaysAtRest) {
  const Loop& l = stage_loop();
  const SimulationTrace t =
      simulate_closed_loop(l.plant, l.pair, l.controllers, {}, options_for(l, 0.02));
  EXPECT_EQ(t.measurement.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(t.actuator_force.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(t.channels, l.pair.channel_labels);
}

TEST(Simulation, RigidStepSettles) {
  const Loop& l = stage_loop();
  // Uncontrolled modes are only regulated through residual coupling, so the
  // tail decays at their own ζω rather than the loop bandwidth.
  const double settle = 1.0;
  SimulationOptions o = options_for(l, 1.3);
  o.record_every = 20;
  const SimulationTrace t = simulate_closed_loop(
      l.plant, l.pair, l.controllers, only(0, [](double) { return 1e-3; }), o);
  double tail = 0.0;
  for (Eigen::Index k = 0; k < t.time.size(); ++k) {
    if (t.time[k] >= settle) tail = std::max(tail, std::abs(t.measurement(k, 0) - 1e-3));
  }
  EXPECT_LT(tail, 1e-3 * 1e-3);
  EXPECT_NEAR(t.max_error[0], 1e-3, 1e-12);  // initial jump
}

TEST(Simulation, SineMatchesFrequencyDomain) {
  const Loop& l = stage_loop();
  for (int ch : {1, 6}) {
    const double w = 0.6 * l.controllers[ch].omega_bw;
    double slowest = INFINITY;
    for (const auto& t : l.plant.terms) {
      if (t.omega > 0.0) slowest = std::min(slowest, t.zeta * t.omega);
    }
    const double settle = 10.0 / slowest;
    // The sampled loop lags by half a step; keep that well below the margins.
    SimulationOptions o = options_for(l, settle + 0.3);
    o.step /= 10.0;
    o.record_every = 10;
    const SimulationTrace t = simulate_closed_loop(
        l.plant, l.pair, l.controllers, only(ch, [w](double s) { return 1e-4 * std::sin(w * s); }), o);
    const double sim = sine_amplitude(t.time, t.measurement.col(ch), w, settle) / 1e-4;
    const double fd = std::abs(closed_loop_response(l.plant, l.pair, l.controllers, w)(ch, ch));
    EXPECT_NEAR(sim, fd, 0.01 * fd) << l.pair.channel_labels[ch];
  }
}

TEST(Simulation, StepRefinementConverges) {
  const Loop& l = stage_loop();
  const SCurve s(1e-3, 0.05, 5.0, 500.0, 0.005);
  const auto refs = only(1, [&](double t) { return s.position(t); });
  SimulationOptions a = options_for(l, 0.08);
  SimulationOptions b = a;
  b.step = a.step / 2;
  b.record_every = 2 * a.record_every;
  const double ra = simulate_closed_loop(l.plant, l.pair, l.controllers, refs, a).rms_error[1];
  const double rb = simulate_closed_loop(l.plant, l.pair, l.controllers, refs, b).rms_error[1];
  EXPECT_GT(ra, 0.0);
  EXPECT_LT(std::abs(ra - rb) / rb, 0.005);
}

TEST(Simulation, ParallelSignConventionsAgree) {
  const Loop& l = stage_loop();
  std::vector<ChannelController> flipped = l.controllers;
  for (auto& c : flipped) c.kp = -c.kp;
  SimulationOptions a = options_for(l, 0.03);
  SimulationOptions b = a;
  b.sign = LoopSign::kPaper;
  const auto refs = only(2, [](double t) { return 1e-4 * std::min(t / 0.01, 1.0); });
  const SimulationTrace ta = simulate_closed_loop(l.plant, l.pair, l.controllers, refs, a);
  const SimulationTrace tb = simulate_closed_loop(l.plant, l.pair, flipped, refs, b);
  EXPECT_LT((ta.measurement - tb.measurement).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Simulation, DivergenceReported) {
  const Loop& l = stage_loop();
  SimulationOptions o = options_for(l, 0.01);
  o.divergence_bound = 1e-9;
  try {
    simulate_closed_loop(l.plant, l.pair, l.controllers, only(0, [](double) { return 1e-3; }), o);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDivergence);
  }
}

TEST(Simulation, CoarseStepAndUnstableLoopRejected) {
  const Loop& l = stage_loop();
  SimulationOptions o = options_for(l, 0.01);
  o.step = 1.0 / (10.0 * fastest_dynamics_hz(l.plant, l.controllers));
  EXPECT_THROW(simulate_closed_loop(l.plant, l.pair, l.controllers, {}, o), Error);
  std::vector<ChannelController> hot = l.controllers;
  hot[0].kp *= 200.0;
  o = options_for(l, 0.01);
  EXPECT_THROW(simulate_closed_loop(l.plant, l.pair, hot, {}, o), Error);
}

TEST(Simulation, TraceCsvHeader) {
  const Loop& l = stage_loop();
  const SimulationTrace t =
      simulate_closed_loop(l.plant, l.pair, l.controllers, {}, options_for(l, 0.002));
  const fs::path p = fs::temp_directory_path() / "flexstage_trace.csv";
  write_trace_csv(p.string(), t);
  std::ifstream is(p);
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header.rfind("time_s,x_reference,x_measurement,x_command,y_reference", 0), 0u);
  EXPECT_NE(header.find("flex1_command,actuator0_force"), std::string::npos);
  int rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  EXPECT_EQ(rows, t.time.size());
}

TEST(ClosedLoop, SensitivityPlusComplementIsIdentity) {
  const Loop& l = stage_loop();
  const double w = 2.0 * M_PI * 33.0;
  const Eigen::MatrixXcd t = closed_loop_response(l.plant, l.pair, l.controllers, w);
  const Eigen::MatrixXcd g = decoupled_response(l.plant, l.pair, w);
  Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(7, 7);
  for (int i = 0; i < 7; ++i) k(i, i) = l.controllers[i].response(w);
  const Eigen::MatrixXcd s =
      (Eigen::MatrixXcd::Identity(7, 7) + g * k).inverse();
  EXPECT_LT((s + t - Eigen::MatrixXcd::Identity(7, 7)).norm(), 1e-9);
  // Diagonal dominance: the decoupled loop behaves like the SISO one.
  const Complex siso = effective_loop(l.channels[0], l.controllers[0], w);
  EXPECT_NEAR(std::abs(t(0, 0) - siso / (1.0 + siso)), 0.0, 1e-3);
}

TEST(SineFit, RecoversAmplitude) {
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(5001, 0.0, 1.0);
  Eigen::VectorXd y = (0.3 * (40.0 * t.array()).sin() + 0.4 * (40.0 * t.array()).cos() + 2.0).matrix();
  EXPECT_NEAR(sine_amplitude(t, y, 40.0, 0.2), 0.5, 1e-12);
}

TEST(Bode, UnwrappedPhaseIsContinuous) {
  FrequencyResponse f;
  f.omega = log_grid(1.0, 1e4, 100);
  f.values.resize(f.omega.size());
  // Four poles at 100 rad/s: phase runs to −360°.
  for (int i = 0; i < f.omega.size(); ++i) {
    f.values[i] = std::pow(1.0 / (Complex(0.0, f.omega[i] / 100.0) + 1.0), 4);
  }
  const BodeData b = to_bode(f);
  EXPECT_NEAR(b.magnitude_db[0], -80.0 * std::log10(std::hypot(1.0, 0.01)), 1e-12);
  EXPECT_NEAR(b.phase_deg[b.phase_deg.size() - 1], -360.0, 3.0);
  for (int i = 1; i < b.phase_deg.size(); ++i) {
    EXPECT_LT(std::abs(b.phase_deg[i] - b.phase_deg[i - 1]), 10.0);
  }
  EXPECT_NEAR(b.frequency_hz[0], 1.0 / (2.0 * M_PI), 1e-15);
}

TEST(LoopTable, MissingChannelReported) {
  const Loop& l = stage_loop();
  DesignLoops d{"demo", l.channels, {tune_channel(l.channels[0])}, LoopSign::kNegative};
  const fs::path dir = fs::temp_directory_path() / "flexstage_loops";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto rows = loop_gain_report({d}, log_grid(1.0, 1e4, 20), dir.string());
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_TRUE(rows[0].tuned);
  EXPECT_FALSE(rows[1].tuned);
  EXPECT_TRUE(fs::exists(dir / "demo_x_loop.csv"));
  EXPECT_FALSE(fs::exists(dir / "demo_y_loop.csv"));
  EXPECT_NE(format_loop_table(rows).find("missing"), std::string::npos);
}
