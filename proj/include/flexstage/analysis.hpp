#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flexstage/control.hpp"
#include "flexstage/plant.hpp"

namespace flexstage {

/// a = F / m. Throws Error(kInvalidArgument) for m ≤ 0.
double acceleration_capability(double mass, double force);

/// Jerk-limited point-to-point profile (7 segments, symmetric). Peak
/// velocity and acceleration are lowered when the distance is too short to
/// reach them.
class SCurve {
 public:
  SCurve(double distance, double v_max, double a_max, double j_max,
         double start_time = 0.0);

  double position(double t) const;
  double velocity(double t) const;
  double acceleration(double t) const;
  double duration() const { return duration_; }
  double start_time() const { return start_; }
  double peak_velocity() const { return v_peak_; }
  double peak_acceleration() const { return a_peak_; }

 private:
  struct Segment {
    double t0, jerk, p0, v0, a0;
  };
  const Segment& segment(double tau) const;
  double distance_, start_, duration_ = 0.0, v_peak_ = 0.0, a_peak_ = 0.0;
  std::vector<Segment> segments_;
};

using Reference = std::function<double(double)>;

struct SimulationOptions {
  double step = 1e-5;      // s
  double duration = 0.1;   // s
  int record_every = 1;
  double divergence_bound = 1e6;  // on any modal coordinate
  double noise_rms = 0.0;         // sensor noise, sensor units
  unsigned seed = 1;
  LoopSign sign = LoopSign::kNegative;
};

/// Samples every `record_every` steps; per-channel matrices are
/// samples × channels, actuator forces samples × actuators.
struct SimulationTrace {
  std::vector<std::string> channels;
  Eigen::VectorXd time;
  Eigen::MatrixXd reference;
  Eigen::MatrixXd measurement;
  Eigen::MatrixXd command;
  Eigen::MatrixXd actuator_force;
  Eigen::VectorXd rms_error;  // over every step, not only recorded ones
  Eigen::VectorXd max_error;
};

/// Fastest continuous dynamics in the loop, Hz: largest plant mode or
/// controller low-pass corner.
double fastest_dynamics_hz(const PlantModel& plant,
                           const std::vector<ChannelController>& controllers);

/// Closed loop of the MIMO modal plant with the decoupled SISO controllers.
/// Plant blocks use their exact zero-order-hold discretization, controllers
/// the bilinear transform. References are per channel (empty = zero).
/// Throws Error(kInvalidArgument) when the step exceeds 1/(20·f_max) or a
/// channel loop is unstable, Error(kDivergence) when a state leaves the
/// bound.
SimulationTrace simulate_closed_loop(const PlantModel& plant,
                                     const DecouplingPair& pair,
                                     const std::vector<ChannelController>& controllers,
                                     const std::vector<Reference>& references,
                                     const SimulationOptions& options);

/// Reference-to-measurement closed loop (I + σ G K)⁻¹ σ G K at ω, with
/// G = T_y P T_u and K = diag(C_k).
Eigen::MatrixXcd closed_loop_response(const PlantModel& plant,
                                      const DecouplingPair& pair,
                                      const std::vector<ChannelController>& controllers,
                                      double omega,
                                      LoopSign sign = LoopSign::kNegative);

/// Least-squares amplitude of a·sin(ωt) + b·cos(ωt) + c on samples with
/// t ≥ t_from.
double sine_amplitude(const Eigen::VectorXd& time, const Eigen::VectorXd& signal,
                      double omega, double t_from);

void write_trace_csv(const std::string& path, const SimulationTrace& trace);

/// One row of the loop-gain comparison table.
struct LoopGainRow {
  std::string design;
  std::string channel;
  bool tuned = false;
  double bandwidth_hz = 0.0;
  double crossover_hz = 0.0;
  double sensitivity_peak = 0.0;
  double gain_margin = 0.0;
  double phase_margin_deg = 0.0;
};

struct DesignLoops {
  std::string name;
  std::vector<ChannelPlant> plants;
  std::vector<TuningResult> tuning;  // may be shorter: missing = untuned
  LoopSign sign = LoopSign::kNegative;
};

/// Writes <dir>/<design>_<channel>_loop.csv (frequency_hz, magnitude_db,
/// phase_deg) for every tuned channel and returns the comparison table.
std::vector<LoopGainRow> loop_gain_report(const std::vector<DesignLoops>& designs,
                                          const Eigen::VectorXd& grid,
                                          const std::string& dir);

std::string format_loop_table(const std::vector<LoopGainRow>& rows);

/// Magnitude in dB and continuously unwrapped phase in degrees.
struct BodeData {
  Eigen::VectorXd frequency_hz;
  Eigen::VectorXd magnitude_db;
  Eigen::VectorXd phase_deg;
};

BodeData to_bode(const FrequencyResponse& frf);
void write_bode_csv(const std::string& path, const BodeData& bode);
/// Minimal two-panel SVG plot.
void write_bode_svg(const std::string& path, const std::vector<BodeData>& curves,
                    const std::vector<std::string>& names);

}  // namespace flexstage
