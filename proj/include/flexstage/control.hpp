#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "flexstage/plant.hpp"

namespace flexstage {

/// Numerator and denominator coefficients in descending powers of s.
struct RationalTf {
  std::vector<double> num;
  std::vector<double> den;

  Complex eval(Complex s) const;
};

/// C(s) = K_p · (s + ω_I)/s · (s/ω_d + 1) · ω_lp² / (s² + 2 z_lp ω_lp s + ω_lp²)
/// with ω_I = ω_bw/α², ω_d = ω_bw/α, ω_lp = α ω_bw. The integrator corner
/// is ω_I here, not a modal frequency.
struct ChannelController {
  double kp = 0.0;
  double omega_bw = 0.0;  // rad/s
  double alpha = 3.0;
  double z_lp = 0.7;

  double omega_i() const { return omega_bw / (alpha * alpha); }
  double omega_d() const { return omega_bw / alpha; }
  double omega_lp() const { return alpha * omega_bw; }

  void validate() const;
  Complex response(double omega) const;
  /// Same transfer expanded into polynomial coefficients.
  RationalTf rational() const;
};

ChannelController make_controller(double omega_bw, double alpha = 3.0,
                                  double z_lp = 0.7, double kp = 1.0);

FrequencyResponse controller_frf(const ChannelController& controller,
                                 const Eigen::VectorXd& grid);

/// kNegative: S = 1/(1 + GC). kPaper: S = 1/(1 − GC), as the robustness
/// bound is written in the source; the tuner then flips the sign of K_p so
/// the loop is the same negative-feedback loop.
enum class LoopSign { kNegative, kPaper };

struct LoopOptions {
  LoopSign sign = LoopSign::kNegative;
  int per_decade = 200;
  int max_doublings = 6;
};

/// Loop transfer as seen by the return difference: S = 1/(1 + L_eff).
Complex effective_loop(const ChannelPlant& plant,
                       const ChannelController& controller, double omega,
                       LoopSign sign = LoopSign::kNegative);

struct SensitivityResult {
  double peak = 0.0;  // +inf when unstable
  double omega_peak = 0.0;
  bool stable = false;
  int unstable_poles = 0;
  int grid_points = 0;
};

/// ‖S‖∞ on a logarithmic grid spanning every loop corner and resonance by
/// three decades, refined by golden section around the grid maximum. The
/// closed loop is first checked by a Nyquist count: with p open-loop poles
/// at the origin (indented on the right) and none in the right half plane,
/// Z = p/2 − Δ/π − c/π where Δ is the phase change of 1 + L along the
/// positive imaginary axis and c the small-ω phase offset from the
/// asymptote. The grid is doubled until Z repeats.
SensitivityResult sensitivity_peak(const ChannelPlant& plant,
                                   const ChannelController& controller,
                                   const LoopOptions& options = {});

struct Margins {
  double gain_margin = 0.0;        // upward, +inf without phase crossing
  double omega_phase_cross = 0.0;  // where the gain margin is read
  double lower_gain_margin = 0.0;  // downward factor (< 1), 0 if none
  /// Minimum over gain crossings of the angular distance from −180°.
  double phase_margin_deg = 0.0;
  /// Downward gain crossing nearest to ω_bw (log scale).
  double omega_gain_cross = 0.0;
};

/// Classical margins from gain and phase crossings on a dense grid, each
/// crossing refined by bisection.
Margins stability_margins(const ChannelPlant& plant,
                          const ChannelController& controller,
                          const LoopOptions& options = {});

/// K_p placing |L(jω_bw)| = 1 for the given shape parameters.
double crossover_gain(const ChannelPlant& plant, double omega_bw, double alpha,
                      double z_lp, LoopSign sign = LoopSign::kNegative);

struct TuningOptions {
  double alpha = 3.0;
  double z_lp = 0.7;
  double omega_min = 2.0 * M_PI * 1.0;     // rad/s
  double omega_max = 2.0 * M_PI * 2000.0;  // rad/s
  double scan_factor = 1.02;
  double resolution = 0.005;  // relative bisection width
  double peak_bound = 2.0;
  LoopOptions loop;
};

struct TuningResult {
  std::string label;
  ChannelController controller;
  double achieved_crossover = 0.0;  // rad/s
  double sensitivity_peak = 0.0;
  double omega_peak = 0.0;
  double gain_margin = 0.0;
  double lower_gain_margin = 0.0;
  double phase_margin_deg = 0.0;
  bool feasible = false;
  int evaluations = 0;
  std::string report;
};

/// Largest ω_bw in the search range whose crossover-normalized loop is
/// stable with ‖S‖∞ ≤ bound: a geometric scan over the range, then
/// bisection between the highest feasible scan point and its infeasible
/// neighbour. When nothing is feasible the least-peaked attempt is returned
/// with feasible = false.
TuningResult tune_channel(const ChannelPlant& plant,
                          const TuningOptions& options = {});

/// Independent channels tuned in parallel; identical to the serial result.
std::vector<TuningResult> tune_channels(const std::vector<ChannelPlant>& plants,
                                        const TuningOptions& options = {});
std::vector<TuningResult> tune_channels_serial(
    const std::vector<ChannelPlant>& plants, const TuningOptions& options = {});

}  // namespace flexstage
