#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flexstage/modal.hpp"
#include "flexstage/placement.hpp"

namespace flexstage {

using Complex = std::complex<double>;

/// Channel labels in order: six rigid DOFs, then controlled flexible modes.
std::vector<std::string> channel_labels(int n_controlled);

struct ModalTerm {
  double omega = 0.0;  // rad/s, 0 for rigid coordinates
  double zeta = 0.0;
  Eigen::VectorXd output;    // C_s φ, one entry per sensor
  Eigen::RowVectorXd input;  // φᵀ B_a, one entry per actuator
};

/// MIMO plant u → y as a sum of modal terms. Coordinates follow the channel
/// order [x, y, z, Rx, Ry, Rz, flexible...]; rigid ones are double
/// integrators in mass-normalized units.
struct PlantModel {
  RigidBodyProperties rigid;
  std::vector<ModalTerm> terms;  // kRigidDofs rigid terms, then flexible
  Eigen::MatrixXd input_map;     // B (modal coordinates × actuators)
  Eigen::MatrixXd output_map;    // C (sensors × modal coordinates)
  int n_controlled = 1;

  int n_inputs() const { return static_cast<int>(input_map.cols()); }
  int n_outputs() const { return static_cast<int>(output_map.rows()); }
  int flexible_count() const {
    return static_cast<int>(terms.size()) - kRigidDofs;
  }

  /// Modal state-space (A, B, C): per coordinate the state (q, q̇),
  /// A block = [[0, 1], [−ω², −2ζω]].
  Eigen::MatrixXd a() const;
  Eigen::MatrixXd b() const;
  Eigen::MatrixXd c() const;

  /// Σ (Cφ)(φᵀB) / (s² + 2ζωs + ω²) at s = jω, ω > 0.
  Eigen::MatrixXcd response(double omega) const;
  /// C (jωI − A)⁻¹ B.
  Eigen::MatrixXcd response_state_space(double omega) const;
};

/// Throws Error(kRankDeficient) when the actuators cannot drive all six
/// rigid DOFs, and Error(kInvalidArgument) for an invalid placement.
PlantModel assemble_plant(const ModalModel& model,
                          const PlacementConfig& placement, int n_controlled);

/// Moore–Penrose inverse; singular values below rel_tol·σ_max are dropped.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double rel_tol = 1e-10);

struct DecouplingPair {
  Eigen::MatrixXd t_u;  // channel commands → actuator commands
  Eigen::MatrixXd t_y;  // sensor readings → channel coordinates
  std::vector<std::string> channel_labels;
  std::vector<int> selection;  // plant coordinate index of every channel

  int channel_count() const { return static_cast<int>(selection.size()); }
};

/// T_y = pinv(C_s Φ_sel), T_u = pinv(Φ_selᵀ B_a) for the rigid coordinates
/// plus the listed flexible modes (default: the first n_controlled).
/// Throws Error(kRankDeficient) with the singular values when either
/// selected map loses rank.
DecouplingPair decoupling_matrices(const PlantModel& plant,
                                   std::vector<int> controlled_modes = {});

/// SISO channel transfer r_rigid/s² + Σ r_i/(s² + 2ζ_iω_i s + ω_i²).
struct ChannelPlant {
  struct Term {
    double omega = 0.0;
    double zeta = 0.0;
    double residue = 0.0;
  };
  std::string label;
  double rigid_residue = 0.0;
  std::vector<Term> modes;

  Complex response(double omega) const;
  /// Poles at the origin (2 with a rigid path, else 0).
  int origin_poles() const { return rigid_residue != 0.0 ? 2 : 0; }
  /// Modal (A, B, C) realization, rigid block first.
  void state_space(Eigen::MatrixXd& a, Eigen::VectorXd& b,
                   Eigen::RowVectorXd& c) const;
};

/// Pure double integrator 1/(m s²).
ChannelPlant double_integrator(double mass);

/// Diagonal entry k of T_y P T_u as a modal sum. Residues below 1e-10 of
/// the channel's largest term are exactly zero (decoupled paths).
ChannelPlant channel_plant(const PlantModel& plant, const DecouplingPair& pair,
                           int channel);

/// Full decoupled transfer matrix T_y P(jω) T_u.
Eigen::MatrixXcd decoupled_response(const PlantModel& plant,
                                    const DecouplingPair& pair, double omega);

/// Logarithmic grid, `per_decade` points per decade including both ends.
Eigen::VectorXd log_grid(double lo, double hi, int per_decade);
/// 400 points/decade over 0.1 Hz – 2 kHz, in rad/s.
Eigen::VectorXd default_grid();

struct FrequencyResponse {
  Eigen::VectorXd omega;  // rad/s, strictly increasing
  Eigen::VectorXcd values;
};

FrequencyResponse frequency_response(const ChannelPlant& plant,
                                     const Eigen::VectorXd& grid);
/// Entry (row, col) of the MIMO plant, modal closed form.
FrequencyResponse frequency_response(const PlantModel& plant, int row, int col,
                                     const Eigen::VectorXd& grid);
FrequencyResponse frequency_response_state_space(const PlantModel& plant,
                                                 int row, int col,
                                                 const Eigen::VectorXd& grid);

/// All MIMO entries at every grid point, parallel over the grid.
std::vector<Eigen::MatrixXcd> plant_response(const PlantModel& plant,
                                             const Eigen::VectorXd& grid);
std::vector<Eigen::MatrixXcd> plant_response_serial(const PlantModel& plant,
                                                    const Eigen::VectorXd& grid);

/// CSV columns frequency_hz,re,im at full double precision.
void write_frf_csv(const std::string& path, const FrequencyResponse& frf);
/// Throws Error(kIo) naming the offending line.
FrequencyResponse read_frf_csv(const std::string& path);

}  // namespace flexstage
