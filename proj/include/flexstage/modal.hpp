#pragma once

#include <vector>

#include <Eigen/Core>

#include "flexstage/eigensolver.hpp"
#include "flexstage/geometry.hpp"
#include "flexstage/plate_fe.hpp"

namespace flexstage {

/// Modes with ω below this (rad/s) are classified as rigid.
inline constexpr double kRigidModeThreshold = 1.0;
/// Out-of-plane rigid modes of a free-free bending plate (z, Rx, Ry).
inline constexpr int kOutOfPlaneRigidModes = 3;
/// Rigid-body channels: x, y, z, Rx, Ry, Rz.
inline constexpr int kRigidDofs = 6;

/// Modal damping assignment. Entries of `per_mode` override the uniform
/// value for the first flexible modes.
struct DampingPolicy {
  double uniform_zeta = 0.005;
  std::vector<double> per_mode;

  double zeta(int flexible_index) const;
};

struct Mode {
  double omega = 0.0;  // rad/s
  double zeta = 0.0;
  Eigen::VectorXd shape;  // mass-normalized nodal DOF vector
};

/// Rigid-body inertia about the centre of mass. The two tilt modes use the
/// principal axes of the in-plane second moment, `tilt_axes` holding their
/// directions as columns.
struct RigidBodyProperties {
  double mass = 0.0;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double ixx = 0.0;
  double iyy = 0.0;
  double ixy = 0.0;
  double izz = 0.0;
  Eigen::Matrix2d tilt_axes = Eigen::Matrix2d::Identity();
};

/// Immutable result of a modal analysis. `modes` holds the out-of-plane
/// rigid modes (heave, roll, pitch) first, then flexible modes by ascending
/// frequency.
struct ModalModel {
  StageGeometry geometry;
  std::vector<Mode> modes;
  int rigid_count = 0;
  int n_controlled = 1;
  int n_retained = 0;  // flexible modes retained
  double total_mass = 0.0;
  RigidBodyProperties rigid_body;

  int flexible_count() const {
    return static_cast<int>(modes.size()) - rigid_count;
  }
  const Mode& flexible(int i) const { return modes.at(rigid_count + i); }
  Eigen::VectorXd flexible_omegas() const;
};

/// Solves K φ = ω² M φ for the `count` smallest pairs. Rigid modes are
/// replaced by labelled heave/roll/pitch shapes spanning the same subspace.
/// Throws Error(kEigensolver) on failure and if the rigid count is not 3.
ModalModel solve_modes(const PlateSystem& system,
                       const StageGeometry& geometry, int count,
                       const DampingPolicy& damping,
                       const SubspaceOptions& options = {});

/// build_model + solve_modes.
ModalModel analyze_geometry(const StageGeometry& geometry,
                            const Material& material, int count,
                            const DampingPolicy& damping = {},
                            const SubspaceOptions& options = {});

/// A point on (or at height z above the mid-plane of) the plate.
struct Probe {
  Eigen::Vector3d location = Eigen::Vector3d::Zero();   // m
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();  // unit
};

/// Modal displacement of `model.modes[mode_index]` at a probe, using
/// Kirchhoff kinematics (u, v, w) = (−z ∂w/∂x, −z ∂w/∂y, w).
/// Throws Error(kInvalidArgument) when the point is off the plate.
double eval_shape_at(const ModalModel& model, int mode_index,
                     const Probe& probe);

/// Displacement of every modal coordinate at a probe, in channel order
/// [x, y, z, Rx, Ry, Rz, flexible 1..k].
Eigen::VectorXd modal_row(const ModalModel& model, const Probe& probe);

}  // namespace flexstage
