#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "flexstage/modal.hpp"

namespace flexstage {

/// Images generated from a group's base location, mirrored about the plate
/// centre lines. Mirroring also reflects the direction vector.
enum class Symmetry { kNone, kMirrorX, kMirrorY, kQuad };

struct Rect {
  Eigen::Vector2d lo = Eigen::Vector2d::Zero();
  Eigen::Vector2d hi = Eigen::Vector2d::Zero();

  bool contains(const Eigen::Vector2d& p) const;
};

/// A set of identical actuators or sensors placed by one base location.
struct TransducerGroup {
  std::string name;
  Eigen::Vector2d location = Eigen::Vector2d::Zero();  // m
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
  double height = 0.0;  // m above the mid-plane
  double gain = 1.0;    // force authority (N per command) or sensor gain
  Symmetry symmetry = Symmetry::kNone;
  Rect domain;

  /// Probes of every image in a fixed order (base first).
  std::vector<Probe> expand(const StageGeometry& geometry) const;
  /// Same group moved to a new base location.
  TransducerGroup at(const Eigen::Vector2d& p) const;
};

struct PlacementConfig {
  std::vector<TransducerGroup> actuators;
  std::vector<TransducerGroup> sensors;
  double gamma = 1.0;

  int actuator_count() const;
  int sensor_count() const;
  /// Locations inside domains and plate; counts ≥ 6 + n_controlled.
  void validate(const StageGeometry& geometry, int n_controlled) const;
};

/// B_a: columns are actuators, rows are modal coordinates in channel order
/// [x, y, z, Rx, Ry, Rz, flexible...].
Eigen::MatrixXd actuation_map(const ModalModel& model,
                              const std::vector<TransducerGroup>& actuators);
/// C_s: rows are sensors, columns modal coordinates in the same order.
Eigen::MatrixXd sensing_map(const ModalModel& model,
                            const std::vector<TransducerGroup>& sensors);

/// ‖φ_iᵀ B_a‖² / (4 ζ_i ω_i) for a mode and its sampled input row.
double controllability_grammian(const Mode& mode,
                                const Eigen::Ref<const Eigen::RowVectorXd>& input_row);
/// ‖C_s φ_i‖² / (4 ζ_i ω_i).
double observability_grammian(const Mode& mode,
                              const Eigen::Ref<const Eigen::VectorXd>& output_column);

double controllability_grammian(const ModalModel& model, int flexible_index,
                                const std::vector<TransducerGroup>& actuators);
double observability_grammian(const ModalModel& model, int flexible_index,
                              const std::vector<TransducerGroup>& sensors);

/// Σ_{i≤n} W_i − γ Σ_{n<i≤m} W_i over flexible modes.
double actuator_objective(const ModalModel& model,
                          const std::vector<TransducerGroup>& actuators, int n,
                          int m, double gamma);
double sensor_objective(const ModalModel& model,
                        const std::vector<TransducerGroup>& sensors, int n,
                        int m, double gamma);

/// Objective contribution of one group on a res × res grid over its domain.
/// Points are in scan order: y outer, x inner.
struct GroupLandscape {
  std::string group;
  bool actuator = true;
  std::vector<Eigen::Vector2d> points;
  Eigen::VectorXd objective;
  int argmax = 0;  // first maximum in scan order
};

std::vector<Eigen::Vector2d> domain_grid(const Rect& domain, int resolution);

GroupLandscape group_landscape(const ModalModel& model,
                               const TransducerGroup& group, bool actuator,
                               int n, int m, double gamma, int resolution);
GroupLandscape group_landscape_serial(const ModalModel& model,
                                      const TransducerGroup& group,
                                      bool actuator, int n, int m,
                                      double gamma, int resolution);

struct PlacementResult {
  PlacementConfig config;
  double actuator_objective = 0.0;
  double sensor_objective = 0.0;
  std::vector<GroupLandscape> landscapes;
};

/// Grid argmax of the actuator and sensor objectives, solved as two
/// independent programs. The objectives are sums over transducers, so each
/// group is maximized on its own grid. Ties go to the first point in scan
/// order. Throws Error(kInfeasible) if the objective vanishes on the whole
/// grid of a group.
PlacementResult optimize_placement(const ModalModel& model,
                                   const PlacementConfig& initial, int n,
                                   int m, int resolution);

/// CSV with columns kind,group,x_m,y_m,objective.
void write_landscape_csv(const std::string& path,
                         const std::vector<GroupLandscape>& landscapes);

/// Corner-stator layout: a vertical forcer under each magnet array, in-plane
/// forcers pushing y on the +x side and x on the −x side, four vertical
/// probes near the corners, two x lasers and one y laser.
PlacementConfig default_placement(const StageGeometry& geometry);

}  // namespace flexstage
