#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "flexstage/analysis.hpp"
#include "flexstage/control.hpp"
#include "flexstage/geometry.hpp"
#include "flexstage/placement.hpp"
#include "flexstage/structure_opt.hpp"

namespace flexstage {

enum class DesignKind { kProposed, kBaseline };

/// Per-group changes applied to the default transducer layout.
struct GroupOverride {
  std::string name;
  std::optional<Eigen::Vector2d> location;  // m, plate frame
  std::optional<Rect> domain;
  std::optional<double> gain;
};

/// Jerk-limited move on a translational channel (x, y or z).
struct TrajectoryConfig {
  std::string name;
  std::string channel;
  double distance = 0.0;      // m
  double velocity = 0.0;      // m/s
  double acceleration = 0.0;  // m/s²
  double jerk = 0.0;          // m/s³
  double start = 0.0;         // s
  double duration = 0.0;      // s, simulated span
};

/// Everything a pipeline run needs. SI units throughout; the text format
/// carries unit-suffixed keys (see configs/README.md).
struct ProjectConfig {
  std::string name = "design";
  std::uint64_t seed = 1;

  RibbedStageOptions geometry;
  Material material;
  double damping_ratio = 0.005;
  int retained_flexible = 16;

  DesignKind kind = DesignKind::kProposed;
  FrequencyConstraintSpec constraints{2.0 * M_PI * 50.0, 2.0 * M_PI * 560.0, 1, 3};
  double min_first_resonance = 2.0 * M_PI * 250.0;  // rad/s, baseline only
  OptimizerOptions optimizer;

  bool optimize_placement = true;
  int placement_grid = 9;
  int considered_modes = 4;  // m of the placement objective
  double gamma = 1.0;
  std::vector<GroupOverride> groups;

  TuningOptions tuning;

  double frequency_min = 2.0 * M_PI * 0.1;     // rad/s
  double frequency_max = 2.0 * M_PI * 2000.0;  // rad/s
  int points_per_decade = 400;
  double force_budget = 40.0;  // N per planar axis
  /// step = 0 selects 1/(40 f_max) at run time.
  SimulationOptions simulation = [] {
    SimulationOptions s;
    s.step = 0.0;
    return s;
  }();
  std::vector<TrajectoryConfig> trajectories;

  /// Controlled flexible modes used by the plant and controllers.
  int plant_controlled() const {
    return kind == DesignKind::kProposed ? constraints.n_controlled : 0;
  }
  StageGeometry stage() const;
  std::vector<FrequencyBound> bounds() const;
  PlacementConfig placement(const StageGeometry& geometry) const;
  Eigen::VectorXd frequency_grid() const;
};

/// Parses and validates the YAML text. Every problem is reported as
/// "<key path>: <message>" on its own line in one Error(kConfig).
ProjectConfig parse_config(const std::string& text);
ProjectConfig load_config(const std::string& path);

/// Canonical (key-sorted, SI) form, used for hashing and result records.
nlohmann::json to_json(const ProjectConfig& config);

}  // namespace flexstage
