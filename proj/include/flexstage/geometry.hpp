#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace flexstage {

/// Isotropic linear-elastic material. Defaults are 7075-T6 aluminium.
struct Material {
  double youngs_modulus = 71.7e9;  // Pa
  double poisson_ratio = 0.33;
  double density = 2810.0;  // kg/m^3

  void validate() const;
};

/// Density of sintered NdFeB (N52 grade), kg/m^3.
inline constexpr double kNdFeBDensity = 7500.0;

/// Constitutive modifiers of a thickness region.
///
/// A plain plate region has fill = 1 and twist_factor = 1. A region standing
/// in for a grid of thin ribs of height `thickness` carries only a fraction
/// `fill` of solid material (mass and bending rigidity scale with it) and has
/// almost no twisting rigidity, because open thin-walled sections are weak in
/// torsion. `twist_factor` scales the twisting term of the plate rigidity.
struct RegionProperties {
  double fill = 1.0;
  double twist_factor = 1.0;
};

struct PointMass {
  Eigen::Vector2d location;  // m, same frame as StageGeometry::origin
  double mass = 0.0;         // kg
};

/// Rectangular plate on a uniform element grid, with one thickness design
/// variable per region.
struct StageGeometry {
  /// Lower-left plate corner, m.
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double length_x = 0.3;  // m
  double length_y = 0.3;  // m
  int nx = 20;
  int ny = 20;
  /// Row-major (j * nx + i) element -> region index.
  std::vector<int> region_map;
  std::vector<RegionProperties> region_properties;
  /// Design vector: one thickness per region, m.
  Eigen::VectorXd thickness;
  Eigen::VectorXd thickness_min;
  Eigen::VectorXd thickness_max;
  std::vector<PointMass> point_masses;

  int region_count() const { return static_cast<int>(thickness.size()); }
  int element_count() const { return nx * ny; }
  double element_dx() const { return length_x / nx; }
  double element_dy() const { return length_y / ny; }
  bool contains(const Eigen::Vector2d& p) const;

  /// Throws Error(kGeometry) naming the offending element or region.
  void validate() const;

  /// Copy with a different design vector (bounds untouched).
  StageGeometry with_thickness(const Eigen::VectorXd& t) const;
};

/// Single-region uniform plate with no point masses.
StageGeometry make_uniform_plate(double length_x, double length_y, int nx,
                                 int ny, double thickness);

/// Mass of a 70 x 70 x 6.35 mm NdFeB magnet array.
double magnet_array_mass(double side = 0.070, double height = 0.00635,
                         double density = kNdFeBDensity);

/// One magnet array at each plate corner, centred half the array side in
/// from both edges. Locations are relative to the plate origin.
std::vector<PointMass> corner_magnet_masses(double length_x, double length_y,
                                            double side = 0.070,
                                            double mass = magnet_array_mass());

/// Σ ρ·fill·area·thickness over elements + Σ point masses.
double total_mass(const StageGeometry& geometry, const Material& material);

/// ∂mass/∂thickness per region (constant, mass is linear in thickness).
Eigen::VectorXd mass_gradient(const StageGeometry& geometry,
                              const Material& material);

}  // namespace flexstage

namespace flexstage {

/// Desk-scale stage template: a thin skin plus a rib region covering a
/// centre cross and a perimeter band, with a magnet array at each corner.
/// Region 0 is the skin, region 1 the ribs.
struct RibbedStageOptions {
  double length_x = 0.3;  // m
  double length_y = 0.3;  // m
  int nx = 20;
  int ny = 20;
  RegionProperties ribs{0.2, 0.01};
  double perimeter_rib_width = 0.015;  // m
  double cross_rib_width = 0.030;      // m, full width of each cross arm
  Eigen::Vector2d thickness{0.003, 0.020};
  Eigen::Vector2d thickness_min{0.001, 0.002};
  Eigen::Vector2d thickness_max{0.020, 0.060};
  bool corner_magnets = true;
};

StageGeometry make_ribbed_stage(const RibbedStageOptions& options = {});

}  // namespace flexstage
