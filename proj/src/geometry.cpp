#include "flexstage/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flexstage/error.hpp"

namespace flexstage {

void Material::validate() const {
  if (!(youngs_modulus > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "youngs_modulus must be > 0");
  }
  if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5)) {
    throw Error(ErrorKind::kInvalidArgument,
                "poisson_ratio must be in [0, 0.5)");
  }
  if (!(density > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "density must be > 0");
  }
}

void StageGeometry::validate() const {
  if (nx < 1 || ny < 1) {
    throw Error(ErrorKind::kGeometry, "element grid must be at least 1 x 1");
  }
  if (!(length_x > 0.0) || !(length_y > 0.0)) {
    throw Error(ErrorKind::kGeometry,
                "degenerate element 0: zero area (plan dimensions must be > 0)");
  }
  const int regions = region_count();
  if (regions < 1) {
    throw Error(ErrorKind::kGeometry, "at least one region is required");
  }
  if (static_cast<int>(region_map.size()) != element_count()) {
    throw Error(ErrorKind::kGeometry,
                "region_map has " + std::to_string(region_map.size()) +
                    " entries, expected " + std::to_string(element_count()));
  }
  if (!region_properties.empty() &&
      static_cast<int>(region_properties.size()) != regions) {
    throw Error(ErrorKind::kGeometry,
                "region_properties size does not match region count");
  }
  if (thickness_min.size() != regions || thickness_max.size() != regions) {
    throw Error(ErrorKind::kGeometry, "thickness bounds size mismatch");
  }
  for (int r = 0; r < regions; ++r) {
    const double tol = 1e-12 * std::max(1.0, std::abs(thickness_max[r]));
    if (!(thickness_min[r] > 0.0) || thickness_min[r] > thickness_max[r]) {
      throw Error(ErrorKind::kGeometry,
                  "region " + std::to_string(r) + ": invalid thickness bounds");
    }
    if (thickness[r] < thickness_min[r] - tol ||
        thickness[r] > thickness_max[r] + tol) {
      throw Error(ErrorKind::kGeometry, "region " + std::to_string(r) +
                                            ": thickness outside bounds");
    }
    if (!region_properties.empty()) {
      const auto& p = region_properties[r];
      if (!(p.fill > 0.0 && p.fill <= 1.0) || !(p.twist_factor >= 0.0)) {
        throw Error(ErrorKind::kGeometry,
                    "region " + std::to_string(r) +
                        ": fill must be in (0, 1] and twist_factor >= 0");
      }
    }
  }
  for (int e = 0; e < element_count(); ++e) {
    const int r = region_map[e];
    if (r < 0 || r >= regions) {
      throw Error(ErrorKind::kGeometry, "element " + std::to_string(e) +
                                            " maps to unknown region " +
                                            std::to_string(r));
    }
    if (!(thickness[r] > 0.0)) {
      throw Error(ErrorKind::kGeometry, "degenerate element " +
                                            std::to_string(e) +
                                            ": zero thickness");
    }
  }
  for (std::size_t k = 0; k < point_masses.size(); ++k) {
    const auto& pm = point_masses[k];
    if (!(pm.mass >= 0.0) || !contains(pm.location)) {
      throw Error(ErrorKind::kGeometry, "point mass " + std::to_string(k) +
                                            " is negative or off the plate");
    }
  }
}

bool StageGeometry::contains(const Eigen::Vector2d& p) const {
  const double tol = 1e-12 * std::max(length_x, length_y);
  return p.x() >= origin.x() - tol && p.x() <= origin.x() + length_x + tol &&
         p.y() >= origin.y() - tol && p.y() <= origin.y() + length_y + tol;
}

StageGeometry StageGeometry::with_thickness(const Eigen::VectorXd& t) const {
  StageGeometry copy = *this;
  copy.thickness = t;
  return copy;
}

StageGeometry make_uniform_plate(double length_x, double length_y, int nx,
                                 int ny, double thickness) {
  StageGeometry g;
  g.length_x = length_x;
  g.length_y = length_y;
  g.nx = nx;
  g.ny = ny;
  g.region_map.assign(static_cast<std::size_t>(nx) * ny, 0);
  g.region_properties = {RegionProperties{}};
  g.thickness = Eigen::VectorXd::Constant(1, thickness);
  g.thickness_min = g.thickness;
  g.thickness_max = g.thickness;
  return g;
}

double magnet_array_mass(double side, double height, double density) {
  return side * side * height * density;
}

std::vector<PointMass> corner_magnet_masses(double length_x, double length_y,
                                            double side, double mass) {
  const double h = 0.5 * side;
  return {{{h, h}, mass},
          {{length_x - h, h}, mass},
          {{length_x - h, length_y - h}, mass},
          {{h, length_y - h}, mass}};
}

Eigen::VectorXd mass_gradient(const StageGeometry& geometry,
                              const Material& material) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(geometry.region_count());
  const double area = geometry.element_dx() * geometry.element_dy();
  for (int e = 0; e < geometry.element_count(); ++e) {
    const int r = geometry.region_map[e];
    const double fill = geometry.region_properties.empty()
                            ? 1.0
                            : geometry.region_properties[r].fill;
    grad[r] += material.density * fill * area;
  }
  return grad;
}

double total_mass(const StageGeometry& geometry, const Material& material) {
  geometry.validate();
  double mass = mass_gradient(geometry, material).dot(geometry.thickness);
  for (const auto& pm : geometry.point_masses) mass += pm.mass;
  return mass;
}

}  // namespace flexstage

namespace flexstage {

StageGeometry make_ribbed_stage(const RibbedStageOptions& o) {
  StageGeometry g = make_uniform_plate(o.length_x, o.length_y, o.nx, o.ny,
                                       o.thickness[0]);
  g.region_properties = {RegionProperties{}, o.ribs};
  // An element belongs to a rib when its centroid lies inside the rib's
  // physical footprint, so refining the mesh keeps the layout.
  const double hx = o.length_x / o.nx, hy = o.length_y / o.ny;
  const double eps = 1e-9 * std::max(o.length_x, o.length_y);
  const double band = o.perimeter_rib_width + eps;
  const double half = 0.5 * o.cross_rib_width + eps;
  for (int j = 0; j < o.ny; ++j) {
    for (int i = 0; i < o.nx; ++i) {
      const double x = (i + 0.5) * hx, y = (j + 0.5) * hy;
      const bool edge = x <= band || y <= band || x >= o.length_x - band ||
                        y >= o.length_y - band;
      const bool cross = std::abs(x - 0.5 * o.length_x) <= half ||
                         std::abs(y - 0.5 * o.length_y) <= half;
      g.region_map[j * o.nx + i] = edge || cross ? 1 : 0;
    }
  }
  g.thickness = o.thickness;
  g.thickness_min = o.thickness_min;
  g.thickness_max = o.thickness_max;
  if (o.corner_magnets) {
    g.point_masses = corner_magnet_masses(o.length_x, o.length_y);
  }
  g.validate();
  return g;
}

}  // namespace flexstage
