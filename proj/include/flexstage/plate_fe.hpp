#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "flexstage/geometry.hpp"

namespace flexstage {

/// Bending DOFs per node: w, θx = ∂w/∂y, θy = −∂w/∂x.
inline constexpr int kDofsPerNode = 3;

using ElementMatrix = Eigen::Matrix<double, 12, 12>;
using ElementVector = Eigen::Matrix<double, 12, 1>;

/// Adini–Clough–Melosh 12-DOF non-conforming rectangular Kirchhoff plate
/// element. Node order is counter-clockwise from the lower-left corner.
/// Stiffness is split by rigidity component so any orthotropic rigidity
/// D = [[D11, D12, 0], [D12, D11, 0], [0, 0, D66]] can be formed as
/// D11·bending + D12·poisson + D66·twist.
class AcmElement {
 public:
  AcmElement(double dx, double dy);

  const ElementMatrix& bending() const { return bending_; }
  const ElementMatrix& poisson() const { return poisson_; }
  const ElementMatrix& twist() const { return twist_; }
  /// ∫ NᵀN dA for unit areal mass.
  const ElementMatrix& unit_mass() const { return mass_; }

  /// Deflection shape functions at local coordinates ξ, η ∈ [−1, 1].
  ElementVector shape(double xi, double eta) const;
  /// ∂N/∂x and ∂N/∂y in physical units.
  ElementVector shape_dx(double xi, double eta) const;
  ElementVector shape_dy(double xi, double eta) const;

  double dx() const { return 2.0 * a_; }
  double dy() const { return 2.0 * b_; }

 private:
  double a_;  // half width
  double b_;  // half height
  /// Polynomial coefficients of the 12 shape functions (column k = N_k).
  Eigen::Matrix<double, 12, 12> coeff_;
  ElementMatrix bending_, poisson_, twist_, mass_;
};

/// Assembled free-free bending model.
struct PlateSystem {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::SparseMatrix<double> mass;
  int nodes_x = 0;
  int nodes_y = 0;

  int dof_count() const { return kDofsPerNode * nodes_x * nodes_y; }
  int node_index(int i, int j) const { return j * nodes_x + i; }
};

/// Rigidity components of one region at the given thickness.
struct PlateRigidity {
  double d11 = 0.0;
  double d12 = 0.0;
  double d66 = 0.0;
};

PlateRigidity region_rigidity(const Material& material,
                              const RegionProperties& props, double thickness);

/// Assembles stiffness and consistent mass. Point masses are lumped on the
/// deflection DOF of the nearest node. Throws Error(kGeometry) for
/// degenerate elements.
PlateSystem build_model(const StageGeometry& geometry,
                        const Material& material);

/// Nodal DOF vector of the linear field w = c0 + cx·x + cy·y.
Eigen::VectorXd linear_field(const PlateSystem& system,
                             const StageGeometry& geometry, double c0,
                             double cx, double cy);

}  // namespace flexstage
