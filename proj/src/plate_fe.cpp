#include "flexstage/plate_fe.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "flexstage/error.hpp"

namespace flexstage {
namespace {

using Row12 = Eigen::Matrix<double, 1, 12>;

// Basis: 1, ξ, η, ξ², ξη, η², ξ³, ξ²η, ξη², η³, ξ³η, ξη³.
Row12 poly(double x, double y) {
  Row12 p;
  p << 1, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y,
      y * y * y, x * x * x * y, x * y * y * y;
  return p;
}

Row12 poly_dx(double x, double y) {
  Row12 p;
  p << 0, 1, 0, 2 * x, y, 0, 3 * x * x, 2 * x * y, y * y, 0, 3 * x * x * y,
      y * y * y;
  return p;
}

Row12 poly_dy(double x, double y) {
  Row12 p;
  p << 0, 0, 1, 0, x, 2 * y, 0, x * x, 2 * x * y, 3 * y * y, x * x * x,
      3 * x * y * y;
  return p;
}

Row12 poly_dxx(double x, double y) {
  Row12 p;
  p << 0, 0, 0, 2, 0, 0, 6 * x, 2 * y, 0, 0, 6 * x * y, 0;
  return p;
}

Row12 poly_dyy(double x, double y) {
  Row12 p;
  p << 0, 0, 0, 0, 0, 2, 0, 0, 2 * x, 6 * y, 0, 6 * x * y;
  return p;
}

Row12 poly_dxy(double x, double y) {
  Row12 p;
  p << 0, 0, 0, 0, 1, 0, 0, 2 * x, 2 * y, 0, 3 * x * x, 3 * y * y;
  return p;
}

constexpr std::array<double, 4> kGaussPoints = {
    -0.861136311594052575, -0.339981043584856265, 0.339981043584856265,
    0.861136311594052575};
constexpr std::array<double, 4> kGaussWeights = {
    0.347854845137453857, 0.652145154862546143, 0.652145154862546143,
    0.347854845137453857};

constexpr std::array<std::array<double, 2>, 4> kNodes = {
    {{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}}};

}  // namespace

AcmElement::AcmElement(double dx, double dy) : a_(0.5 * dx), b_(0.5 * dy) {
  if (!(dx > 0.0) || !(dy > 0.0)) {
    throw Error(ErrorKind::kGeometry, "degenerate element: zero area");
  }
  Eigen::Matrix<double, 12, 12> nodal;
  for (int n = 0; n < 4; ++n) {
    const double x = kNodes[n][0];
    const double y = kNodes[n][1];
    nodal.row(3 * n + 0) = poly(x, y);
    nodal.row(3 * n + 1) = poly_dy(x, y) / b_;
    nodal.row(3 * n + 2) = -poly_dx(x, y) / a_;
  }
  coeff_ = nodal.inverse();

  bending_.setZero();
  poisson_.setZero();
  twist_.setZero();
  mass_.setZero();
  const double jac = a_ * b_;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double x = kGaussPoints[i];
      const double y = kGaussPoints[j];
      const double w = kGaussWeights[i] * kGaussWeights[j] * jac;
      const Row12 wxx = poly_dxx(x, y) * coeff_ / (a_ * a_);
      const Row12 wyy = poly_dyy(x, y) * coeff_ / (b_ * b_);
      const Row12 wxy2 = 2.0 * poly_dxy(x, y) * coeff_ / (a_ * b_);
      const Row12 n = poly(x, y) * coeff_;
      bending_ += w * (wxx.transpose() * wxx + wyy.transpose() * wyy);
      poisson_ += w * (wxx.transpose() * wyy + wyy.transpose() * wxx);
      twist_ += w * (wxy2.transpose() * wxy2);
      mass_ += w * (n.transpose() * n);
    }
  }
}

ElementVector AcmElement::shape(double xi, double eta) const {
  return (poly(xi, eta) * coeff_).transpose();
}

ElementVector AcmElement::shape_dx(double xi, double eta) const {
  return (poly_dx(xi, eta) * coeff_).transpose() / a_;
}

ElementVector AcmElement::shape_dy(double xi, double eta) const {
  return (poly_dy(xi, eta) * coeff_).transpose() / b_;
}

PlateRigidity region_rigidity(const Material& material,
                              const RegionProperties& props,
                              double thickness) {
  const double nu = material.poisson_ratio;
  const double d = material.youngs_modulus * thickness * thickness *
                   thickness / (12.0 * (1.0 - nu * nu));
  return {props.fill * d, props.fill * nu * d,
          props.fill * props.twist_factor * 0.5 * (1.0 - nu) * d};
}

PlateSystem build_model(const StageGeometry& geometry,
                        const Material& material) {
  geometry.validate();
  material.validate();

  PlateSystem sys;
  sys.nodes_x = geometry.nx + 1;
  sys.nodes_y = geometry.ny + 1;
  const int n = sys.dof_count();
  const double dx = geometry.element_dx();
  const double dy = geometry.element_dy();
  const AcmElement element(dx, dy);

  std::vector<Eigen::Triplet<double>> k_trip;
  std::vector<Eigen::Triplet<double>> m_trip;
  k_trip.reserve(static_cast<std::size_t>(geometry.element_count()) * 144);
  m_trip.reserve(static_cast<std::size_t>(geometry.element_count()) * 144 +
                 geometry.point_masses.size() * 144);

  for (int ej = 0; ej < geometry.ny; ++ej) {
    for (int ei = 0; ei < geometry.nx; ++ei) {
      const int e = ej * geometry.nx + ei;
      const int r = geometry.region_map[e];
      const RegionProperties props = geometry.region_properties.empty()
                                         ? RegionProperties{}
                                         : geometry.region_properties[r];
      const double t = geometry.thickness[r];
      const PlateRigidity rig = region_rigidity(material, props, t);
      const ElementMatrix ke = rig.d11 * element.bending() +
                               rig.d12 * element.poisson() +
                               rig.d66 * element.twist();
      const ElementMatrix me =
          (material.density * props.fill * t) * element.unit_mass();

      const std::array<int, 4> nodes = {
          sys.node_index(ei, ej), sys.node_index(ei + 1, ej),
          sys.node_index(ei + 1, ej + 1), sys.node_index(ei, ej + 1)};
      std::array<int, 12> dofs{};
      for (int a = 0; a < 4; ++a) {
        for (int c = 0; c < kDofsPerNode; ++c) {
          dofs[kDofsPerNode * a + c] = kDofsPerNode * nodes[a] + c;
        }
      }
      for (int p = 0; p < 12; ++p) {
        for (int q = 0; q < 12; ++q) {
          k_trip.emplace_back(dofs[p], dofs[q], ke(p, q));
          m_trip.emplace_back(dofs[p], dofs[q], me(p, q));
        }
      }
    }
  }

  // Consistent point mass: m N Nᵀ at the exact location, so the attachment
  // point does not move with the mesh.
  for (const auto& pm : geometry.point_masses) {
    const Eigen::Vector2d rel = pm.location - geometry.origin;
    const int ei = std::clamp(static_cast<int>(std::floor(rel.x() / dx)), 0,
                              geometry.nx - 1);
    const int ej = std::clamp(static_cast<int>(std::floor(rel.y() / dy)), 0,
                              geometry.ny - 1);
    const double xi = std::clamp(2.0 * (rel.x() / dx - ei) - 1.0, -1.0, 1.0);
    const double eta = std::clamp(2.0 * (rel.y() / dy - ej) - 1.0, -1.0, 1.0);
    const ElementVector shape = element.shape(xi, eta);
    const std::array<int, 4> nodes = {
        sys.node_index(ei, ej), sys.node_index(ei + 1, ej),
        sys.node_index(ei + 1, ej + 1), sys.node_index(ei, ej + 1)};
    for (int a = 0; a < 4; ++a) {
      for (int c = 0; c < kDofsPerNode; ++c) {
        for (int b = 0; b < 4; ++b) {
          for (int d = 0; d < kDofsPerNode; ++d) {
            const double v = pm.mass * shape[kDofsPerNode * a + c] *
                             shape[kDofsPerNode * b + d];
            if (v != 0.0) {
              m_trip.emplace_back(kDofsPerNode * nodes[a] + c,
                                  kDofsPerNode * nodes[b] + d, v);
            }
          }
        }
      }
    }
  }

  sys.stiffness.resize(n, n);
  sys.mass.resize(n, n);
  sys.stiffness.setFromTriplets(k_trip.begin(), k_trip.end());
  sys.mass.setFromTriplets(m_trip.begin(), m_trip.end());
  return sys;
}

Eigen::VectorXd linear_field(const PlateSystem& system,
                             const StageGeometry& geometry, double c0,
                             double cx, double cy) {
  Eigen::VectorXd v(system.dof_count());
  const double dx = geometry.element_dx();
  const double dy = geometry.element_dy();
  for (int j = 0; j < system.nodes_y; ++j) {
    for (int i = 0; i < system.nodes_x; ++i) {
      const int node = system.node_index(i, j);
      const double x = geometry.origin.x() + i * dx;
      const double y = geometry.origin.y() + j * dy;
      v[kDofsPerNode * node + 0] = c0 + cx * x + cy * y;
      v[kDofsPerNode * node + 1] = cy;
      v[kDofsPerNode * node + 2] = -cx;
    }
  }
  return v;
}

}  // namespace flexstage
