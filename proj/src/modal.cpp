#include "flexstage/modal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "flexstage/error.hpp"

namespace flexstage {

double DampingPolicy::zeta(int flexible_index) const {
  const double z = flexible_index < static_cast<int>(per_mode.size())
                       ? per_mode[flexible_index]
                       : uniform_zeta;
  if (!(z > 0.0 && z < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "modal damping ratio must lie in (0, 1)");
  }
  return z;
}

Eigen::VectorXd ModalModel::flexible_omegas() const {
  Eigen::VectorXd w(flexible_count());
  for (int i = 0; i < flexible_count(); ++i) w[i] = flexible(i).omega;
  return w;
}

ModalModel solve_modes(const PlateSystem& system,
                       const StageGeometry& geometry, int count,
                       const DampingPolicy& damping,
                       const SubspaceOptions& options) {
  if (count < kOutOfPlaneRigidModes) {
    throw Error(ErrorKind::kInvalidArgument,
                "mode count must cover the 3 free-free rigid modes");
  }
  const EigenPairs pairs =
      solve_smallest_eigenpairs(system.stiffness, system.mass, count, options);

  int rigid = 0;
  for (int k = 0; k < count; ++k) {
    if (std::sqrt(std::max(pairs.values[k], 0.0)) < kRigidModeThreshold) {
      ++rigid;
    }
  }
  if (rigid != kOutOfPlaneRigidModes) {
    throw Error(ErrorKind::kEigensolver,
                "expected 3 rigid modes for a free-free plate, found " +
                    std::to_string(rigid));
  }

  const auto& m = system.mass;
  const Eigen::VectorXd heave = linear_field(system, geometry, 1.0, 0.0, 0.0);
  const Eigen::VectorXd xf = linear_field(system, geometry, 0.0, 1.0, 0.0);
  const Eigen::VectorXd yf = linear_field(system, geometry, 0.0, 0.0, 1.0);
  const Eigen::VectorXd m_heave = m * heave;
  const double mass = heave.dot(m_heave);

  RigidBodyProperties body;
  body.mass = mass;
  body.center = {xf.dot(m_heave) / mass, yf.dot(m_heave) / mass};
  const Eigen::VectorXd roll =
      linear_field(system, geometry, -body.center.y(), 0.0, 1.0);
  const Eigen::VectorXd pitch =
      linear_field(system, geometry, body.center.x(), -1.0, 0.0);
  Eigen::Matrix2d gram;
  gram(0, 0) = roll.dot(m * roll);
  gram(1, 1) = pitch.dot(m * pitch);
  gram(0, 1) = gram(1, 0) = roll.dot(m * pitch);
  body.ixx = gram(0, 0);
  body.iyy = gram(1, 1);
  body.ixy = -gram(0, 1);
  body.izz = body.ixx + body.iyy;

  Eigen::Matrix2d axes = Eigen::Matrix2d::Identity();
  Eigen::Vector2d moments(gram(0, 0), gram(1, 1));
  if (std::abs(gram(0, 1)) > 1e-12 * gram.diagonal().maxCoeff()) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(gram);
    axes = es.eigenvectors();
    moments = es.eigenvalues();
    if (std::abs(axes(0, 1)) > std::abs(axes(0, 0))) {
      axes.col(0).swap(axes.col(1));
      std::swap(moments[0], moments[1]);
    }
    if (axes(0, 0) < 0.0) axes.col(0) *= -1.0;
    if (axes(1, 1) < 0.0) axes.col(1) *= -1.0;
  }
  body.tilt_axes = axes;

  ModalModel model;
  model.geometry = geometry;
  model.total_mass = mass;
  model.rigid_body = body;
  model.rigid_count = kOutOfPlaneRigidModes;
  model.modes.push_back({0.0, 0.0, heave / std::sqrt(mass)});
  for (int a = 0; a < 2; ++a) {
    const Eigen::VectorXd shape =
        (axes(0, a) * roll + axes(1, a) * pitch) / std::sqrt(moments[a]);
    model.modes.push_back({0.0, 0.0, shape});
  }

  int flex_index = 0;
  for (int k = 0; k < count; ++k) {
    const double omega = std::sqrt(std::max(pairs.values[k], 0.0));
    if (omega < kRigidModeThreshold) continue;
    Eigen::VectorXd shape = pairs.vectors.col(k);
    shape /= std::sqrt(shape.dot(m * shape));
    // Deterministic sign: largest deflection entry positive.
    Eigen::Index arg = 0;
    shape(Eigen::seqN(0, shape.size() / kDofsPerNode, kDofsPerNode))
        .cwiseAbs()
        .maxCoeff(&arg);
    if (shape[kDofsPerNode * arg] < 0.0) shape = -shape;
    model.modes.push_back({omega, damping.zeta(flex_index), shape});
    ++flex_index;
  }
  model.n_retained = flex_index;
  model.n_controlled = std::min(1, flex_index);
  return model;
}

ModalModel analyze_geometry(const StageGeometry& geometry,
                            const Material& material, int count,
                            const DampingPolicy& damping,
                            const SubspaceOptions& options) {
  return solve_modes(build_model(geometry, material), geometry, count, damping,
                     options);
}

namespace {

struct ElementLocation {
  std::array<int, 12> dofs;
  double xi;
  double eta;
};

ElementLocation locate(const StageGeometry& g, const Eigen::Vector2d& p) {
  if (!g.contains(p)) {
    throw Error(ErrorKind::kInvalidArgument,
                "point (" + std::to_string(p.x()) + ", " +
                    std::to_string(p.y()) + ") is outside the plate");
  }
  const double dx = g.element_dx();
  const double dy = g.element_dy();
  const Eigen::Vector2d rel = p - g.origin;
  const int i = std::clamp(static_cast<int>(std::floor(rel.x() / dx)), 0,
                           g.nx - 1);
  const int j = std::clamp(static_cast<int>(std::floor(rel.y() / dy)), 0,
                           g.ny - 1);
  ElementLocation loc{};
  loc.xi = 2.0 * (rel.x() - (i + 0.5) * dx) / dx;
  loc.eta = 2.0 * (rel.y() - (j + 0.5) * dy) / dy;
  const int nodes_x = g.nx + 1;
  const std::array<int, 4> nodes = {j * nodes_x + i, j * nodes_x + i + 1,
                                    (j + 1) * nodes_x + i + 1,
                                    (j + 1) * nodes_x + i};
  for (int a = 0; a < 4; ++a) {
    for (int c = 0; c < kDofsPerNode; ++c) {
      loc.dofs[kDofsPerNode * a + c] = kDofsPerNode * nodes[a] + c;
    }
  }
  return loc;
}

struct ShapeSampler {
  ElementLocation loc;
  ElementVector n, nx, ny;
  double z;
  Eigen::Vector3d dir;

  ShapeSampler(const AcmElement& element, const StageGeometry& g,
               const Probe& probe)
      : loc(locate(g, probe.location.head<2>())),
        n(element.shape(loc.xi, loc.eta)),
        nx(element.shape_dx(loc.xi, loc.eta)),
        ny(element.shape_dy(loc.xi, loc.eta)),
        z(probe.location.z()),
        dir(probe.direction) {}

  double operator()(const Eigen::VectorXd& shape) const {
    ElementVector d;
    for (int k = 0; k < 12; ++k) d[k] = shape[loc.dofs[k]];
    const double w = n.dot(d);
    const double wx = nx.dot(d);
    const double wy = ny.dot(d);
    return -z * wx * dir.x() - z * wy * dir.y() + w * dir.z();
  }
};

}  // namespace

double eval_shape_at(const ModalModel& model, int mode_index,
                     const Probe& probe) {
  if (mode_index < 0 || mode_index >= static_cast<int>(model.modes.size())) {
    throw Error(ErrorKind::kInvalidArgument, "mode index out of range");
  }
  const StageGeometry& g = model.geometry;
  const AcmElement element(g.element_dx(), g.element_dy());
  const ShapeSampler sample(element, g, probe);
  return sample(model.modes[mode_index].shape);
}

Eigen::VectorXd modal_row(const ModalModel& model, const Probe& probe) {
  const StageGeometry& g = model.geometry;
  const AcmElement element(g.element_dx(), g.element_dy());
  const ShapeSampler sample(element, g, probe);
  const RigidBodyProperties& body = model.rigid_body;
  const Eigen::Vector3d& d = probe.direction;
  const double rx = probe.location.x() - body.center.x();
  const double ry = probe.location.y() - body.center.y();

  Eigen::VectorXd row(kRigidDofs + model.flexible_count());
  const double inv_sqrt_m = 1.0 / std::sqrt(body.mass);
  row[0] = d.x() * inv_sqrt_m;
  row[1] = d.y() * inv_sqrt_m;
  row[2] = sample(model.modes[0].shape);
  row[3] = sample(model.modes[1].shape);
  row[4] = sample(model.modes[2].shape);
  row[5] = (-ry * d.x() + rx * d.y()) / std::sqrt(body.izz);
  for (int i = 0; i < model.flexible_count(); ++i) {
    row[kRigidDofs + i] = sample(model.flexible(i).shape);
  }
  return row;
}

}  // namespace flexstage
