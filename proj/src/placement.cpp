#include "flexstage/placement.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "flexstage/error.hpp"
#include "flexstage/parallel.hpp"

namespace flexstage {

bool Rect::contains(const Eigen::Vector2d& p) const {
  return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() &&
         p.y() <= hi.y();
}

std::vector<Probe> TransducerGroup::expand(const StageGeometry& g) const {
  const double cx = g.origin.x() + 0.5 * g.length_x;
  const double cy = g.origin.y() + 0.5 * g.length_y;
  auto image = [&](bool mx, bool my) {
    Probe p;
    p.location = {mx ? 2.0 * cx - location.x() : location.x(),
                  my ? 2.0 * cy - location.y() : location.y(), height};
    p.direction = {mx ? -direction.x() : direction.x(),
                   my ? -direction.y() : direction.y(), direction.z()};
    return p;
  };
  switch (symmetry) {
    case Symmetry::kNone:
      return {image(false, false)};
    case Symmetry::kMirrorX:
      return {image(false, false), image(true, false)};
    case Symmetry::kMirrorY:
      return {image(false, false), image(false, true)};
    case Symmetry::kQuad:
      return {image(false, false), image(true, false), image(true, true),
              image(false, true)};
  }
  return {};
}

TransducerGroup TransducerGroup::at(const Eigen::Vector2d& p) const {
  TransducerGroup g = *this;
  g.location = p;
  return g;
}

namespace {

int image_count(Symmetry s) {
  switch (s) {
    case Symmetry::kNone: return 1;
    case Symmetry::kMirrorX:
    case Symmetry::kMirrorY: return 2;
    case Symmetry::kQuad: return 4;
  }
  return 1;
}

int count(const std::vector<TransducerGroup>& groups) {
  int n = 0;
  for (const auto& g : groups) n += image_count(g.symmetry);
  return n;
}

void check_groups(const std::vector<TransducerGroup>& groups,
                  const StageGeometry& geometry, const char* kind) {
  for (const auto& g : groups) {
    if (!g.domain.contains(g.location)) {
      throw Error(ErrorKind::kInvalidArgument,
                  std::string(kind) + " group '" + g.name +
                      "' lies outside its feasible domain");
    }
    if (std::abs(g.direction.norm() - 1.0) > 1e-9) {
      throw Error(ErrorKind::kInvalidArgument,
                  std::string(kind) + " group '" + g.name +
                      "' direction is not a unit vector");
    }
    for (const auto& p : g.expand(geometry)) {
      if (!geometry.contains(p.location.head<2>())) {
        throw Error(ErrorKind::kInvalidArgument,
                    std::string(kind) + " group '" + g.name +
                        "' has an image off the plate");
      }
    }
  }
}

}  // namespace

int PlacementConfig::actuator_count() const { return count(actuators); }
int PlacementConfig::sensor_count() const { return count(sensors); }

void PlacementConfig::validate(const StageGeometry& geometry,
                               int n_controlled) const {
  if (!(gamma >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "gamma must be >= 0");
  }
  check_groups(actuators, geometry, "actuator");
  check_groups(sensors, geometry, "sensor");
  const int needed = kRigidDofs + n_controlled;
  if (actuator_count() < needed || sensor_count() < needed) {
    throw Error(ErrorKind::kInvalidArgument,
                "over-actuation needs at least " + std::to_string(needed) +
                    " actuators and sensors (have " +
                    std::to_string(actuator_count()) + " and " +
                    std::to_string(sensor_count()) + ")");
  }
}

Eigen::MatrixXd actuation_map(const ModalModel& model,
                              const std::vector<TransducerGroup>& actuators) {
  const int k = kRigidDofs + model.flexible_count();
  Eigen::MatrixXd b(k, count(actuators));
  int col = 0;
  for (const auto& g : actuators) {
    for (const auto& p : g.expand(model.geometry)) {
      b.col(col++) = g.gain * modal_row(model, p);
    }
  }
  return b;
}

Eigen::MatrixXd sensing_map(const ModalModel& model,
                            const std::vector<TransducerGroup>& sensors) {
  const int k = kRigidDofs + model.flexible_count();
  Eigen::MatrixXd c(count(sensors), k);
  int row = 0;
  for (const auto& g : sensors) {
    for (const auto& p : g.expand(model.geometry)) {
      c.row(row++) = g.gain * modal_row(model, p).transpose();
    }
  }
  return c;
}

namespace {

double grammian(const Mode& mode, double squared_norm) {
  if (!(mode.zeta > 0.0) || !(mode.omega > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "grammian is singular for zero damping or zero frequency");
  }
  return squared_norm / (4.0 * mode.zeta * mode.omega);
}

// Σ_i w_i |row_i|² / (4ζω) with weights +1 (controlled) and −γ (uncontrolled).
double weighted_sum(const ModalModel& model, const Eigen::MatrixXd& rows,
                    int n, int m, double gamma) {
  if (!(n >= 1 && n < m && m <= model.flexible_count())) {
    throw Error(ErrorKind::kInvalidArgument,
                "placement objective needs 1 <= n < m <= retained modes");
  }
  double j = 0.0;
  for (int i = 0; i < m; ++i) {
    const double w =
        grammian(model.flexible(i), rows.row(kRigidDofs + i).squaredNorm());
    j += i < n ? w : -gamma * w;
  }
  return j;
}

}  // namespace

double controllability_grammian(const Mode& mode,
                                const Eigen::Ref<const Eigen::RowVectorXd>& input_row) {
  return grammian(mode, input_row.squaredNorm());
}

double observability_grammian(const Mode& mode,
                              const Eigen::Ref<const Eigen::VectorXd>& output_column) {
  return grammian(mode, output_column.squaredNorm());
}

double controllability_grammian(const ModalModel& model, int flexible_index,
                                const std::vector<TransducerGroup>& actuators) {
  const Eigen::MatrixXd b = actuation_map(model, actuators);
  return controllability_grammian(model.flexible(flexible_index),
                                  b.row(kRigidDofs + flexible_index));
}

double observability_grammian(const ModalModel& model, int flexible_index,
                              const std::vector<TransducerGroup>& sensors) {
  const Eigen::MatrixXd c = sensing_map(model, sensors);
  return observability_grammian(model.flexible(flexible_index),
                                c.col(kRigidDofs + flexible_index));
}

double actuator_objective(const ModalModel& model,
                          const std::vector<TransducerGroup>& actuators, int n,
                          int m, double gamma) {
  return weighted_sum(model, actuation_map(model, actuators), n, m, gamma);
}

double sensor_objective(const ModalModel& model,
                        const std::vector<TransducerGroup>& sensors, int n,
                        int m, double gamma) {
  return weighted_sum(model, sensing_map(model, sensors).transpose(), n, m,
                      gamma);
}

std::vector<Eigen::Vector2d> domain_grid(const Rect& domain, int resolution) {
  if (resolution < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "placement grid needs >= 2 points per axis");
  }
  if (!(domain.hi.array() >= domain.lo.array()).all()) {
    throw Error(ErrorKind::kInvalidArgument, "empty feasible domain");
  }
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(resolution * resolution);
  const Eigen::Vector2d span = domain.hi - domain.lo;
  for (int j = 0; j < resolution; ++j) {
    for (int i = 0; i < resolution; ++i) {
      pts.push_back(domain.lo +
                    Eigen::Vector2d(span.x() * i / (resolution - 1),
                                    span.y() * j / (resolution - 1)));
    }
  }
  return pts;
}

namespace {

template <class Loop>
GroupLandscape landscape(const ModalModel& model, const TransducerGroup& group,
                         bool actuator, int n, int m, double gamma,
                         int resolution, Loop loop) {
  GroupLandscape out;
  out.group = group.name;
  out.actuator = actuator;
  out.points = domain_grid(group.domain, resolution);
  out.objective.resize(out.points.size());
  loop(static_cast<int>(out.points.size()), [&](int k) {
    const std::vector<TransducerGroup> one{group.at(out.points[k])};
    out.objective[k] = actuator ? actuator_objective(model, one, n, m, gamma)
                                : sensor_objective(model, one, n, m, gamma);
  });
  // Sequential reduction keeps the first maximum in scan order.
  for (int k = 1; k < out.objective.size(); ++k) {
    if (out.objective[k] > out.objective[out.argmax]) out.argmax = k;
  }
  return out;
}

}  // namespace

GroupLandscape group_landscape(const ModalModel& model,
                               const TransducerGroup& group, bool actuator,
                               int n, int m, double gamma, int resolution) {
  return landscape(model, group, actuator, n, m, gamma, resolution,
                   [](int count, auto&& body) { parallel_for(count, body); });
}

GroupLandscape group_landscape_serial(const ModalModel& model,
                                      const TransducerGroup& group,
                                      bool actuator, int n, int m,
                                      double gamma, int resolution) {
  return landscape(model, group, actuator, n, m, gamma, resolution,
                   [](int count, auto&& body) { serial_for(count, body); });
}

PlacementResult optimize_placement(const ModalModel& model,
                                   const PlacementConfig& initial, int n,
                                   int m, int resolution) {
  initial.validate(model.geometry, n);
  PlacementResult out;
  out.config = initial;
  auto solve = [&](std::vector<TransducerGroup>& groups, bool actuator) {
    double total = 0.0;
    for (auto& g : groups) {
      GroupLandscape l = group_landscape(model, g, actuator, n, m,
                                         initial.gamma, resolution);
      if (l.objective.cwiseAbs().maxCoeff() == 0.0) {
        throw Error(ErrorKind::kInfeasible,
                    std::string(actuator ? "actuator" : "sensor") + " group '" +
                        g.name + "' cannot reach any retained flexible mode "
                        "anywhere in its domain");
      }
      g.location = l.points[l.argmax];
      total += l.objective[l.argmax];
      out.landscapes.push_back(std::move(l));
    }
    return total;
  };
  out.actuator_objective = solve(out.config.actuators, true);
  out.sensor_objective = solve(out.config.sensors, false);
  out.config.validate(model.geometry, n);
  return out;
}

void write_landscape_csv(const std::string& path,
                         const std::vector<GroupLandscape>& landscapes) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path);
  os << "kind,group,x_m,y_m,objective\n" << std::setprecision(17);
  for (const auto& l : landscapes) {
    for (std::size_t k = 0; k < l.points.size(); ++k) {
      os << (l.actuator ? "actuator" : "sensor") << ',' << l.group << ','
         << l.points[k].x() << ',' << l.points[k].y() << ','
         << l.objective[k] << '\n';
    }
  }
}

PlacementConfig default_placement(const StageGeometry& geometry) {
  const Eigen::Vector2d o = geometry.origin;
  const double lx = geometry.length_x;
  const double ly = geometry.length_y;
  const double side = std::min({0.070, 0.5 * lx, 0.5 * ly});
  const double h = 0.5 * side;
  const double below = -0.010;  // forcer plane under the magnets
  const double target = 0.015;  // laser targets on top of the plate

  PlacementConfig c;
  TransducerGroup z;
  z.name = "z_forcer";
  z.location = o + Eigen::Vector2d(h, h);
  z.direction = Eigen::Vector3d::UnitZ();
  z.height = below;
  z.symmetry = Symmetry::kQuad;
  z.domain = {o, o + Eigen::Vector2d(side, side)};
  c.actuators.push_back(z);

  TransducerGroup fy;
  fy.name = "y_forcer";
  fy.location = o + Eigen::Vector2d(lx - h, h);
  fy.direction = Eigen::Vector3d::UnitY();
  fy.height = below;
  fy.symmetry = Symmetry::kMirrorY;
  fy.domain = {o + Eigen::Vector2d(lx - side, 0.0),
               o + Eigen::Vector2d(lx, side)};
  c.actuators.push_back(fy);

  TransducerGroup fx;
  fx.name = "x_forcer";
  fx.location = o + Eigen::Vector2d(h, h);
  fx.direction = Eigen::Vector3d::UnitX();
  fx.height = below;
  fx.symmetry = Symmetry::kMirrorY;
  fx.domain = {o, o + Eigen::Vector2d(side, side)};
  c.actuators.push_back(fx);

  TransducerGroup sz;
  sz.name = "z_probe";
  sz.location = o + Eigen::Vector2d(0.2 * lx, 0.2 * ly);
  sz.direction = Eigen::Vector3d::UnitZ();
  sz.symmetry = Symmetry::kQuad;
  sz.domain = {o, o + Eigen::Vector2d(0.5 * lx, 0.5 * ly)};
  c.sensors.push_back(sz);

  TransducerGroup sx;
  sx.name = "x_laser";
  sx.location = o + Eigen::Vector2d(0.0, 0.25 * ly);
  sx.direction = Eigen::Vector3d::UnitX();
  sx.height = target;
  sx.symmetry = Symmetry::kMirrorY;
  sx.domain = {o, o + Eigen::Vector2d(0.0, 0.5 * ly)};
  c.sensors.push_back(sx);

  TransducerGroup sy;
  sy.name = "y_laser";
  sy.location = o + Eigen::Vector2d(0.75 * lx, 0.0);
  sy.direction = Eigen::Vector3d::UnitY();
  sy.height = target;
  sy.domain = {o, o + Eigen::Vector2d(lx, 0.0)};
  c.sensors.push_back(sy);
  return c;
}

}  // namespace flexstage
