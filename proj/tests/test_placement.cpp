#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Dense>

#include "flexstage/error.hpp"
#include "flexstage/placement.hpp"

using namespace flexstage;

namespace {

const ModalModel& stage_model() {
  static const ModalModel model = [] {
    RibbedStageOptions o;
    o.nx = o.ny = 10;
    return analyze_geometry(make_ribbed_stage(o), Material{}, 10);
  }();
  return model;
}

// Solves A W + W Aᵀ + B Bᵀ = 0 through the Kronecker form.
Eigen::MatrixXd lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const int n = a.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd k(n * n, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      k.block(i * n, j * n, n, n) = a(i, j) * id + (i == j ? a : Eigen::MatrixXd::Zero(n, n));
    }
  }
  // vec(AW + WAᵀ) = (I⊗A + A⊗I) vec(W) with column-major vec.
  const Eigen::MatrixXd q = -b * b.transpose();
  const Eigen::VectorXd w = k.fullPivLu().solve(Eigen::Map<const Eigen::VectorXd>(q.data(), n * n));
  return Eigen::Map<const Eigen::MatrixXd>(w.data(), n, n);
}

// Objective rebuilt from shape evaluations alone.
double objective_oracle(const ModalModel& model, const std::vector<TransducerGroup>& groups, int n,
                        int m, double gamma) {
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    const Mode& mode = model.flexible(i);
    double sq = 0.0;
    for (const auto& g : groups) {
      for (const auto& p : g.expand(model.geometry)) {
        const double v = g.gain * eval_shape_at(model, model.rigid_count + i, p);
        sq += v * v;
      }
    }
    const double w = sq / (4.0 * mode.zeta * mode.omega);
    total += i < n ? w : -gamma * w;
  }
  return total;
}

}  // namespace

TEST(Grammian, ClosedFormMatchesLyapunovSolution) {
  Mode mode;
  mode.omega = 2.0 * M_PI * 73.0;
  mode.zeta = 0.01;
  Eigen::RowVectorXd row(3);
  row << 0.4, -1.3, 0.25;
  // Balanced modal block: state (ω q, q̇).
  Eigen::Matrix2d a;
  a << 0.0, mode.omega, -mode.omega, -2.0 * mode.zeta * mode.omega;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 3);
  b.row(1) = row;
  const Eigen::MatrixXd w = lyapunov(a, b);
  const double closed = controllability_grammian(mode, row);
  EXPECT_NEAR(w(0, 0), closed, 1e-9 * closed);
  EXPECT_NEAR(w(1, 1), closed, 1e-9 * closed);
  EXPECT_NEAR(w(0, 1), 0.0, 1e-9 * closed);
  EXPECT_DOUBLE_EQ(observability_grammian(mode, row.transpose()), closed);
}

TEST(Grammian, UndampedModeRejected) {
  Mode mode;
  mode.omega = 10.0;
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(2);
  EXPECT_THROW(controllability_grammian(mode, row), Error);
}

TEST(Grammian, GroupOverloadUsesShapeEvaluations) {
  const ModalModel& model = stage_model();
  const PlacementConfig c = default_placement(model.geometry);
  for (int i = 0; i < 4; ++i) {
    double sq = 0.0;
    for (const auto& g : c.actuators) {
      for (const auto& p : g.expand(model.geometry)) {
        sq += std::pow(g.gain * eval_shape_at(model, model.rigid_count + i, p), 2);
      }
    }
    const Mode& mode = model.flexible(i);
    const double expected = sq / (4.0 * mode.zeta * mode.omega);
    EXPECT_NEAR(controllability_grammian(model, i, c.actuators), expected, 1e-12 * expected);
  }
}

TEST(Objective, LinearInGamma) {
  const ModalModel& model = stage_model();
  const auto acts = default_placement(model.geometry).actuators;
  const double j0 = actuator_objective(model, acts, 1, 4, 0.0);
  const double j1 = actuator_objective(model, acts, 1, 4, 1.0);
  const double j3 = actuator_objective(model, acts, 1, 4, 3.0);
  EXPECT_NEAR(j3 - j0, 3.0 * (j1 - j0), 1e-9 * std::abs(j0));
  EXPECT_LE(j1, j0);
  EXPECT_NEAR(j0, controllability_grammian(model, 0, acts), 1e-12 * j0);
}

TEST(Objective, MatchesOracle) {
  const ModalModel& model = stage_model();
  const PlacementConfig c = default_placement(model.geometry);
  const double a = actuator_objective(model, c.actuators, 1, 4, 0.7);
  const double s = sensor_objective(model, c.sensors, 1, 4, 0.7);
  EXPECT_NEAR(a, objective_oracle(model, c.actuators, 1, 4, 0.7), 1e-10 * std::abs(a));
  EXPECT_NEAR(s, objective_oracle(model, c.sensors, 1, 4, 0.7), 1e-10 * std::abs(s));
}

TEST(Placement, PerGroupArgmaxEqualsJointEnumeration) {
  const ModalModel& model = stage_model();
  const PlacementConfig init = default_placement(model.geometry);
  const int res = 4;
  const PlacementResult r = optimize_placement(model, init, 1, 4, res);

  // Joint enumeration over all actuator groups at once.
  std::vector<std::vector<Eigen::Vector2d>> grids;
  for (const auto& g : init.actuators) grids.push_back(domain_grid(g.domain, res));
  const int per = res * res;
  double best = -INFINITY;
  for (int k = 0; k < per * per * per; ++k) {
    std::vector<TransducerGroup> groups = init.actuators;
    for (int g = 0, idx = k; g < 3; ++g, idx /= per) groups[g].location = grids[g][idx % per];
    best = std::max(best, objective_oracle(model, groups, 1, 4, init.gamma));
  }
  EXPECT_NEAR(r.actuator_objective, best, 1e-9 * std::abs(best));
  EXPECT_NEAR(objective_oracle(model, r.config.actuators, 1, 4, init.gamma), best,
              1e-9 * std::abs(best));
  EXPECT_NO_THROW(r.config.validate(model.geometry, 1));
}

TEST(Placement, SensorGroupsAreIndividualMaxima) {
  const ModalModel& model = stage_model();
  const PlacementConfig init = default_placement(model.geometry);
  const PlacementResult r = optimize_placement(model, init, 1, 4, 5);
  for (std::size_t g = 0; g < init.sensors.size(); ++g) {
    const double chosen = objective_oracle(model, {r.config.sensors[g]}, 1, 4, init.gamma);
    for (const auto& p : domain_grid(init.sensors[g].domain, 5)) {
      EXPECT_LE(objective_oracle(model, {init.sensors[g].at(p)}, 1, 4, init.gamma),
                chosen + 1e-12 * std::abs(chosen));
    }
  }
}

TEST(Placement, LandscapeParallelIdenticalToSerial) {
  const ModalModel& model = stage_model();
  const auto g = default_placement(model.geometry).actuators[0];
  const GroupLandscape a = group_landscape(model, g, true, 1, 4, 1.0, 9);
  const GroupLandscape b = group_landscape_serial(model, g, true, 1, 4, 1.0, 9);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.argmax, b.argmax);
  ASSERT_EQ(a.points.size(), 81u);
  // Scan order: x varies fastest.
  EXPECT_EQ(a.points[1].y(), a.points[0].y());
  EXPECT_GT(a.points[1].x(), a.points[0].x());
}

TEST(Transducers, SymmetryImagesMirrorLocationAndDirection) {
  const StageGeometry g = make_ribbed_stage();
  TransducerGroup t;
  t.location = {0.05, 0.02};
  t.direction = Eigen::Vector3d(0.6, 0.8, 0.0);
  t.height = 0.01;
  t.symmetry = Symmetry::kQuad;
  const auto p = t.expand(g);
  ASSERT_EQ(p.size(), 4u);
  const Eigen::Vector2d c = g.origin + 0.5 * Eigen::Vector2d(g.length_x, g.length_y);
  EXPECT_NEAR(p[1].location.x(), 2 * c.x() - 0.05, 1e-15);
  EXPECT_NEAR(p[1].direction.x(), -0.6, 1e-15);
  EXPECT_NEAR(p[1].direction.y(), 0.8, 1e-15);
  EXPECT_NEAR(p[2].location.y(), 2 * c.y() - 0.02, 1e-15);
  EXPECT_NEAR(p[2].direction.y(), -0.8, 1e-15);
  EXPECT_NEAR(p[3].location.x(), 0.05, 1e-15);
  for (const auto& q : p) EXPECT_EQ(q.location.z(), 0.01);
}

TEST(Transducers, ValidationErrors) {
  const StageGeometry g = make_ribbed_stage();
  PlacementConfig c = default_placement(g);
  EXPECT_NO_THROW(c.validate(g, 1));
  EXPECT_GE(c.actuator_count(), 7);

  PlacementConfig outside = c;
  outside.actuators[0].location = outside.actuators[0].domain.hi + Eigen::Vector2d(0.01, 0.0);
  EXPECT_THROW(outside.validate(g, 1), Error);

  PlacementConfig few = c;
  few.actuators.resize(1);
  try {
    few.validate(g, 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }

  PlacementConfig neg = c;
  neg.gamma = -1.0;
  EXPECT_THROW(neg.validate(g, 1), Error);
  EXPECT_THROW(domain_grid(c.actuators[0].domain, 1), Error);
}

TEST(Transducers, MapsFollowChannelOrder) {
  const ModalModel& model = stage_model();
  const PlacementConfig c = default_placement(model.geometry);
  const Eigen::MatrixXd b = actuation_map(model, c.actuators);
  const Eigen::MatrixXd s = sensing_map(model, c.sensors);
  EXPECT_EQ(b.rows(), kRigidDofs + model.flexible_count());
  EXPECT_EQ(b.cols(), c.actuator_count());
  EXPECT_EQ(s.rows(), c.sensor_count());
  // An x-direction forcer drives rigid x with unit gain per mass-normalized coordinate.
  const int x_col = 4 + 2;  // quad z group, mirrored y group, then x group
  EXPECT_NEAR(b(0, x_col) * std::sqrt(model.total_mass), 1.0, 1e-9);
  EXPECT_NEAR(b(1, x_col), 0.0, 1e-12);
}
