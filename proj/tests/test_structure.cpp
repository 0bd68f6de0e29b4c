#include <gtest/gtest.h>

#include <cmath>

#include "flexstage/error.hpp"
#include "flexstage/structure_opt.hpp"

using namespace flexstage;

namespace {

constexpr double kHz = 2.0 * M_PI;

StageGeometry small_stage() {
  RibbedStageOptions o;
  o.nx = o.ny = 10;
  return make_ribbed_stage(o);
}

// Independent feasibility check straight from a fresh modal analysis.
struct Oracle {
  const StructureProblem& p;
  double mass(const Eigen::VectorXd& t) const {
    return total_mass(p.geometry.with_thickness(t), p.material);
  }
  bool feasible(const Eigen::VectorXd& t) const {
    const ModalModel m = analyze_geometry(p.geometry.with_thickness(t), p.material, p.mode_count());
    const Eigen::VectorXd w = m.flexible_omegas();
    for (const auto& b : p.bounds) {
      const double slack = b.kind == FrequencyBound::Kind::kAtMost ? b.omega - w[b.flexible_index]
                                                                   : w[b.flexible_index] - b.omega;
      if (slack / std::max(b.omega, 1.0) < -1e-6) return false;
    }
    return true;
  }
};

// Lightest feasible grid point and the mass change of one grid step.
struct GridBest {
  double mass = INFINITY;
  double one_step = 0.0;
};

GridBest grid_search(const StructureProblem& p, int per_axis) {
  const Oracle o{p};
  const StageGeometry& g = p.geometry;
  std::vector<int> free;
  for (int k = 0; k < g.region_count(); ++k) {
    if (g.thickness_max[k] > g.thickness_min[k]) free.push_back(k);
  }
  const Eigen::VectorXd step = (g.thickness_max - g.thickness_min) / (per_axis - 1);
  const Eigen::VectorXd grad = mass_gradient(g, p.material);
  GridBest best;
  for (int k : free) best.one_step += std::abs(grad[k]) * step[k];
  const int n2 = free.size() > 1 ? per_axis : 1;
  for (int b = 0; b < n2; ++b) {
    for (int a = 0; a < per_axis; ++a) {
      Eigen::VectorXd t = g.thickness_min;
      t[free[0]] += a * step[free[0]];
      if (free.size() > 1) t[free[1]] += b * step[free[1]];
      if (o.feasible(t)) best.mass = std::min(best.mass, o.mass(t));
    }
  }
  return best;
}

StructureProblem one_dimensional() {
  StructureProblem p{small_stage(), Material{}, baseline_bounds(kHz * 150.0)};
  p.geometry.thickness[1] = p.geometry.thickness_min[1] = p.geometry.thickness_max[1] = 0.012;
  return p;
}

StructureProblem two_dimensional() {
  return {small_stage(), Material{}, to_bounds({kHz * 50.0, kHz * 560.0, 1, 3})};
}

}  // namespace

TEST(Constraints, SlacksMatchFreshModalAnalysis) {
  const StructureProblem p = two_dimensional();
  const Eigen::VectorXd t = p.geometry.thickness;
  const DesignEvaluation e = evaluate_design(p, t);
  const Eigen::VectorXd w =
      analyze_geometry(p.geometry.with_thickness(t), p.material, p.mode_count()).flexible_omegas();
  ASSERT_EQ(e.slacks.size(), 4);
  EXPECT_DOUBLE_EQ(e.slacks[0], kHz * 50.0 - w[0]);
  for (int j = 1; j < 4; ++j) EXPECT_DOUBLE_EQ(e.slacks[j], w[j] - kHz * 560.0);
  EXPECT_EQ(e.feasible(), e.slacks.minCoeff() >= 0.0);
  EXPECT_NEAR(e.mass, total_mass(p.geometry, p.material), 1e-12);
}

TEST(Constraints, SpecValidation) {
  EXPECT_THROW(to_bounds({kHz * 600.0, kHz * 560.0, 1, 3}), Error);
  EXPECT_THROW(to_bounds({kHz * 50.0, kHz * 560.0, 0, 3}), Error);
  const auto b = to_bounds({1.0, 2.0, 2, 3});
  ASSERT_EQ(b.size(), 5u);
  EXPECT_EQ(b[1].kind, FrequencyBound::Kind::kAtMost);
  EXPECT_EQ(b[2].flexible_index, 2);
  EXPECT_EQ(b[2].kind, FrequencyBound::Kind::kAtLeast);
}

TEST(Constraints, MassIsLinearInThickness) {
  const StructureProblem p = two_dimensional();
  const Eigen::VectorXd g = mass_gradient(p.geometry, p.material);
  const Eigen::VectorXd t0 = p.geometry.thickness;
  const Eigen::VectorXd t1 = t0 + Eigen::Vector2d(0.001, 0.004);
  EXPECT_NEAR(total_mass(p.geometry.with_thickness(t1), p.material) -
                  total_mass(p.geometry.with_thickness(t0), p.material),
              g.dot(t1 - t0), 1e-12);
}

TEST(Constraints, ParallelBatchIdenticalToSerial) {
  const StructureProblem p = two_dimensional();
  std::vector<Eigen::VectorXd> thetas;
  for (int k = 0; k < 6; ++k) thetas.push_back(Eigen::Vector2d(0.001 + 0.002 * k, 0.01 + 0.005 * k));
  const auto a = evaluate_designs(p, thetas);
  const auto b = evaluate_designs_serial(p, thetas);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mass, b[i].mass);
    EXPECT_EQ(a[i].slacks, b[i].slacks);
    EXPECT_EQ(a[i].flexible_omegas, b[i].flexible_omegas);
  }
}

TEST(Optimizer, OneDimensionalWithinOneGridStepOfSweep) {
  const StructureProblem p = one_dimensional();
  const OptimizationResult r = optimize_structure(p);
  ASSERT_TRUE(r.feasible) << r.report;
  const GridBest best = grid_search(p, 200);
  ASSERT_TRUE(std::isfinite(best.mass));
  EXPECT_LE(std::abs(r.mass - best.mass), best.one_step);
  EXPECT_TRUE(Oracle{p}.feasible(r.theta_star));
}

TEST(Optimizer, TwoDimensionalWithinOneGridStepOfSweep) {
  const StructureProblem p = two_dimensional();
  const OptimizationResult r = optimize_structure(p);
  ASSERT_TRUE(r.feasible) << r.report;
  const GridBest best = grid_search(p, 15);
  ASSERT_TRUE(std::isfinite(best.mass));
  EXPECT_LE(r.mass, best.mass + best.one_step);
  EXPECT_TRUE(Oracle{p}.feasible(r.theta_star));
  EXPECT_EQ(r.constraint_values.size(), 4);
  EXPECT_GE(r.constraint_values.minCoeff() / (kHz * 560.0), -1e-6);
}

TEST(Optimizer, LibrarySweepAgreesWithOracleGrid) {
  const StructureProblem p = one_dimensional();
  const SweepResult s = exhaustive_sweep(p, 40);
  ASSERT_GE(s.best_index, 0);
  EXPECT_NEAR(s.samples[s.best_index].mass, grid_search(p, 40).mass, 1e-12);
}

TEST(Optimizer, DeterministicForSeed) {
  const StructureProblem p = two_dimensional();
  OptimizerOptions o;
  o.seed = 7;
  const OptimizationResult a = optimize_structure(p, o);
  const OptimizationResult b = optimize_structure(p, o);
  EXPECT_EQ(a.theta_star, b.theta_star);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(Optimizer, ImpossibleBoundsReportedInfeasible) {
  StructureProblem p = two_dimensional();
  p.bounds = to_bounds({kHz * 1.0, kHz * 100000.0, 1, 3});
  OptimizerOptions o;
  o.max_evaluations = 200;
  const OptimizationResult r = optimize_structure(p, o);
  EXPECT_FALSE(r.feasible);
  EXPECT_GT(r.best_violation, 0.0);
  EXPECT_FALSE(r.report.empty());
}

TEST(Optimizer, BaselineMeetsFirstResonanceBound) {
  const StageGeometry g = small_stage();
  const OptimizationResult r = design_baseline(g, Material{}, kHz * 250.0);
  ASSERT_TRUE(r.feasible) << r.report;
  EXPECT_GE(r.flexible_omegas[0], kHz * 250.0 * (1.0 - 1e-6));
}

TEST(Optimizer, OmegaHighSweepShape) {
  OptimizerOptions o;
  o.max_evaluations = 150;
  const auto pts = sweep_omega_high(small_stage(), Material{}, {kHz * 50.0, kHz * 500.0, 1, 3},
                                    kHz * 400.0, kHz * 600.0, 3, o);
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_DOUBLE_EQ(pts[1].omega_high, kHz * 500.0);
  EXPECT_THROW(sweep_omega_high(small_stage(), Material{}, {kHz * 50.0, kHz * 500.0, 1, 3},
                                kHz * 600.0, kHz * 400.0, 3, o),
               Error);
}

TEST(Constraints, ThickUniformPlateViolatesLowBound) {
  StageGeometry g = make_uniform_plate(0.3, 0.3, 8, 8, 0.02);
  g.thickness_min[0] = 0.001;
  g.thickness_max[0] = 0.02;
  const StructureProblem p{g, Material{}, to_bounds({kHz * 50.0, kHz * 560.0, 1, 3})};
  const DesignEvaluation e = evaluate_design(p, g.thickness);
  EXPECT_LT(e.slacks[0], 0.0);
  EXPECT_FALSE(e.feasible());
}

TEST(Optimizer, CollapsedBoxReturnsThePointOrReports) {
  StageGeometry g = make_uniform_plate(0.3, 0.3, 8, 8, 0.006);
  const StructureProblem ok{g, Material{}, baseline_bounds(kHz * 100.0)};
  const OptimizationResult a = optimize_structure(ok);
  ASSERT_TRUE(a.feasible);
  EXPECT_EQ(a.theta_star[0], 0.006);

  const StructureProblem bad{g, Material{}, baseline_bounds(kHz * 5000.0)};
  const OptimizationResult b = optimize_structure(bad);
  EXPECT_FALSE(b.feasible);
  EXPECT_GT(b.best_violation, 0.0);
}

TEST(Optimizer, VacuousBaselineBoundGivesLightestCorner) {
  const StageGeometry g = small_stage();
  const OptimizationResult r = design_baseline(g, Material{}, 1e-3);
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.theta_star, g.thickness_min);
}

TEST(Optimizer, RemovesMaterialBelowFullThickness) {
  const StructureProblem p = two_dimensional();
  const OptimizationResult r = optimize_structure(p);
  ASSERT_TRUE(r.feasible);
  EXPECT_LT(r.mass, total_mass(p.geometry.with_thickness(p.geometry.thickness_max), p.material));
  EXPECT_TRUE(evaluate_design(p, r.theta_star).feasible(1e-6));
}
