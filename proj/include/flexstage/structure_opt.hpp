#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "flexstage/geometry.hpp"
#include "flexstage/modal.hpp"

namespace flexstage {

/// Mass-minimization constraint instance: the first n flexible modes must sit
/// at or below omega_low and the next (m − n) at or above omega_high.
struct FrequencyConstraintSpec {
  double omega_low = 0.0;   // rad/s
  double omega_high = 0.0;  // rad/s
  int n_controlled = 1;
  int n_constrained_uncontrolled = 3;

  void validate() const;
};

/// One bound on a sorted flexible frequency.
struct FrequencyBound {
  enum class Kind { kAtMost, kAtLeast };
  int flexible_index = 0;
  Kind kind = Kind::kAtMost;
  double omega = 0.0;  // rad/s
};

std::vector<FrequencyBound> to_bounds(const FrequencyConstraintSpec& spec);
std::vector<FrequencyBound> baseline_bounds(double min_first_resonance);

struct StructureProblem {
  StageGeometry geometry;  // thickness is the start point; bounds from here
  Material material;
  std::vector<FrequencyBound> bounds;

  /// Eigenpairs to request so that every constrained mode is available.
  int mode_count() const;
};

/// Constraint values at one design point.
struct DesignEvaluation {
  Eigen::VectorXd theta;
  double mass = 0.0;
  Eigen::VectorXd slacks;           // rad/s, ≥ 0 when satisfied
  Eigen::VectorXd relative_slacks;  // slack / bound
  Eigen::VectorXd flexible_omegas;  // rad/s

  bool feasible(double tolerance = 1e-6) const;
  double worst_violation() const;  // max(0, −min relative slack)
};

/// Slack vector (ω_low − ω_i for controlled modes, ω_j − ω_high for the
/// constrained uncontrolled ones) from a fresh eigensolve at theta.
Eigen::VectorXd evaluate_constraints(const StructureProblem& problem,
                                     const Eigen::VectorXd& theta);

DesignEvaluation evaluate_design(const StructureProblem& problem,
                                 const Eigen::VectorXd& theta);

/// Batch evaluation, one eigensolve per point. The parallel version is
/// bit-identical to the serial one.
std::vector<DesignEvaluation> evaluate_designs(
    const StructureProblem& problem, const std::vector<Eigen::VectorXd>& thetas);
std::vector<DesignEvaluation> evaluate_designs_serial(
    const StructureProblem& problem, const std::vector<Eigen::VectorXd>& thetas);

struct OptimizerOptions {
  unsigned seed = 1;
  /// Stop when the poll step falls below this fraction of the box width.
  double step_tolerance = 1e-4;
  double feasibility_tolerance = 1e-6;
  /// Design points in the initial feasibility sweep (rounded per axis).
  int sweep_points = 64;
  int outer_iterations = 5;
  int max_evaluations = 6000;
  double initial_penalty = 50.0;
};

struct OptimizationResult {
  Eigen::VectorXd theta_star;
  double mass = 0.0;
  Eigen::VectorXd constraint_values;  // absolute slacks, rad/s
  Eigen::VectorXd flexible_omegas;
  int iterations = 0;
  int evaluations = 0;
  bool feasible = false;
  /// Best constraint violation (relative) when infeasible.
  double best_violation = 0.0;
  std::string report;
};

/// Minimizes mass over region thicknesses subject to the frequency bounds.
/// Derivative-free: a feasibility sweep, augmented-Lagrangian pattern search
/// on coordinate plus seeded random directions, then a feasible-only polish.
/// Returns the lightest feasible point visited; deterministic given a seed.
OptimizationResult optimize_structure(const StructureProblem& problem,
                                      const OptimizerOptions& options = {});

OptimizationResult optimize_structure(const StageGeometry& geometry,
                                      const Material& material,
                                      const FrequencyConstraintSpec& spec,
                                      const OptimizerOptions& options = {});

/// Lightest design with the first flexible mode at or above the bound.
OptimizationResult design_baseline(const StageGeometry& geometry,
                                   const Material& material,
                                   double min_first_resonance,
                                   const OptimizerOptions& options = {});

/// Exhaustive grid search over ≤ 2 free design variables with
/// `points_per_axis` samples per axis including both bounds.
struct SweepResult {
  std::vector<DesignEvaluation> samples;
  int best_index = -1;  // lightest feasible, −1 if none
  Eigen::VectorXd step;  // grid spacing per region
};

SweepResult exhaustive_sweep(const StructureProblem& problem,
                             int points_per_axis);

struct OmegaHighPoint {
  double omega_high = 0.0;  // rad/s
  OptimizationResult result;
};

/// Re-optimizes the structure for each ω_high in a linear sweep.
std::vector<OmegaHighPoint> sweep_omega_high(const StageGeometry& geometry,
                                             const Material& material,
                                             FrequencyConstraintSpec spec,
                                             double from, double to, int steps,
                                             const OptimizerOptions& options = {});

}  // namespace flexstage
