#include "flexstage/structure_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "flexstage/error.hpp"
#include "flexstage/parallel.hpp"

namespace flexstage {

void FrequencyConstraintSpec::validate() const {
  if (!(omega_low > 0.0 && omega_low < omega_high)) {
    throw Error(ErrorKind::kInvalidArgument,
                "frequency constraints need 0 < omega_low < omega_high");
  }
  if (n_controlled < 1) {
    throw Error(ErrorKind::kInvalidArgument, "n_controlled must be >= 1");
  }
  if (n_constrained_uncontrolled < 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "n_constrained_uncontrolled must be >= 0");
  }
}

std::vector<FrequencyBound> to_bounds(const FrequencyConstraintSpec& spec) {
  spec.validate();
  std::vector<FrequencyBound> bounds;
  for (int i = 0; i < spec.n_controlled; ++i) {
    bounds.push_back({i, FrequencyBound::Kind::kAtMost, spec.omega_low});
  }
  for (int j = 0; j < spec.n_constrained_uncontrolled; ++j) {
    bounds.push_back({spec.n_controlled + j, FrequencyBound::Kind::kAtLeast,
                      spec.omega_high});
  }
  return bounds;
}

std::vector<FrequencyBound> baseline_bounds(double min_first_resonance) {
  if (!(min_first_resonance >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "minimum first resonance must be >= 0");
  }
  return {{0, FrequencyBound::Kind::kAtLeast, min_first_resonance}};
}

int StructureProblem::mode_count() const {
  int highest = 0;
  for (const auto& b : bounds) highest = std::max(highest, b.flexible_index);
  return kOutOfPlaneRigidModes + highest + 1;
}

bool DesignEvaluation::feasible(double tolerance) const {
  return relative_slacks.size() == 0 ||
         relative_slacks.minCoeff() >= -tolerance;
}

double DesignEvaluation::worst_violation() const {
  if (relative_slacks.size() == 0) return 0.0;
  return std::max(0.0, -relative_slacks.minCoeff());
}

DesignEvaluation evaluate_design(const StructureProblem& problem,
                                 const Eigen::VectorXd& theta) {
  const StageGeometry g = problem.geometry.with_thickness(theta);
  g.validate();
  DesignEvaluation e;
  e.theta = theta;
  e.mass = total_mass(g, problem.material);

  const ModalModel model =
      analyze_geometry(g, problem.material, problem.mode_count());
  e.flexible_omegas = model.flexible_omegas();

  const int nb = static_cast<int>(problem.bounds.size());
  e.slacks.resize(nb);
  e.relative_slacks.resize(nb);
  for (int k = 0; k < nb; ++k) {
    const FrequencyBound& b = problem.bounds[k];
    if (b.flexible_index >= e.flexible_omegas.size()) {
      throw Error(ErrorKind::kEigensolver,
                  "flexible mode " + std::to_string(b.flexible_index + 1) +
                      " not found in the solved spectrum");
    }
    const double w = e.flexible_omegas[b.flexible_index];
    e.slacks[k] = b.kind == FrequencyBound::Kind::kAtMost ? b.omega - w
                                                          : w - b.omega;
    // A zero bound is vacuous; measure against 1 rad/s instead.
    e.relative_slacks[k] = e.slacks[k] / std::max(b.omega, 1.0);
  }
  return e;
}

Eigen::VectorXd evaluate_constraints(const StructureProblem& problem,
                                     const Eigen::VectorXd& theta) {
  return evaluate_design(problem, theta).slacks;
}

std::vector<DesignEvaluation> evaluate_designs(
    const StructureProblem& problem, const std::vector<Eigen::VectorXd>& thetas) {
  std::vector<DesignEvaluation> out(thetas.size());
  parallel_for(static_cast<int>(thetas.size()),
               [&](int i) { out[i] = evaluate_design(problem, thetas[i]); });
  return out;
}

std::vector<DesignEvaluation> evaluate_designs_serial(
    const StructureProblem& problem, const std::vector<Eigen::VectorXd>& thetas) {
  std::vector<DesignEvaluation> out(thetas.size());
  serial_for(static_cast<int>(thetas.size()),
             [&](int i) { out[i] = evaluate_design(problem, thetas[i]); });
  return out;
}

namespace {

// Search runs in the unit box u ∈ [0,1]^d over the free regions only; a
// region with θ_min = θ_max stays fixed.
class BoxMap {
 public:
  explicit BoxMap(const StageGeometry& g) : lo_(g.thickness_min), hi_(g.thickness_max) {
    for (int k = 0; k < lo_.size(); ++k) {
      if (hi_[k] > lo_[k]) free_.push_back(k);
    }
  }

  int dim() const { return static_cast<int>(free_.size()); }

  Eigen::VectorXd theta(const Eigen::VectorXd& u) const {
    Eigen::VectorXd t = lo_;
    for (int a = 0; a < dim(); ++a) {
      const int k = free_[a];
      t[k] = lo_[k] + std::clamp(u[a], 0.0, 1.0) * (hi_[k] - lo_[k]);
    }
    return t;
  }

  Eigen::VectorXd unit(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd u(dim());
    for (int a = 0; a < dim(); ++a) {
      const int k = free_[a];
      u[a] = std::clamp((theta[k] - lo_[k]) / (hi_[k] - lo_[k]), 0.0, 1.0);
    }
    return u;
  }

  const Eigen::VectorXd& upper() const { return hi_; }

 private:
  Eigen::VectorXd lo_, hi_;
  std::vector<int> free_;
};

struct Point {
  Eigen::VectorXd u;
  DesignEvaluation eval;
};

class Search {
 public:
  Search(const StructureProblem& problem, const OptimizerOptions& options)
      : problem_(problem), options_(options), box_(problem.geometry),
        rng_(options.seed) {
    mass_scale_ = total_mass(problem.geometry.with_thickness(box_.upper()),
                             problem.material);
  }

  const BoxMap& box() const { return box_; }
  int evaluations() const { return evaluations_; }
  int iterations() const { return iterations_; }
  bool budget_left() const { return evaluations_ < options_.max_evaluations; }
  const Point* best_feasible() const {
    return best_feasible_ ? &*best_feasible_ : nullptr;
  }
  const Point* least_violation() const {
    return least_violation_ ? &*least_violation_ : nullptr;
  }

  std::vector<Point> evaluate(const std::vector<Eigen::VectorXd>& us) {
    std::vector<Eigen::VectorXd> thetas;
    thetas.reserve(us.size());
    for (const auto& u : us) thetas.push_back(box_.theta(u));
    const auto evals = evaluate_designs(problem_, thetas);
    std::vector<Point> pts;
    for (std::size_t i = 0; i < us.size(); ++i) {
      pts.push_back({us[i], evals[i]});
      record(pts.back());
    }
    evaluations_ += static_cast<int>(us.size());
    return pts;
  }

  Point sweep() {
    const int d = box_.dim();
    const int per_axis = std::max(
        2, static_cast<int>(std::lround(
               std::pow(static_cast<double>(options_.sweep_points), 1.0 / d))));
    std::vector<Eigen::VectorXd> us;
    std::vector<int> idx(d, 0);
    while (true) {
      Eigen::VectorXd u(d);
      for (int a = 0; a < d; ++a) u[a] = static_cast<double>(idx[a]) / (per_axis - 1);
      us.push_back(u);
      int a = 0;
      while (a < d && ++idx[a] == per_axis) idx[a++] = 0;
      if (a == d) break;
    }
    evaluate(us);
    return best_feasible_ ? *best_feasible_ : *least_violation_;
  }

  // PHR augmented Lagrangian on relative slacks g ≥ 0.
  double merit(const DesignEvaluation& e, const Eigen::VectorXd& lambda,
               double rho) const {
    double phi = e.mass / mass_scale_;
    for (int k = 0; k < lambda.size(); ++k) {
      const double t = std::max(0.0, lambda[k] - rho * e.relative_slacks[k]);
      phi += (t * t - lambda[k] * lambda[k]) / (2.0 * rho);
    }
    return phi;
  }

  double barrier(const DesignEvaluation& e) const {
    return e.feasible(options_.feasibility_tolerance)
               ? e.mass / mass_scale_
               : std::numeric_limits<double>::infinity();
  }

  // Pattern search on ±coordinate directions plus one seeded random pair
  // per poll; the best improving poll point is accepted.
  template <class Objective>
  Point pattern_search(Point start, double step, double min_step,
                       Objective objective) {
    Point current = std::move(start);
    double f = objective(current.eval);
    const int d = box_.dim();
    std::normal_distribution<double> normal;
    while (step >= min_step && budget_left()) {
      ++iterations_;
      std::vector<Eigen::VectorXd> dirs;
      for (int a = 0; a < d; ++a) {
        dirs.push_back(Eigen::VectorXd::Unit(d, a));
        dirs.push_back(-Eigen::VectorXd::Unit(d, a));
      }
      if (d > 1) {
        Eigen::VectorXd r(d);
        for (int a = 0; a < d; ++a) r[a] = normal(rng_);
        r.normalize();
        dirs.push_back(r);
        dirs.push_back(-r);
      }
      std::vector<Eigen::VectorXd> trial;
      for (const auto& dir : dirs) {
        const Eigen::VectorXd u =
            (current.u + step * dir).cwiseMax(0.0).cwiseMin(1.0);
        if ((u - current.u).norm() > 0.25 * step) trial.push_back(u);
      }
      if (trial.empty()) {
        step *= 0.5;
        continue;
      }
      auto pts = evaluate(trial);
      int best = -1;
      double best_f = f;
      for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
        const double fi = objective(pts[i].eval);
        if (fi < best_f - 1e-12 * std::abs(best_f)) {
          best_f = fi;
          best = i;
        }
      }
      if (best >= 0) {
        current = std::move(pts[best]);
        f = best_f;
      } else {
        step *= 0.5;
      }
    }
    return current;
  }

 private:
  void record(const Point& p) {
    if (p.eval.feasible(options_.feasibility_tolerance)) {
      if (!best_feasible_ || p.eval.mass < best_feasible_->eval.mass) {
        best_feasible_ = p;
      }
    } else if (!least_violation_ || p.eval.worst_violation() <
                                        least_violation_->eval.worst_violation()) {
      least_violation_ = p;
    }
  }

  const StructureProblem& problem_;
  const OptimizerOptions& options_;
  BoxMap box_;
  std::mt19937 rng_;
  double mass_scale_ = 1.0;
  int evaluations_ = 0;
  int iterations_ = 0;
  std::optional<Point> best_feasible_;
  std::optional<Point> least_violation_;
};

OptimizationResult finish(const StructureProblem& problem, const Search& search,
                          const OptimizerOptions& options) {
  OptimizationResult r;
  r.iterations = search.iterations();
  r.evaluations = search.evaluations();
  const Point* best = search.best_feasible();
  const Point* fallback = best ? best : search.least_violation();
  r.theta_star = fallback->eval.theta;
  r.mass = fallback->eval.mass;
  r.constraint_values = fallback->eval.slacks;
  r.flexible_omegas = fallback->eval.flexible_omegas;
  r.feasible = best != nullptr;
  r.best_violation = fallback->eval.worst_violation();

  std::ostringstream os;
  os << (r.feasible ? "feasible" : "infeasible") << " design after "
     << r.evaluations << " evaluations, " << r.iterations << " polls\n";
  os << "  mass " << r.mass << " kg\n  thickness [m]:";
  for (int k = 0; k < r.theta_star.size(); ++k) os << ' ' << r.theta_star[k];
  os << "\n  constraints:\n";
  for (std::size_t k = 0; k < problem.bounds.size(); ++k) {
    const auto& b = problem.bounds[k];
    os << "    flex " << b.flexible_index + 1
       << (b.kind == FrequencyBound::Kind::kAtMost ? " <= " : " >= ")
       << b.omega / (2.0 * M_PI) << " Hz: "
       << r.flexible_omegas[b.flexible_index] / (2.0 * M_PI)
       << " Hz (slack " << r.constraint_values[k] << " rad/s)\n";
  }
  if (!r.feasible) {
    os << "  no feasible point found; best relative violation "
       << r.best_violation << " (tolerance " << options.feasibility_tolerance
       << ")\n";
  }
  r.report = os.str();
  return r;
}

}  // namespace

OptimizationResult optimize_structure(const StructureProblem& problem,
                                      const OptimizerOptions& options) {
  problem.geometry.validate();
  problem.material.validate();
  if (problem.bounds.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "no frequency constraints given");
  }
  Search search(problem, options);
  const int d = search.box().dim();

  if (d == 0) {
    search.evaluate({Eigen::VectorXd(0)});
    return finish(problem, search, options);
  }

  Point start = search.sweep();

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(problem.bounds.size());
  double rho = options.initial_penalty;
  double violation = start.eval.worst_violation();
  double step = 0.25;
  for (int outer = 0; outer < options.outer_iterations && search.budget_left();
       ++outer) {
    const double min_step =
        std::max(options.step_tolerance, 1e-2 * std::pow(0.1, outer));
    start = search.pattern_search(
        std::move(start), step, min_step,
        [&](const DesignEvaluation& e) { return search.merit(e, lambda, rho); });
    for (int k = 0; k < lambda.size(); ++k) {
      lambda[k] = std::max(0.0, lambda[k] - rho * start.eval.relative_slacks[k]);
    }
    const double v = start.eval.worst_violation();
    if (v > 0.25 * violation) rho *= 10.0;
    violation = v;
    step = 0.05;
    if (min_step <= options.step_tolerance && v <= options.feasibility_tolerance) {
      break;
    }
  }

  // Feasible-only polish from the lightest feasible point seen.
  if (const Point* best = search.best_feasible()) {
    search.pattern_search(*best, 0.05, options.step_tolerance,
                          [&](const DesignEvaluation& e) { return search.barrier(e); });
  }
  return finish(problem, search, options);
}

OptimizationResult optimize_structure(const StageGeometry& geometry,
                                      const Material& material,
                                      const FrequencyConstraintSpec& spec,
                                      const OptimizerOptions& options) {
  return optimize_structure(StructureProblem{geometry, material, to_bounds(spec)},
                            options);
}

OptimizationResult design_baseline(const StageGeometry& geometry,
                                   const Material& material,
                                   double min_first_resonance,
                                   const OptimizerOptions& options) {
  return optimize_structure(
      StructureProblem{geometry, material, baseline_bounds(min_first_resonance)},
      options);
}

SweepResult exhaustive_sweep(const StructureProblem& problem,
                             int points_per_axis) {
  problem.geometry.validate();
  if (points_per_axis < 2) {
    throw Error(ErrorKind::kInvalidArgument, "sweep needs >= 2 points per axis");
  }
  const StageGeometry& g = problem.geometry;
  std::vector<int> free;
  for (int k = 0; k < g.region_count(); ++k) {
    if (g.thickness_max[k] > g.thickness_min[k]) free.push_back(k);
  }
  if (free.size() > 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "exhaustive sweep supports at most 2 free design variables");
  }
  SweepResult out;
  out.step = (g.thickness_max - g.thickness_min) / (points_per_axis - 1);

  std::vector<Eigen::VectorXd> thetas;
  const int n1 = free.size() > 0 ? points_per_axis : 1;
  const int n2 = free.size() > 1 ? points_per_axis : 1;
  for (int b = 0; b < n2; ++b) {
    for (int a = 0; a < n1; ++a) {
      Eigen::VectorXd t = g.thickness_min;
      if (free.size() > 0) t[free[0]] += a * out.step[free[0]];
      if (free.size() > 1) t[free[1]] += b * out.step[free[1]];
      thetas.push_back(t);
    }
  }
  out.samples = evaluate_designs(problem, thetas);
  for (int i = 0; i < static_cast<int>(out.samples.size()); ++i) {
    if (!out.samples[i].feasible()) continue;
    if (out.best_index < 0 || out.samples[i].mass < out.samples[out.best_index].mass) {
      out.best_index = i;
    }
  }
  return out;
}

std::vector<OmegaHighPoint> sweep_omega_high(const StageGeometry& geometry,
                                             const Material& material,
                                             FrequencyConstraintSpec spec,
                                             double from, double to, int steps,
                                             const OptimizerOptions& options) {
  if (steps < 1 || !(from > 0.0) || !(to >= from)) {
    throw Error(ErrorKind::kInvalidArgument,
                "omega_high sweep needs 0 < from <= to and steps >= 1");
  }
  std::vector<OmegaHighPoint> out;
  for (int s = 0; s < steps; ++s) {
    spec.omega_high = steps == 1 ? from : from + (to - from) * s / (steps - 1);
    out.push_back({spec.omega_high,
                   optimize_structure(geometry, material, spec, options)});
  }
  return out;
}

}  // namespace flexstage
