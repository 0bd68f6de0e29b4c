#include "flexstage/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "flexstage/error.hpp"

namespace flexstage {

namespace {

constexpr double kHz = 2.0 * M_PI;
constexpr double kMm = 1e-3;

using Check = std::function<std::string(double)>;

Check positive() {
  return [](double v) { return v > 0.0 ? "" : "must be > 0"; };
}
Check non_negative() {
  return [](double v) { return v >= 0.0 ? "" : "must be >= 0"; };
}
Check in_range(double lo, double hi) {
  return [lo, hi](double v) {
    if (v >= lo && v <= hi) return std::string();
    std::ostringstream os;
    os << "must be in [" << lo << ", " << hi << "]";
    return os.str();
  };
}

class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) {
    errors.push_back(path + ": " + msg);
  }

  // False when the node is present but not a map.
  bool keys(const YAML::Node& n, const std::string& path,
            const std::set<std::string>& allowed) {
    if (!n) return false;
    if (!n.IsMap()) {
      fail(path.empty() ? "<root>" : path, "expected a mapping");
      return false;
    }
    for (const auto& kv : n) {
      const std::string k = kv.first.as<std::string>();
      if (!allowed.count(k)) fail(join(path, k), "unknown key");
    }
    return true;
  }

  static std::string join(const std::string& a, const std::string& b) {
    return a.empty() ? b : a + "." + b;
  }

  void number(const YAML::Node& n, const std::string& path, const char* key,
              double& out, double scale, const Check& check = {}) {
    if (!n || !n[key]) return;
    const std::string p = join(path, key);
    double v = 0.0;
    try {
      v = n[key].as<double>();
    } catch (const YAML::Exception&) {
      fail(p, "expected a number");
      return;
    }
    if (!std::isfinite(v)) {
      fail(p, "must be finite");
      return;
    }
    if (check) {
      const std::string msg = check(v);
      if (!msg.empty()) {
        fail(p, msg);
        return;
      }
    }
    out = v * scale;
  }

  template <class Int>
  void integer(const YAML::Node& n, const std::string& path, const char* key,
               Int& out, long long lo, long long hi) {
    if (!n || !n[key]) return;
    const std::string p = join(path, key);
    long long v = 0;
    try {
      v = n[key].as<long long>();
    } catch (const YAML::Exception&) {
      fail(p, "expected an integer");
      return;
    }
    if (v < lo || v > hi) {
      fail(p, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return;
    }
    out = static_cast<Int>(v);
  }

  void boolean(const YAML::Node& n, const std::string& path, const char* key,
               bool& out) {
    if (!n || !n[key]) return;
    try {
      out = n[key].as<bool>();
    } catch (const YAML::Exception&) {
      fail(join(path, key), "expected true or false");
    }
  }

  void text(const YAML::Node& n, const std::string& path, const char* key,
            std::string& out, const std::set<std::string>& choices = {}) {
    if (!n || !n[key]) return;
    const std::string p = join(path, key);
    if (!n[key].IsScalar()) {
      fail(p, "expected a string");
      return;
    }
    const std::string v = n[key].as<std::string>();
    if (!choices.empty() && !choices.count(v)) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
      fail(p, "must be one of " + list);
      return;
    }
    out = v;
  }
};

void read_geometry(Reader& r, const YAML::Node& n, ProjectConfig& c) {
  const std::string p = "geometry";
  if (!r.keys(n, p, {"length_x_mm", "length_y_mm", "elements_x", "elements_y",
                     "plate_thickness_mm", "plate_thickness_min_mm",
                     "plate_thickness_max_mm", "rib_thickness_mm",
                     "rib_thickness_min_mm", "rib_thickness_max_mm", "rib_fill",
                     "rib_twist_factor", "perimeter_rib_width_mm",
                     "cross_rib_width_mm", "corner_magnets"})) {
    return;
  }
  auto& g = c.geometry;
  r.number(n, p, "length_x_mm", g.length_x, kMm, positive());
  r.number(n, p, "length_y_mm", g.length_y, kMm, positive());
  r.integer(n, p, "elements_x", g.nx, 2, 200);
  r.integer(n, p, "elements_y", g.ny, 2, 200);
  r.number(n, p, "plate_thickness_mm", g.thickness[0], kMm, positive());
  r.number(n, p, "plate_thickness_min_mm", g.thickness_min[0], kMm, positive());
  r.number(n, p, "plate_thickness_max_mm", g.thickness_max[0], kMm, positive());
  r.number(n, p, "rib_thickness_mm", g.thickness[1], kMm, positive());
  r.number(n, p, "rib_thickness_min_mm", g.thickness_min[1], kMm, positive());
  r.number(n, p, "rib_thickness_max_mm", g.thickness_max[1], kMm, positive());
  r.number(n, p, "rib_fill", g.ribs.fill, 1.0, in_range(1e-3, 1.0));
  r.number(n, p, "rib_twist_factor", g.ribs.twist_factor, 1.0, in_range(0.0, 1.0));
  r.number(n, p, "perimeter_rib_width_mm", g.perimeter_rib_width, kMm, positive());
  r.number(n, p, "cross_rib_width_mm", g.cross_rib_width, kMm, positive());
  r.boolean(n, p, "corner_magnets", g.corner_magnets);
  const char* names[] = {"plate", "rib"};
  for (int k = 0; k < 2; ++k) {
    if (g.thickness_min[k] > g.thickness_max[k]) {
      r.fail(p, std::string(names[k]) + " thickness bounds are reversed");
    } else if (g.thickness[k] < g.thickness_min[k] ||
               g.thickness[k] > g.thickness_max[k]) {
      r.fail(p + "." + names[k] + "_thickness_mm", "outside its bounds");
    }
  }
}

void read_material(Reader& r, const YAML::Node& n, ProjectConfig& c) {
  const std::string p = "material";
  if (!r.keys(n, p, {"youngs_modulus_gpa", "poisson_ratio", "density_kg_per_m3",
                     "modal_damping_ratio", "retained_flexible_modes"})) {
    return;
  }
  r.number(n, p, "youngs_modulus_gpa", c.material.youngs_modulus, 1e9, positive());
  r.number(n, p, "poisson_ratio", c.material.poisson_ratio, 1.0,
           [](double v) { return v >= 0.0 && v < 0.5 ? "" : "must be in [0, 0.5)"; });
  r.number(n, p, "density_kg_per_m3", c.material.density, 1.0, positive());
  r.number(n, p, "modal_damping_ratio", c.damping_ratio, 1.0,
           [](double v) { return v > 0.0 && v < 1.0 ? "" : "must be in (0, 1)"; });
  r.integer(n, p, "retained_flexible_modes", c.retained_flexible, 1, 200);
}

void read_constraints(Reader& r, const YAML::Node& n, ProjectConfig& c) {
  const std::string p = "constraints";
  if (!r.keys(n, p, {"design", "omega_low_hz", "omega_high_hz",
                     "controlled_modes", "constrained_uncontrolled_modes",
                     "min_first_resonance_hz"})) {
    return;
  }
  std::string design = "proposed";
  r.text(n, p, "design", design, {"proposed", "baseline"});
  c.kind = design == "baseline" ? DesignKind::kBaseline : DesignKind::kProposed;
  r.number(n, p, "omega_low_hz", c.constraints.omega_low, kHz, positive());
  r.number(n, p, "omega_high_hz", c.constraints.omega_high, kHz, positive());
  r.integer(n, p, "controlled_modes", c.constraints.n_controlled, 1, 20);
  r.integer(n, p, "constrained_uncontrolled_modes",
            c.constraints.n_constrained_uncontrolled, 0, 20);
  r.number(n, p, "min_first_resonance_hz", c.min_first_resonance, kHz,
           non_negative());
  if (c.kind == DesignKind::kProposed &&
      !(c.constraints.omega_low < c.constraints.omega_high)) {
    r.fail(p + ".omega_high_hz", "must exceed omega_low_hz");
  }
}

void read_optimizer(Reader& r, const YAML::Node& n, ProjectConfig& c) {
  const std::string p = "optimizer";
  if (!r.keys(n, p, {"sweep_points", "outer_iterations", "max_evaluations",
                     "step_tolerance", "feasibility_tolerance",
                     "initial_penalty"})) {
    return;
  }
  auto& o = c.optimizer;
  r.integer(n, p, "sweep_points", o.sweep_points, 1, 100000);
  r.integer(n, p, "outer_iterations", o.outer_iterations, 1, 100);
  r.integer(n, p, "max_evaluations", o.max_evaluations, 1, 10000000);
  r.number(n, p, "step_tolerance", o.step_tolerance, 1.0, in_range(1e-12, 1.0));
  r.number(n, p, "feasibility_tolerance", o.feasibility_tolerance, 1.0,
           in_range(0.0, 1.0));
  r.number(n, p, "initial_penalty", o.initial_penalty, 1.0, positive());
}

void read_placement(Reader& r, const YAML::Node& n, ProjectConfig& c) {
  const std::string p = "placement";
  if (!r.keys(n, p, {"optimize", "grid_points", "considered_modes", "gamma",
                     "groups"})) {
    return;
  }
  r.boolean(n, p, "optimize", c.optimize_placement);
  r.integer(n, p, "grid_points", c.placement_grid, 2, 200);
  r.integer(n, p, "considered_modes", c.considered_modes, 2, 200);
  r.number(n, p, "gamma", c.gamma, 1.0, non_negative());
  const YAML::Node groups = n["groups"];
  if (!groups) return;
  if (!groups.IsSequence()) {
    r.fail(p + ".groups", "expected a list");
    return;
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const YAML::Node g = groups[i];
    const std::string gp = p + ".groups[" + std::to_string(i) + "]";
    if (!r.keys(g, gp, {"name", "x_mm", "y_mm", "domain_mm", "gain"})) continue;
    GroupOverride o;
    r.text(g, gp, "name", o.name);
    if (o.name.empty()) r.fail(gp + ".name", "required");
    if (g["x_mm"] || g["y_mm"]) {
      Eigen::Vector2d xy(NAN, NAN);
      r.number(g, gp, "x_mm", xy[0], kMm);
      r.number(g, gp, "y_mm", xy[1], kMm);
      if (!xy.allFinite()) {
        r.fail(gp, "x_mm and y_mm must be given together");
      } else {
        o.location = xy;
      }
    }
    if (const YAML::Node d = g["domain_mm"]) {
      std::vector<double> v;
      try {
        v = d.as<std::vector<double>>();
      } catch (const YAML::Exception&) {
      }
      if (v.size() != 4 || !(v[0] <= v[2]) || !(v[1] <= v[3])) {
        r.fail(gp + ".domain_mm", "expected [x_min, y_min, x_max, y_max]");
      } else {
        o.domain = Rect{Eigen::Vector2d(v[0], v[1]) * kMm,
                        Eigen::Vector2d(v[2], v[3]) * kMm};
      }
    }
    if (g["gain"]) {
      double gain = 1.0;
      r.number(g, gp, "gain", gain, 1.0, positive());
      o.gain = gain;
    }
    c.groups.push_back(o);
  }
}

void read_control(Reader& r, const YAML::Node& n, ProjectConfig& c) {
  const std::string p = "control";
  if (!r.keys(n, p, {"alpha", "z_lp", "bandwidth_min_hz", "bandwidth_max_hz",
                     "scan_factor", "resolution", "sensitivity_peak_max",
                     "loop_sign"})) {
    return;
  }
  auto& t = c.tuning;
  r.number(n, p, "alpha", t.alpha, 1.0,
           [](double v) { return v > 1.0 ? "" : "must be > 1"; });
  r.number(n, p, "z_lp", t.z_lp, 1.0, positive());
  r.number(n, p, "bandwidth_min_hz", t.omega_min, kHz, positive());
  r.number(n, p, "bandwidth_max_hz", t.omega_max, kHz, positive());
  r.number(n, p, "scan_factor", t.scan_factor, 1.0, in_range(1.0001, 10.0));
  r.number(n, p, "resolution", t.resolution, 1.0, in_range(1e-6, 0.5));
  r.number(n, p, "sensitivity_peak_max", t.peak_bound, 1.0,
           [](double v) { return v > 1.0 ? "" : "must be > 1"; });
  std::string sign = "negative";
  r.text(n, p, "loop_sign", sign, {"negative", "paper"});
  t.loop.sign = sign == "paper" ? LoopSign::kPaper : LoopSign::kNegative;
  c.simulation.sign = t.loop.sign;
  if (!(t.omega_min < t.omega_max)) {
    r.fail(p + ".bandwidth_max_hz", "must exceed bandwidth_min_hz");
  }
}

void read_analysis(Reader& r, const YAML::Node& n, ProjectConfig& c) {
  const std::string p = "analysis";
  if (!r.keys(n, p, {"frequency_min_hz", "frequency_max_hz", "points_per_decade",
                     "force_budget_n", "simulation_step_s", "record_every",
                     "divergence_bound", "sensor_noise_rms_m", "trajectories"})) {
    return;
  }
  r.number(n, p, "frequency_min_hz", c.frequency_min, kHz, positive());
  r.number(n, p, "frequency_max_hz", c.frequency_max, kHz, positive());
  r.integer(n, p, "points_per_decade", c.points_per_decade, 2, 10000);
  r.number(n, p, "force_budget_n", c.force_budget, 1.0, positive());
  r.number(n, p, "simulation_step_s", c.simulation.step, 1.0, positive());
  r.integer(n, p, "record_every", c.simulation.record_every, 1, 1000000);
  r.number(n, p, "divergence_bound", c.simulation.divergence_bound, 1.0, positive());
  r.number(n, p, "sensor_noise_rms_m", c.simulation.noise_rms, 1.0, non_negative());
  if (!(c.frequency_min < c.frequency_max)) {
    r.fail(p + ".frequency_max_hz", "must exceed frequency_min_hz");
  }
  const YAML::Node tr = n["trajectories"];
  if (!tr) return;
  if (!tr.IsSequence()) {
    r.fail(p + ".trajectories", "expected a list");
    return;
  }
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const YAML::Node t = tr[i];
    const std::string tp = p + ".trajectories[" + std::to_string(i) + "]";
    if (!r.keys(t, tp, {"name", "channel", "distance_mm", "velocity_max_m_per_s",
                        "acceleration_max_m_per_s2", "jerk_max_m_per_s3",
                        "start_s", "duration_s"})) {
      continue;
    }
    TrajectoryConfig tc;
    tc.name = "move" + std::to_string(i);
    r.text(t, tp, "name", tc.name);
    r.text(t, tp, "channel", tc.channel, {"x", "y", "z"});
    if (tc.channel.empty()) r.fail(tp + ".channel", "required");
    for (const char* k : {"distance_mm", "velocity_max_m_per_s",
                          "acceleration_max_m_per_s2", "jerk_max_m_per_s3",
                          "duration_s"}) {
      if (!t[k]) r.fail(tp + "." + k, "required");
    }
    r.number(t, tp, "distance_mm", tc.distance, kMm);
    r.number(t, tp, "velocity_max_m_per_s", tc.velocity, 1.0, positive());
    r.number(t, tp, "acceleration_max_m_per_s2", tc.acceleration, 1.0, positive());
    r.number(t, tp, "jerk_max_m_per_s3", tc.jerk, 1.0, positive());
    r.number(t, tp, "start_s", tc.start, 1.0, non_negative());
    r.number(t, tp, "duration_s", tc.duration, 1.0, positive());
    c.trajectories.push_back(tc);
  }
}

}  // namespace

StageGeometry ProjectConfig::stage() const { return make_ribbed_stage(geometry); }

std::vector<FrequencyBound> ProjectConfig::bounds() const {
  return kind == DesignKind::kProposed ? to_bounds(constraints)
                                       : baseline_bounds(min_first_resonance);
}

PlacementConfig ProjectConfig::placement(const StageGeometry& geometry) const {
  PlacementConfig pc = default_placement(geometry);
  pc.gamma = gamma;
  for (const auto& o : groups) {
    TransducerGroup* target = nullptr;
    for (auto* list : {&pc.actuators, &pc.sensors}) {
      for (auto& g : *list) {
        if (g.name == o.name) target = &g;
      }
    }
    if (!target) {
      throw Error(ErrorKind::kConfig,
                  "placement.groups: unknown group '" + o.name + "'");
    }
    if (o.location) target->location = geometry.origin + *o.location;
    if (o.domain) {
      target->domain = {geometry.origin + o.domain->lo,
                        geometry.origin + o.domain->hi};
    }
    if (o.gain) target->gain = *o.gain;
  }
  return pc;
}

Eigen::VectorXd ProjectConfig::frequency_grid() const {
  return log_grid(frequency_min, frequency_max, points_per_decade);
}

ProjectConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::kConfig, std::string("syntax: ") + e.what());
  }
  ProjectConfig c;
  Reader r;
  if (!root || root.IsNull()) {
    throw Error(ErrorKind::kConfig, "<root>: empty configuration");
  }
  if (r.keys(root, "", {"name", "seed", "geometry", "material", "constraints",
                        "optimizer", "placement", "control", "analysis"})) {
    r.text(root, "", "name", c.name);
    if (c.name.empty() ||
        c.name.find_first_not_of("abcdefghijklmnopqrstuvwxyz"
                                 "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") !=
            std::string::npos) {
      r.fail("name", "must be non-empty [A-Za-z0-9_-]");
    }
    r.integer(root, "", "seed", c.seed, 0, std::numeric_limits<long long>::max());
    c.optimizer.seed = static_cast<unsigned>(c.seed);
    c.simulation.seed = static_cast<unsigned>(c.seed);
    read_geometry(r, root["geometry"], c);
    read_material(r, root["material"], c);
    read_constraints(r, root["constraints"], c);
    read_optimizer(r, root["optimizer"], c);
    read_placement(r, root["placement"], c);
    read_control(r, root["control"], c);
    read_analysis(r, root["analysis"], c);
    if (c.optimize_placement && c.kind == DesignKind::kBaseline) {
      r.fail("placement.optimize", "placement optimization needs a proposed design");
    } else if (c.considered_modes <= c.plant_controlled() && c.optimize_placement) {
      r.fail("placement.considered_modes", "must exceed controlled_modes");
    }
    if (c.considered_modes > c.retained_flexible) {
      r.fail("placement.considered_modes",
             "must not exceed material.retained_flexible_modes");
    }
  }
  if (!r.errors.empty()) {
    std::string msg;
    for (const auto& e : r.errors) msg += (msg.empty() ? "" : "\n") + e;
    throw Error(ErrorKind::kConfig, msg);
  }
  return c;
}

ProjectConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

nlohmann::json to_json(const ProjectConfig& c) {
  using nlohmann::json;
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  const auto& g = c.geometry;
  j["geometry"] = {{"length_x_m", g.length_x},
                   {"length_y_m", g.length_y},
                   {"elements_x", g.nx},
                   {"elements_y", g.ny},
                   {"thickness_m", {g.thickness[0], g.thickness[1]}},
                   {"thickness_min_m", {g.thickness_min[0], g.thickness_min[1]}},
                   {"thickness_max_m", {g.thickness_max[0], g.thickness_max[1]}},
                   {"rib_fill", g.ribs.fill},
                   {"rib_twist_factor", g.ribs.twist_factor},
                   {"perimeter_rib_width_m", g.perimeter_rib_width},
                   {"cross_rib_width_m", g.cross_rib_width},
                   {"corner_magnets", g.corner_magnets}};
  j["material"] = {{"youngs_modulus_pa", c.material.youngs_modulus},
                   {"poisson_ratio", c.material.poisson_ratio},
                   {"density_kg_per_m3", c.material.density},
                   {"modal_damping_ratio", c.damping_ratio},
                   {"retained_flexible_modes", c.retained_flexible}};
  j["constraints"] = {
      {"design", c.kind == DesignKind::kProposed ? "proposed" : "baseline"},
      {"omega_low_rad_per_s", c.constraints.omega_low},
      {"omega_high_rad_per_s", c.constraints.omega_high},
      {"controlled_modes", c.constraints.n_controlled},
      {"constrained_uncontrolled_modes", c.constraints.n_constrained_uncontrolled},
      {"min_first_resonance_rad_per_s", c.min_first_resonance}};
  const auto& o = c.optimizer;
  j["optimizer"] = {{"sweep_points", o.sweep_points},
                    {"outer_iterations", o.outer_iterations},
                    {"max_evaluations", o.max_evaluations},
                    {"step_tolerance", o.step_tolerance},
                    {"feasibility_tolerance", o.feasibility_tolerance},
                    {"initial_penalty", o.initial_penalty},
                    {"seed", o.seed}};
  json groups = json::array();
  for (const auto& go : c.groups) {
    json e = {{"name", go.name}};
    if (go.location) e["location_m"] = {go.location->x(), go.location->y()};
    if (go.domain) {
      e["domain_m"] = {go.domain->lo.x(), go.domain->lo.y(), go.domain->hi.x(),
                       go.domain->hi.y()};
    }
    if (go.gain) e["gain"] = *go.gain;
    groups.push_back(e);
  }
  j["placement"] = {{"optimize", c.optimize_placement},
                    {"grid_points", c.placement_grid},
                    {"considered_modes", c.considered_modes},
                    {"gamma", c.gamma},
                    {"groups", groups}};
  const auto& t = c.tuning;
  j["control"] = {{"alpha", t.alpha},
                  {"z_lp", t.z_lp},
                  {"bandwidth_min_rad_per_s", t.omega_min},
                  {"bandwidth_max_rad_per_s", t.omega_max},
                  {"scan_factor", t.scan_factor},
                  {"resolution", t.resolution},
                  {"sensitivity_peak_max", t.peak_bound},
                  {"loop_sign", t.loop.sign == LoopSign::kPaper ? "paper" : "negative"}};
  json traj = json::array();
  for (const auto& tr : c.trajectories) {
    traj.push_back({{"name", tr.name},
                    {"channel", tr.channel},
                    {"distance_m", tr.distance},
                    {"velocity_max_m_per_s", tr.velocity},
                    {"acceleration_max_m_per_s2", tr.acceleration},
                    {"jerk_max_m_per_s3", tr.jerk},
                    {"start_s", tr.start},
                    {"duration_s", tr.duration}});
  }
  j["analysis"] = {{"frequency_min_rad_per_s", c.frequency_min},
                   {"frequency_max_rad_per_s", c.frequency_max},
                   {"points_per_decade", c.points_per_decade},
                   {"force_budget_n", c.force_budget},
                   {"simulation_step_s", c.simulation.step},
                   {"record_every", c.simulation.record_every},
                   {"divergence_bound", c.simulation.divergence_bound},
                   {"sensor_noise_rms_m", c.simulation.noise_rms},
                   {"trajectories", traj}};
  return j;
}

}  // namespace flexstage
