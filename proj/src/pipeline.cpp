#include "flexstage/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "flexstage/analysis.hpp"
#include "flexstage/error.hpp"
#include "flexstage/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace flexstage {

namespace {

constexpr Stage kStages[] = {Stage::kStructure, Stage::kModes, Stage::kPlacement,
                             Stage::kPlant,     Stage::kTune,  Stage::kAnalysis};

constexpr double kTwoPi = 2.0 * M_PI;

json vec(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

json mat(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (long i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
  return rows;
}

// Non-finite values serialize as null; they only occur as +inf margins.
double finite_or_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
}

std::string symmetry_name(Symmetry s) {
  switch (s) {
    case Symmetry::kNone: return "none";
    case Symmetry::kMirrorX: return "mirror_x";
    case Symmetry::kMirrorY: return "mirror_y";
    case Symmetry::kQuad: return "quad";
  }
  return "none";
}

Symmetry symmetry_from(const std::string& s) {
  if (s == "mirror_x") return Symmetry::kMirrorX;
  if (s == "mirror_y") return Symmetry::kMirrorY;
  if (s == "quad") return Symmetry::kQuad;
  return Symmetry::kNone;
}

json group_json(const TransducerGroup& g, bool actuator) {
  return {{"name", g.name},
          {"role", actuator ? "actuator" : "sensor"},
          {"location_m", {g.location.x(), g.location.y()}},
          {"direction", {g.direction.x(), g.direction.y(), g.direction.z()}},
          {"height_m", g.height},
          {"gain", g.gain},
          {"symmetry", symmetry_name(g.symmetry)},
          {"domain_m",
           {g.domain.lo.x(), g.domain.lo.y(), g.domain.hi.x(), g.domain.hi.y()}}};
}

TransducerGroup group_from(const json& j) {
  TransducerGroup g;
  g.name = j.at("name").get<std::string>();
  const auto loc = to_vec(j.at("location_m"));
  const auto dir = to_vec(j.at("direction"));
  const auto dom = to_vec(j.at("domain_m"));
  g.location = loc.head<2>();
  g.direction = dir.head<3>();
  g.height = j.at("height_m").get<double>();
  g.gain = j.at("gain").get<double>();
  g.symmetry = symmetry_from(j.at("symmetry").get<std::string>());
  g.domain = {dom.head<2>(), dom.tail<2>()};
  return g;
}

json tuning_json(const TuningResult& t) {
  const auto& c = t.controller;
  return {{"label", t.label},
          {"kp", c.kp},
          {"omega_bw_rad_per_s", c.omega_bw},
          {"bandwidth_hz", c.omega_bw / kTwoPi},
          {"alpha", c.alpha},
          {"z_lp", c.z_lp},
          {"achieved_crossover_hz", t.achieved_crossover / kTwoPi},
          {"sensitivity_peak", t.sensitivity_peak},
          {"peak_frequency_hz", t.omega_peak / kTwoPi},
          {"gain_margin", t.gain_margin},
          {"lower_gain_margin", t.lower_gain_margin},
          {"phase_margin_deg", t.phase_margin_deg},
          {"feasible", t.feasible},
          {"evaluations", t.evaluations},
          {"report", t.report}};
}

TuningResult tuning_from(const json& j) {
  TuningResult t;
  t.label = j.at("label").get<std::string>();
  t.controller.kp = j.at("kp").get<double>();
  t.controller.omega_bw = j.at("omega_bw_rad_per_s").get<double>();
  t.controller.alpha = j.at("alpha").get<double>();
  t.controller.z_lp = j.at("z_lp").get<double>();
  t.achieved_crossover = j.at("achieved_crossover_hz").get<double>() * kTwoPi;
  t.sensitivity_peak = finite_or_inf(j.at("sensitivity_peak"));
  t.omega_peak = j.at("peak_frequency_hz").get<double>() * kTwoPi;
  t.gain_margin = finite_or_inf(j.at("gain_margin"));
  t.lower_gain_margin = j.at("lower_gain_margin").get<double>();
  t.phase_margin_deg = j.at("phase_margin_deg").get<double>();
  t.feasible = j.at("feasible").get<bool>();
  t.evaluations = j.at("evaluations").get<int>();
  t.report = j.at("report").get<std::string>();
  return t;
}

class Runner {
 public:
  Runner(const ProjectConfig& config, const RunOptions& options)
      : opt_(options), root_(options.out_dir) {
    art_.config = config;
    if (options.seed) {
      art_.config.seed = *options.seed;
      art_.config.optimizer.seed = static_cast<unsigned>(*options.seed);
      art_.config.simulation.seed = static_cast<unsigned>(*options.seed);
    }
    cfg_json_ = to_json(art_.config);
  }

  DesignArtifacts run() {
    if (opt_.jobs > 0) set_worker_count(opt_.jobs);
    fs::create_directories(root_);
    for (Stage s : kStages) {
      try {
        run_stage(s);
      } catch (...) {
        write_manifest();
        throw;
      }
      write_manifest();
      if (s == opt_.through) break;
    }
    return std::move(art_);
  }

 private:
  const RunOptions opt_;
  fs::path root_;
  DesignArtifacts art_;
  json cfg_json_;
  std::map<Stage, std::string> file_hash_;

  void log(const std::string& line) const {
    if (opt_.log) opt_.log(art_.config.name + ": " + line);
  }

  std::string rel(Stage s) const { return to_string(s) + "/result.json"; }

  std::string input_hash(Stage s) const {
    json in;
    in["stage"] = to_string(s);
    in["format_version"] = kResultFormatVersion;
    auto block = [&](const char* k) { in["config"][k] = cfg_json_.at(k); };
    auto upstream = [&](Stage u) { in["upstream"][to_string(u)] = file_hash_.at(u); };
    switch (s) {
      case Stage::kStructure:
        for (const char* k : {"geometry", "material", "constraints", "optimizer"}) block(k);
        break;
      case Stage::kModes:
        block("geometry");
        block("material");
        upstream(Stage::kStructure);
        break;
      case Stage::kPlacement:
        block("placement");
        block("constraints");
        upstream(Stage::kModes);
        break;
      case Stage::kPlant:
        block("constraints");
        block("analysis");
        upstream(Stage::kModes);
        upstream(Stage::kPlacement);
        break;
      case Stage::kTune:
        block("control");
        upstream(Stage::kPlant);
        break;
      case Stage::kAnalysis:
        block("analysis");
        in["config"]["name"] = cfg_json_.at("name");
        in["config"]["seed"] = cfg_json_.at("seed");
        upstream(Stage::kTune);
        break;
    }
    return sha256_hex(in.dump());
  }

  // Stored result when its input tag matches, else null.
  json current(Stage s, const std::string& hash) const {
    const fs::path p = root_ / rel(s);
    if (!fs::exists(p)) return nullptr;
    try {
      json j = json::parse(read_file(p.string()));
      if (j.value("format_version", 0) == kResultFormatVersion &&
          j.value("input_sha256", std::string()) == hash) {
        return j;
      }
    } catch (const json::exception&) {
    }
    return nullptr;
  }

  void store(Stage s, json result, const std::string& hash) {
    result["stage"] = to_string(s);
    result["format_version"] = kResultFormatVersion;
    result["input_sha256"] = hash;
    const std::string path = (root_ / rel(s)).string();
    write_file(path, result.dump(2) + "\n");
    file_hash_[s] = sha256_file(path);
  }

  void run_stage(Stage s) {
    const std::string hash = input_hash(s);
    json stored = current(s, hash);
    const bool reuse = !stored.is_null();
    if (reuse) {
      art_.reused.push_back(to_string(s));
      file_hash_[s] = sha256_file((root_ / rel(s)).string());
      log(to_string(s) + " reused");
    }
    art_.stage_files.push_back(rel(s));
    switch (s) {
      case Stage::kStructure: structure(stored, hash); break;
      case Stage::kModes: modes(reuse, hash); break;
      case Stage::kPlacement: placement(stored, hash); break;
      case Stage::kPlant: plant(reuse, hash); break;
      case Stage::kTune: tune(stored, hash); break;
      case Stage::kAnalysis: analysis(stored, hash); break;
    }
  }

  void structure(const json& stored, const std::string& hash) {
    const ProjectConfig& c = art_.config;
    OptimizationResult& r = art_.structure;
    if (!stored.is_null()) {
      r.theta_star = to_vec(stored.at("theta_m"));
      r.mass = stored.at("mass_kg").get<double>();
      r.constraint_values = to_vec(stored.at("slacks_rad_per_s"));
      r.flexible_omegas = to_vec(stored.at("flexible_hz")) * kTwoPi;
      r.iterations = stored.at("iterations").get<int>();
      r.evaluations = stored.at("evaluations").get<int>();
      r.feasible = stored.at("feasible").get<bool>();
      r.best_violation = stored.at("best_violation").get<double>();
      r.report = stored.at("report").get<std::string>();
    } else {
      const StageGeometry g0 = c.stage();
      r = c.kind == DesignKind::kProposed
              ? optimize_structure(g0, c.material, c.constraints, c.optimizer)
              : design_baseline(g0, c.material, c.min_first_resonance, c.optimizer);
      store(Stage::kStructure,
            {{"design", c.kind == DesignKind::kProposed ? "proposed" : "baseline"},
             {"theta_m", vec(r.theta_star)},
             {"mass_kg", r.mass},
             {"slacks_rad_per_s", vec(r.constraint_values)},
             {"flexible_hz", vec(r.flexible_omegas / kTwoPi)},
             {"iterations", r.iterations},
             {"evaluations", r.evaluations},
             {"feasible", r.feasible},
             {"best_violation", r.best_violation},
             {"report", r.report}},
            hash);
      log("structure mass " + std::to_string(r.mass) + " kg");
    }
    if (!r.feasible) throw Error(ErrorKind::kInfeasible, r.report);
    art_.geometry = c.stage().with_thickness(r.theta_star);
  }

  void modes(bool reuse, const std::string& hash) {
    const ProjectConfig& c = art_.config;
    DampingPolicy damping;
    damping.uniform_zeta = c.damping_ratio;
    art_.modal = analyze_geometry(art_.geometry, c.material,
                                  kOutOfPlaneRigidModes + c.retained_flexible, damping);
    art_.modal.n_controlled = c.plant_controlled();
    if (reuse) return;
    const ModalModel& m = art_.modal;
    json modes = json::array();
    for (std::size_t k = 0; k < m.modes.size(); ++k) {
      modes.push_back({{"index", k},
                       {"rigid", static_cast<int>(k) < m.rigid_count},
                       {"frequency_hz", m.modes[k].omega / kTwoPi},
                       {"damping_ratio", m.modes[k].zeta}});
    }
    const auto& b = m.rigid_body;
    store(Stage::kModes,
          {{"total_mass_kg", m.total_mass},
           {"rigid_body",
            {{"mass_kg", b.mass},
             {"center_m", {b.center.x(), b.center.y()}},
             {"ixx_kg_m2", b.ixx},
             {"iyy_kg_m2", b.iyy},
             {"izz_kg_m2", b.izz}}},
           {"modes", modes}},
          hash);
  }

  void placement(const json& stored, const std::string& hash) {
    const ProjectConfig& c = art_.config;
    const int n = c.plant_controlled();
    if (!stored.is_null()) {
      PlacementConfig pc;
      pc.gamma = stored.at("gamma").get<double>();
      for (const auto& g : stored.at("groups")) {
        (g.at("role") == "actuator" ? pc.actuators : pc.sensors).push_back(group_from(g));
      }
      art_.placement = pc;
      return;
    }
    PlacementConfig pc = c.placement(art_.geometry);
    double ja = 0.0, js = 0.0;
    if (c.optimize_placement) {
      fs::create_directories(root_ / "placement");
      const PlacementResult r =
          optimize_placement(art_.modal, pc, n, c.considered_modes, c.placement_grid);
      pc = r.config;
      ja = r.actuator_objective;
      js = r.sensor_objective;
      write_landscape_csv((root_ / "placement" / "landscape.csv").string(),
                          r.landscapes);
    } else {
      pc.validate(art_.geometry, n);
      if (n >= 1 && c.considered_modes > n) {
        ja = actuator_objective(art_.modal, pc.actuators, n, c.considered_modes, pc.gamma);
        js = sensor_objective(art_.modal, pc.sensors, n, c.considered_modes, pc.gamma);
      }
    }
    art_.placement = pc;
    json groups = json::array();
    for (const auto& g : pc.actuators) groups.push_back(group_json(g, true));
    for (const auto& g : pc.sensors) groups.push_back(group_json(g, false));
    store(Stage::kPlacement,
          {{"optimized", c.optimize_placement},
           {"gamma", pc.gamma},
           {"actuator_objective", ja},
           {"sensor_objective", js},
           {"groups", groups}},
          hash);
  }

  void plant(bool reuse, const std::string& hash) {
    const ProjectConfig& c = art_.config;
    art_.plant = assemble_plant(art_.modal, art_.placement, c.plant_controlled());
    art_.pair = decoupling_matrices(art_.plant);
    art_.channels.clear();
    for (int k = 0; k < art_.pair.channel_count(); ++k) {
      art_.channels.push_back(channel_plant(art_.plant, art_.pair, k));
    }
    if (reuse) return;
    const Eigen::VectorXd grid = c.frequency_grid();
    fs::create_directories(root_ / "plant");
    json channels = json::array();
    for (const auto& ch : art_.channels) {
      json modes = json::array();
      for (const auto& t : ch.modes) {
        modes.push_back({{"frequency_hz", t.omega / kTwoPi},
                         {"damping_ratio", t.zeta},
                         {"residue", t.residue}});
      }
      channels.push_back({{"label", ch.label},
                          {"rigid_residue", ch.rigid_residue},
                          {"modes", modes}});
      write_frf_csv((root_ / "plant" / (ch.label + "_frf.csv")).string(),
                    frequency_response(ch, grid));
    }
    store(Stage::kPlant,
          {{"channels", channels},
           {"actuators", art_.plant.n_inputs()},
           {"sensors", art_.plant.n_outputs()},
           {"t_u", mat(art_.pair.t_u)},
           {"t_y", mat(art_.pair.t_y)}},
          hash);
  }

  void tune(const json& stored, const std::string& hash) {
    const ProjectConfig& c = art_.config;
    if (!stored.is_null()) {
      art_.tuning.clear();
      for (const auto& t : stored.at("channels")) art_.tuning.push_back(tuning_from(t));
    } else {
      art_.tuning = tune_channels(art_.channels, c.tuning);
      json channels = json::array();
      for (const auto& t : art_.tuning) channels.push_back(tuning_json(t));
      store(Stage::kTune,
            {{"loop_sign", c.tuning.loop.sign == LoopSign::kPaper ? "paper" : "negative"},
             {"channels", channels}},
            hash);
    }
    std::string failures;
    for (const auto& t : art_.tuning) {
      if (!t.feasible) failures += t.report;
    }
    if (!failures.empty()) throw Error(ErrorKind::kInfeasible, failures);
  }

  void analysis(const json& stored, const std::string& hash) {
    if (!stored.is_null()) {
      art_.report = stored.at("report");
      return;
    }
    const ProjectConfig& c = art_.config;
    const fs::path dir = root_ / "analysis";
    fs::create_directories(dir);
    DesignLoops loops{c.name, art_.channels, art_.tuning, c.tuning.loop.sign};
    const auto rows = loop_gain_report({loops}, c.frequency_grid(), dir.string());

    std::vector<ChannelController> controllers;
    for (const auto& t : art_.tuning) controllers.push_back(t.controller);
    SimulationOptions sim = c.simulation;
    if (!(sim.step > 0.0)) {
      sim.step = 1.0 / (40.0 * fastest_dynamics_hz(art_.plant, controllers));
    }
    const double scale = std::sqrt(art_.plant.rigid.mass);
    const auto& labels = art_.pair.channel_labels;
    const int nt = static_cast<int>(c.trajectories.size());
    std::vector<SimulationTrace> traces(nt);
    parallel_for(nt, [&](int i) {
      const TrajectoryConfig& tc = c.trajectories[i];
      const int ch = static_cast<int>(
          std::find(labels.begin(), labels.end(), tc.channel) - labels.begin());
      const SCurve curve(tc.distance, tc.velocity, tc.acceleration, tc.jerk, tc.start);
      std::vector<Reference> refs(labels.size());
      refs[ch] = [curve, scale](double t) { return scale * curve.position(t); };
      SimulationOptions o = sim;
      o.duration = tc.duration;
      traces[i] = simulate_closed_loop(art_.plant, art_.pair, controllers, refs, o);
    });
    json trajectories = json::array();
    for (int i = 0; i < nt; ++i) {
      const TrajectoryConfig& tc = c.trajectories[i];
      const SimulationTrace& tr = traces[i];
      const int ch = static_cast<int>(
          std::find(labels.begin(), labels.end(), tc.channel) - labels.begin());
      double flex_peak = 0.0;
      for (int k = kRigidDofs; k < static_cast<int>(labels.size()); ++k) {
        flex_peak = std::max(flex_peak, tr.measurement.col(k).cwiseAbs().maxCoeff());
      }
      write_trace_csv((dir / (tc.name + "_trace.csv")).string(), tr);
      trajectories.push_back(
          {{"name", tc.name},
           {"channel", tc.channel},
           {"step_s", sim.step},
           {"rms_error_m", tr.rms_error[ch] / scale},
           {"max_error_m", tr.max_error[ch] / scale},
           {"peak_flexible_coordinate", flex_peak},
           {"peak_actuator_force_n", tr.actuator_force.cwiseAbs().maxCoeff()}});
    }

    json channels = json::array();
    for (const auto& r : rows) {
      channels.push_back({{"label", r.channel},
                          {"tuned", r.tuned},
                          {"bandwidth_hz", r.bandwidth_hz},
                          {"crossover_hz", r.crossover_hz},
                          {"sensitivity_peak", r.sensitivity_peak},
                          {"gain_margin", r.gain_margin},
                          {"phase_margin_deg", r.phase_margin_deg}});
    }
    json provenance;
    provenance["config_sha256"] = sha256_hex(cfg_json_.dump());
    for (Stage s : {Stage::kStructure, Stage::kPlacement, Stage::kPlant, Stage::kTune}) {
      provenance[to_string(s) + "_sha256"] = file_hash_.at(s);
    }
    art_.report = {
        {"design", c.name},
        {"label", "model-derived"},
        {"mass_kg", art_.modal.total_mass},
        {"thickness_m", vec(art_.geometry.thickness)},
        {"first_flexible_hz", art_.modal.flexible(0).omega / kTwoPi},
        {"force_budget_n", c.force_budget},
        {"acceleration_m_per_s2",
         acceleration_capability(art_.modal.total_mass, c.force_budget)},
        {"channels", channels},
        {"trajectories", trajectories},
        {"provenance", provenance}};
    write_file((dir / "report.txt").string(),
               format_loop_table(rows) + "\n" + format_trade_table({art_.report}));
    store(Stage::kAnalysis, {{"report", art_.report}}, hash);
  }

  void write_manifest() const {
    json files = json::object();
    std::vector<fs::path> paths;
    for (const auto& e : fs::recursive_directory_iterator(root_)) {
      if (!e.is_regular_file()) continue;
      const fs::path r = fs::relative(e.path(), root_);
      const std::string top = r.begin()->string();
      bool is_stage = false;
      for (Stage s : kStages) is_stage = is_stage || top == to_string(s);
      if (is_stage) paths.push_back(r);
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
      files[p.generic_string()] = sha256_file((root_ / p).string());
    }
    write_file((root_ / "manifest.json").string(),
               json{{"format_version", kResultFormatVersion},
                    {"design", art_.config.name},
                    {"files", files}}
                       .dump(2) +
                   "\n");
  }
};

}  // namespace

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::kStructure: return "structure";
    case Stage::kModes: return "modes";
    case Stage::kPlacement: return "placement";
    case Stage::kPlant: return "plant";
    case Stage::kTune: return "tune";
    case Stage::kAnalysis: return "analysis";
  }
  return "unknown";
}

Stage parse_stage(const std::string& name) {
  for (Stage s : kStages) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorKind::kInvalidArgument,
              "unknown stage '" + name +
                  "' (structure, modes, placement, plant, tune, analysis)");
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::kIo, "SHA-256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return os.str();
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

DesignArtifacts run_pipeline(const ProjectConfig& config, const RunOptions& options) {
  return Runner(config, options).run();
}

std::vector<DesignArtifacts> compare_designs(const std::vector<ProjectConfig>& configs,
                                             const RunOptions& options) {
  std::set<std::string> names;
  for (const auto& c : configs) {
    if (!names.insert(c.name).second) {
      throw Error(ErrorKind::kConfig, "name: duplicate design name '" + c.name + "'");
    }
  }
  std::vector<DesignArtifacts> out;
  for (const auto& c : configs) {
    RunOptions o = options;
    o.out_dir = (fs::path(options.out_dir) / c.name).string();
    o.through = Stage::kAnalysis;
    out.push_back(run_pipeline(c, o));
  }
  const fs::path dir = fs::path(options.out_dir) / "compare";
  fs::create_directories(dir);
  std::vector<DesignLoops> loops;
  std::vector<json> reports;
  for (const auto& a : out) {
    loops.push_back({a.config.name, a.channels, a.tuning, a.config.tuning.loop.sign});
    reports.push_back(a.report);
  }
  const auto rows =
      loop_gain_report(loops, out.front().config.frequency_grid(), dir.string());
  write_file((dir / "table.txt").string(),
             format_loop_table(rows) + "\n" + format_trade_table(reports));
  write_file((dir / "trade.json").string(), json(reports).dump(2) + "\n");
  return out;
}

std::vector<OmegaHighPoint> run_omega_high_sweep(const ProjectConfig& config,
                                                 double from_hz, double to_hz,
                                                 int steps,
                                                 const RunOptions& options) {
  if (options.jobs > 0) set_worker_count(options.jobs);
  OptimizerOptions opt = config.optimizer;
  if (options.seed) opt.seed = static_cast<unsigned>(*options.seed);
  const auto points = sweep_omega_high(config.stage(), config.material,
                                       config.constraints, from_hz * kTwoPi,
                                       to_hz * kTwoPi, steps, opt);
  std::ostringstream os;
  os << "omega_high_hz,feasible,mass_kg,plate_thickness_m,rib_thickness_m,"
        "first_flexible_hz\n"
     << std::setprecision(10);
  for (const auto& p : points) {
    const auto& r = p.result;
    os << p.omega_high / kTwoPi << ',' << (r.feasible ? 1 : 0) << ',' << r.mass << ','
       << r.theta_star[0] << ',' << r.theta_star[1] << ','
       << (r.flexible_omegas.size() ? r.flexible_omegas[0] / kTwoPi : 0.0) << '\n';
  }
  write_file((fs::path(options.out_dir) / "sweep_omega_high.csv").string(), os.str());
  return points;
}

std::string format_trade_table(const std::vector<json>& reports) {
  std::ostringstream os;
  os << "trade study (model-derived)\n"
     << std::left << std::setw(12) << "design" << std::right << std::setw(10)
     << "mass_kg" << std::setw(12) << "accel_m/s2" << std::setw(10) << "F_N"
     << std::setw(12) << "y_bw_hz" << std::setw(12) << "min_bw_hz" << '\n'
     << std::fixed;
  for (const auto& r : reports) {
    double y_bw = 0.0, min_bw = std::numeric_limits<double>::infinity();
    for (const auto& ch : r.at("channels")) {
      if (!ch.at("tuned").get<bool>()) continue;
      const double bw = ch.at("bandwidth_hz").get<double>();
      if (ch.at("label") == "y") y_bw = bw;
      min_bw = std::min(min_bw, bw);
    }
    os << std::left << std::setw(12) << r.at("design").get<std::string>()
       << std::right << std::setprecision(3) << std::setw(10)
       << r.at("mass_kg").get<double>() << std::setprecision(2) << std::setw(12)
       << r.at("acceleration_m_per_s2").get<double>() << std::setprecision(1)
       << std::setw(10) << r.at("force_budget_n").get<double>()
       << std::setprecision(2) << std::setw(12) << y_bw << std::setw(12) << min_bw
       << '\n';
  }
  return os.str();
}

}  // namespace flexstage
