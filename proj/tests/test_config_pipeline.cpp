#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flexstage/config.hpp"
#include "flexstage/error.hpp"
#include "flexstage/pipeline.hpp"

using namespace flexstage;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kSmall = R"(name: small
seed: 3
geometry:
  length_x_mm: 300
  length_y_mm: 300
  elements_x: 10
  elements_y: 10
material:
  retained_flexible_modes: 8
constraints:
  design: proposed
  omega_low_hz: 50
  omega_high_hz: 560
optimizer:
  max_evaluations: 400
placement:
  grid_points: 4
analysis:
  points_per_decade: 40
  record_every: 20
  trajectories:
    - name: nudge
      channel: y
      distance_mm: 1
      velocity_max_m_per_s: 0.05
      acceleration_max_m_per_s2: 5
      jerk_max_m_per_s3: 1000
      start_s: 0.002
      duration_s: 0.03
)";

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("flexstage_pipe_" + name);
  fs::remove_all(d);
  return d;
}

RunOptions into(const fs::path& dir, Stage through = Stage::kAnalysis) {
  RunOptions o;
  o.out_dir = dir.string();
  o.through = through;
  return o;
}

// Every file under `dir` except the timestamped log, by relative path.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "run.log") continue;
    out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
  }
  return out;
}

struct Cli {
  int code = -1;
  std::string err;
};

Cli cli(const std::string& args, const std::string& tag) {
  const fs::path err = fs::temp_directory_path() / ("flexstage_cli_" + tag + ".err");
  const std::string cmd = std::string(FLEXSTAGE_CLI) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

void expect_prefixed(const std::string& err, const std::string& kind) {
  std::istringstream is(err);
  int lines = 0;
  for (std::string line; std::getline(is, line);) {
    EXPECT_EQ(line.rfind("flexstage: error[" + kind + "]: ", 0), 0u) << line;
    ++lines;
  }
  EXPECT_GT(lines, 0);
}

}  // namespace

TEST(Config, ShippedConfigsParse) {
  const ProjectConfig p = load_config(std::string(FLEXSTAGE_SOURCE_DIR) + "/configs/proposed.yaml");
  EXPECT_EQ(p.name, "proposed");
  EXPECT_DOUBLE_EQ(p.geometry.length_x, 0.3);
  EXPECT_NEAR(p.constraints.omega_low, 2.0 * M_PI * 50.0, 1e-9);
  EXPECT_DOUBLE_EQ(p.geometry.thickness_max[1], 0.060);
  ASSERT_EQ(p.trajectories.size(), 1u);
  EXPECT_DOUBLE_EQ(p.trajectories[0].distance, 0.020);
  EXPECT_EQ(p.plant_controlled(), 1);

  const ProjectConfig b = load_config(std::string(FLEXSTAGE_SOURCE_DIR) + "/configs/baseline.yaml");
  EXPECT_EQ(b.kind, DesignKind::kBaseline);
  EXPECT_EQ(b.plant_controlled(), 0);
  EXPECT_FALSE(b.optimize_placement);
}

TEST(Config, EveryProblemReportedWithItsPath) {
  const std::string bad = "name: x\ngeometry:\n  length_x_mm: -3\n  lenght_y_mm: 200\n"
                          "control:\n  loop_sign: positive\nextra: 1\n";
  try {
    parse_config(bad);
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    const std::string w = e.what();
    EXPECT_NE(w.find("geometry.length_x_mm:"), std::string::npos) << w;
    EXPECT_NE(w.find("geometry.lenght_y_mm:"), std::string::npos) << w;
    EXPECT_NE(w.find("control.loop_sign:"), std::string::npos) << w;
    EXPECT_NE(w.find("extra:"), std::string::npos) << w;
  }
  EXPECT_THROW(parse_config("constraints:\n  design: baseline\nplacement:\n  optimize: true\n"),
               Error);
  EXPECT_THROW(parse_config("geometry: [1, 2\n"), Error);
  EXPECT_THROW(load_config("/nonexistent/flexstage.yaml"), Error);
}

TEST(Config, CanonicalFormIsSi) {
  const ProjectConfig c = parse_config(kSmall);
  const json j = to_json(c);
  EXPECT_EQ(j.at("name"), "small");
  EXPECT_EQ(to_json(parse_config(kSmall)).dump(), j.dump());
  // Comments and key order do not reach the canonical form.
  EXPECT_EQ(to_json(parse_config(std::string("# note\n") + kSmall)).dump(), j.dump());
  EXPECT_EQ(c.stage().nx, 10);
}

TEST(Stages, NamesRoundTrip) {
  for (Stage s : {Stage::kStructure, Stage::kModes, Stage::kPlacement, Stage::kPlant, Stage::kTune,
                  Stage::kAnalysis}) {
    EXPECT_EQ(parse_stage(to_string(s)), s);
  }
  EXPECT_THROW(parse_stage("bogus"), Error);
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Pipeline, FreshRunsAreByteIdentical) {
  const ProjectConfig c = parse_config(kSmall);
  const fs::path a = fresh_dir("a"), b = fresh_dir("b");
  const DesignArtifacts ra = run_pipeline(c, into(a));
  run_pipeline(c, into(b));
  EXPECT_EQ(tree(a), tree(b));
  EXPECT_TRUE(ra.reused.empty());
  EXPECT_EQ(ra.report.at("label"), "model-derived");
  EXPECT_TRUE(ra.structure.feasible);
  EXPECT_NEAR(ra.report.at("acceleration_m_per_s2").get<double>(),
              ra.report.at("force_budget_n").get<double>() / ra.report.at("mass_kg").get<double>(),
              1e-12);
}

TEST(Pipeline, ManifestHashesMatchFiles) {
  const ProjectConfig c = parse_config(kSmall);
  const fs::path d = fresh_dir("manifest");
  run_pipeline(c, into(d));
  const json m = json::parse(slurp(d / "manifest.json"));
  EXPECT_EQ(m.at("design"), "small");
  int n = 0;
  for (const auto& [path, hash] : m.at("files").items()) {
    EXPECT_EQ(sha256_file((d / path).string()), hash.get<std::string>()) << path;
    ++n;
  }
  EXPECT_GE(n, 6);
  const json tune = json::parse(slurp(d / "tune" / "result.json"));
  EXPECT_EQ(tune.at("format_version"), kResultFormatVersion);
  EXPECT_EQ(tune.at("input_sha256").get<std::string>().size(), 64u);
}

TEST(Pipeline, UnchangedInputsAreReused) {
  ProjectConfig c = parse_config(kSmall);
  const fs::path d = fresh_dir("reuse");
  run_pipeline(c, into(d));
  const auto before = tree(d);
  const DesignArtifacts again = run_pipeline(c, into(d));
  EXPECT_EQ(again.reused, (std::vector<std::string>{"structure", "modes", "placement", "plant",
                                                     "tune", "analysis"}));
  EXPECT_EQ(tree(d), before);

  // A control-only change keeps everything upstream of tuning.
  c.tuning.z_lp = 0.75;
  const DesignArtifacts changed = run_pipeline(c, into(d));
  EXPECT_EQ(changed.reused,
            (std::vector<std::string>{"structure", "modes", "placement", "plant"}));
}

TEST(Pipeline, ThroughStopsEarly) {
  const ProjectConfig c = parse_config(kSmall);
  const fs::path d = fresh_dir("through");
  const DesignArtifacts a = run_pipeline(c, into(d, Stage::kPlacement));
  EXPECT_TRUE(fs::exists(d / "placement" / "result.json"));
  EXPECT_FALSE(fs::exists(d / "plant" / "result.json"));
  EXPECT_FALSE(fs::exists(d / "analysis"));
  EXPECT_TRUE(a.tuning.empty());
  EXPECT_TRUE(a.report.is_null());
}

TEST(Pipeline, InfeasibleStructureStopsWithReport) {
  ProjectConfig c = parse_config(kSmall);
  c.constraints.omega_high = 2.0 * M_PI * 1e5;
  c.optimizer.max_evaluations = 150;
  const fs::path d = fresh_dir("infeasible");
  try {
    run_pipeline(c, into(d));
    FAIL() << "expected an infeasible error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInfeasible);
  }
  EXPECT_TRUE(fs::exists(d / "structure" / "result.json"));
  EXPECT_TRUE(fs::exists(d / "manifest.json"));
  EXPECT_FALSE(fs::exists(d / "modes"));
}

TEST(Cli, ConfigErrorsUsePrefixAndExitCode) {
  const fs::path d = fresh_dir("cli");
  fs::create_directories(d);
  {
    std::ofstream os(d / "bad.yaml");
    os << "name: x\ngeometry:\n  elements_x: 0\nwhatever: 2\n";
  }
  const Cli r = cli("run --config " + (d / "bad.yaml").string() + " --out " + (d / "o").string(),
                    "config");
  EXPECT_EQ(r.code, 2);
  expect_prefixed(r.err, "config");
  EXPECT_NE(r.err.find("whatever"), std::string::npos);
}

TEST(Cli, UsageIoAndStageErrors) {
  const fs::path d = fresh_dir("cli2");
  Cli r = cli("run", "usage");
  EXPECT_EQ(r.code, 64);
  expect_prefixed(r.err, "usage");

  r = cli("run --config " + (d / "missing.yaml").string(), "io");
  EXPECT_EQ(r.code, 3);
  expect_prefixed(r.err, "io");

  r = cli("run --config " + std::string(FLEXSTAGE_SOURCE_DIR) +
              "/configs/proposed.yaml --through nowhere --out " + (d / "o").string(),
          "stage");
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(d / "o"));

  r = cli("bode --frf " + (d / "none.csv").string() + " --out " + (d / "b").string(), "bode");
  EXPECT_EQ(r.code, 3);
}

TEST(Cli, InfeasibleExitCode) {
  const fs::path d = fresh_dir("cli3");
  fs::create_directories(d);
  std::string text = kSmall;
  text.replace(text.find("omega_high_hz: 560"), 18, "omega_high_hz: 90000");
  text.replace(text.find("max_evaluations: 400"), 20, "max_evaluations: 150");
  {
    std::ofstream os(d / "hard.yaml");
    os << text;
  }
  const Cli r = cli("run --config " + (d / "hard.yaml").string() + " --out " + (d / "o").string(),
                    "infeasible");
  EXPECT_EQ(r.code, 4);
  expect_prefixed(r.err, "infeasible");
  EXPECT_TRUE(fs::exists(d / "o" / "run.log"));
}
