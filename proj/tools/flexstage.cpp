// flexstage: batch driver for the stage design pipeline.
//
// Errors go to stderr as one line each: "flexstage: error[<kind>]: <text>".

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "flexstage/analysis.hpp"
#include "flexstage/config.hpp"
#include "flexstage/error.hpp"
#include "flexstage/pipeline.hpp"

namespace fs = std::filesystem;
using namespace flexstage;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kGeometry: return 2;
    case ErrorKind::kIo: return 3;
    case ErrorKind::kInfeasible: return 4;
    case ErrorKind::kRankDeficient: return 5;
    case ErrorKind::kDivergence: return 6;
    case ErrorKind::kEigensolver: return 7;
  }
  return 1;
}

void print_error(std::string_view kind, const std::string& message) {
  std::istringstream lines(message);
  std::string line;
  bool any = false;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::cerr << "flexstage: error[" << kind << "]: " << line << '\n';
    any = true;
  }
  if (!any) std::cerr << "flexstage: error[" << kind << "]\n";
}

// Console verbosity from FLEXSTAGE_LOG (off|error|warn|info|debug); the
// sidecar <out>/run.log always records info and above with timestamps.
std::shared_ptr<spdlog::logger> make_logger(const std::string& out_dir) {
  auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
  console->set_pattern("%v");
  console->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FLEXSTAGE_LOG")) {
    console->set_level(spdlog::level::from_str(env));
  }
  std::vector<spdlog::sink_ptr> sinks{console};
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>(
        (fs::path(out_dir) / "run.log").string());
    file->set_level(spdlog::level::info);
    sinks.push_back(file);
  }
  auto logger = std::make_shared<spdlog::logger>("flexstage", sinks.begin(), sinks.end());
  logger->set_level(spdlog::level::debug);
  return logger;
}

struct Common {
  std::string out = "out";
  int jobs = 0;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--jobs", c.jobs, "Worker threads (0 = OpenMP default)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", c.seed, "Override the config seed");
}

RunOptions run_options(const Common& c, std::shared_ptr<spdlog::logger> log) {
  RunOptions o;
  o.out_dir = c.out;
  o.jobs = c.jobs;
  o.seed = c.seed;
  o.log = [log](const std::string& line) { log->info(line); };
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure, placement and control co-design of flexible stages"};
  app.require_subcommand(1);

  Common run_common;
  std::string run_config;
  std::string through = "analysis";
  auto* run = app.add_subcommand("run", "Run the pipeline for one design");
  run->add_option("--config", run_config, "Design config (YAML)")->required();
  run->add_option("--through", through,
                  "Last stage: structure, modes, placement, plant, tune, analysis")
      ->capture_default_str();
  add_common(run, run_common);

  Common sweep_common;
  std::string sweep_config;
  double from_hz = 300.0, to_hz = 800.0;
  int steps = 11;
  auto* sweep = app.add_subcommand("sweep-omega-high", "Mass against omega_high");
  sweep->add_option("--config", sweep_config, "Base config (defaults if omitted)");
  sweep->add_option("--from", from_hz, "First omega_high, Hz")->capture_default_str();
  sweep->add_option("--to", to_hz, "Last omega_high, Hz")->capture_default_str();
  sweep->add_option("--steps", steps, "Sweep points")->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_common(sweep, sweep_common);

  Common cmp_common;
  std::vector<std::string> designs;
  auto* compare = app.add_subcommand("compare", "Loop gains and trade table");
  compare->add_option("--designs", designs, "Design configs")->required()->expected(1, -1);
  add_common(compare, cmp_common);

  std::vector<std::string> frf_files;
  std::string bode_out = "bode";
  std::string svg;
  auto* bode = app.add_subcommand("bode", "FRF CSV to dB / unwrapped-phase CSV");
  bode->add_option("--frf", frf_files, "FRF files (frequency_hz,re,im)")
      ->required()->expected(1, -1);
  bode->add_option("--out", bode_out, "Output directory")->capture_default_str();
  bode->add_option("--svg", svg, "Also write a static plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 64;
  }

  try {
    if (*run) {
      const Stage last = parse_stage(through);
      const ProjectConfig cfg = load_config(run_config);
      RunOptions o = run_options(run_common, make_logger(run_common.out));
      o.through = last;
      const DesignArtifacts a = run_pipeline(cfg, o);
      std::cout << "design " << a.config.name << ": stages through " << through
                << " complete in " << run_common.out << '\n';
      if (!a.report.is_null()) {
        std::cout << format_trade_table({a.report});
      }
    } else if (*sweep) {
      const ProjectConfig cfg = sweep_config.empty() ? ProjectConfig{} : load_config(sweep_config);
      const auto log = make_logger(sweep_common.out);
      const auto points = run_omega_high_sweep(cfg, from_hz, to_hz, steps,
                                               run_options(sweep_common, log));
      std::cout << "omega_high_hz  feasible  mass_kg\n";
      for (const auto& p : points) {
        std::cout << p.omega_high / (2.0 * M_PI) << "  " << p.result.feasible << "  "
                  << p.result.mass << '\n';
      }
    } else if (*compare) {
      std::vector<ProjectConfig> cfgs;
      for (const auto& d : designs) cfgs.push_back(load_config(d));
      const auto log = make_logger(cmp_common.out);
      const auto out = compare_designs(cfgs, run_options(cmp_common, log));
      std::ifstream table(fs::path(cmp_common.out) / "compare" / "table.txt");
      std::cout << table.rdbuf();
    } else if (*bode) {
      fs::create_directories(bode_out);
      std::vector<BodeData> curves;
      std::vector<std::string> names;
      for (const auto& f : frf_files) {
        const BodeData b = to_bode(read_frf_csv(f));
        const std::string stem = fs::path(f).stem().string();
        write_bode_csv((fs::path(bode_out) / (stem + "_bode.csv")).string(), b);
        curves.push_back(b);
        names.push_back(stem);
      }
      if (!svg.empty()) write_bode_svg(svg, curves, names);
    }
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 70;
  }
  return 0;
}
