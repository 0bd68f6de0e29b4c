#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flexstage/config.hpp"
#include "flexstage/plant.hpp"

namespace flexstage {

enum class Stage { kStructure, kModes, kPlacement, kPlant, kTune, kAnalysis };

inline constexpr int kResultFormatVersion = 1;

std::string to_string(Stage stage);
/// Throws Error(kInvalidArgument) listing the valid names.
Stage parse_stage(const std::string& name);

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

struct RunOptions {
  std::string out_dir = "out";
  Stage through = Stage::kAnalysis;
  int jobs = 0;  // 0 keeps the OpenMP default
  std::optional<std::uint64_t> seed;
  /// Progress lines (timestamps belong in the sidecar log, not results).
  std::function<void(const std::string&)> log;
};

/// In-memory products of a run; stages past `through` stay empty.
struct DesignArtifacts {
  ProjectConfig config;
  StageGeometry geometry;
  OptimizationResult structure;
  ModalModel modal;
  PlacementConfig placement;
  PlantModel plant;
  DecouplingPair pair;
  std::vector<ChannelPlant> channels;
  std::vector<TuningResult> tuning;
  nlohmann::json report;                 // trade-study record
  std::vector<std::string> reused;       // stages whose result file was current
  std::vector<std::string> stage_files;  // relative to out_dir
};

/// Runs stages in dependency order up to `through`. Each stage writes
/// <out>/<stage>/result.json tagged with the SHA-256 of its inputs; when the
/// tag of an existing file matches, the stored result is reused and the file
/// is left untouched. <out>/manifest.json lists every artifact with its hash.
/// Infeasible stages write their result, then throw Error(kInfeasible) with
/// the module report.
DesignArtifacts run_pipeline(const ProjectConfig& config, const RunOptions& options);

/// Runs every design through analysis under <out>/<name>/ and writes the
/// loop-gain comparison and trade table to <out>/compare/.
std::vector<DesignArtifacts> compare_designs(const std::vector<ProjectConfig>& configs,
                                             const RunOptions& options);

/// Mass against ω_high; writes <out>/sweep_omega_high.csv and returns rows.
std::vector<OmegaHighPoint> run_omega_high_sweep(const ProjectConfig& config,
                                                 double from_hz, double to_hz,
                                                 int steps,
                                                 const RunOptions& options);

/// Human-readable form of the trade-study records.
std::string format_trade_table(const std::vector<nlohmann::json>& reports);

}  // namespace flexstage
