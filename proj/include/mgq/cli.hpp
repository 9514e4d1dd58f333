#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mgq/backtest.hpp"
#include "mgq/ingest.hpp"
#include "mgq/solver.hpp"

namespace mgq::cli {

/// Exit statuses of the `mgq` tool.
enum ExitCode : int { kOk = 0, kValidation = 1, kData = 2, kSolver = 3 };

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "MGQ_OUTPUT_DIR";

struct RunConfig {
  std::filesystem::path prices_path;
  std::vector<int> years{2016, 2017, 2018, 2019};
  int k = 10;
  MissingPolicy missing_policy = MissingPolicy::drop_asset;
  Weighting weighting = Weighting::equal;
  AnnealConfig solver;
  std::optional<std::filesystem::path> index_csv;
  std::filesystem::path output_dir;

  /// Checks years/k and that referenced input paths exist.
  void validate() const;
};

/// Output directory used when none is configured: $MGQ_OUTPUT_DIR, else "out".
std::filesystem::path default_output_dir();

/// Overlays the keys present in a JSON config file onto `config`.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// JSON echo of every resolved field, as written to the run manifest.
std::string config_json(const RunConfig& config);

/// Runs the full pipeline and writes report.csv, series_<year>.csv,
/// exemplars_<year>.txt and manifest.json into config.output_dir.
/// Files from a failed run are removed. Returns the reports.
std::vector<TrackingReport> run_pipeline(const RunConfig& config);

/// Entry point: `mgq <subcommand> [options]`. Returns the process exit status.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace mgq::cli
