#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "epa/config.hpp"
#include "epa/diagnostics.hpp"
#include "epa/integrator.hpp"

namespace epa {

/// Offline bound checks over a diagnostics log.
struct CheckSummary {
  BoundCheck lower;
  UpperCheck upper;
  FCheck F;
  double bkm = 0.0;
  bool advisory = false;  ///< alpha >= 1: constants not derived, results are warnings

  bool all_pass() const noexcept { return lower.pass && upper.pass && F.pass; }
};

CheckSummary run_checks(const DiagnosticsLog& log, const BoundConstants& bc);

/// Recorded snapshot of a run.
struct SnapshotRecord {
  SimState state;
  DerivedFields derived;
};

/// Everything a run produced, held in memory until emitted.
struct RunReport {
  RunConfig config;
  RunOutcome outcome;
  DiagnosticsLog log;
  std::optional<BoundConstants> constants;
  std::optional<MocSettings> moc;
  std::optional<CheckSummary> checks;
  std::vector<SnapshotRecord> snapshots;
  std::vector<std::string> warnings;
};

/// Builds the initial state, bound constants and modulus settings from the
/// config, integrates, and runs the bound checks. Nothing is written.
RunReport execute(const RunConfig& config);

/// Paths written by emit_outputs.
struct OutputFiles {
  std::filesystem::path diagnostics;
  std::filesystem::path summary;
  std::vector<std::filesystem::path> snapshots;
};

/// Writes <prefix>_diagnostics.csv, <prefix>_summary.txt and
/// <prefix>_snap_<i>.{csv,bin} under dir (created if missing). Throws IoError.
OutputFiles emit_outputs(const RunReport& report, const std::filesystem::path& dir);

/// Metadata lines of the diagnostics CSV.
std::vector<std::pair<std::string, std::string>> diagnostics_meta(const RunReport& report);

/// Human-readable run summary.
std::string summary_text(const RunReport& report);

/// Process exit code of a run status: 0 completed, 2 blow-up, 3 vacuum, 4 NaN.
int exit_code(RunStatus status) noexcept;

inline constexpr int kExitConfigError = 64;
inline constexpr int kExitIoError = 74;
inline constexpr int kExitCheckFailed = 1;

}  // namespace epa
