#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "epa/integrator.hpp"
#include "epa/kernels.hpp"
#include "epa/model.hpp"

namespace epa {

enum class MocMode { fitted, certified, off };
enum class SnapshotFormat { csv, binary };

struct MonitorSettings {
  MocMode moc = MocMode::fitted;
  std::size_t moc_every = 10;
  double moc_B_factor = 1.05;  ///< fitted mode: B* = factor * min B(rho0)
};

struct DiagnosticsSettings {
  double C1 = 1.0;
  double C2 = 1.0;
  double C3 = 1.0;
  double C_F = 1.0;
  double eps_fraction = 0.5;
};

struct OutputSettings {
  std::filesystem::path dir = "out";
  std::string prefix = "run";
  std::vector<double> snapshot_times;  ///< the final state is always written
  SnapshotFormat snapshot_format = SnapshotFormat::csv;
};

/// Validated run description. Every preset, gate and table reference has been
/// checked by parse_config.
struct RunConfig {
  std::size_t n = 256;
  KernelSpec kernel;
  bool alignment = true;
  PotentialSpec potential;
  InitialPreset initial;
  StepControl step;
  DetectionThresholds detect;
  MonitorSettings monitor;
  DiagnosticsSettings diagnostics;
  OutputSettings output;

  /// Sorted section.key=value listing of everything except output.dir;
  /// table files enter through a hash of their contents.
  std::string canonical;
  std::uint64_t hash = 0;

  /// Config hash as 16 lowercase hex digits.
  std::string hash_hex() const;
  Grid grid() const { return Grid(n); }
};

/// "section.key=value" override applied before validation.
using Override = std::pair<std::string, std::string>;

/// Splits "section.key=value". Throws ConfigError when malformed.
Override parse_override(const std::string& text);

/// Parses sectioned key = value text (';' or '#' comments). Unknown sections
/// and keys are errors. Relative table paths resolve against base_dir.
/// Throws ConfigError naming the offending key or failed gate.
RunConfig parse_config(const std::string& text, const std::vector<Override>& overrides = {},
                       const std::filesystem::path& base_dir = ".");

/// Reads and parses a config file.
RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<Override>& overrides = {});

/// Names of the built-in scenarios.
std::vector<std::string> scenario_names();

/// Config text of a built-in scenario. Throws ConfigError for unknown names.
const std::string& scenario_text(const std::string& name);

/// parse_config(scenario_text(name), overrides).
RunConfig scenario(const std::string& name, const std::vector<Override>& overrides = {});

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace epa
