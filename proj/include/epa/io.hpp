#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "epa/config.hpp"
#include "epa/diagnostics.hpp"
#include "epa/model.hpp"

namespace epa {

/// Contents of a snapshot file.
struct SnapshotData {
  double t = 0.0;
  std::size_t n = 0;
  double alpha = 0.0;
  double k = 0.0;
  std::string config_hash;
  std::vector<double> x, rho, G, u, F;
};

/// Writes rho, G, u, F of a state. CSV carries 17 significant digits, binary
/// the raw doubles; both reload bit-exactly. Throws IoError.
void write_snapshot(const std::filesystem::path& path, const SimState& state,
                    const DerivedFields& derived, const std::string& config_hash,
                    SnapshotFormat format);

/// Reads either snapshot format (detected from the leading bytes). Throws IoError.
SnapshotData read_snapshot(const std::filesystem::path& path);

/// Column names of the diagnostics CSV, in order.
const std::vector<std::string>& diagnostics_columns();

/// Diagnostics CSV: '# key=value' metadata lines, a header row, one row per
/// logged step. moc_min_B is exp(ln B) ("inf" on overflow, "nan" when not
/// evaluated); moc_pass is -1 when not evaluated.
void write_diagnostics_csv(std::ostream& out, const DiagnosticsLog& log,
                           const std::vector<std::pair<std::string, std::string>>& meta);

struct DiagnosticsFile {
  std::map<std::string, std::string> meta;
  DiagnosticsLog log;
};

/// Parses a diagnostics CSV written by write_diagnostics_csv. Throws IoError.
DiagnosticsFile read_diagnostics_csv(const std::filesystem::path& path);

/// "%.17g" formatting ("nan", "inf", "-inf" for non-finite values).
std::string format_real(double v);

}  // namespace epa
