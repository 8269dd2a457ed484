#include "epa/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "epa/error.hpp"

namespace epa {
namespace {

constexpr char kMagic[8] = {'E', 'P', 'A', 'S', 'N', 'A', 'P', '1'};

double parse_number(const std::string& text, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw IoError("cannot parse " + what + " value '" + text + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string item; std::getline(in, item, sep);) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// "# a=1, b=2" style header of CSV snapshots.
std::map<std::string, std::string> parse_meta(const std::string& line) {
  std::map<std::string, std::string> out;
  for (std::string item : split(line.substr(1), ',')) {
    const auto b = item.find_first_not_of(' ');
    if (b == std::string::npos) continue;
    item = item.substr(b);
    const auto eq = item.find('=');
    if (eq == std::string::npos) continue;
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("snapshot: truncated binary file");
  return v;
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_snapshot(const std::filesystem::path& path, const SimState& state,
                    const DerivedFields& derived, const std::string& config_hash,
                    SnapshotFormat format) {
  const std::size_t n = state.rho.size();
  if (format == SnapshotFormat::binary) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write snapshot " + path.string());
    out.write(kMagic, sizeof kMagic);
    put(out, static_cast<std::uint64_t>(n));
    put(out, state.t);
    put(out, state.kernel.alpha);
    put(out, state.potential.k);
    char hash[16] = {};
    std::memcpy(hash, config_hash.data(), std::min<std::size_t>(16, config_hash.size()));
    out.write(hash, sizeof hash);
    for (const Field* f : {&state.rho, &state.G, &derived.u, &derived.F}) {
      out.write(reinterpret_cast<const char*>(f->data().data()),
                static_cast<std::streamsize>(n * sizeof(double)));
    }
    if (!out) throw IoError("failed writing snapshot " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write snapshot " + path.string());
  out << "# t=" << format_real(state.t) << ", n=" << n
      << ", alpha=" << format_real(state.kernel.alpha) << ", k=" << format_real(state.potential.k)
      << ", config_hash=" << config_hash << "\n";
  out << "x,rho,G,u,F\n";
  const Grid& grid = state.grid();
  for (std::size_t j = 0; j < n; ++j) {
    out << format_real(grid.x(j)) << ',' << format_real(state.rho[j]) << ','
        << format_real(state.G[j]) << ',' << format_real(derived.u[j]) << ','
        << format_real(derived.F[j]) << '\n';
  }
  if (!out) throw IoError("failed writing snapshot " + path.string());
}

SnapshotData read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read snapshot " + path.string());
  char head[sizeof kMagic] = {};
  in.read(head, sizeof head);
  SnapshotData s;
  if (in && std::memcmp(head, kMagic, sizeof kMagic) == 0) {
    s.n = static_cast<std::size_t>(get<std::uint64_t>(in));
    s.t = get<double>(in);
    s.alpha = get<double>(in);
    s.k = get<double>(in);
    char hash[16];
    in.read(hash, sizeof hash);
    s.config_hash.assign(hash, strnlen(hash, sizeof hash));
    const Grid grid(s.n);
    for (std::size_t j = 0; j < s.n; ++j) s.x.push_back(grid.x(j));
    for (auto* v : {&s.rho, &s.G, &s.u, &s.F}) {
      v->resize(s.n);
      in.read(reinterpret_cast<char*>(v->data()), static_cast<std::streamsize>(s.n * sizeof(double)));
      if (!in) throw IoError("snapshot: truncated binary file " + path.string());
    }
    return s;
  }
  in.clear();
  in.seekg(0);
  std::string line;
  if (!std::getline(in, line) || line.empty() || line.front() != '#') {
    throw IoError("snapshot: missing header in " + path.string());
  }
  const auto meta = parse_meta(line);
  for (const char* key : {"t", "n", "alpha", "k", "config_hash"}) {
    if (!meta.contains(key)) throw IoError(std::string("snapshot: header lacks ") + key);
  }
  s.t = parse_number(meta.at("t"), "t");
  s.n = static_cast<std::size_t>(parse_number(meta.at("n"), "n"));
  s.alpha = parse_number(meta.at("alpha"), "alpha");
  s.k = parse_number(meta.at("k"), "k");
  s.config_hash = meta.at("config_hash");
  if (!std::getline(in, line) || line != "x,rho,G,u,F") {
    throw IoError("snapshot: unexpected column header in " + path.string());
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 5) throw IoError("snapshot: row with " + std::to_string(cells.size()) + " cells");
    s.x.push_back(parse_number(cells[0], "x"));
    s.rho.push_back(parse_number(cells[1], "rho"));
    s.G.push_back(parse_number(cells[2], "G"));
    s.u.push_back(parse_number(cells[3], "u"));
    s.F.push_back(parse_number(cells[4], "F"));
  }
  if (s.rho.size() != s.n) throw IoError("snapshot: row count differs from n");
  return s;
}

const std::vector<std::string>& diagnostics_columns() {
  static const std::vector<std::string> columns = {
      "t",        "rho_min",          "rho_max",          "F_inf",    "drho_inf",  "bkm",
      "mass",     "momentum",         "env_lower_margin", "env_upper_margin", "moc_pass",
      "moc_min_B"};
  return columns;
}

void write_diagnostics_csv(std::ostream& out, const DiagnosticsLog& log,
                           const std::vector<std::pair<std::string, std::string>>& meta) {
  for (const auto& [key, value] : meta) out << "# " << key << '=' << value << '\n';
  const auto& columns = diagnostics_columns();
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& r : log.rows) {
    out << format_real(r.t) << ',' << format_real(r.rho_min) << ',' << format_real(r.rho_max) << ','
        << format_real(r.F_inf) << ',' << format_real(r.drho_inf) << ',' << format_real(r.bkm) << ','
        << format_real(r.mass) << ',' << format_real(r.momentum) << ','
        << format_real(r.env_lower_margin) << ',' << format_real(r.env_upper_margin) << ','
        << r.moc_pass << ',' << format_real(std::exp(r.moc_log_B)) << '\n';
  }
}

DiagnosticsFile read_diagnostics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read diagnostics " + path.string());
  DiagnosticsFile file;
  std::string line;
  bool header = false;
  const auto& columns = diagnostics_columns();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      file.meta[key] = line.substr(eq + 1);
      continue;
    }
    const auto cells = split(line, ',');
    if (!header) {
      if (cells != columns) throw IoError("diagnostics: unexpected column header in " + path.string());
      header = true;
      continue;
    }
    if (cells.size() != columns.size()) {
      throw IoError("diagnostics: row with " + std::to_string(cells.size()) + " cells");
    }
    DiagnosticsRow r;
    r.t = parse_number(cells[0], "t");
    r.rho_min = parse_number(cells[1], "rho_min");
    r.rho_max = parse_number(cells[2], "rho_max");
    r.F_inf = parse_number(cells[3], "F_inf");
    r.drho_inf = parse_number(cells[4], "drho_inf");
    r.bkm = parse_number(cells[5], "bkm");
    r.mass = parse_number(cells[6], "mass");
    r.momentum = parse_number(cells[7], "momentum");
    r.env_lower_margin = parse_number(cells[8], "env_lower_margin");
    r.env_upper_margin = parse_number(cells[9], "env_upper_margin");
    r.moc_pass = static_cast<int>(parse_number(cells[10], "moc_pass"));
    r.moc_log_B = std::log(parse_number(cells[11], "moc_min_B"));
    file.log.rows.push_back(r);
  }
  if (!header) throw IoError("diagnostics: no column header in " + path.string());
  return file;
}

}  // namespace epa
