#include "epa/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "epa/error.hpp"

namespace epa {
namespace {

using Sections = std::map<std::string, std::map<std::string, std::string>>;

const std::set<std::string> kSections = {"grid",    "kernel",  "potential",   "initial", "run",
                                         "monitor", "detect",  "diagnostics", "output"};

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Sections read_sections(const std::string& text) {
  // Drop '#' comment lines; the ini parser handles ';'.
  std::istringstream in(text);
  std::ostringstream cleaned;
  for (std::string line; std::getline(in, line);) {
    const std::string t = trim(line);
    if (!t.empty() && t.front() == '#') continue;
    cleaned << line << '\n';
  }
  boost::property_tree::ptree tree;
  std::istringstream stream(cleaned.str());
  try {
    boost::property_tree::ini_parser::read_ini(stream, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  Sections out;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config: key '" + section + "' outside a section");
    }
    if (!kSections.contains(section)) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) out[section][key] = trim(value.data());
  }
  return out;
}

class Reader {
 public:
  explicit Reader(Sections sections) : sections_(std::move(sections)) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    auto s = sections_.find(section);
    if (s == sections_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    used_.insert(section + "." + key);
    return k->second;
  }

  double real(const std::string& section, const std::string& key, std::optional<double> fallback) {
    const auto text = raw(section, key);
    double v = 0.0;
    if (text) {
      v = parse_real(*text, section + "." + key);
    } else if (fallback) {
      v = *fallback;
    } else {
      throw ConfigError("config: missing required key " + section + "." + key);
    }
    record(section, key, format_double(v));
    return v;
  }

  std::size_t integer(const std::string& section, const std::string& key,
                      std::optional<std::size_t> fallback) {
    const auto text = raw(section, key);
    std::size_t v = 0;
    if (text) {
      const char* end = text->data() + text->size();
      auto [ptr, ec] = std::from_chars(text->data(), end, v);
      if (ec != std::errc() || ptr != end) {
        throw ConfigError("config: " + section + "." + key + " must be a non-negative integer, got '" +
                          *text + "'");
      }
    } else if (fallback) {
      v = *fallback;
    } else {
      throw ConfigError("config: missing required key " + section + "." + key);
    }
    record(section, key, std::to_string(v));
    return v;
  }

  bool boolean(const std::string& section, const std::string& key, bool fallback) {
    const auto text = raw(section, key);
    bool v = fallback;
    if (text) {
      if (*text == "true" || *text == "yes" || *text == "1") {
        v = true;
      } else if (*text == "false" || *text == "no" || *text == "0") {
        v = false;
      } else {
        throw ConfigError("config: " + section + "." + key + " must be true or false, got '" + *text + "'");
      }
    }
    record(section, key, v ? "true" : "false");
    return v;
  }

  std::string word(const std::string& section, const std::string& key,
                   std::optional<std::string> fallback, bool canonical = true) {
    const auto text = raw(section, key);
    std::string v;
    if (text) {
      v = *text;
    } else if (fallback) {
      v = *fallback;
    } else {
      throw ConfigError("config: missing required key " + section + "." + key);
    }
    if (canonical) record(section, key, v);
    return v;
  }

  std::vector<double> reals(const std::string& section, const std::string& key) {
    const auto text = raw(section, key);
    std::vector<double> out;
    std::string canon;
    if (text) {
      std::istringstream in(*text);
      for (std::string item; std::getline(in, item, ',');) {
        const std::string t = trim(item);
        if (t.empty()) continue;
        out.push_back(parse_real(t, section + "." + key));
        canon += (canon.empty() ? "" : ",") + format_double(out.back());
      }
    }
    record(section, key, canon);
    return out;
  }

  /// Unread keys of a section (consumed by the caller).
  std::map<std::string, std::string> remaining(const std::string& section) {
    std::map<std::string, std::string> out;
    auto s = sections_.find(section);
    if (s == sections_.end()) return out;
    for (const auto& [key, value] : s->second) {
      if (!used_.contains(section + "." + key)) {
        out[key] = value;
        used_.insert(section + "." + key);
      }
    }
    return out;
  }

  void record(const std::string& section, const std::string& key, const std::string& value) {
    canonical_[section + "." + key] = value;
  }

  void require_all_used() const {
    for (const auto& [section, keys] : sections_) {
      for (const auto& [key, value] : keys) {
        if (!used_.contains(section + "." + key)) {
          throw ConfigError("config: unknown key " + section + "." + key);
        }
      }
    }
  }

  std::string canonical() const {
    std::string out;
    for (const auto& [key, value] : canonical_) out += key + "=" + value + "\n";
    return out;
  }

  static double parse_real(const std::string& text, const std::string& what) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
      throw ConfigError("config: " + what + " must be a finite number, got '" + text + "'");
    }
    return v;
  }

 private:
  Sections sections_;
  std::set<std::string> used_;
  std::map<std::string, std::string> canonical_;
};

std::shared_ptr<const SampledTable> load_table(Reader& r, const std::string& section,
                                               const std::string& key,
                                               const std::filesystem::path& base_dir) {
  std::filesystem::path path = r.word(section, key, std::nullopt, false);
  if (path.is_relative()) path = base_dir / path;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read " + section + "." + key + " file " + path.string());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.str())));
  r.record(section, key + "_hash", hex);
  try {
    return std::make_shared<const SampledTable>(SampledTable::from_csv(path));
  } catch (const Error& e) {
    throw ConfigError("config: " + section + "." + key + ": " + e.what());
  }
}

LipschitzPart read_lipschitz(Reader& r, const std::filesystem::path& base_dir) {
  const std::string kind = r.word("kernel", "psi_L", "zero");
  if (kind == "zero") return LipschitzZero{};
  if (kind == "constant") return LipschitzConstant{r.real("kernel", "psi_L_a", std::nullopt)};
  if (kind == "cosine") {
    return LipschitzCosine{r.real("kernel", "psi_L_a", std::nullopt),
                           r.real("kernel", "psi_L_b", std::nullopt)};
  }
  if (kind == "table") return LipschitzTable{load_table(r, "kernel", "psi_L_table", base_dir)};
  throw ConfigError("config: kernel.psi_L must be zero, constant, cosine or table, got '" + kind + "'");
}

RegularPart read_regular(Reader& r, const std::filesystem::path& base_dir) {
  const std::string kind = r.word("potential", "K", "zero");
  if (kind == "zero") return RegularZero{};
  if (kind == "cosine") return RegularCosine{r.real("potential", "K_a", std::nullopt)};
  if (kind == "gaussian") {
    const double a = r.real("potential", "K_a", std::nullopt);
    const double sigma = r.real("potential", "K_sigma", 0.1);
    if (!(sigma > 0.0)) throw ConfigError("config: potential.K_sigma must be positive");
    return RegularGaussian{a, sigma};
  }
  if (kind == "table") return RegularTable{load_table(r, "potential", "K_table", base_dir)};
  throw ConfigError("config: potential.K must be zero, cosine, gaussian or table, got '" + kind + "'");
}

void kernel_gate(const RunConfig& cfg) {
  const Grid grid = cfg.grid();
  if (!cfg.alignment) return;
  if (cfg.kernel.has_singular_part() && cfg.kernel.alpha >= 2.0) {
    // Lambda^2 is local: only the Lipschitz part is sampled.
    KernelSpec lipschitz = cfg.kernel;
    lipschitz.c = 0.0;
    if (lipschitz.has_lipschitz_part() && lipschitz.min_on_grid(grid) < 0.0) {
      throw ConfigError("kernel positivity gate failed: psi_L < 0 on the grid");
    }
    return;
  }
  cfg.kernel.require_positive(grid);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string RunConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

Override parse_override(const std::string& text) {
  const auto eq = text.find('=');
  const std::string key = trim(text.substr(0, eq));
  if (eq == std::string::npos || key.find('.') == std::string::npos || key.front() == '.' ||
      key.back() == '.') {
    throw ConfigError("override must look like section.key=value, got '" + text + "'");
  }
  return {key, trim(text.substr(eq + 1))};
}

RunConfig parse_config(const std::string& text, const std::vector<Override>& overrides,
                       const std::filesystem::path& base_dir) {
  Sections sections = read_sections(text);
  for (const auto& [key, value] : overrides) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    if (!kSections.contains(section)) throw ConfigError("override: unknown section '" + section + "'");
    sections[section][key.substr(dot + 1)] = value;
  }
  Reader r(std::move(sections));
  RunConfig cfg;

  cfg.n = r.integer("grid", "n", std::nullopt);
  if (cfg.n < 8 || cfg.n % 2 != 0) throw ConfigError("config: grid.n must be even and >= 8");

  cfg.kernel.alpha = r.real("kernel", "alpha", std::nullopt);
  if (!(cfg.kernel.alpha > 0.0 && cfg.kernel.alpha <= 2.0)) {
    throw ConfigError("config: kernel.alpha must lie in (0, 2]");
  }
  cfg.alignment = r.boolean("kernel", "alignment", true);
  cfg.kernel.c = r.real("kernel", "c", 1.0);
  if (!(cfg.kernel.c >= 0.0)) throw ConfigError("config: kernel.c must be >= 0");
  cfg.kernel.psi_L = read_lipschitz(r, base_dir);
  if (!cfg.alignment) {
    cfg.kernel.c = 0.0;
    cfg.kernel.psi_L = LipschitzZero{};
  }

  cfg.potential.k = r.real("potential", "k", 0.0);
  cfg.potential.regular = read_regular(r, base_dir);

  cfg.initial.name = r.word("initial", "preset", std::nullopt);
  for (const auto& [key, value] : r.remaining("initial")) {
    cfg.initial.params[key] = Reader::parse_real(value, "initial." + key);
    r.record("initial", key, format_double(cfg.initial.params[key]));
  }

  cfg.step.t_end = r.real("run", "t_end", std::nullopt);
  cfg.step.cfl_advect = r.real("run", "cfl_advect", 0.4);
  cfg.step.cfl_diffuse = r.real("run", "cfl_diffuse", 0.3);
  cfg.step.dt_min = r.real("run", "dt_min", 1e-12);
  cfg.step.dt_max = r.real("run", "dt_max", 1e-2);
  cfg.step.fixed_dt = r.real("run", "fixed_dt", 0.0);

  const std::string moc = r.word("monitor", "moc", "fitted");
  if (moc == "fitted") {
    cfg.monitor.moc = MocMode::fitted;
  } else if (moc == "certified") {
    cfg.monitor.moc = MocMode::certified;
  } else if (moc == "off") {
    cfg.monitor.moc = MocMode::off;
  } else {
    throw ConfigError("config: monitor.moc must be fitted, certified or off, got '" + moc + "'");
  }
  cfg.monitor.moc_every = r.integer("monitor", "moc_every", 10);
  cfg.monitor.moc_B_factor = r.real("monitor", "moc_B_factor", 1.05);
  if (cfg.monitor.moc_every == 0) throw ConfigError("config: monitor.moc_every must be >= 1");
  if (!(cfg.monitor.moc_B_factor > 1.0)) throw ConfigError("config: monitor.moc_B_factor must exceed 1");

  cfg.detect.rho_max_factor = r.real("detect", "rho_max_factor", 1e6);
  cfg.detect.drho_max = r.real("detect", "drho_max", 1e8);
  cfg.detect.bkm_cap = r.real("detect", "bkm_cap", 1e10);
  cfg.detect.spectral_tail = r.real("detect", "spectral_tail", 0.1);
  cfg.detect.vacuum_floor = r.real("detect", "vacuum_floor", 1e-8);

  cfg.diagnostics.C1 = r.real("diagnostics", "C1", 1.0);
  cfg.diagnostics.C2 = r.real("diagnostics", "C2", 1.0);
  cfg.diagnostics.C3 = r.real("diagnostics", "C3", 1.0);
  cfg.diagnostics.C_F = r.real("diagnostics", "C_F", 1.0);
  cfg.diagnostics.eps_fraction = r.real("diagnostics", "eps_fraction", 0.5);
  const auto& d = cfg.diagnostics;
  if (!(d.C1 > 0.0 && d.C2 > 0.0 && d.C3 > 0.0 && d.C_F > 0.0)) {
    throw ConfigError("config: diagnostics constants C1, C2, C3, C_F must be positive");
  }
  if (!(d.eps_fraction > 0.0 && d.eps_fraction < 1.0)) {
    throw ConfigError("config: diagnostics.eps_fraction must lie in (0, 1)");
  }

  cfg.output.dir = r.word("output", "dir", "out", false);
  cfg.output.prefix = r.word("output", "prefix", "run");
  if (cfg.output.prefix.empty() || cfg.output.prefix.find('/') != std::string::npos) {
    throw ConfigError("config: output.prefix must be a non-empty file name stem");
  }
  cfg.output.snapshot_times = r.reals("output", "snapshot_times");
  const std::string format = r.word("output", "snapshot_format", "csv");
  if (format == "csv") {
    cfg.output.snapshot_format = SnapshotFormat::csv;
  } else if (format == "binary") {
    cfg.output.snapshot_format = SnapshotFormat::binary;
  } else {
    throw ConfigError("config: output.snapshot_format must be csv or binary, got '" + format + "'");
  }

  r.require_all_used();

  // Gates.
  cfg.step.validate();
  cfg.detect.validate();
  auto& times = cfg.output.snapshot_times;
  std::sort(times.begin(), times.end());
  for (const double t : times) {
    if (!(t > 0.0 && t <= cfg.step.t_end)) {
      throw ConfigError("config: output.snapshot_times must lie in (0, t_end]");
    }
  }
  kernel_gate(cfg);
  try {
    (void)make_initial(cfg.initial, cfg.grid(), cfg.kernel, cfg.potential);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: initial data: ") + e.what());
  }

  cfg.canonical = r.canonical();
  cfg.hash = fnv1a64(cfg.canonical);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<Override>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides, path.parent_path());
}

// ---------------------------------------------------------------------------

namespace {

const std::map<std::string, std::string>& scenarios() {
  static const std::map<std::string, std::string> table = {
      {"fractional-ea", R"([grid]
n = 256
[kernel]
alpha = 0.5
c = 1
[potential]
k = 0
[initial]
preset = cosine
a = 0.3
b = 0.2
u_mean = 0.1
[run]
t_end = 2
[output]
prefix = fractional-ea
)"},
      {"fractional-epa-attractive", R"([grid]
n = 256
[kernel]
alpha = 0.5
c = 1
[potential]
k = 1
[initial]
preset = cosine
a = 0.3
b = 0.2
u_mean = 0.1
[run]
t_end = 2
[output]
prefix = fractional-epa-attractive
)"},
      {"fractional-epa-repulsive", R"([grid]
n = 256
[kernel]
alpha = 0.5
c = 1
[potential]
k = -1
[initial]
preset = cosine
a = 0.3
b = 0.2
u_mean = 0.1
[run]
t_end = 2
[output]
prefix = fractional-epa-repulsive
)"},
      {"singular-3zone", R"([grid]
n = 256
[kernel]
alpha = 0.5
c = 1
psi_L = cosine
psi_L_a = 0.5
psi_L_b = 0.3
[potential]
k = -0.5
K = gaussian
K_a = -0.5
K_sigma = 0.25
[initial]
preset = cosine
a = 0.3
b = 0.2
u_mean = 0.1
[run]
t_end = 2
[output]
prefix = singular-3zone
)"},
      {"burgers-control", R"([grid]
n = 512
[kernel]
alpha = 0.5
alignment = false
[potential]
k = 0
[initial]
preset = burgers-shock
[run]
t_end = 0.3
[monitor]
moc = off
[output]
prefix = burgers-control
)"},
      {"euler-poisson-control", R"([grid]
n = 256
[kernel]
alpha = 0.5
alignment = false
[potential]
k = 1
[initial]
preset = cosine
a = 0.3
b = 0.2
u_mean = 0.1
[run]
t_end = 2
[monitor]
moc = off
[output]
prefix = euler-poisson-control
)"},
  };
  return table;
}

}  // namespace

std::vector<std::string> scenario_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : scenarios()) out.push_back(name);
  return out;
}

const std::string& scenario_text(const std::string& name) {
  const auto& table = scenarios();
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown scenario '" + name + "'");
  return it->second;
}

RunConfig scenario(const std::string& name, const std::vector<Override>& overrides) {
  return parse_config(scenario_text(name), overrides);
}

}  // namespace epa
