#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "epa/config.hpp"
#include "epa/error.hpp"
#include "epa/io.hpp"
#include "epa/runner.hpp"

using namespace epa;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"([grid]
n = 32
[kernel]
alpha = 0.5
[initial]
preset = cosine
[run]
t_end = 0.1
)";

std::string with(const std::string& extra) { return std::string(kMinimal) + extra; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("epa_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, MinimalConfigTakesDefaults) {
  const RunConfig c = parse_config(kMinimal);
  EXPECT_EQ(c.n, 32u);
  EXPECT_EQ(c.kernel.alpha, 0.5);
  EXPECT_EQ(c.kernel.c, 1.0);
  EXPECT_TRUE(c.alignment);
  EXPECT_EQ(c.potential.k, 0.0);
  EXPECT_EQ(c.initial.name, "cosine");
  EXPECT_EQ(c.step.t_end, 0.1);
  EXPECT_EQ(c.step.cfl_advect, 0.4);
  EXPECT_EQ(c.detect.spectral_tail, 0.1);
  EXPECT_EQ(c.monitor.moc, MocMode::fitted);
  EXPECT_EQ(c.monitor.moc_B_factor, 1.05);
  EXPECT_EQ(c.diagnostics.eps_fraction, 0.5);
  EXPECT_EQ(c.output.prefix, "run");
  EXPECT_EQ(c.output.snapshot_format, SnapshotFormat::csv);
  EXPECT_EQ(c.hash_hex().size(), 16u);
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_THROW(parse_config(with("[potential]\nk = abc\n")), ConfigError);
  EXPECT_THROW(parse_config("[grid]\nn = 33\n[kernel]\nalpha=0.5\n[initial]\npreset=cosine\n[run]\nt_end=1\n"),
               ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"kernel.alpha", "0"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"kernel.alpha", "2.5"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"kernel.c", "-1"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"kernel.alignment", "maybe"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"run.t_end", "0"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"run.dt_min", "1"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"monitor.moc", "sometimes"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"monitor.moc_B_factor", "1"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"output.snapshot_times", "0.05,0.2"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"output.snapshot_format", "hdf5"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"initial.a", "1.5"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"diagnostics.eps_fraction", "1"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"potential.K", "gaussian"}}), ConfigError);  // K_a required
}

TEST(Config, RejectsUnknownAndMissingKeys) {
  EXPECT_THROW(parse_config(with("[run]\nspeed = 3\n")), ConfigError);
  EXPECT_THROW(parse_config(with("[extras]\nx = 1\n")), ConfigError);
  EXPECT_THROW(parse_config("n = 32\n"), ConfigError);
  EXPECT_THROW(parse_config("[grid]\nn = 32\n"), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"initial.bogus", "1"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"nosection.key", "1"}}), ConfigError);
  EXPECT_THROW(parse_override("novalue"), ConfigError);
  EXPECT_THROW(parse_override("nodot=3"), ConfigError);
  EXPECT_EQ(parse_override(" run.t_end = 3 ").second, "3");
}

TEST(Config, KernelPositivityGate) {
  // c = 0 with no Lipschitz part leaves psi = 0.
  EXPECT_THROW(parse_config(kMinimal, {{"kernel.c", "0"}}), ConfigError);
  EXPECT_THROW(parse_config(kMinimal, {{"kernel.c", "0"}, {"kernel.psi_L", "cosine"},
                                        {"kernel.psi_L_a", "0.1"}, {"kernel.psi_L_b", "0.2"}}),
               ConfigError);
  EXPECT_NO_THROW(parse_config(kMinimal, {{"kernel.c", "0"}, {"kernel.psi_L", "constant"},
                                           {"kernel.psi_L_a", "0.3"}}));
  EXPECT_NO_THROW(parse_config(kMinimal, {{"kernel.alpha", "2"}}));
  const RunConfig off = parse_config(kMinimal, {{"kernel.alignment", "false"}});
  EXPECT_TRUE(off.kernel.is_inactive());
}

TEST(Config, CommentsAndOrderDoNotChangeHash) {
  const RunConfig a = parse_config(kMinimal);
  const RunConfig b = parse_config(
      "# leading comment\n[run]\nt_end = 0.1 \n; another\n[initial]\npreset = cosine\n"
      "[kernel]\nalpha = 0.50\n[grid]\nn = 32\n[output]\ndir = somewhere/else\n");
  EXPECT_EQ(a.hash, b.hash);
  EXPECT_EQ(a.canonical, b.canonical);
  const RunConfig c = parse_config(kMinimal, {{"potential.k", "1"}});
  EXPECT_NE(a.hash, c.hash);
  const RunConfig d = parse_config(kMinimal, {{"potential.k", "0"}});
  EXPECT_EQ(a.hash, d.hash);  // explicit default
  EXPECT_NE(a.hash, parse_config(kMinimal, {{"initial.a", "0.4"}}).hash);
}

TEST(Config, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Config, TableFilesResolveRelativeAndHashContents) {
  const fs::path dir = scratch("tables");
  {
    std::ofstream t(dir / "psi.csv");
    t << "x,psi\n-0.5,0.5\n-0.25,1\n0,2\n0.25,1\n";
    std::ofstream c(dir / "run.ini");
    c << "[grid]\nn = 32\n[kernel]\nalpha = 0.5\npsi_L = table\npsi_L_table = psi.csv\n"
         "[initial]\npreset = cosine\n[run]\nt_end = 0.1\n";
  }
  const RunConfig a = load_config(dir / "run.ini");
  ASSERT_TRUE(std::holds_alternative<LipschitzTable>(a.kernel.psi_L));
  EXPECT_DOUBLE_EQ(a.kernel.lipschitz_value(0.0), 2.0);
  {
    std::ofstream t(dir / "psi.csv");
    t << "x,psi\n-0.5,0.5\n-0.25,1\n0,3\n0.25,1\n";
  }
  EXPECT_NE(load_config(dir / "run.ini").hash, a.hash);
  fs::remove(dir / "psi.csv");
  EXPECT_THROW(load_config(dir / "run.ini"), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.ini"), ConfigError);
  fs::remove_all(dir);
}

TEST(Scenarios, AllParseWithExpectedSetup) {
  const auto names = scenario_names();
  EXPECT_EQ(names.size(), 6u);
  for (const auto& name : names) {
    const RunConfig c = scenario(name);
    EXPECT_EQ(c.output.prefix, name);
    EXPECT_EQ(c.kernel.alpha, 0.5);
  }
  const RunConfig ea = scenario("fractional-ea");
  EXPECT_EQ(ea.n, 256u);
  EXPECT_EQ(ea.potential.k, 0.0);
  EXPECT_EQ(ea.step.t_end, 2.0);
  EXPECT_EQ(scenario("fractional-epa-attractive").potential.k, 1.0);
  EXPECT_EQ(scenario("fractional-epa-repulsive").potential.k, -1.0);
  const RunConfig zone = scenario("singular-3zone");
  EXPECT_TRUE(zone.kernel.has_lipschitz_part());
  EXPECT_TRUE(zone.potential.has_regular_part());
  const RunConfig burgers = scenario("burgers-control");
  EXPECT_FALSE(burgers.alignment);
  EXPECT_EQ(burgers.initial.name, "burgers-shock");
  EXPECT_EQ(scenario("fractional-ea", {{"grid.n", "64"}}).n, 64u);
  EXPECT_THROW(scenario("nope"), ConfigError);
}

TEST(Io, FormatReal) {
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(format_real(NAN), "nan");
  EXPECT_EQ(format_real(INFINITY), "inf");
  EXPECT_EQ(format_real(-INFINITY), "-inf");
  EXPECT_EQ(std::strtod(format_real(1.0 / 3.0).c_str(), nullptr), 1.0 / 3.0);
}

TEST(Io, SnapshotRoundTripIsBitExact) {
  const fs::path dir = scratch("snap");
  const RunConfig cfg = parse_config(kMinimal, {{"potential.k", "1"}, {"initial.b", "0.3"}});
  SimState s = make_initial(cfg.initial, cfg.grid(), cfg.kernel, cfg.potential);
  s.t = 0.123456789;
  const DerivedFields d = recover_velocity(s);
  for (auto format : {SnapshotFormat::csv, SnapshotFormat::binary}) {
    const fs::path p = dir / (format == SnapshotFormat::csv ? "s.csv" : "s.bin");
    write_snapshot(p, s, d, cfg.hash_hex(), format);
    const SnapshotData back = read_snapshot(p);
    EXPECT_EQ(back.t, s.t);
    EXPECT_EQ(back.n, 32u);
    EXPECT_EQ(back.alpha, 0.5);
    EXPECT_EQ(back.k, 1.0);
    EXPECT_EQ(back.config_hash, cfg.hash_hex());
    EXPECT_EQ(back.rho, s.rho.data());
    EXPECT_EQ(back.G, s.G.data());
    EXPECT_EQ(back.u, d.u.data());
    EXPECT_EQ(back.F, d.F.data());
    ASSERT_EQ(back.x.size(), 32u);
    EXPECT_EQ(back.x[0], -0.5);
  }
  {
    std::ofstream junk(dir / "junk.csv");
    junk << "hello\n";
  }
  EXPECT_THROW(read_snapshot(dir / "junk.csv"), IoError);
  EXPECT_THROW(read_snapshot(dir / "absent.bin"), IoError);
  EXPECT_THROW(write_snapshot(dir / "no/such/dir/s.csv", s, d, "x", SnapshotFormat::csv), IoError);
  fs::remove_all(dir);
}

TEST(Io, DiagnosticsCsvRoundTrip) {
  DiagnosticsLog log;
  DiagnosticsRow a;
  a.t = 0.0;
  a.rho_min = 0.7;
  a.rho_max = 1.3;
  a.F_inf = 0.25;
  a.drho_inf = 1.0 / 3.0;
  a.bkm = 0.0;
  a.mass = 1.0;
  a.momentum = 0.1;
  a.env_lower_margin = 2.0;
  a.env_upper_margin = 3.5;
  a.moc_pass = 1;
  a.moc_log_B = 12.5;
  DiagnosticsRow b = a;
  b.t = 0.01;
  b.moc_pass = -1;
  b.moc_log_B = NAN;
  DiagnosticsRow c = a;
  c.t = 0.02;
  c.moc_pass = 0;
  c.moc_log_B = 1e30;  // exp overflows: written as inf
  log.rows = {a, b, c};
  const fs::path dir = scratch("diag");
  {
    std::ofstream out(dir / "d.csv");
    write_diagnostics_csv(out, log, {{"config_hash", "abc"}, {"bound.C_m", "0.5"}});
  }
  const DiagnosticsFile f = read_diagnostics_csv(dir / "d.csv");
  EXPECT_EQ(f.meta.at("config_hash"), "abc");
  EXPECT_EQ(f.meta.at("bound.C_m"), "0.5");
  ASSERT_EQ(f.log.rows.size(), 3u);
  EXPECT_EQ(f.log.rows[0].drho_inf, 1.0 / 3.0);
  EXPECT_EQ(f.log.rows[0].moc_pass, 1);
  EXPECT_NEAR(f.log.rows[0].moc_log_B, 12.5, 1e-12);
  EXPECT_EQ(f.log.rows[1].moc_pass, -1);
  EXPECT_TRUE(std::isnan(f.log.rows[1].moc_log_B));
  EXPECT_EQ(f.log.rows[2].moc_pass, 0);
  EXPECT_TRUE(std::isinf(f.log.rows[2].moc_log_B));
  const std::string text = slurp(dir / "d.csv");
  std::string header;
  for (const auto& col : diagnostics_columns()) header += (header.empty() ? "" : ",") + col;
  EXPECT_NE(text.find(header), std::string::npos);
  EXPECT_THROW(read_diagnostics_csv(dir / "missing.csv"), IoError);
  fs::remove_all(dir);
}

TEST(Runner, EmitsFilesAndIsDeterministic) {
  const RunConfig cfg = scenario("fractional-epa-attractive",
                                 {{"grid.n", "64"}, {"run.t_end", "0.1"}, {"output.snapshot_times", "0.05"},
                                  {"monitor.moc_every", "3"}});
  const fs::path d1 = scratch("emit1"), d2 = scratch("emit2");
  ::setenv("EPA_THREADS", "1", 1);
  const RunReport r1 = execute(cfg);
  ::setenv("EPA_THREADS", "3", 1);
  const RunReport r2 = execute(cfg);
  ::unsetenv("EPA_THREADS");
  EXPECT_EQ(r1.outcome.status, RunStatus::completed);
  EXPECT_EQ(exit_code(r1.outcome.status), 0);
  ASSERT_TRUE(r1.checks);
  EXPECT_TRUE(r1.checks->all_pass());
  const OutputFiles f1 = emit_outputs(r1, d1);
  const OutputFiles f2 = emit_outputs(r2, d2);
  ASSERT_EQ(f1.snapshots.size(), 2u);
  EXPECT_EQ(read_snapshot(f1.snapshots[0]).t, 0.05);
  EXPECT_EQ(read_snapshot(f1.snapshots[1]).t, 0.1);
  EXPECT_EQ(slurp(f1.diagnostics), slurp(f2.diagnostics));
  EXPECT_EQ(slurp(f1.summary), slurp(f2.summary));
  EXPECT_NE(slurp(f1.summary).find("status: completed"), std::string::npos);
  EXPECT_EQ(f1.diagnostics.filename(), "fractional-epa-attractive_diagnostics.csv");
  const DiagnosticsFile back = read_diagnostics_csv(f1.diagnostics);
  EXPECT_EQ(back.meta.at("config_hash"), cfg.hash_hex());
  EXPECT_EQ(back.log.rows.size(), r1.log.rows.size());
  fs::remove_all(d1);
  fs::remove_all(d2);
  EXPECT_THROW(emit_outputs(r1, "/proc/epa_cannot_write"), IoError);
}

TEST(Runner, ControlsSkipBoundsAndReportBlowup) {
  const RunConfig cfg = scenario("burgers-control", {{"grid.n", "128"}});
  const RunReport r = execute(cfg);
  EXPECT_EQ(r.outcome.status, RunStatus::blowup_detected);
  EXPECT_EQ(exit_code(r.outcome.status), 2);
  EXPECT_FALSE(r.constants);
  EXPECT_FALSE(r.checks);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_EQ(exit_code(RunStatus::vacuum_detected), 3);
  EXPECT_EQ(exit_code(RunStatus::nan_detected), 4);
}

TEST(Runner, AdvisoryForAlphaAboveOne) {
  const RunConfig cfg = scenario("fractional-ea", {{"grid.n", "32"}, {"kernel.alpha", "1.2"}, {"run.t_end", "0.05"}});
  const RunReport r = execute(cfg);
  ASSERT_TRUE(r.checks);
  EXPECT_TRUE(r.checks->advisory);
  EXPECT_NE(summary_text(r).find("advisory"), std::string::npos);
}
