#include "epa/runner.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "epa/error.hpp"
#include "epa/io.hpp"

namespace epa {
namespace {

// Keeps copies of the state at the configured output times.
class SnapshotMonitor final : public Monitor {
 public:
  explicit SnapshotMonitor(std::vector<double> times) : times_(std::move(times)) {}

  void observe(const StepSnapshot& s) override {
    const double tol = 1e-12 * std::max(1.0, s.state.t);
    while (next_ < times_.size() && times_[next_] <= s.state.t + tol) {
      if (std::abs(times_[next_] - s.state.t) <= tol) {
        records_.push_back({s.state, s.derived});
      }
      ++next_;
    }
    if (s.final && (records_.empty() || records_.back().state.t != s.state.t)) {
      records_.push_back({s.state, s.derived});
    }
  }

  std::optional<double> next_stop(double t) const override {
    for (std::size_t i = next_; i < times_.size(); ++i) {
      if (times_[i] > t) return times_[i];
    }
    return std::nullopt;
  }

  std::vector<SnapshotRecord> take() { return std::move(records_); }

 private:
  std::vector<double> times_;
  std::size_t next_ = 0;
  std::vector<SnapshotRecord> records_;
};

std::string yes_no(bool v) { return v ? "pass" : "FAIL"; }

}  // namespace

CheckSummary run_checks(const DiagnosticsLog& log, const BoundConstants& bc) {
  CheckSummary c;
  c.lower = check_lower_envelope(log, bc);
  c.upper = check_upper_envelope(log, bc);
  c.F = check_F_bound(log, bc);
  c.bkm = bkm_accumulate(log);
  c.advisory = bc.advisory();
  return c;
}

RunReport execute(const RunConfig& config) {
  const SimState state0 =
      make_initial(config.initial, config.grid(), config.kernel, config.potential);
  RunReport report{config, RunOutcome{RunStatus::completed, 0.0, 0, 0.0, {}, state0}, {}, {}, {}, {},
                   {}, {}};

  if (config.alignment && config.kernel.alpha < 2.0) {
    report.constants = bound_constants(state0, config.diagnostics.eps_fraction, config.diagnostics.C1);
    if (report.constants->advisory()) {
      report.warnings.push_back("alpha >= 1: bound constants are derived for 0 < alpha < 1; checks are advisory");
    }
  } else {
    report.warnings.push_back("alignment inactive or alpha = 2: bound checks skipped");
  }

  if (report.constants && config.monitor.moc != MocMode::off) {
    try {
      const ModulusParams certified = certified_modulus_params(
          state0, *report.constants, config.step.t_end, config.diagnostics.C2,
          config.diagnostics.C3, config.diagnostics.C_F);
      certified.validate();
      MocSettings moc{certified.delta, certified.gamma, certified.alpha, std::nullopt,
                      config.monitor.moc_every};
      if (config.monitor.moc == MocMode::certified) {
        moc.log_B = certified.log_B;
      } else {
        const double base = moc_min_log_B(state0.rho, moc.delta, moc.gamma, moc.alpha);
        if (std::isfinite(base)) moc.log_B = base + std::log(config.monitor.moc_B_factor);
      }
      report.moc = moc;
    } catch (const DomainError& e) {
      report.warnings.push_back(std::string("modulus monitor disabled: ") + e.what());
    }
  }

  DiagnosticsMonitor diagnostics(report.constants, report.moc);
  SnapshotMonitor snapshots(config.output.snapshot_times);
  report.outcome = run(state0, config.step, {&diagnostics, &snapshots}, config.detect);
  report.log = diagnostics.log();
  report.snapshots = snapshots.take();
  if (report.constants) report.checks = run_checks(report.log, *report.constants);
  return report;
}

std::vector<std::pair<std::string, std::string>> diagnostics_meta(const RunReport& report) {
  std::vector<std::pair<std::string, std::string>> meta = {
      {"config_hash", report.config.hash_hex()}, {"prefix", report.config.output.prefix}};
  if (report.constants) {
    for (const auto& [name, value] : report.constants->fields()) {
      meta.emplace_back("bound." + name, format_real(value));
    }
  }
  if (report.moc) {
    meta.emplace_back("moc.delta", format_real(report.moc->delta));
    meta.emplace_back("moc.gamma", format_real(report.moc->gamma));
    meta.emplace_back("moc.log_B", report.moc->log_B ? format_real(*report.moc->log_B) : "nan");
  }
  return meta;
}

std::string summary_text(const RunReport& r) {
  std::ostringstream s;
  const auto& rows = r.log.rows;
  s << "config_hash: " << r.config.hash_hex() << '\n';
  s << "status: " << to_string(r.outcome.status) << '\n';
  if (!r.outcome.reason.empty()) s << "reason: " << r.outcome.reason << '\n';
  s << "t_final: " << format_real(r.outcome.t_final) << '\n';
  s << "steps: " << r.outcome.steps << '\n';
  s << "bkm_total: " << format_real(r.outcome.bkm) << '\n';
  if (!rows.empty()) {
    const auto& a = rows.front();
    const auto& b = rows.back();
    s << "mass_drift_rel: " << format_real(std::abs(b.mass - a.mass) / std::abs(a.mass)) << '\n';
    s << "momentum_drift_abs: " << format_real(std::abs(b.momentum - a.momentum)) << '\n';
  }
  if (r.checks) {
    const auto& c = *r.checks;
    s << "lower_envelope: " << yes_no(c.lower.pass) << " margin " << format_real(c.lower.margin) << '\n';
    s << "upper_envelope: " << yes_no(c.upper.pass) << " margin " << format_real(c.upper.margin)
      << " fitted_C1 " << format_real(c.upper.fitted_C1) << " (estimate)\n";
    s << "F_bound: " << yes_no(c.F.pass) << " margin " << format_real(c.F.margin);
    if (c.F.monotone_required) s << " non_increasing " << yes_no(c.F.monotone);
    s << '\n';
  }
  if (r.moc) {
    s << "moc_delta: " << format_real(r.moc->delta) << '\n';
    s << "moc_gamma: " << format_real(r.moc->gamma) << '\n';
    s << "moc_log_B: " << (r.moc->log_B ? format_real(*r.moc->log_B) : "none") << '\n';
    int fails = 0;
    s << "moc_min_log_B_trace:";
    for (const auto& row : rows) {
      if (std::isnan(row.moc_log_B)) continue;
      s << ' ' << format_real(row.t) << ':' << format_real(row.moc_log_B);
      if (row.moc_pass == 0) ++fails;
    }
    s << '\n';
    if (r.moc->log_B) s << "moc_check: " << (fails == 0 ? "pass" : "FAIL") << " failures " << fails << '\n';
  }
  for (const auto& w : r.warnings) s << "warning: " << w << '\n';
  return s.str();
}

OutputFiles emit_outputs(const RunReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const std::string& prefix = report.config.output.prefix;
  OutputFiles files;
  files.diagnostics = dir / (prefix + "_diagnostics.csv");
  files.summary = dir / (prefix + "_summary.txt");
  {
    std::ofstream out(files.diagnostics, std::ios::trunc);
    if (!out) throw IoError("cannot write " + files.diagnostics.string());
    write_diagnostics_csv(out, report.log, diagnostics_meta(report));
    if (!out) throw IoError("failed writing " + files.diagnostics.string());
  }
  {
    std::ofstream out(files.summary, std::ios::trunc);
    if (!out) throw IoError("cannot write " + files.summary.string());
    out << summary_text(report);
    if (!out) throw IoError("failed writing " + files.summary.string());
  }
  const bool binary = report.config.output.snapshot_format == SnapshotFormat::binary;
  for (std::size_t i = 0; i < report.snapshots.size(); ++i) {
    const auto& snap = report.snapshots[i];
    const auto path = dir / (prefix + "_snap_" + std::to_string(i) + (binary ? ".bin" : ".csv"));
    write_snapshot(path, snap.state, snap.derived, report.config.hash_hex(),
                   report.config.output.snapshot_format);
    files.snapshots.push_back(path);
  }
  return files;
}

int exit_code(RunStatus status) noexcept {
  switch (status) {
    case RunStatus::completed: return 0;
    case RunStatus::blowup_detected: return 2;
    case RunStatus::vacuum_detected: return 3;
    case RunStatus::nan_detected: return 4;
  }
  return 4;
}

}  // namespace epa
