// Command-line front end: run, scenario, check, sweep.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "epa/config.hpp"
#include "epa/error.hpp"
#include "epa/io.hpp"
#include "epa/parallel.hpp"
#include "epa/runner.hpp"

namespace {

std::filesystem::path output_dir(const epa::RunConfig& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("EPA_OUTPUT_DIR"); env && *env) return env;
  return cfg.output.dir;
}

int run_and_emit(const epa::RunConfig& cfg, const std::string& dir_flag) {
  const epa::RunReport report = epa::execute(cfg);
  const auto files = epa::emit_outputs(report, output_dir(cfg, dir_flag));
  std::cout << epa::summary_text(report);
  std::cout << "diagnostics: " << files.diagnostics.string() << '\n';
  return epa::exit_code(report.outcome.status);
}

std::vector<epa::Override> parse_overrides(const std::vector<std::string>& items) {
  std::vector<epa::Override> out;
  for (const auto& item : items) out.push_back(epa::parse_override(item));
  return out;
}

int check_file(const std::string& path) {
  const epa::DiagnosticsFile file = epa::read_diagnostics_csv(path);
  std::map<std::string, double> values;
  for (const auto& [key, value] : file.meta) {
    if (key.rfind("bound.", 0) == 0) values[key.substr(6)] = std::strtod(value.c_str(), nullptr);
  }
  if (values.empty()) {
    std::cout << "no bound constants recorded; nothing to check\n";
    return 0;
  }
  const epa::BoundConstants bc = epa::BoundConstants::from_fields(values);
  const epa::CheckSummary c = epa::run_checks(file.log, bc);
  auto line = [](const char* name, bool pass, double margin) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << " margin " << epa::format_real(margin) << '\n';
  };
  line("lower envelope", c.lower.pass, c.lower.margin);
  line("upper envelope", c.upper.pass, c.upper.margin);
  std::cout << "       fitted C1 " << epa::format_real(c.upper.fitted_C1) << " (estimate)\n";
  line("F bound", c.F.pass, c.F.margin);
  int moc_fail = 0, moc_rows = 0;
  for (const auto& row : file.log.rows) {
    if (row.moc_pass < 0) continue;
    ++moc_rows;
    if (row.moc_pass == 0) ++moc_fail;
  }
  if (moc_rows > 0) {
    std::cout << (moc_fail == 0 ? "[PASS] " : "[FAIL] ") << "modulus of continuity " << moc_rows - moc_fail
              << '/' << moc_rows << " monitored times\n";
  }
  std::cout << "bkm " << epa::format_real(c.bkm) << '\n';
  if (c.advisory) std::cout << "warning: alpha >= 1, results are advisory\n";
  const bool ok = c.all_pass() && moc_fail == 0;
  return ok || c.advisory ? 0 : epa::kExitCheckFailed;
}

int sweep(const std::string& config_path, const std::string& param, const std::string& values,
          const std::vector<epa::Override>& base, const std::string& dir_flag) {
  std::vector<std::string> items;
  std::istringstream in(values);
  for (std::string v; std::getline(in, v, ',');) {
    if (!v.empty()) items.push_back(v);
  }
  if (items.empty()) throw epa::ConfigError("sweep: --values is empty");
  // Validate every configuration before starting any run.
  std::vector<epa::RunConfig> configs;
  for (const auto& v : items) {
    auto overrides = base;
    overrides.emplace_back(param, v);
    epa::RunConfig cfg = epa::load_config(config_path, overrides);
    std::string stem = param + "_" + v;
    for (char& ch : stem) {
      if (ch == '/' || ch == '.') ch = '_';
    }
    cfg.output.prefix += "_" + stem;
    configs.push_back(std::move(cfg));
  }
  std::vector<int> codes(configs.size(), 0);
  std::vector<std::string> lines(configs.size());
  epa::parallel_for(configs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const epa::RunReport report = epa::execute(configs[i]);
      epa::emit_outputs(report, output_dir(configs[i], dir_flag));
      codes[i] = epa::exit_code(report.outcome.status);
      lines[i] = param + "=" + items[i] + " status " + epa::to_string(report.outcome.status) +
                 " t_final " + epa::format_real(report.outcome.t_final) + " hash " +
                 configs[i].hash_hex();
    }
  });
  int worst = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::cout << lines[i] << '\n';
    worst = std::max(worst, codes[i]);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euler-Poisson-alignment simulator"};
  app.require_subcommand(1);
  std::string dir_flag;
  app.add_option("--output-dir", dir_flag, "Output directory (overrides config and EPA_OUTPUT_DIR)");

  std::string config_path;
  std::vector<std::string> override_items;

  auto* run_cmd = app.add_subcommand("run", "Run a config file");
  run_cmd->add_option("config", config_path, "Config file")->required();
  run_cmd->add_option("--override", override_items, "section.key=value");

  std::string scenario_name;
  bool list = false;
  auto* scenario_cmd = app.add_subcommand("scenario", "Run a built-in scenario");
  scenario_cmd->add_option("name", scenario_name, "Scenario name");
  scenario_cmd->add_option("--override", override_items, "section.key=value");
  scenario_cmd->add_flag("--list", list, "List scenarios");
  bool print = false;
  scenario_cmd->add_flag("--print", print, "Print the scenario config instead of running it");

  std::string csv_path;
  auto* check_cmd = app.add_subcommand("check", "Re-run bound checks on a diagnostics CSV");
  check_cmd->add_option("diagnostics", csv_path, "Diagnostics CSV")->required();

  std::string param, values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a config over a list of parameter values");
  sweep_cmd->add_option("config", config_path, "Config file")->required();
  sweep_cmd->add_option("--param", param, "section.key to vary")->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values")->required();
  sweep_cmd->add_option("--override", override_items, "section.key=value");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto overrides = parse_overrides(override_items);
    if (*run_cmd) return run_and_emit(epa::load_config(config_path, overrides), dir_flag);
    if (*scenario_cmd) {
      if (list) {
        for (const auto& name : epa::scenario_names()) std::cout << name << '\n';
        return 0;
      }
      if (scenario_name.empty()) throw epa::ConfigError("scenario: name required (see --list)");
      if (print) {
        std::cout << epa::scenario_text(scenario_name);
        return 0;
      }
      return run_and_emit(epa::scenario(scenario_name, overrides), dir_flag);
    }
    if (*check_cmd) return check_file(csv_path);
    if (*sweep_cmd) return sweep(config_path, param, values, overrides, dir_flag);
  } catch (const epa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return epa::kExitConfigError;
  } catch (const epa::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return epa::kExitIoError;
  } catch (const epa::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return epa::kExitConfigError;
  }
  return 0;
}
