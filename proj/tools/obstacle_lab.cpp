#include "obstacle/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace obstacle;

namespace {

struct CommonFlags {
  std::string config;
  std::string scenario;
  std::string out;
  int resolution = 0;
  int threads = 1;
  long long seed = -1;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "scenario config (JSON)");
  cmd->add_option("--scenario", f.scenario, "builtin scenario name (see `list`)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--resolution", f.resolution, "nodes per unit length")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "seed for quadrature phases")->check(CLI::NonNegativeNumber);
  cmd->add_option("--format", f.format, "table format")->check(CLI::IsMember({"csv", "json"}));
}

ScenarioConfig resolve_config(const CommonFlags& f) {
  if (f.config.empty() == f.scenario.empty()) {
    throw LabError(ErrorCode::ConfigError, "config: give exactly one of --config or --scenario");
  }
  ScenarioConfig cfg = f.config.empty() ? builtin_registry().get(f.scenario) : load_config(f.config);
  if (!f.out.empty()) cfg.output = f.out;
  return cfg;
}

RunOptions run_options(const CommonFlags& f) {
  RunOptions o;
  o.format = parse_table_format(f.format);
  o.threads = f.threads;
  if (f.resolution > 0) o.resolution = f.resolution;
  if (f.seed >= 0) o.seed = static_cast<std::uint64_t>(f.seed);
  return o;
}

int report(const ScenarioResult& r) {
  std::printf("scenario %s  resolution %d  %.2fs\n", r.config.name.c_str(), r.resolution, r.seconds);
  for (const Verdict& v : r.verdicts) {
    std::printf("  %s %-28s value %-12s limit %-12s %s\n", v.pass ? "PASS" : "FAIL", v.name.c_str(),
                format_number(v.value).c_str(), format_number(v.limit).c_str(), v.detail.c_str());
  }
  for (const auto& n : r.notes) std::printf("  note: %s\n", n.c_str());
  if (!r.all_pass()) {
    Json failed = Json::array();
    for (const Verdict& v : r.verdicts)
      if (!v.pass) failed.push_back(v.name);
    std::cout << Json{{"status", "fail"}, {"scenario", r.config.name}, {"failed", failed}}.dump() << "\n";
  }
  return r.exit_status();
}

int fail_with(const LabError& e, const std::string& out) {
  const int code = e.code() == ErrorCode::ConfigError ? 2 : 3;
  Json j = {{"status", "error"}, {"error", std::string(to_string(e.code()))}, {"message", e.what()}, {"exit_status", code}};
  std::cerr << e.what() << "\n";
  std::cout << j.dump() << "\n";
  if (!out.empty()) {
    try {
      write_text(std::filesystem::path(out) / "report.json", j.dump(1) + "\n");
    } catch (...) {
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"obstacle_lab: obstacle problem solver and free-boundary analysis"};
  app.require_subcommand(1);

  CommonFlags solve_f, analyze_f, stratify_f, study_f;
  int levels = 3;
  auto* solve_cmd = app.add_subcommand("solve", "solve and write the solution, slices and residuals");
  add_common(solve_cmd, solve_f);
  auto* analyze_cmd = app.add_subcommand("analyze", "run the scenario's analyses and verdicts");
  add_common(analyze_cmd, analyze_f);
  auto* stratify_cmd = app.add_subcommand("stratify", "classify every free-boundary point");
  add_common(stratify_cmd, stratify_f);
  auto* study_cmd = app.add_subcommand("study", "refinement study over h, h/2, ...");
  add_common(study_cmd, study_f);
  study_cmd->add_option("--levels", levels, "number of levels (>= 2)");
  auto* list_cmd = app.add_subcommand("list", "list builtin scenarios");

  CLI11_PARSE(app, argc, argv);

  CommonFlags* active = nullptr;
  try {
    if (list_cmd->parsed()) {
      for (const auto& [name, desc] : list_scenarios()) std::printf("%-34s %s\n", name.c_str(), desc.c_str());
      return 0;
    }
    if (solve_cmd->parsed()) {
      active = &solve_f;
      RunOptions o = run_options(solve_f);
      o.analyses = std::vector<std::string>{"solve", "residuals"};
      return report(run_scenario(resolve_config(solve_f), o));
    }
    if (analyze_cmd->parsed()) {
      active = &analyze_f;
      return report(run_scenario(resolve_config(analyze_f), run_options(analyze_f)));
    }
    if (stratify_cmd->parsed()) {
      active = &stratify_f;
      RunOptions o = run_options(stratify_f);
      o.analyses = std::vector<std::string>{"solve", "stratify"};
      return report(run_scenario(resolve_config(stratify_f), o));
    }
    if (study_cmd->parsed()) {
      active = &study_f;
      const ScenarioConfig cfg = resolve_config(study_f);
      const RunOptions o = run_options(study_f);
      const ConvergenceTable t = refinement_study(cfg, levels, o);
      const Table table = t.to_table();
      std::cout << table.to_csv();
      if (!cfg.output.empty()) {
        Provenance prov;
        prov.version = library_version();
        prov.scenario = cfg.name;
        Json hashed = config_to_json(cfg);
        hashed.erase("output");
        prov.config_hash = config_hash(hashed);
        prov.seed = o.seed.value_or(cfg.seed);
        prov.tolerances = {{"solver_tol", cfg.tol}};
        write_table(cfg.output, "convergence", table, o.format, prov);
      }
      return 0;
    }
  } catch (const LabError& e) {
    std::string out;
    if (active) out = active->out;
    return fail_with(e, out);
  }
  return 0;
}
