#pragma once

#include "obstacle/io.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace obstacle {

/// Checks a scenario run is expected to satisfy; unset fields are not checked.
struct Expectations {
  std::optional<std::string> label;       // "Regular" or "Singular" at the analysis point
  std::optional<double> phi0;             // expected Phi(0+)
  double phi0_rel_tol = 0.1;
  std::optional<Mat> matrix;              // expected blow-up matrix B
  double matrix_tol = 1e-3;
  std::optional<int> stratum;             // at the analysis point
  std::optional<double> exact_linf;       // bound on max |u - exact|
  std::optional<double> weiss_spread;     // relative spread of Phi over [0.05, 0.5]
  std::optional<double> monneau_max;      // bound on max M(r)
  std::optional<double> growth_value;     // exact growth ratio
  double growth_value_tol = 0.05;
  std::optional<double> growth_spread;    // bound on the spread across radii
  double drift_cap = 100.0;               // bound on fitted C3, C4, C5
  std::optional<double> stratum_fraction; // minimum share of classified points in the expected stratum
};

/// One experiment. Parsed from JSON (see README for the schema).
struct ScenarioConfig {
  std::string name;
  std::string description;
  int dim = 2;
  std::array<double, 3> lower{-1.0, -1.0, -1.0};
  std::array<double, 3> upper{1.0, 1.0, 1.0};
  std::string coefficients = "identity";  // coefficient preset
  std::string boundary = "zero";          // field preset for g
  std::string exact;                      // field preset of the exact solution, if known
  std::vector<int> resolutions{128};      // nodes per unit length; the first drives run_scenario
  double tol = 1e-8;
  int max_iter = 200000;
  double omega = 0.0;  // 0 selects the Laplacian-optimal value
  double ladder_cap = 1.0;
  std::optional<double> alpha;  // defaults to the coefficient preset's exponent
  std::vector<std::string> analyses{"solve", "residuals"};
  std::optional<Vec> point;     // analysis point; default: the Γ point nearest the origin
  int stratify_stride = 1;
  int growth_stride = 1;
  bool decay = true;
  Expectations expect;
  std::filesystem::path output;  // empty: no files
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& known_analyses() {
  static const std::vector<std::string> names = {"solve",   "residuals", "weiss",    "monneau",
                                                 "blowup",  "growth",    "stratify", "pw-check"};
  return names;
}

/// Throws LabError(ConfigError) naming the offending key path, e.g.
/// "solver.tol: must be > 0".
ScenarioConfig parse_config(const Json& j);
ScenarioConfig load_config(const std::filesystem::path& path);
Json config_to_json(const ScenarioConfig& cfg);
void validate_config(const ScenarioConfig& cfg);

class ScenarioRegistry {
 public:
  void add(ScenarioConfig cfg);
  bool contains(const std::string& name) const;
  const ScenarioConfig& get(const std::string& name) const;
  /// Alphabetized (name, description) pairs.
  std::vector<std::pair<std::string, std::string>> list() const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, ScenarioConfig> entries_;
};

const ScenarioRegistry& builtin_registry();
std::vector<std::pair<std::string, std::string>> list_scenarios(const ScenarioRegistry& registry = builtin_registry());

struct Verdict {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct RunOptions {
  TableFormat format = TableFormat::Csv;
  int threads = 1;
  bool write_files = true;
  std::optional<int> resolution;  // overrides the config's first resolution
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<std::string>> analyses;  // overrides the config's list
};

struct ScenarioResult {
  ScenarioConfig config;
  int resolution = 0;
  std::optional<ObstacleSolution> solution;
  std::optional<FreeBoundarySet> free_boundary;
  std::optional<Vec> point;
  std::optional<BlowupReport> blowup;
  std::optional<MonotonicityTrace> trace;
  std::optional<DriftVerdict> weiss;
  std::optional<DriftVerdict> monneau;
  std::optional<DerivativeReport> derivatives;
  std::optional<GrowthReport> growth;
  std::optional<StratificationReport> strata;
  std::optional<double> exact_error;
  std::vector<PwResult> pw;
  std::vector<Verdict> verdicts;
  std::vector<std::string> notes;
  std::vector<std::filesystem::path> files;
  double seconds = 0.0;
  Json report;

  bool all_pass() const;
  /// 0 iff every verdict passes, 1 otherwise.
  int exit_status() const { return all_pass() ? 0 : 1; }
};

/// Runs the requested analyses in dependency order and writes the artifacts
/// when config.output is set. Analysis errors propagate.
ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& opts = {});

struct ConvergenceTable {
  std::vector<int> resolutions;
  std::vector<std::string> quantities;
  std::vector<std::vector<double>> values;  // [quantity][level]
  std::vector<std::vector<std::string>> orders;  // [quantity][level - 1]: number or "floor"
  Table to_table() const;
  /// Observed order between two consecutive levels, nullopt when at the floor.
  std::optional<double> order(const std::string& quantity, std::size_t level) const;
  const std::vector<double>& column(const std::string& quantity) const;
};

/// Reruns the scenario at resolutions r0, 2 r0, ... (levels >= 2) and
/// tabulates errors and fitted constants with observed orders.
ConvergenceTable refinement_study(const ScenarioConfig& config, int levels, const RunOptions& opts = {});

/// Observed order log2(e_k / e_{k+1}), or "floor" when both are below the floor.
std::string order_string(double coarse, double fine, double floor);

}  // namespace obstacle
