#include "obstacle/scenario.hpp"

#include "obstacle/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

namespace obstacle {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw LabError(ErrorCode::ConfigError, (path.empty() ? std::string("<root>") : path) + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Typed access to a JSON object with key paths in every error message.
class Reader {
 public:
  Reader(const Json& j, std::string path, std::set<std::string> allowed)
      : j_(j), path_(std::move(path)), allowed_(std::move(allowed)) {
    if (!j_.is_object()) config_error(path_, "expected an object");
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!allowed_.count(it.key())) config_error(join(path_, it.key()), "unknown key");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const Json& raw(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number()) config_error(path(key), "expected a number");
    return v.get<double>();
  }
  std::optional<double> optional_number(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return number(key, 0.0);
  }
  long long integer(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) config_error(path(key), "expected an integer");
    return v.get<long long>();
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_string()) config_error(path(key), "expected a string");
    return v.get<std::string>();
  }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) config_error(path(key), "expected true or false");
    return v.get<bool>();
  }
  std::vector<double> numbers(const std::string& key) const {
    const Json& v = j_.at(key);
    if (!v.is_array()) config_error(path(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) config_error(path(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> allowed_;
};

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json mat_json(const Mat& m) {
  Json a = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (int k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    a.push_back(std::move(r));
  }
  return a;
}

Json verdicts_json(const std::vector<Verdict>& vs) {
  Json a = Json::array();
  for (const auto& v : vs) {
    Json j;
    j["name"] = v.name;
    j["pass"] = v.pass;
    j["value"] = std::isfinite(v.value) ? Json(v.value) : Json(format_number(v.value));
    j["limit"] = std::isfinite(v.limit) ? Json(v.limit) : Json(format_number(v.limit));
    if (!v.detail.empty()) j["detail"] = v.detail;
    a.push_back(std::move(j));
  }
  return a;
}

bool needs_solution(const std::string& a) { return a != "pw-check"; }

}  // namespace

ScenarioConfig parse_config(const Json& j) {
  Reader root(j, "",
              {"name", "description", "domain", "coefficients", "boundary", "exact", "grid", "solver",
               "ladder", "alpha", "analyses", "point", "stratify", "growth", "decay", "expect", "output",
               "seed"});
  ScenarioConfig c;
  c.name = root.string("name", "");
  c.description = root.string("description", "");
  if (root.has("domain")) {
    Reader d(root.raw("domain"), "domain", {"dim", "lower", "upper", "half_width"});
    const long long dim = d.integer("dim", 2);
    if (dim < 1 || dim > 3) config_error("domain.dim", "must be 1, 2 or 3");
    c.dim = static_cast<int>(dim);
    if (d.has("half_width")) {
      if (d.has("lower") || d.has("upper")) config_error("domain.half_width", "conflicts with lower/upper");
      const double w = d.number("half_width", 1.0);
      if (!(w > 0)) config_error("domain.half_width", "must be > 0");
      c.lower = {-w, -w, -w};
      c.upper = {w, w, w};
    }
    for (const char* key : {"lower", "upper"}) {
      if (!d.has(key)) continue;
      const std::vector<double> v = d.numbers(key);
      if (static_cast<int>(v.size()) != c.dim) config_error(d.path(key), "length must equal domain.dim");
      auto& dst = std::string(key) == "lower" ? c.lower : c.upper;
      for (int a = 0; a < c.dim; ++a) dst[a] = v[a];
    }
  }
  c.coefficients = root.string("coefficients", c.coefficients);
  c.boundary = root.string("boundary", c.boundary);
  c.exact = root.string("exact", "");
  if (root.has("grid")) {
    Reader g(root.raw("grid"), "grid", {"resolutions", "resolution"});
    if (g.has("resolution") && g.has("resolutions")) config_error("grid.resolution", "conflicts with grid.resolutions");
    if (g.has("resolution")) {
      c.resolutions = {static_cast<int>(g.integer("resolution", 128))};
    } else if (g.has("resolutions")) {
      const Json& rs = g.raw("resolutions");
      if (!rs.is_array() || rs.empty()) config_error("grid.resolutions", "expected a non-empty array of integers");
      c.resolutions.clear();
      for (std::size_t i = 0; i < rs.size(); ++i) {
        if (!rs[i].is_number_integer()) config_error("grid.resolutions[" + std::to_string(i) + "]", "expected an integer");
        c.resolutions.push_back(rs[i].get<int>());
      }
    }
  }
  if (root.has("solver")) {
    Reader s(root.raw("solver"), "solver", {"tol", "max_iter", "omega"});
    c.tol = s.number("tol", c.tol);
    c.max_iter = static_cast<int>(s.integer("max_iter", c.max_iter));
    c.omega = s.number("omega", c.omega);
  }
  if (root.has("ladder")) {
    Reader l(root.raw("ladder"), "ladder", {"cap"});
    c.ladder_cap = l.number("cap", c.ladder_cap);
  }
  c.alpha = root.optional_number("alpha");
  if (root.has("analyses")) {
    const Json& a = root.raw("analyses");
    if (!a.is_array()) config_error("analyses", "expected an array of strings");
    c.analyses.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_string()) config_error("analyses[" + std::to_string(i) + "]", "expected a string");
      c.analyses.push_back(a[i].get<std::string>());
    }
  }
  if (root.has("point")) {
    const std::vector<double> p = root.numbers("point");
    c.point = Vec(static_cast<int>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) (*c.point)[static_cast<int>(i)] = p[i];
  }
  if (root.has("stratify")) {
    Reader s(root.raw("stratify"), "stratify", {"stride"});
    c.stratify_stride = static_cast<int>(s.integer("stride", c.stratify_stride));
  }
  if (root.has("growth")) {
    Reader s(root.raw("growth"), "growth", {"stride"});
    c.growth_stride = static_cast<int>(s.integer("stride", c.growth_stride));
  }
  c.decay = root.boolean("decay", c.decay);
  if (root.has("expect")) {
    Reader e(root.raw("expect"), "expect",
             {"label", "phi0", "phi0_rel_tol", "matrix", "matrix_tol", "stratum", "exact_linf",
              "weiss_spread", "monneau_max", "growth_value", "growth_value_tol", "growth_spread",
              "drift_cap", "stratum_fraction"});
    Expectations& x = c.expect;
    if (e.has("label")) x.label = e.string("label", "");
    x.phi0 = e.optional_number("phi0");
    x.phi0_rel_tol = e.number("phi0_rel_tol", x.phi0_rel_tol);
    if (e.has("matrix")) {
      const Json& m = e.raw("matrix");
      if (!m.is_array() || m.empty()) config_error("expect.matrix", "expected a square array of numbers");
      const int n = static_cast<int>(m.size());
      Mat b(n, n);
      for (int i = 0; i < n; ++i) {
        if (!m[i].is_array() || static_cast<int>(m[i].size()) != n) config_error("expect.matrix", "expected a square array of numbers");
        for (int k = 0; k < n; ++k) {
          if (!m[i][k].is_number()) config_error("expect.matrix", "expected a square array of numbers");
          b(i, k) = m[i][k].get<double>();
        }
      }
      x.matrix = b;
    }
    x.matrix_tol = e.number("matrix_tol", x.matrix_tol);
    if (e.has("stratum")) x.stratum = static_cast<int>(e.integer("stratum", 0));
    x.exact_linf = e.optional_number("exact_linf");
    x.weiss_spread = e.optional_number("weiss_spread");
    x.monneau_max = e.optional_number("monneau_max");
    x.growth_value = e.optional_number("growth_value");
    x.growth_value_tol = e.number("growth_value_tol", x.growth_value_tol);
    x.growth_spread = e.optional_number("growth_spread");
    x.drift_cap = e.number("drift_cap", x.drift_cap);
    x.stratum_fraction = e.optional_number("stratum_fraction");
  }
  c.output = root.string("output", "");
  if (root.has("seed")) {
    const long long s = root.integer("seed", 0);
    if (s < 0) config_error("seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  validate_config(c);
  return c;
}

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LabError(ErrorCode::ConfigError, path.string() + ": cannot open");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw LabError(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return parse_config(j);
}

void validate_config(const ScenarioConfig& c) {
  if (c.dim < 1 || c.dim > 3) config_error("domain.dim", "must be 1, 2 or 3");
  for (int a = 0; a < c.dim; ++a) {
    if (!(c.lower[a] < c.upper[a])) config_error("domain.upper", "must exceed domain.lower on every axis");
  }
  if (c.resolutions.empty()) config_error("grid.resolutions", "must not be empty");
  for (std::size_t i = 0; i < c.resolutions.size(); ++i) {
    if (c.resolutions[i] < 2) config_error("grid.resolutions[" + std::to_string(i) + "]", "must be >= 2");
    if (i > 0 && c.resolutions[i] <= c.resolutions[i - 1]) {
      config_error("grid.resolutions[" + std::to_string(i) + "]", "resolutions must be strictly increasing");
    }
  }
  if (!(c.tol > 0)) config_error("solver.tol", "must be > 0");
  if (c.max_iter < 1) config_error("solver.max_iter", "must be >= 1");
  if (c.omega != 0.0 && !(c.omega > 0.0 && c.omega < 2.0)) config_error("solver.omega", "must be in (0, 2), or 0 for automatic");
  if (!(c.ladder_cap > 0)) config_error("ladder.cap", "must be > 0");
  if (c.alpha && !(*c.alpha > 0 && *c.alpha <= 1)) config_error("alpha", "must be in (0, 1]");
  for (std::size_t i = 0; i < c.analyses.size(); ++i) {
    const auto& names = known_analyses();
    if (std::find(names.begin(), names.end(), c.analyses[i]) == names.end()) {
      config_error("analyses[" + std::to_string(i) + "]", "unknown analysis '" + c.analyses[i] + "'");
    }
  }
  if (c.point && c.point->size() != c.dim) config_error("point", "length must equal domain.dim");
  if (c.stratify_stride < 1) config_error("stratify.stride", "must be >= 1");
  if (c.growth_stride < 1) config_error("growth.stride", "must be >= 1");
  const Expectations& x = c.expect;
  if (x.label && *x.label != "Regular" && *x.label != "Singular") config_error("expect.label", "must be Regular or Singular");
  if (!(x.phi0_rel_tol > 0)) config_error("expect.phi0_rel_tol", "must be > 0");
  if (!(x.matrix_tol > 0)) config_error("expect.matrix_tol", "must be > 0");
  if (x.matrix && x.matrix->rows() != c.dim) config_error("expect.matrix", "size must equal domain.dim");
  if (x.exact_linf && !(*x.exact_linf > 0)) config_error("expect.exact_linf", "must be > 0");
  if (x.weiss_spread && !(*x.weiss_spread > 0)) config_error("expect.weiss_spread", "must be > 0");
  if (x.monneau_max && !(*x.monneau_max > 0)) config_error("expect.monneau_max", "must be > 0");
  if (!(x.growth_value_tol > 0)) config_error("expect.growth_value_tol", "must be > 0");
  if (x.growth_spread && !(*x.growth_spread > 0)) config_error("expect.growth_spread", "must be > 0");
  if (!(x.drift_cap > 0)) config_error("expect.drift_cap", "must be > 0");
  const Domain d(c.dim, c.lower, c.upper);
  auto check_preset = [](const std::string& key, auto&& make) {
    try {
      make();
    } catch (const LabError& e) {
      config_error(key, e.what());
    }
  };
  check_preset("coefficients", [&] { make_coefficient_preset(c.coefficients, d); });
  check_preset("boundary", [&] { make_field_preset(c.boundary, c.dim); });
  if (!c.exact.empty()) check_preset("exact", [&] { make_field_preset(c.exact, c.dim); });
}

Json config_to_json(const ScenarioConfig& c) {
  Json j;
  j["name"] = c.name;
  j["description"] = c.description;
  Json lo = Json::array(), hi = Json::array();
  for (int a = 0; a < c.dim; ++a) {
    lo.push_back(c.lower[a]);
    hi.push_back(c.upper[a]);
  }
  j["domain"] = {{"dim", c.dim}, {"lower", lo}, {"upper", hi}};
  j["coefficients"] = c.coefficients;
  j["boundary"] = c.boundary;
  if (!c.exact.empty()) j["exact"] = c.exact;
  j["grid"] = {{"resolutions", c.resolutions}};
  j["solver"] = {{"tol", c.tol}, {"max_iter", c.max_iter}, {"omega", c.omega}};
  j["ladder"] = {{"cap", c.ladder_cap}};
  if (c.alpha) j["alpha"] = *c.alpha;
  j["analyses"] = c.analyses;
  if (c.point) j["point"] = vec_json(*c.point);
  j["stratify"] = {{"stride", c.stratify_stride}};
  j["growth"] = {{"stride", c.growth_stride}};
  j["decay"] = c.decay;
  const Expectations& x = c.expect;
  Json e = Json::object();
  if (x.label) e["label"] = *x.label;
  if (x.phi0) {
    e["phi0"] = *x.phi0;
    e["phi0_rel_tol"] = x.phi0_rel_tol;
  }
  if (x.matrix) {
    e["matrix"] = mat_json(*x.matrix);
    e["matrix_tol"] = x.matrix_tol;
  }
  if (x.stratum) e["stratum"] = *x.stratum;
  if (x.exact_linf) e["exact_linf"] = *x.exact_linf;
  if (x.weiss_spread) e["weiss_spread"] = *x.weiss_spread;
  if (x.monneau_max) e["monneau_max"] = *x.monneau_max;
  if (x.growth_value) {
    e["growth_value"] = *x.growth_value;
    e["growth_value_tol"] = x.growth_value_tol;
  }
  if (x.growth_spread) e["growth_spread"] = *x.growth_spread;
  e["drift_cap"] = x.drift_cap;
  if (x.stratum_fraction) e["stratum_fraction"] = *x.stratum_fraction;
  j["expect"] = e;
  if (!c.output.empty()) j["output"] = c.output.string();
  j["seed"] = c.seed;
  return j;
}

void ScenarioRegistry::add(ScenarioConfig cfg) {
  if (cfg.name.empty()) throw LabError(ErrorCode::ConfigError, "name: scenario needs a name");
  validate_config(cfg);
  entries_[cfg.name] = std::move(cfg);
}

bool ScenarioRegistry::contains(const std::string& name) const { return entries_.count(name) > 0; }

const ScenarioConfig& ScenarioRegistry::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw LabError(ErrorCode::ConfigError, "scenario: unknown scenario '" + name + "'");
  return it->second;
}

std::vector<std::pair<std::string, std::string>> ScenarioRegistry::list() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, cfg] : entries_) out.emplace_back(name, cfg.description);
  return out;
}

std::vector<std::pair<std::string, std::string>> list_scenarios(const ScenarioRegistry& registry) {
  return registry.list();
}

const ScenarioRegistry& builtin_registry() {
  static const ScenarioRegistry registry = [] {
    ScenarioRegistry r;
    const double pi = std::numbers::pi;
    {
      ScenarioConfig c;
      c.name = "halfspace-1d";
      c.description = "1D obstacle problem on (-1,1), u = ((x-1/2)+)^2/2";
      c.dim = 1;
      c.coefficients = "identity";
      c.boundary = "halfspace:0.5";
      c.exact = "halfspace:0.5";
      c.resolutions = {256};
      c.tol = 1e-10;
      c.analyses = {"solve", "residuals", "growth"};
      c.expect.exact_linf = 5e-4;
      c.expect.growth_value = 0.5;
      c.expect.growth_spread = 0.1;
      r.add(c);
    }
    {
      ScenarioConfig c;
      c.name = "halfspace-2d";
      c.description = "half-space solution u = (x2+)^2/2, A = I, f = 1; regular free boundary";
      c.coefficients = "identity";
      c.boundary = "halfspace";
      c.exact = "halfspace";
      c.resolutions = {256};
      c.analyses = {"solve", "residuals", "blowup", "weiss", "growth", "stratify"};
      c.stratify_stride = 8;
      c.expect.label = "Regular";
      c.expect.phi0 = pi / 16.0;
      c.expect.exact_linf = 1e-6;
      c.expect.weiss_spread = 0.01;
      c.expect.growth_value = 0.5;
      c.expect.growth_spread = 0.1;
      r.add(c);
    }
    {
      ScenarioConfig c;
      c.name = "radial-2d";
      c.description = "radial solution u = |x|^2/4, A = I, f = 1; singular contact at the origin";
      c.coefficients = "identity";
      c.boundary = "radial";
      c.exact = "radial";
      c.resolutions = {256};
      c.analyses = {"solve", "residuals", "blowup", "weiss", "monneau", "growth", "stratify"};
      c.expect.label = "Singular";
      c.expect.phi0 = pi / 8.0;
      Mat b = Mat::Identity(2, 2) / 4.0;
      c.expect.matrix = b;
      c.expect.stratum = 0;
      c.expect.exact_linf = 1e-3;
      c.expect.monneau_max = 1e-8;
      c.expect.growth_value = 0.25;
      c.expect.growth_spread = 0.1;
      r.add(c);
    }
    {
      ScenarioConfig c;
      c.name = "lipschitz-perturbed-2d";
      c.description = "A = (1 + 0.3|x|) I, f = 1, half-space boundary data; Weiss quasi-monotonicity";
      c.coefficients = "radial-lipschitz:0.3";
      c.boundary = "halfspace";
      c.resolutions = {128, 256};
      c.alpha = 1.0;
      c.analyses = {"solve", "residuals", "blowup", "weiss", "growth", "pw-check"};
      c.expect.label = "Regular";
      c.expect.phi0 = pi / 16.0;
      r.add(c);
    }
    {
      ScenarioConfig c;
      c.name = "radial-perturbed-2d";
      c.description = "A = (1 + 0.3|x|) I, f = 1, exact radial solution; Monneau quasi-monotonicity";
      c.coefficients = "radial-lipschitz:0.3";
      c.boundary = "radial-lipschitz-exact:0.3";
      c.exact = "radial-lipschitz-exact:0.3";
      c.resolutions = {128, 256};
      c.alpha = 1.0;
      c.analyses = {"solve", "residuals", "blowup", "weiss", "monneau", "growth"};
      c.expect.label = "Singular";
      c.expect.phi0 = pi / 8.0;
      c.expect.stratum = 0;
      c.expect.exact_linf = 1e-3;
      r.add(c);
    }
    {
      ScenarioConfig c;
      c.name = "synthetic-polynomial";
      c.description = "u = <B x, x> with B = diag(0.4, 0.1); blow-up recovery, stratum 0";
      c.coefficients = "identity";
      c.boundary = "polynomial:0.4,0.1";
      c.exact = "polynomial:0.4,0.1";
      c.resolutions = {256};
      c.analyses = {"solve", "residuals", "blowup", "monneau", "growth", "stratify"};
      c.expect.label = "Singular";
      c.expect.phi0 = pi / 8.0;
      Mat b = Mat::Zero(2, 2);
      b(0, 0) = 0.4;
      b(1, 1) = 0.1;
      c.expect.matrix = b;
      c.expect.stratum = 0;
      c.expect.exact_linf = 1e-6;
      c.expect.growth_value = 0.4;
      c.expect.growth_spread = 0.1;
      r.add(c);
    }
    {
      ScenarioConfig c;
      c.name = "synthetic-polynomial-degenerate";
      c.description = "u = x1^2/2 (B = diag(1/2, 0)); singular line, stratum 1";
      c.coefficients = "identity";
      c.boundary = "polynomial:0.5,0";
      c.exact = "polynomial:0.5,0";
      c.resolutions = {256};
      c.analyses = {"solve", "residuals", "blowup", "growth", "stratify"};
      c.stratify_stride = 8;
      c.point = Vec::Zero(2);
      c.expect.label = "Singular";
      c.expect.phi0 = pi / 8.0;
      Mat b = Mat::Zero(2, 2);
      b(0, 0) = 0.5;
      c.expect.matrix = b;
      c.expect.stratum = 1;
      c.expect.stratum_fraction = 1.0;
      c.expect.exact_linf = 1e-6;
      c.expect.growth_value = 0.5;
      c.expect.growth_spread = 0.1;
      r.add(c);
    }
    return r;
  }();
  return registry;
}

bool ScenarioResult::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

namespace {

Verdict bound(std::string name, double value, double limit, std::string detail = {}) {
  return {std::move(name), std::isfinite(value) && value <= limit, value, limit, std::move(detail)};
}

std::size_t nearest_to_origin(const FreeBoundarySet& fbs) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fbs.gamma.size(); ++i) {
    const double d = fbs.gamma[i].x.norm();
    if (d < bd - 1e-12) {
      bd = d;
      best = i;
    }
  }
  return best;
}

// Homogeneity defect of a profile over a deterministic point set in B_1.
double homogeneity_defect(const HomogeneousProfile& v) {
  const int n = v.dim();
  const QuadratureRule rule = ball_rule(n, 4, 16);
  double worst = 0.0;
  for (const Vec& y : rule.points) {
    for (double s : {0.25, 0.5, 0.75}) {
      worst = std::max(worst, std::abs(v.value(s * y) / (s * s) - v.value(y)));
    }
  }
  return worst;
}

struct PwTriple {
  std::string name;
  MatrixFn a;
  ScalarFn w;
  VectorFn f;
  double r;
};

std::vector<PwTriple> pw_triples(int dim) {
  const MatrixFn identity = [dim](const Vec&) { return Mat(Mat::Identity(dim, dim)); };
  const MatrixFn perturbed = [dim](const Vec& x) { return Mat((1.0 + 0.3 * x.norm()) * Mat::Identity(dim, dim)); };
  std::vector<PwTriple> t;
  t.push_back({"linear", identity,
               [](const Vec& x) {
                 double s = 0.0;
                 for (int i = 0; i < x.size(); ++i) s += (i % 2 ? -1.0 : 2.0) * x[i];
                 return s;
               },
               [](const Vec& x) { return Vec(x); }, 1.0});
  t.push_back({"quadratic", identity, [](const Vec& x) { return x.squaredNorm(); },
               [](const Vec& x) { return Vec(x); }, 1.0});
  const double r = 0.5;
  t.push_back({"perturbed", perturbed, [](const Vec& x) { return x[0] * x[1]; },
               [perturbed, r](const Vec& x) {
                 const Mat a = perturbed(x);
                 const double n2 = x.squaredNorm();
                 const double mu = n2 > 0.0 ? x.dot(a * x) / n2 : 1.0;
                 return Vec(a * x / (r * mu));
               },
               r});
  return t;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config_in, const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioConfig config = config_in;
  if (opts.analyses) config.analyses = *opts.analyses;
  if (opts.seed) config.seed = *opts.seed;
  validate_config(config);
  set_thread_count(opts.threads);

  ScenarioResult res;
  res.config = config;
  res.resolution = opts.resolution.value_or(config.resolutions.front());
  if (res.resolution < 2) config_error("resolution", "must be >= 2");
  const double phase = phase_from_seed(config.seed);
  const QuadratureOptions quad{.oversample = 1.0, .phase = phase};

  std::set<std::string> want(config.analyses.begin(), config.analyses.end());
  const bool solve_needed = std::any_of(want.begin(), want.end(), needs_solution);
  const bool fb_needed = want.count("blowup") || want.count("weiss") || want.count("monneau") ||
                         want.count("growth") || want.count("stratify");
  const bool point_needed = want.count("blowup") || want.count("weiss") || want.count("monneau");

  const Domain domain(config.dim, config.lower, config.upper, config.name);
  const Grid grid = Grid::with_resolution(domain, res.resolution);
  CoefficientField cf = make_coefficient_preset(config.coefficients, domain);
  cf.g = make_field_preset(config.boundary, config.dim);
  const double alpha = config.alpha.value_or(cf.alpha);

  Provenance prov;
  prov.version = library_version();
  prov.scenario = config.name;
  {
    Json hashed = config_to_json(config);
    hashed.erase("output");
    prov.config_hash = config_hash(hashed);
  }
  prov.seed = config.seed;
  prov.grid = grid_json(grid);
  prov.tolerances = {{"solver_tol", config.tol}, {"max_iter", config.max_iter}};

  Json report;
  report["provenance"] = prov.to_json();
  report["config"] = config_to_json(config);
  report["resolution"] = res.resolution;

  std::optional<FrameField> ff;
  if (solve_needed) {
    const DiscreteEnergy de = assemble(cf, grid);
    SolverOptions so;
    if (config.omega == 0.0) {
      so.omega_auto = true;
    } else {
      so.omega = config.omega;
    }
    res.solution = solve(de, cf.g, config.tol, config.max_iter, so);
    const ObstacleSolution& sol = *res.solution;
    prov.tolerances["omega"] = sol.omega;
    prov.tolerances["positivity_threshold"] = sol.positivity_threshold;
    report["provenance"] = prov.to_json();
    res.verdicts.push_back({"solver.converged", sol.converged, static_cast<double>(sol.iterations),
                            static_cast<double>(config.max_iter), "sweeps"});
    report["solve"] = {{"iterations", sol.iterations},
                       {"converged", sol.converged},
                       {"omega", sol.omega},
                       {"energy", sol.energy},
                       {"projected_residual", sol.projected_residual}};
  }

  if (want.count("residuals") && res.solution) {
    const ObstacleSolution& sol = *res.solution;
    const ResidualReport rr = pde_residual(sol, cf);
    res.verdicts.push_back(bound("residuals.complementarity", sol.projected_residual, config.tol));
    Json j = {{"complementarity", sol.projected_residual},
              {"pde_residual", rr.pde_residual},
              {"coincidence_norm", rr.coincidence_norm},
              {"nodes_checked", rr.nodes_checked},
              {"coincidence_nodes", rr.coincidence_nodes}};
    if (!config.exact.empty()) {
      const ScalarFn exact = make_field_preset(config.exact, config.dim);
      double err = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) err = std::max(err, std::abs(sol.u[i] - exact(grid.point(i))));
      res.exact_error = err;
      j["exact_linf"] = err;
      if (config.expect.exact_linf) res.verdicts.push_back(bound("residuals.exact_linf", err, *config.expect.exact_linf));
    }
    report["residuals"] = j;
  }

  if (fb_needed && res.solution) {
    res.free_boundary = extract(*res.solution);
    const FreeBoundarySet& fbs = *res.free_boundary;
    report["free_boundary"] = {{"gamma_points", fbs.gamma.size()},
                               {"coincidence_nodes", fbs.coincidence_count()},
                               {"positive_nodes", fbs.positive_count()},
                               {"threshold", fbs.threshold}};
    if (point_needed) {
      if (config.point) {
        res.point = *config.point;
      } else if (!fbs.gamma.empty()) {
        res.point = fbs.gamma[nearest_to_origin(fbs)].x;
      } else {
        res.verdicts.push_back({"free_boundary.nonempty", false, 0.0, 1.0, "no free-boundary point to analyse"});
      }
    }
  }

  if (res.point) {
    ff.emplace(*res.solution, cf, *res.point);
    report["point"] = vec_json(*res.point);
    report["frame"] = {{"h_eff", ff->h_eff()}, {"max_radius", ff->max_radius()}, {"L", mat_json(ff->frame().L())}};
  }

  std::vector<double> ladder;
  if (ff && want.count("blowup")) {
    ClassifyOptions co;
    co.ladder_cap = config.ladder_cap;
    co.decay = false;
    co.quadrature = quad;
    res.blowup = classify_point(*ff, co);
    BlowupReport& br = *res.blowup;
    ladder = br.ladder;
    const HomogeneousProfile& v = *br.profile;
    Json j = {{"label", to_string(br.label)}, {"phi0", br.phi0}, {"theta", theta(config.dim)}};
    if (v.kind() == HomogeneousProfile::Kind::HalfSpace) {
      j["profile"] = "half-space";
      j["direction"] = vec_json(v.direction());
    } else {
      j["profile"] = "polynomial";
      j["matrix"] = mat_json(v.matrix());
      j["stratum"] = br.stratum;
    }
    if (br.fit) {
      j["residual_half_space"] = br.fit->residual_half_space;
      j["residual_polynomial"] = br.fit->residual_polynomial;
      j["cauchy"] = br.fit->cauchy;
      j["homogeneity_defect_rescaling"] = br.fit->homogeneity_defect;
    }
    const double hd = homogeneity_defect(v);
    res.verdicts.push_back(bound("blowup.homogeneity", hd, 1e-9));
    if (config.expect.label) {
      res.verdicts.push_back({"blowup.label", to_string(br.label) == *config.expect.label, br.phi0, 0.0,
                              to_string(br.label) + " (expected " + *config.expect.label + ")"});
    }
    if (config.expect.phi0) {
      const double rel = std::abs(br.phi0 - *config.expect.phi0) / std::abs(*config.expect.phi0);
      res.verdicts.push_back(bound("blowup.phi0", rel, config.expect.phi0_rel_tol, "relative error of Phi(0+)"));
    }
    if (config.expect.matrix) {
      double err = std::numeric_limits<double>::infinity();
      if (v.kind() == HomogeneousProfile::Kind::Polynomial) err = (v.matrix() - *config.expect.matrix).cwiseAbs().maxCoeff();
      res.verdicts.push_back(bound("blowup.matrix", err, config.expect.matrix_tol, "entrywise error of B"));
    }
    if (config.expect.stratum) {
      res.verdicts.push_back({"blowup.stratum", br.stratum == *config.expect.stratum, static_cast<double>(br.stratum),
                              static_cast<double>(*config.expect.stratum), "n - rank(B)"});
    }
    if (config.decay) {
      try {
        br.decay = estimate_decay_rate(*ff, v, br.ladder, br.label);
        const DecayEstimate& d = *br.decay;
        j["decay"] = {{"exact", d.exact}, {"slope", d.slope}, {"monotone", d.monotone}, {"radii", d.radii},
                      {"deviation", d.deviation}, {"floor", d.floor}};
      } catch (const LabError& e) {
        if (e.code() != ErrorCode::InsufficientDecay) throw;
        res.notes.push_back(std::string("decay: ") + e.what());
        j["decay"] = {{"error", e.what()}};
      }
    }
    report["blowup"] = j;
  }

  if (ff && (want.count("weiss") || want.count("monneau"))) {
    if (ladder.empty()) ladder = default_ladder(*ff, config.ladder_cap);
    res.trace = weiss_trace(*ff, ladder, quad);
  }

  if (res.trace && want.count("weiss")) {
    res.weiss = weiss_drift_test(*res.trace, alpha);
    const DriftVerdict& w = *res.weiss;
    const double cap = config.expect.drift_cap;
    res.verdicts.push_back({"weiss.finite", w.finite && w.c3 <= cap && w.c4 <= cap, std::max(w.c3, w.c4), cap,
                            "max(C3, C4)"});
    res.verdicts.push_back(bound("weiss.residual_violation", w.residual_violation, 0.0));
    Json j = {{"alpha", alpha}, {"c3", w.c3}, {"c4", w.c4}, {"finite", w.finite},
              {"residual_violation", w.residual_violation}, {"ignored_violations", w.ignored_violations}};
    if (config.expect.weiss_spread) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
      int count = 0;
      for (std::size_t k = 0; k < res.trace->radii.size(); ++k) {
        const double r = res.trace->radii[k];
        if (r < 0.05 * (1 - 1e-12) || r > 0.5 * (1 + 1e-12)) continue;
        lo = std::min(lo, res.trace->phi[k]);
        hi = std::max(hi, res.trace->phi[k]);
        sum += res.trace->phi[k];
        ++count;
      }
      const double spread = count ? (hi - lo) / std::abs(sum / count) : std::numeric_limits<double>::infinity();
      j["spread"] = spread;
      res.verdicts.push_back(bound("weiss.spread", spread, *config.expect.weiss_spread, "over r in [0.05, 0.5]"));
    }
    if (res.trace->radii.size() >= 16) {
      res.derivatives = derivative_identities_check(*res.trace, *ff, quad);
      j["derivative_c1"] = res.derivatives->c1;
      j["derivative_c2"] = res.derivatives->c2;
    }
    report["weiss"] = j;
  }

  if (res.trace && want.count("monneau")) {
    const HomogeneousProfile* profile = res.blowup ? &*res.blowup->profile : nullptr;
    if (profile && profile->kind() == HomogeneousProfile::Kind::Polynomial) {
      MonneauOptions mo;
      mo.quadrature = quad;
      res.monneau = monneau_test(*ff, *profile, *res.trace, alpha, mo);
      const DriftVerdict& m = *res.monneau;
      res.verdicts.push_back({"monneau.finite", m.finite && m.c5 <= config.expect.drift_cap, m.c5,
                              config.expect.drift_cap, "C5"});
      res.verdicts.push_back(bound("monneau.residual_violation", m.residual_violation, 0.0));
      double mmax = 0.0;
      for (double v : res.trace->monneau) mmax = std::max(mmax, std::abs(v));
      if (config.expect.monneau_max) res.verdicts.push_back(bound("monneau.max", mmax, *config.expect.monneau_max));
      report["monneau"] = {{"c5", m.c5}, {"finite", m.finite}, {"residual_violation", m.residual_violation},
                           {"derivative_violation", m.derivative_violation}, {"max", mmax}};
    } else {
      res.notes.push_back("monneau: skipped, the analysis point has no polynomial blow-up");
      report["monneau"] = {{"skipped", "no polynomial blow-up at the analysis point"}};
    }
  }

  if (want.count("growth") && res.free_boundary) {
    GrowthOptions go;
    go.stride = config.growth_stride;
    go.phase = phase;
    res.growth = quadratic_growth_check(*res.solution, *res.free_boundary, go);
    const GrowthReport& g = *res.growth;
    res.verdicts.push_back({"growth.min_ratio", g.pass, g.theta_hat, go.min_ratio, "theta_hat >= min ratio"});
    if (config.expect.growth_value) {
      const double rel = std::abs(g.theta_hat - *config.expect.growth_value) / *config.expect.growth_value;
      res.verdicts.push_back(bound("growth.value", rel, config.expect.growth_value_tol, "relative error of theta_hat"));
    }
    if (config.expect.growth_spread) res.verdicts.push_back(bound("growth.spread", g.spread, *config.expect.growth_spread));
    report["growth"] = {{"theta_hat", g.theta_hat}, {"spread", g.spread}, {"points", g.points.size()},
                        {"radii", g.radii}, {"radius_ratio", g.radius_ratio}};
  }

  if (want.count("stratify") && res.free_boundary) {
    StratifyOptions so;
    so.stride = config.stratify_stride;
    so.classify.ladder_cap = config.ladder_cap;
    so.classify.quadrature = quad;
    res.strata = stratify(*res.solution, cf, *res.free_boundary, so);
    const StratificationReport& s = *res.strata;
    res.verdicts.push_back(bound("stratify.ambiguous", static_cast<double>(s.ambiguous), 0.0));
    res.verdicts.push_back(bound("stratify.openness", static_cast<double>(s.openness_violations), 0.0));
    if (config.expect.stratum && config.expect.stratum_fraction) {
      const std::size_t classified = s.regular + s.singular;
      const std::size_t hit = static_cast<std::size_t>(*config.expect.stratum) < s.strata_counts.size()
                                  ? s.strata_counts[*config.expect.stratum]
                                  : 0;
      const double frac = classified ? static_cast<double>(hit) / classified : 0.0;
      res.verdicts.push_back({"stratify.stratum_fraction", frac >= *config.expect.stratum_fraction, frac,
                              *config.expect.stratum_fraction, "share of classified points in the expected stratum"});
    }
    report["stratify"] = {{"regular", s.regular},     {"singular", s.singular}, {"ambiguous", s.ambiguous},
                          {"skipped", s.skipped},     {"failed", s.failed},     {"strata_counts", s.strata_counts},
                          {"holder_quotient", s.holder_quotient}, {"eta", s.eta},
                          {"openness_violations", s.openness_violations}};
  }

  if (want.count("pw-check") && config.dim >= 2) {
    const double h = 1.0 / res.resolution;
    Json a = Json::array();
    for (const PwTriple& t : pw_triples(config.dim)) {
      const PwResult pw = payne_weinberger_check(config.dim, t.a, t.w, t.f, t.r, h);
      res.pw.push_back(pw);
      const double limit = std::max(1e-9, 10.0 * h * h * (1.0 + std::abs(pw.lhs)));
      res.verdicts.push_back(bound("pw." + t.name, pw.residual(), limit, "|LHS - RHS|"));
      a.push_back({{"triple", t.name}, {"lhs", pw.lhs}, {"rhs", pw.rhs}, {"residual", pw.residual()}});
    }
    report["pw_check"] = a;
  }

  report["verdicts"] = verdicts_json(res.verdicts);
  report["notes"] = res.notes;
  report["exit_status"] = res.exit_status();

  if (!config.output.empty() && opts.write_files) {
    const fs::path out = config.output;
    fs::create_directories(out);
    auto add = [&](const fs::path& p) { res.files.push_back(p); };
    if (res.solution) {
      write_solution(out, *res.solution, prov);
      add(out / "solution.bin");
      add(out / "solution.json");
      std::optional<ScalarFn> exact;
      if (!config.exact.empty()) exact = make_field_preset(config.exact, config.dim);
      add(write_table(out, "slices", slice_table(*res.solution, exact ? &*exact : nullptr), opts.format, prov));
    }
    if (res.free_boundary) {
      add(write_table(out, "gamma", gamma_table(*res.free_boundary, res.growth ? &*res.growth : nullptr),
                      opts.format, prov));
    }
    if (res.trace && res.weiss) {
      add(write_table(out, "trace_weiss", weiss_table(*res.trace, &*res.weiss), opts.format, prov));
      Series s{"Phi(r)", res.trace->radii, res.trace->phi};
      Series t{"theta", {res.trace->radii.front(), res.trace->radii.back()},
               {theta(config.dim), theta(config.dim)}};
      Series c{"compensated", res.trace->radii, res.weiss->compensated};
      const fs::path p = out / "trace_weiss.svg";
      write_text(p, line_plot_svg({s, c, t}, {.title = "Weiss energy", .x_label = "r", .y_label = "Phi", .log_x = true}, &prov));
      add(p);
    }
    if (res.trace && res.monneau) {
      add(write_table(out, "trace_monneau", monneau_table(*res.trace, &*res.monneau), opts.format, prov));
      Series s{"M(r)", res.trace->radii, res.trace->monneau};
      Series c{"compensated", res.trace->radii, res.monneau->compensated};
      const fs::path p = out / "trace_monneau.svg";
      write_text(p, line_plot_svg({s, c}, {.title = "Monneau functional", .x_label = "r", .y_label = "M", .log_x = true}, &prov));
      add(p);
    }
    if (res.strata) add(write_table(out, "strata", strata_table(*res.strata), opts.format, prov));
    if (res.solution && config.dim == 2) {
      std::vector<Marker> markers;
      if (res.strata) {
        for (const auto& e : res.strata->entries) markers.push_back({e.x[0], e.x[1], strata_color(e.status, e.stratum)});
      } else if (res.free_boundary) {
        for (const auto& g : res.free_boundary->gamma) markers.push_back({g.x[0], g.x[1], "#ffffff"});
      }
      const fs::path p = out / "solution.svg";
      write_text(p, heatmap_svg(grid, res.solution->u, markers, config.name + ": u and free boundary", &prov));
      add(p);
      if (res.strata) {
        const fs::path q = out / "strata.svg";
        std::vector<double> mask(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) mask[i] = res.solution->positive[i] ? 1.0 : 0.0;
        write_text(q, heatmap_svg(grid, mask, markers, config.name + ": strata (white regular, red d=0, orange d=1)", &prov));
        add(q);
      }
    }
    if (res.growth) {
      Series s{"min ratio", res.growth->radii, res.growth->radius_ratio};
      const fs::path p = out / "growth.svg";
      write_text(p, line_plot_svg({s}, {.title = "Quadratic growth", .x_label = "r", .y_label = "sup u / r^2", .log_x = true}, &prov));
      add(p);
    }
    Json files = Json::array();
    for (const auto& f : res.files) files.push_back(f.filename().string());
    files.push_back("report.json");
    report["files"] = files;
    write_text(out / "report.json", report.dump(1) + "\n");
    add(out / "report.json");
  }
  res.report = std::move(report);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::string order_string(double coarse, double fine, double floor) {
  if (std::abs(coarse) <= floor && std::abs(fine) <= floor) return "floor";
  if (!(std::abs(fine) > 0.0)) return "floor";
  return format_number(std::log2(std::abs(coarse) / std::abs(fine)));
}

Table ConvergenceTable::to_table() const {
  Table t;
  t.columns = {"resolution", "h"};
  for (const auto& q : quantities) {
    t.columns.push_back(q);
    t.columns.push_back(q + "_order");
  }
  for (std::size_t l = 0; l < resolutions.size(); ++l) {
    std::vector<Table::Cell> row{static_cast<long long>(resolutions[l]), 1.0 / resolutions[l]};
    for (std::size_t q = 0; q < quantities.size(); ++q) {
      row.emplace_back(values[q][l]);
      row.emplace_back(l == 0 ? std::string("-") : orders[q][l - 1]);
    }
    t.add_row(std::move(row));
  }
  return t;
}

const std::vector<double>& ConvergenceTable::column(const std::string& quantity) const {
  for (std::size_t q = 0; q < quantities.size(); ++q)
    if (quantities[q] == quantity) return values[q];
  throw LabError(ErrorCode::InvalidArgument, "no quantity '" + quantity + "' in the table");
}

std::optional<double> ConvergenceTable::order(const std::string& quantity, std::size_t level) const {
  for (std::size_t q = 0; q < quantities.size(); ++q) {
    if (quantities[q] != quantity) continue;
    if (level == 0 || level > orders[q].size()) throw LabError(ErrorCode::InvalidArgument, "no order for that level");
    const std::string& s = orders[q][level - 1];
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
  }
  throw LabError(ErrorCode::InvalidArgument, "no quantity '" + quantity + "' in the table");
}

ConvergenceTable refinement_study(const ScenarioConfig& config, int levels, const RunOptions& opts) {
  if (levels < 2) throw LabError(ErrorCode::InvalidArgument, "refinement study needs at least 2 levels");
  validate_config(config);
  const int r0 = opts.resolution.value_or(config.resolutions.front());
  ConvergenceTable table;
  // Errors get observed orders; fitted constants are tabulated with their
  // successive relative changes.
  std::map<std::string, std::vector<double>> cols;
  std::vector<std::string> order_kind;
  RunOptions ro = opts;
  ro.write_files = false;
  for (int l = 0; l < levels; ++l) {
    const int res = r0 << l;
    ro.resolution = res;
    const ScenarioResult r = run_scenario(config, ro);
    table.resolutions.push_back(res);
    auto put = [&](const std::string& name, double v) { cols[name].push_back(v); };
    if (r.exact_error) put("linf_error", *r.exact_error);
    if (r.solution) put("complementarity", r.solution->projected_residual);
    if (r.blowup) {
      put("phi0", r.blowup->phi0);
      if (config.expect.phi0) put("phi0_error", std::abs(r.blowup->phi0 - *config.expect.phi0));
    }
    if (r.weiss) {
      put("c3", r.weiss->c3);
      put("c4", r.weiss->c4);
    }
    if (r.monneau) put("c5", r.monneau->c5);
    if (r.growth) put("theta_hat", r.growth->theta_hat);
    if (!r.pw.empty()) put("pw_residual", r.pw.back().residual());
  }
  const std::set<std::string> errors = {"linf_error", "phi0_error", "pw_residual"};
  for (const auto& [name, v] : cols) {
    if (v.size() != static_cast<std::size_t>(levels)) continue;
    table.quantities.push_back(name);
    table.values.push_back(v);
    std::vector<std::string> ord;
    for (int l = 1; l < levels; ++l) {
      if (errors.count(name)) {
        const double floor = name == "linf_error" ? std::max(1e-12, config.tol) : 1e-10;
        ord.push_back(order_string(v[l - 1], v[l], floor));
      } else {
        const double scale = std::max({std::abs(v[l - 1]), std::abs(v[l])});
        ord.push_back(scale == 0.0 ? "floor" : "rel_change=" + format_number(std::abs(v[l] - v[l - 1]) / scale));
      }
    }
    table.orders.push_back(std::move(ord));
  }
  return table;
}

}  // namespace obstacle
