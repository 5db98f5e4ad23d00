// Acceptance suite: one PASS/FAIL line per criterion. Usage: acceptance [N...]
// with no arguments running every criterion.

#include "obstacle/scenario.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

using namespace obstacle;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      failures_ += (failures_.empty() ? "" : "; ") + what;
    }
  }
  void info(const std::string& what) { info_ += (info_.empty() ? "" : ", ") + what; }
  Outcome outcome() const { return {pass_, pass_ ? info_ : failures_ + " | " + info_}; }

 private:
  bool pass_ = true;
  std::string failures_;
  std::string info_;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScenarioConfig builtin(const std::string& name) { return builtin_registry().get(name); }

RunOptions no_files(std::vector<std::string> analyses = {}) {
  RunOptions o;
  o.write_files = false;
  if (!analyses.empty()) o.analyses = std::move(analyses);
  return o;
}

bool stable(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

// 1. Solver correctness in 1D.
Outcome criterion_1() {
  Check c;
  ScenarioConfig cfg = builtin("halfspace-1d");
  const auto t0 = std::chrono::steady_clock::now();
  RunOptions o = no_files({"solve", "residuals"});
  o.resolution = 256;
  const ScenarioResult r = run_scenario(cfg, o);
  const double t = seconds_since(t0);
  // Independent error against the closed form.
  double err = 0.0;
  for (std::size_t i = 0; i < r.solution->grid.size(); ++i) {
    err = std::max(err, std::abs(r.solution->u[i] - oracle::halfspace_1d(r.solution->grid.point(i)[0], 0.5)));
  }
  c.require(r.solution->converged, "solver did not converge");
  c.require(err <= 5e-4, "Linf error " + num(err) + " > 5e-4");
  c.require(t <= 1.0, "runtime " + num(t) + " s > 1 s");
  c.info("Linf " + num(err) + " at h=1/256, " + num(t) + " s");

  const ConvergenceTable tab = refinement_study(cfg, 3, [] {
    RunOptions s = no_files({"solve", "residuals"});
    s.resolution = 64;
    return s;
  }());
  for (std::size_t l = 1; l < 3; ++l) {
    const auto ord = tab.order("linf_error", l);
    c.require(!ord || *ord >= 1.9, "order " + num(ord.value_or(0)) + " < 1.9 at level " + std::to_string(l));
    c.info("order " + (ord ? num(*ord) : std::string("floor")));
  }
  // Free boundary between nodes: O(h^2) envelope.
  ScenarioConfig off = cfg;
  off.name = "halfspace-1d-offgrid";
  off.boundary = off.exact = "halfspace:" + format_number(1.0 - std::sqrt(0.2));
  double worst = 0.0;
  for (int res : {64, 128, 256}) {
    RunOptions s = no_files({"solve", "residuals"});
    s.resolution = res;
    const ScenarioResult ro = run_scenario(off, s);
    worst = std::max(worst, *ro.exact_error * res * res);
  }
  c.require(worst <= 0.25, "off-grid error/h^2 " + num(worst) + " > 0.25");
  c.info("off-grid max error/h^2 " + num(worst));
  return c.outcome();
}

// 2. Solver correctness in 2D.
Outcome criterion_2() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  RunOptions o = no_files({"solve", "residuals"});
  o.resolution = 256;
  const ScenarioResult r = run_scenario(builtin("radial-2d"), o);
  const double t = seconds_since(t0);
  double err = 0.0;
  for (std::size_t i = 0; i < r.solution->grid.size(); ++i) {
    err = std::max(err, std::abs(r.solution->u[i] - r.solution->grid.point(i).squaredNorm() / 4.0));
  }
  c.require(r.solution->converged, "solver did not converge");
  c.require(err <= 1e-3, "Linf error " + num(err) + " > 1e-3");
  c.require(t <= 60.0, "runtime " + num(t) + " s > 60 s");
  c.info("Linf " + num(err) + ", " + num(t) + " s");
  return c.outcome();
}

// 3. Weiss energy of the exact half-space field.
Outcome criterion_3() {
  Check c;
  const Domain d = Domain::centered(2, 1.0);
  const Grid g = Grid::with_resolution(d, 256);
  CoefficientField cf = make_coefficient_preset("identity", d);
  cf.g = make_field_preset("halfspace", 2);
  std::vector<double> u(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = cf.g(g.point(i));
  const ObstacleSolution sol = make_solution(assemble(cf, g), u, 1e-12);
  const FrameField ff(sol, cf, Vec::Zero(2));
  const double expected = oracle::weiss_phi_2d(
      [](double, double y) { return y > 0 ? 0.5 * y * y : 0.0; },
      [](double, double y) { return y > 0 ? y * y : 0.0; }, 1.0);
  double lo = 1e300, hi = -1e300, sum = 0.0;
  int count = 0;
  for (double r = 0.05; r <= 0.5 + 1e-12; r *= std::pow(10.0, 0.1)) {
    const double phi = weiss_phi(ff, r);
    lo = std::min(lo, phi);
    hi = std::max(hi, phi);
    sum += phi;
    ++count;
  }
  const double mean = sum / count;
  const double spread = (hi - lo) / mean;
  const double rel = std::abs(mean - oracle::pi / 16.0) / (oracle::pi / 16.0);
  c.require(std::abs(expected - oracle::pi / 16.0) < 1e-4, "oracle disagrees with pi/16: " + num(expected));
  c.require(spread <= 0.01, "spread " + num(spread) + " > 1%");
  c.require(rel <= 0.02, "Phi " + num(mean) + " not within 2% of pi/16");
  c.info("Phi " + num(mean) + " (oracle " + num(expected) + "), spread " + num(spread) + " over " +
         std::to_string(count) + " radii");
  return c.outcome();
}

// 4. Energy gap classification.
Outcome criterion_4() {
  Check c;
  struct Case {
    const char* name;
    PointLabel label;
    double phi;
  };
  for (const Case& k : {Case{"halfspace-2d", PointLabel::Regular, oracle::pi / 16.0},
                        Case{"radial-2d", PointLabel::Singular, oracle::pi / 8.0}}) {
    RunOptions o = no_files({"solve", "blowup", "stratify"});
    o.resolution = 256;
    ScenarioConfig cfg = builtin(k.name);
    cfg.decay = false;
    const ScenarioResult r = run_scenario(cfg, o);
    const BlowupReport& b = *r.blowup;
    const double rel = std::abs(b.phi0 - k.phi) / k.phi;
    c.require(b.label == k.label, std::string(k.name) + " labelled " + to_string(b.label));
    c.require(rel <= 0.1, std::string(k.name) + " Phi(0+) " + num(b.phi0) + " off by " + num(rel));
    c.require(r.strata->ambiguous == 0, std::string(k.name) + " has " + std::to_string(r.strata->ambiguous) + " ambiguous points");
    c.info(std::string(k.name) + " " + to_string(b.label) + " Phi(0+) " + num(b.phi0) + " ambiguous " +
           std::to_string(r.strata->ambiguous) + "/" + std::to_string(r.strata->entries.size()));
  }
  return c.outcome();
}

// 5. Weiss quasi-monotonicity under a Lipschitz perturbation.
Outcome criterion_5() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioConfig cfg = builtin("lipschitz-perturbed-2d");
  std::vector<DriftVerdict> fits;
  for (int res : {128, 256}) {
    RunOptions o = no_files({"solve", "blowup", "weiss"});
    o.resolution = res;
    ScenarioConfig k = cfg;
    k.decay = false;
    const ScenarioResult r = run_scenario(k, o);
    const DriftVerdict& w = *r.weiss;
    c.require(w.finite && w.c3 <= 100 && w.c4 <= 100, "constants not finite/below 100 at " + std::to_string(res));
    c.require(w.residual_violation <= 0.0, "residual violation " + num(w.residual_violation) + " at " + std::to_string(res));
    c.info("h=1/" + std::to_string(res) + ": C3 " + num(w.c3) + " C4 " + num(w.c4));
    fits.push_back(w);
  }
  c.require(stable(fits[0].c3, fits[1].c3, 0.2), "C3 not stable within 20%");
  c.require(stable(fits[0].c4, fits[1].c4, 0.2), "C4 not stable within 20%");
  const double t = seconds_since(t0);
  c.require(t <= 300.0, "runtime " + num(t) + " s > 300 s");
  c.info(num(t) + " s");
  return c.outcome();
}

// 6. Monneau quasi-monotonicity.
Outcome criterion_6() {
  Check c;
  {
    RunOptions o = no_files({"solve", "blowup", "weiss", "monneau"});
    o.resolution = 256;
    ScenarioConfig cfg = builtin("radial-2d");
    cfg.decay = false;
    const ScenarioResult r = run_scenario(cfg, o);
    double m = 0.0;
    for (double v : r.trace->monneau) m = std::max(m, std::abs(v));
    c.require(m <= 1e-8, "radial-2d max M " + num(m) + " > 1e-8");
    c.info("radial-2d max M " + num(m));
  }
  std::vector<double> c5;
  for (int res : {128, 256}) {
    RunOptions o = no_files({"solve", "blowup", "weiss", "monneau"});
    o.resolution = res;
    ScenarioConfig cfg = builtin("radial-perturbed-2d");
    cfg.decay = false;
    const ScenarioResult r = run_scenario(cfg, o);
    c.require(r.monneau.has_value(), "no Monneau fit at " + std::to_string(res));
    if (!r.monneau) continue;
    c.require(r.monneau->finite, "C5 not finite at " + std::to_string(res));
    c5.push_back(r.monneau->c5);
    c.info("perturbed h=1/" + std::to_string(res) + " C5 " + num(r.monneau->c5));
  }
  if (c5.size() == 2) c.require(stable(c5[0], c5[1], 0.2), "C5 not stable within 20%");
  return c.outcome();
}

// 7. Payne-Weinberger identity.
Outcome criterion_7() {
  Check c;
  const MatrixFn identity = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
  const MatrixFn perturbed = [](const Vec& x) { return Mat((1.0 + 0.3 * x.norm()) * Mat::Identity(2, 2)); };
  const double r3 = 0.5;
  struct Triple {
    const char* name;
    MatrixFn a;
    ScalarFn w;
    VectorFn f;
    double r;
  };
  const std::vector<Triple> triples = {
      {"linear", identity, [](const Vec& x) { return 2.0 * x[0] - x[1]; }, [](const Vec& x) { return Vec(x); }, 1.0},
      {"quadratic", identity, [](const Vec& x) { return x.squaredNorm(); }, [](const Vec& x) { return Vec(x); }, 1.0},
      {"perturbed", perturbed, [](const Vec& x) { return x[0] * x[1]; },
       [&](const Vec& x) {
         const Mat a = perturbed(x);
         const double n2 = x.squaredNorm();
         const double mu = n2 > 0 ? x.dot(a * x) / n2 : 1.0;
         return Vec(a * x / (r3 * mu));
       },
       r3}};
  const double floor = 1e-10;
  for (const Triple& t : triples) {
    std::vector<double> res;
    for (double h : {0.1, 0.05, 0.025}) res.push_back(payne_weinberger_check(2, t.a, t.w, t.f, t.r, h).residual());
    std::string orders;
    for (std::size_t l = 1; l < res.size(); ++l) {
      if (res[l - 1] <= floor && res[l] <= floor) {
        orders += " floor";
        continue;
      }
      const double o = oracle::order(res[l - 1], res[l]);
      orders += " " + num(o);
      c.require(o >= 1.8, std::string(t.name) + " order " + num(o) + " < 1.8");
    }
    const double cst = res.back() / (0.025 * 0.025);
    c.require(res.back() <= floor || cst <= 1.0, std::string(t.name) + " residual/h^2 " + num(cst));
    c.info(std::string(t.name) + ":" + orders);
  }
  return c.outcome();
}

// 8. Quadratic growth on every builtin scenario.
Outcome criterion_8() {
  Check c;
  const std::map<std::string, double> exact = {{"halfspace-1d", 0.5}, {"halfspace-2d", 0.5}, {"radial-2d", 0.25}};
  for (const auto& [name, desc] : list_scenarios()) {
    const ScenarioResult r = run_scenario(builtin(name), no_files({"solve", "growth"}));
    const GrowthReport& g = *r.growth;
    c.require(g.theta_hat >= 0.05, name + " theta_hat " + num(g.theta_hat) + " < 0.05");
    std::string line = name + " " + num(g.theta_hat);
    if (auto it = exact.find(name); it != exact.end()) {
      c.require(g.spread <= 0.1, name + " spread " + num(g.spread) + " > 10%");
      const double rel = std::abs(g.theta_hat - it->second) / it->second;
      c.require(rel <= 0.05, name + " theta_hat " + num(g.theta_hat) + " not within 5% of " + num(it->second));
      line += " (exact " + num(it->second) + ", spread " + num(g.spread) + ")";
    }
    c.info(line);
  }
  return c.outcome();
}

// 9. Psi consistency for random profiles.
Outcome criterion_9() {
  Check c;
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> normal;
  double worst = 0.0, worst_closed = 0.0;
  for (int n : {2, 3}) {
    for (int k = 0; k < 20; ++k) {
      Vec nu(n);
      for (int i = 0; i < n; ++i) nu[i] = normal(rng);
      nu.normalize();
      const PsiResult p = psi(HomogeneousProfile::half_space(nu));
      worst = std::max(worst, std::abs(p.defining - p.mass));
      worst_closed = std::max(worst_closed, std::abs(p.mass - oracle::half_space_mass(n)));

      Mat m(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = normal(rng);
      Mat b = m * m.transpose();
      if (k % 4 == 0) {
        // Rank-deficient samples.
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = normal(rng);
        b = v * v.transpose();
      }
      b *= 0.5 / b.trace();
      const PsiResult q = psi(HomogeneousProfile::polynomial(b));
      worst = std::max(worst, std::abs(q.defining - q.mass));
      worst_closed = std::max(worst_closed, std::abs(q.mass - oracle::polynomial_mass(n)));
    }
  }
  c.require(worst <= 1e-6, "defining quadrature differs from int v by " + num(worst));
  c.require(worst_closed <= 1e-6, "int v differs from the closed form by " + num(worst_closed));
  c.info("max |Psi - int v| " + num(worst) + ", max |int v - closed form| " + num(worst_closed) + " (20+20 in 2D and 3D)");
  return c.outcome();
}

// 10. Blow-up recovery for synthetic polynomials.
Outcome criterion_10() {
  Check c;
  {
    RunOptions o = no_files({"solve", "blowup"});
    o.resolution = 256;
    ScenarioConfig cfg = builtin("synthetic-polynomial");
    cfg.decay = false;
    const ScenarioResult r = run_scenario(cfg, o);
    const BlowupReport& b = *r.blowup;
    c.require(b.profile->kind() == HomogeneousProfile::Kind::Polynomial, "profile is not polynomial");
    Mat expected = Mat::Zero(2, 2);
    expected(0, 0) = 0.4;
    expected(1, 1) = 0.1;
    const double err = (b.profile->matrix() - expected).cwiseAbs().maxCoeff();
    c.require(err <= 1e-3, "B error " + num(err) + " > 1e-3");
    c.require(b.stratum == 0, "stratum " + std::to_string(b.stratum) + " != 0");
    c.info("B error " + num(err) + ", stratum " + std::to_string(b.stratum));
  }
  {
    RunOptions o = no_files({"solve", "blowup", "stratify"});
    o.resolution = 256;
    ScenarioConfig cfg = builtin("synthetic-polynomial-degenerate");
    cfg.decay = false;
    const ScenarioResult r = run_scenario(cfg, o);
    c.require(r.blowup->stratum == 1, "degenerate stratum " + std::to_string(r.blowup->stratum) + " != 1");
    const auto& s = *r.strata;
    c.require(s.singular > 0 && s.strata_counts[1] == s.singular && s.regular == 0,
              "stratify: " + std::to_string(s.strata_counts[1]) + " of " + std::to_string(s.singular) +
                  " singular points in S_1, " + std::to_string(s.regular) + " regular");
    c.info("degenerate stratum " + std::to_string(r.blowup->stratum) + ", stratify S_1 " +
           std::to_string(s.strata_counts[1]) + "/" + std::to_string(s.entries.size()));
  }
  return c.outcome();
}

double homogeneity(const HomogeneousProfile& v, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    Vec y(v.dim());
    for (int i = 0; i < v.dim(); ++i) y[i] = uni(rng);
    if (y.norm() > 1.0) y /= 1.0 + y.norm();
    for (double s : {0.25, 0.5, 0.75}) worst = std::max(worst, std::abs(v.value(s * y) / (s * s) - v.value(y)));
  }
  return worst;
}

// 11. Homogeneity of every extracted profile.
Outcome criterion_11() {
  Check c;
  std::mt19937_64 rng(7);
  double worst = 0.0;
  std::size_t profiles = 0;
  for (const auto& [name, desc] : list_scenarios()) {
    if (builtin(name).dim < 2) continue;
    ScenarioConfig cfg = builtin(name);
    cfg.decay = false;
    cfg.stratify_stride = std::max(cfg.stratify_stride, 4);
    const ScenarioResult r = run_scenario(cfg, no_files({"solve", "blowup", "stratify"}));
    worst = std::max(worst, homogeneity(*r.blowup->profile, rng));
    ++profiles;
    for (const StrataEntry& e : r.strata->entries) {
      if (e.status == StrataEntry::Status::Regular) {
        worst = std::max(worst, homogeneity(HomogeneousProfile::half_space(e.normal), rng));
        ++profiles;
      } else if (e.status == StrataEntry::Status::Singular) {
        worst = std::max(worst, homogeneity(HomogeneousProfile::polynomial(e.matrix, 1e-9), rng));
        ++profiles;
      }
    }
  }
  c.require(worst <= 1e-9, "homogeneity defect " + num(worst) + " > 1e-9");
  c.info(std::to_string(profiles) + " profiles, max defect " + num(worst));
  return c.outcome();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// 12. Determinism of CSV outputs.
Outcome criterion_12() {
  Check c;
  const fs::path root = fs::temp_directory_path() / "obstacle_lab_determinism";
  fs::remove_all(root);
  std::size_t compared = 0;
  for (const auto& [name, desc] : list_scenarios()) {
    std::vector<fs::path> dirs;
    for (int run = 0; run < 2; ++run) {
      ScenarioConfig cfg = builtin(name);
      cfg.output = root / name / ("run" + std::to_string(run));
      RunOptions o;
      o.seed = 12345;
      run_scenario(cfg, o);
      dirs.push_back(cfg.output);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      if (entry.path().extension() != ".csv") continue;
      const fs::path other = dirs[1] / entry.path().filename();
      const bool same = fs::exists(other) && slurp(entry.path()) == slurp(other);
      c.require(same, name + "/" + entry.path().filename().string() + " differs");
      ++compared;
    }
  }
  c.require(compared > 0, "no CSV files written");
  c.info(std::to_string(compared) + " CSV pairs byte-identical");
  fs::remove_all(root);
  return c.outcome();
}

const std::map<int, std::pair<const char*, std::function<Outcome()>>>& registry() {
  static const std::map<int, std::pair<const char*, std::function<Outcome()>>> r = {
      {1, {"solver correctness 1D", criterion_1}},
      {2, {"solver correctness 2D", criterion_2}},
      {3, {"Weiss energy constancy", criterion_3}},
      {4, {"energy gap classification", criterion_4}},
      {5, {"Weiss quasi-monotonicity (Lipschitz)", criterion_5}},
      {6, {"Monneau quasi-monotonicity", criterion_6}},
      {7, {"Payne-Weinberger identity", criterion_7}},
      {8, {"quadratic growth", criterion_8}},
      {9, {"Psi consistency", criterion_9}},
      {10, {"blow-up recovery", criterion_10}},
      {11, {"homogeneity", criterion_11}},
      {12, {"determinism", criterion_12}},
  };
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty())
    for (const auto& [id, _] : registry()) ids.push_back(id);
  int failed = 0;
  for (int id : ids) {
    auto it = registry().find(id);
    if (it == registry().end()) {
      std::printf("FAIL criterion %d: unknown criterion\n", id);
      ++failed;
      continue;
    }
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out = it->second.second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", id, it->second.first,
                out.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    if (!out.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
