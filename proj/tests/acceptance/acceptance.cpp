// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "dynbound/boundlaw.hpp"
#include "dynbound/integrator.hpp"
#include "dynbound/lyapunov.hpp"
#include "dynbound/poincare.hpp"
#include "dynbound/upo.hpp"

namespace fs = std::filesystem;
using namespace dynbound;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr double kLorenzDivergence = -(10.0 + 1.0 + 8.0 / 3.0);
// Shortest Lorenz cycle on x = 0, fixed from a close-recurrence scan before the census existed.
constexpr double kLorenzShortestPeriod = 1.5586522;

std::string system_path(const std::string& name) { return std::string(DYNBOUND_SYSTEMS_DIR) + "/" + name; }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<double> random_seed(std::mt19937_64& rng, std::size_t dim, double range) {
  std::vector<double> x(dim);
  for (auto& v : x) v = -range + 2.0 * range * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return x;
}

// Shared by the forward and backward criteria: 20 seeds per system, horizon 50 both ways.
struct BoundRuns {
  struct PerSystem {
    std::string name;
    bool has_certificate = false;
    std::size_t runs = 0;
    std::size_t forward_ok = 0;
    std::size_t backward_ok = 0;
    std::size_t naive_violations = 0;
  };
  std::vector<PerSystem> systems;
};

BoundRuns run_bound_checks() {
  BoundRuns out;
  IntegrationOptions opts;
  std::mt19937_64 rng(0);
  for (const char* name : {"equilibrium.sys", "closed-orbit.sys", "lorenz.sys"}) {
    const auto field = load_system(system_path(name));
    BoundRuns::PerSystem s{name};
    const auto certs = certify_all(field);
    s.has_certificate = !certs.empty();
    for (int i = 0; i < 20 && s.has_certificate; ++i) {
      const auto x0 = random_seed(rng, field.dimension(), 5.0);
      for (const auto& cert : certs) {
        const auto r = verify_orbit_bounds(field, cert, x0, 0.0, 50.0, 50.0, 1e-6, opts);
        ++s.runs;
        s.forward_ok += r.forward_holds ? 1 : 0;
        s.backward_ok += r.backward_holds ? 1 : 0;
        s.naive_violations += r.naive_backward_violated ? 1 : 0;
      }
    }
    out.systems.push_back(s);
  }
  return out;
}

const BoundRuns& bound_runs() {
  static const BoundRuns r = run_bound_checks();
  return r;
}

Outcome forward_bound() {
  Outcome o;
  for (const auto& s : bound_runs().systems) {
    if (!s.has_certificate) {
      o.note(s.name + " skipped (no certificate)");
      continue;
    }
    o.require(s.forward_ok == s.runs, s.name + " forward " + std::to_string(s.forward_ok) + "/" +
                                          std::to_string(s.runs));
    o.note(s.name + " " + std::to_string(s.forward_ok) + "/" + std::to_string(s.runs));
  }
  return o;
}

Outcome backward_bound() {
  Outcome o;
  for (const auto& s : bound_runs().systems) {
    if (!s.has_certificate) continue;
    o.require(s.backward_ok == s.runs, s.name + " backward " + std::to_string(s.backward_ok) + "/" +
                                           std::to_string(s.runs));
    o.require(s.naive_violations >= 1, s.name + " naive bound never violated");
    o.note(s.name + " " + std::to_string(s.backward_ok) + "/" + std::to_string(s.runs) + ", naive violated in " +
           std::to_string(s.naive_violations));
  }
  return o;
}

Outcome falsification_witnesses() {
  Outcome o;
  const auto eq = load_system(system_path("equilibrium.sys"));
  const auto re = refute_nonexistence(eq, certify_all(eq).front(), std::vector<double>{0, 0, 0}, 100.0);
  o.require(re.verdict == RefutationReport::Verdict::Falsified, "equilibrium.sys not falsified");
  o.require(re.equilibrium && re.equilibrium->residual < 1e-12, "equilibrium residual");
  if (re.equilibrium) o.note("equilibrium residual " + fmt("%.3g", re.equilibrium->residual));

  const auto ring = load_system(system_path("closed-orbit.sys"));
  const auto rr = refute_nonexistence(ring, certify_all(ring).front(), std::vector<double>{1, 0, 0}, 100.0);
  o.require(rr.verdict == RefutationReport::Verdict::Falsified, "closed-orbit.sys not falsified");
  o.note("closed-orbit.sys " + std::string(rr.verdict == RefutationReport::Verdict::Falsified ? "falsified"
                                                                                              : "not falsified"));
  return o;
}

Outcome closed_orbit_recovery() {
  Outcome o;
  const auto plane = SectionPlane::parse("0,0,0/0,1,0/positive");
  const auto start = make_section_point(plane, Vec3{1, 0, 0});
  for (const char* name : {"closed-orbit.sys", "stuart-landau.sys"}) {
    const auto r = first_return(load_system(system_path(name)), plane, start);
    o.require(std::abs(r.return_time - kTwoPi) < 1e-6, std::string(name) + " period");
    o.note(std::string(name) + " period error " + fmt("%.2e", std::abs(r.return_time - kTwoPi)));
  }
  const auto sl = load_system(system_path("stuart-landau.sys"));
  const auto m = monodromy(sl, std::vector<double>{1, 0, 0}, kTwoPi);
  const std::vector<double> expected{1.0, std::exp(-kTwoPi), std::exp(-2 * kTwoPi)};
  o.require(m.multipliers.size() == 3, "three multipliers");
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min<std::size_t>(3, m.multipliers.size()); ++i) {
    worst = std::max(worst, std::abs(m.multipliers[i] - expected[i]) / expected[i]);
  }
  o.require(worst < 1e-4, "Stuart-Landau multipliers");
  o.note("worst multiplier rel error " + fmt("%.2e", worst));
  return o;
}

Outcome chaos_certificate() {
  Outcome o;
  const auto r = lyapunov_spectrum(load_system(system_path("lorenz.sys")), std::vector<double>{1, 1, 1}, 100.0,
                                   5000.0, 0.5);
  o.require(std::abs(r.exponents[0] - 0.906) <= 0.02, "lambda1");
  o.require(std::abs(r.exponents[1]) <= 0.01, "lambda2");
  o.require(std::abs(r.sum() - (-13.667)) <= 0.07, "exponent sum");
  o.require(std::abs(r.sum() - kLorenzDivergence) <= 0.07, "sum vs exact divergence");
  o.note("lambda = " + fmt("%.4f", r.exponents[0]) + ", " + fmt("%.4f", r.exponents[1]) + ", " +
         fmt("%.4f", r.exponents[2]) + "; sum " + fmt("%.4f", r.sum()));
  return o;
}

Outcome upo_evidence() {
  Outcome o;
  const auto f = load_system(system_path("lorenz.sys"));
  const auto plane = SectionPlane::parse("0,0,0/1,0,0/positive");
  const auto start = settle_onto_section(f, plane, std::vector<double>{1, 1, 1}, 100.0);
  const auto c = census(f, plane, start, 2000, 4, 0.05);
  o.require(c.orbits.size() >= 3, "at least 3 orbits (found " + std::to_string(c.orbits.size()) + ")");
  bool shortest_found = false;
  for (const auto& orbit : c.orbits) {
    const std::string tag = "T=" + fmt("%.6f", orbit.period);
    o.require(orbit.stability == Stability::Unstable, tag + " not unstable");
    const bool flow = std::any_of(orbit.floquet_multipliers.begin(), orbit.floquet_multipliers.end(),
                                  [](std::complex<double> mu) { return std::abs(mu - 1.0) < 1e-3; });
    o.require(flow, tag + " flow multiplier");
    const double liouville = std::exp(kLorenzDivergence * orbit.period);
    o.require(rel(orbit.monodromy_determinant, liouville) < 1e-3, tag + " determinant vs Liouville");
    shortest_found = shortest_found || std::abs(orbit.period - kLorenzShortestPeriod) < 1e-4;
  }
  o.require(shortest_found, "shortest cycle period not reproduced");
  o.note(std::to_string(c.orbits.size()) + " orbits from " + std::to_string(c.seeds.size()) + " seeds");
  return o;
}

Outcome integrator_contracts() {
  Outcome o;
  const auto decay = parse_system("dx/dt = -x");
  const double err = std::abs(integrate(decay, std::vector<double>{1.0}, 0.0, 1.0).back().x[0] - std::exp(-1.0));
  o.require(err < 1e-8, "decay endpoint");
  o.note("decay error " + fmt("%.2e", err));

  const auto lorenz = load_system(system_path("lorenz.sys"));
  IntegrationOptions tight;
  tight.abs_tol = tight.rel_tol = 1e-12;
  const std::vector<double> x0{1, 1, 1};
  try {
    const auto fwd = integrate(lorenz, x0, 0.0, 10.0, tight);
    const auto back = integrate(lorenz, fwd.back().x, 10.0, 0.0, tight);
    double drift = 0.0;
    for (std::size_t i = 0; i < 3; ++i) drift = std::max(drift, std::abs(back.back().x[i] - x0[i]));
    o.require(drift <= 1e-5, "Lorenz round trip over t = 10");
    o.note("round trip drift " + fmt("%.2e", drift));
  } catch (const IntegrationError& e) {
    o.require(false, "Lorenz round trip over t = 10: backward leg stopped (" + std::string(to_string(e.kind())) +
                         ") at t = " + fmt("%.4f", e.time()));
  }

  auto rk4_error = [&](double h) {
    IntegrationOptions fixed;
    fixed.method = Method::Rk4Fixed;
    fixed.step = h;
    return std::abs(integrate(decay, std::vector<double>{1.0}, 0.0, 1.0, fixed).back().x[0] - std::exp(-1.0));
  };
  const double ratio = rk4_error(0.1) / rk4_error(0.05);
  o.require(ratio >= 12.0 && ratio <= 20.0, "RK4 order ratio");
  o.note("RK4 ratio " + fmt("%.2f", ratio));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void run_commands(const fs::path& dir) {
  const std::vector<std::vector<std::string>> commands{
      {"bounds-check", "--system", system_path("closed-orbit.sys"), "--samples", "20", "--seed", "42", "--out",
       (dir / "bounds").string()},
      {"refute", "--system", system_path("equilibrium.sys"), "--x0", "0,0,0", "--out", (dir / "refute").string()},
      {"simulate", "--system", system_path("lorenz.sys"), "--t1", "20", "--project", "x,z", "--out",
       (dir / "simulate").string()},
      {"section", "--system", system_path("lorenz.sys"), "--plane", "0,0,27/0,0,1/both", "--transient", "20",
       "--iterates", "200", "--out", (dir / "section").string()},
      {"upo", "--system", system_path("stuart-landau.sys"), "--x0", "0.5,0.1,0.4", "--plane", "0,0,0/0,1,0/positive",
       "--iterates", "10", "--transient", "30", "--out", (dir / "upo").string()},
      {"lyapunov", "--system", system_path("lorenz.sys"), "--transient", "10", "--total", "200", "--out",
       (dir / "lyapunov").string()},
  };
  std::ostringstream sink;
  for (const auto& args : commands) cli::run(args, sink, sink);
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "dynbound_acceptance_determinism";
  fs::remove_all(root);
  run_commands(root / "a");
  run_commands(root / "b");
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto relative = fs::relative(entry.path(), root / "a");
    o.require(slurp(entry.path()) == slurp(root / "b" / relative), relative.string() + " differs");
    ++compared;
  }
  o.require(compared >= 8, "expected output files missing");
  o.note(std::to_string(compared) + " files byte-identical");
  fs::remove_all(root);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds; 0 for none
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "forward bound", 30.0, forward_bound},
      {2, "corrected backward bound", 30.0, backward_bound},
      {3, "bounded-orbit witnesses", 10.0, falsification_witnesses},
      {4, "closed-orbit recovery", 5.0, closed_orbit_recovery},
      {5, "Lorenz Lyapunov spectrum", 60.0, chaos_certificate},
      {6, "Lorenz periodic-orbit census", 120.0, upo_evidence},
      {7, "integrator contracts", 5.0, integrator_contracts},
      {8, "determinism", 0.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0.0) out.require(secs < c.time_limit, "runtime over " + fmt("%.0f s", c.time_limit));
    failures += out.pass ? 0 : 1;
    std::printf("%s [%d] %s (%.2f s): %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, secs, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
