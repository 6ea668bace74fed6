#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dynbound/boundlaw.hpp"
#include "dynbound/integrator.hpp"
#include "dynbound/lyapunov.hpp"
#include "dynbound/poincare.hpp"
#include "dynbound/polyfield.hpp"
#include "dynbound/report_json.hpp"
#include "dynbound/upo.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dynbound::cli {

std::vector<double> parse_vector(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = text.find(',', pos);
    std::string_view item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty() && item.front() == '+') item.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw std::invalid_argument("not a comma-separated list of numbers: '" + std::string(text) + "'");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

namespace {

// Raised for bad flag values discovered after CLI11 parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string system;
  std::string x0;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  double tol = 1e-10;
  bool to_stdout = false;
};

struct Context {
  const Common& common;
  std::ostream& out;
  std::ostream& err;
  PolyField field;

  IntegrationOptions integration() const {
    IntegrationOptions o;
    o.abs_tol = common.tol;
    o.rel_tol = common.tol;
    return o;
  }

  std::vector<double> x0() const {
    if (common.x0.empty()) return std::vector<double>(field.dimension(), 1.0);
    auto v = parse_vector(common.x0);
    if (v.size() != field.dimension()) {
      throw UsageError("--x0 has " + std::to_string(v.size()) + " components, system has " +
                       std::to_string(field.dimension()));
    }
    return v;
  }

  fs::path path(const std::string& name) const { return fs::path(common.out_dir) / name; }

  void write_file(const std::string& name, const std::function<void(std::ostream&)>& body) const {
    fs::create_directories(common.out_dir);
    std::ofstream f(path(name), std::ios::binary);
    if (!f) throw UsageError("cannot write '" + path(name).string() + "'");
    body(f);
    if (!f) throw UsageError("write failed for '" + path(name).string() + "'");
  }

  // The command's main document: stdout with --stdout, otherwise a file.
  void emit(const std::string& name, const std::function<void(std::ostream&)>& body) const {
    if (common.to_stdout) {
      body(out);
      out.flush();
    } else {
      write_file(name, body);
      err << "wrote " << path(name).string() << '\n';
    }
  }

  void emit_json(const std::string& name, const json& doc) const {
    emit(name, [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
  }
};

// Platform-independent uniform draw in [lo, hi).
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

std::optional<BoundCertificate> choose_certificate(const PolyField& field, std::optional<std::size_t> j,
                                                   std::optional<double> alpha) {
  if (alpha) {
    if (!j) throw UsageError("--alpha needs --j");
    return BoundCertificate{*j, *alpha, BoundCertificate::Source::UserAsserted};
  }
  if (j) {
    auto cert = certify_component(field, *j);
    if (!cert) {
      throw UsageError("component " + std::to_string(*j) +
                       " has no certifiable lower bound; pass --alpha to assert one");
    }
    return cert;
  }
  auto all = certify_all(field);
  if (all.empty()) return std::nullopt;
  return all.front();
}

void check_component(const PolyField& field, std::optional<std::size_t> j) {
  if (j && (*j < 1 || *j > field.dimension())) {
    throw UsageError("--j must be in [1, " + std::to_string(field.dimension()) + "]");
  }
}

// simulate ------------------------------------------------------------------

struct SimulateOpts {
  double t0 = 0.0;
  double t1 = 100.0;
  std::string method = "rk45";
  double step = 1e-3;
  std::string project;
};

std::pair<std::size_t, std::size_t> projection_axes(const PolyField& field, const std::string& spec) {
  const auto comma = spec.find(',');
  if (comma == std::string::npos) throw UsageError("--project expects two variable names, e.g. x,z");
  const auto a = field.index_of(spec.substr(0, comma));
  const auto b = field.index_of(spec.substr(comma + 1));
  if (!a || !b) throw UsageError("--project names unknown variable in '" + spec + "'");
  return {*a, *b};
}

int simulate(const Context& ctx, const SimulateOpts& o) {
  auto opts = ctx.integration();
  if (o.method == "rk4") {
    opts.method = Method::Rk4Fixed;
    opts.step = o.step;
  } else if (o.method != "rk45") {
    throw UsageError("--method must be rk45 or rk4");
  }
  std::optional<std::pair<std::size_t, std::size_t>> axes;
  if (!o.project.empty()) axes = projection_axes(ctx.field, o.project);
  const auto x0 = ctx.x0();

  int code = kExitOk;
  Trajectory traj;
  try {
    traj = integrate(ctx.field, x0, o.t0, o.t1, opts);
  } catch (const IntegrationError& e) {
    ctx.err << "integration error (" << to_string(e.kind()) << ") at t = " << e.time() << ": " << e.what() << '\n';
    traj = e.partial();
    code = kExitIntegration;
  }
  ctx.emit("trajectory.csv", [&](std::ostream& f) { write_trajectory_csv(f, traj, ctx.field.variable_names()); });
  if (axes && !traj.empty()) {
    SvgPlot plot;
    plot.x_label = ctx.field.variable_names()[axes->first];
    plot.y_label = ctx.field.variable_names()[axes->second];
    plot.title = plot.x_label + plot.y_label + " projection";
    plot.points.reserve(traj.size());
    for (const auto& s : traj.samples()) plot.points.emplace_back(s.x[axes->first], s.x[axes->second]);
    ctx.write_file("projection.svg", [&](std::ostream& f) { write_svg(f, plot); });
    ctx.err << "wrote " << ctx.path("projection.svg").string() << '\n';
  }
  return code;
}

// bounds-check --------------------------------------------------------------

struct BoundsOpts {
  std::optional<std::size_t> j;
  std::optional<double> alpha;
  double t_back = 50.0;
  double t_fwd = 50.0;
  std::size_t samples = 0;
  double range = 5.0;
  double bound_tol = 1e-6;
};

int bounds_check(const Context& ctx, const BoundsOpts& o) {
  check_component(ctx.field, o.j);
  if (!(o.t_back >= 0.0) || !(o.t_fwd >= 0.0)) throw UsageError("--t-back and --t-fwd must be non-negative");
  std::vector<BoundCertificate> certs;
  if (o.j || o.alpha) {
    certs.push_back(*choose_certificate(ctx.field, o.j, o.alpha));
  } else {
    certs = certify_all(ctx.field);
  }

  std::vector<std::vector<double>> seeds;
  if (!ctx.common.x0.empty() || o.samples == 0) seeds.push_back(ctx.x0());
  std::mt19937_64 rng(ctx.common.seed);
  for (std::size_t s = 0; s < o.samples; ++s) {
    std::vector<double> x(ctx.field.dimension());
    for (double& v : x) v = uniform(rng, -o.range, o.range);
    seeds.push_back(std::move(x));
  }

  const auto opts = ctx.integration();
  json doc;
  doc["variables"] = ctx.field.variable_names();
  doc["seed"] = ctx.common.seed;
  doc["t_back"] = o.t_back;
  doc["t_fwd"] = o.t_fwd;
  doc["tolerance"] = compose_tolerance(o.bound_tol, opts);
  doc["certificates"] = json::array();
  for (const auto& c : certs) doc["certificates"].push_back(to_json(c));

  bool fwd = true, back = true, naive = false;
  std::size_t naive_runs = 0;
  json runs = json::array();
  for (const auto& x : seeds) {
    json reports = json::array();
    bool run_naive = false;
    for (const auto& c : certs) {
      const auto r = verify_orbit_bounds(ctx.field, c, x, 0.0, o.t_back, o.t_fwd, o.bound_tol, opts);
      fwd = fwd && r.forward_holds;
      back = back && r.backward_holds;
      run_naive = run_naive || r.naive_backward_violated;
      reports.push_back(to_json(r));
    }
    naive = naive || run_naive;
    naive_runs += run_naive ? 1 : 0;
    runs.push_back({{"x0", x}, {"reports", reports}});
  }
  doc["runs"] = runs;
  doc["forward_holds"] = fwd;
  doc["backward_holds"] = back;
  doc["naive_backward_violated"] = naive;
  doc["runs_with_naive_violation"] = naive_runs;
  ctx.emit_json("bounds.json", doc);

  if (certs.empty()) {
    ctx.err << "no component has a certifiable lower bound; nothing to check (use --j and --alpha to assert one)\n";
    return kExitOk;
  }
  ctx.err << seeds.size() << " run(s), " << certs.size() << " certificate(s): forward " << (fwd ? "holds" : "FAILS")
          << ", corrected backward " << (back ? "holds" : "FAILS") << ", naive backward "
          << (naive ? "violated in " + std::to_string(naive_runs) + " run(s)" : "not violated") << '\n';
  return fwd && back ? kExitOk : kExitBoundFailure;
}

// refute --------------------------------------------------------------------

struct RefuteOpts {
  std::optional<std::size_t> j;
  std::optional<double> alpha;
  double horizon = 100.0;
};

int refute(const Context& ctx, const RefuteOpts& o) {
  check_component(ctx.field, o.j);
  if (!(o.horizon > 0.0)) throw UsageError("--horizon must be positive");
  const auto cert = choose_certificate(ctx.field, o.j, o.alpha);
  if (!cert) {
    throw UsageError("no component satisfies the lower-bound hypothesis; pass --j and --alpha to assert one");
  }
  const auto report = refute_nonexistence(ctx.field, *cert, ctx.x0(), o.horizon, ctx.integration());
  ctx.emit_json("refute.json", to_json(report));
  ctx.err << report.verdict_text() << '\n';
  return kExitOk;
}

// section -------------------------------------------------------------------

struct SectionCmdOpts {
  std::string plane;
  std::size_t iterates = 100;
  double transient = 0.0;
  double max_time = 200.0;
};

SectionPoint starting_point(const Context& ctx, const SectionPlane& plane, double transient,
                            const SectionOptions& sopts) {
  const auto x0 = ctx.x0();
  if (ctx.field.dimension() != 3) throw UsageError("sections need a three-dimensional system");
  if (transient == 0.0 && std::abs(plane.signed_distance(x0)) <= 1e-9) {
    return make_section_point(plane, Vec3{x0[0], x0[1], x0[2]}, 0.0);
  }
  return settle_onto_section(ctx.field, plane, x0, transient, sopts);
}

int section(const Context& ctx, const SectionCmdOpts& o) {
  const auto plane = SectionPlane::parse(o.plane);
  SectionOptions sopts;
  sopts.integration = ctx.integration();
  sopts.max_time = o.max_time;
  const auto start = starting_point(ctx, plane, o.transient, sopts);
  std::vector<SectionPoint> pts{start};
  int code = kExitOk;
  try {
    auto it = return_map_iterates(ctx.field, plane, start, o.iterates, sopts);
    pts.insert(pts.end(), it.begin(), it.end());
  } catch (const NoReturnError& e) {
    ctx.err << "no return at iterate " << e.iterate() << ": " << e.what() << '\n';
    code = kExitIntegration;
  }
  ctx.emit("section.csv", [&](std::ostream& f) { write_section_csv(f, pts); });
  return code;
}

// upo -----------------------------------------------------------------------

struct UpoCmdOpts {
  std::string plane;
  std::size_t iterates = 2000;
  std::size_t k_max = 4;
  double threshold = 0.05;
  double transient = 100.0;
  unsigned threads = 0;
  bool tangent = false;
};

int upo(const Context& ctx, const UpoCmdOpts& o) {
  const auto plane = SectionPlane::parse(o.plane);
  UpoOptions uopts;
  uopts.threads = o.threads;
  uopts.tangent_jacobian = o.tangent;
  SectionOptions scan = uopts.section;
  scan.integration = ctx.integration();
  const auto start = starting_point(ctx, plane, o.transient, scan);
  const auto result = census(ctx.field, plane, start, o.iterates, o.k_max, o.threshold, uopts);

  ctx.emit_json("census.json", census_to_json(result));
  for (std::size_t i = 0; i < result.orbits.size(); ++i) {
    const auto traj = orbit_trajectory(ctx.field, result.orbits[i], uopts.monodromy);
    const std::string name = "orbit_" + std::to_string(i) + ".csv";
    ctx.write_file(name, [&](std::ostream& f) { write_trajectory_csv(f, traj, ctx.field.variable_names()); });
  }
  std::size_t unstable = 0;
  for (const auto& orb : result.orbits) unstable += orb.stability == Stability::Unstable ? 1 : 0;
  ctx.err << result.seeds.size() << " seed(s), " << result.orbits.size() << " distinct orbit(s) (" << unstable
          << " unstable), " << result.failures.size() << " seed(s) did not converge\n";
  return kExitOk;
}

// lyapunov ------------------------------------------------------------------

struct LyapunovOpts {
  double transient = 100.0;
  double total = 5000.0;
  double interval = 0.5;
  std::size_t history_every = 100;
};

int lyapunov(const Context& ctx, const LyapunovOpts& o) {
  const auto res =
      lyapunov_spectrum(ctx.field, ctx.x0(), o.transient, o.total, o.interval, ctx.integration(), o.history_every);
  ctx.emit_json("lyapunov.json", to_json(res));
  ctx.write_file("lyapunov_history.csv", [&](std::ostream& f) { write_convergence_csv(f, res); });
  ctx.err << "exponents:";
  for (double e : res.exponents) ctx.err << ' ' << e;
  ctx.err << " (sum " << res.sum() << ", mean divergence " << res.mean_divergence << ")\n";
  return kExitOk;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--system", c.system, "system file (.sys)")->required();
  cmd->add_option("--x0", c.x0, "initial state a,b,c (default: all ones)");
  cmd->add_option("--out", c.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "random seed for sampled initial states")->capture_default_str();
  cmd->add_option("--tol", c.tol, "integrator absolute and relative tolerance")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--stdout", c.to_stdout, "write the main CSV/JSON document to stdout instead of a file");
}

void add_certificate(CLI::App* cmd, std::optional<std::size_t>& j, std::optional<double>& alpha) {
  cmd->add_option("--j", j, "1-based component index");
  cmd->add_option("--alpha", alpha, "asserted lower bound for component j (skips certification)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Polynomial flow toolkit: bound laws, sections, periodic orbits, Lyapunov spectra", "dynbound"};
  app.require_subcommand(1);
  Common common;

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "integrate a trajectory to CSV, optionally an SVG projection");
  add_common(c_sim, common);
  c_sim->add_option("--t0", sim.t0, "start time")->capture_default_str();
  c_sim->add_option("--t1", sim.t1, "end time (may be below t0)")->capture_default_str();
  c_sim->add_option("--method", sim.method, "rk45 (adaptive) or rk4 (fixed step)")->capture_default_str();
  c_sim->add_option("--step", sim.step, "rk4 step size")->capture_default_str();
  c_sim->add_option("--project", sim.project, "write projection.svg of two variables, e.g. x,z");

  BoundsOpts bnd;
  auto* c_bnd = app.add_subcommand("bounds-check", "check forward and backward linear bounds along orbits");
  add_common(c_bnd, common);
  add_certificate(c_bnd, bnd.j, bnd.alpha);
  c_bnd->add_option("--t-back", bnd.t_back, "backward horizon")->capture_default_str();
  c_bnd->add_option("--t-fwd", bnd.t_fwd, "forward horizon")->capture_default_str();
  c_bnd->add_option("--samples", bnd.samples, "random initial states drawn from [-range, range]^n")
      ->capture_default_str();
  c_bnd->add_option("--range", bnd.range, "half-width of the sampling box")->capture_default_str();
  c_bnd->add_option("--bound-tol", bnd.bound_tol, "bound tolerance before the integrator allowance")
      ->capture_default_str();

  RefuteOpts ref;
  auto* c_ref = app.add_subcommand("refute", "search for a bounded backward orbit under a lower-bound hypothesis");
  add_common(c_ref, common);
  add_certificate(c_ref, ref.j, ref.alpha);
  c_ref->add_option("--horizon", ref.horizon, "backward integration time")->capture_default_str();

  SectionCmdOpts sec;
  auto* c_sec = app.add_subcommand("section", "iterate the first-return map of a plane");
  add_common(c_sec, common);
  c_sec->add_option("--plane", sec.plane, "px,py,pz/nx,ny,nz/positive|negative|both")->required();
  c_sec->add_option("--iterates", sec.iterates, "number of returns")->capture_default_str();
  c_sec->add_option("--transient", sec.transient, "time to integrate before the first crossing")
      ->capture_default_str();
  c_sec->add_option("--max-time", sec.max_time, "give up on a return after this long")->capture_default_str();

  UpoCmdOpts up;
  auto* c_upo = app.add_subcommand("upo", "census of periodic orbits via close recurrences and Newton shooting");
  add_common(c_upo, common);
  c_upo->add_option("--plane", up.plane, "px,py,pz/nx,ny,nz/positive|negative|both")->required();
  c_upo->add_option("--iterates", up.iterates, "section iterates scanned for recurrences")->capture_default_str();
  c_upo->add_option("--k-max", up.k_max, "longest return-map period searched")->capture_default_str();
  c_upo->add_option("--threshold", up.threshold, "recurrence distance in chart units")->capture_default_str();
  c_upo->add_option("--transient", up.transient, "time to integrate before scanning")->capture_default_str();
  c_upo->add_option("--threads", up.threads, "worker threads (0 = hardware)")->capture_default_str();
  c_upo->add_flag("--tangent", up.tangent, "Newton Jacobian from the variational flow");

  LyapunovOpts lya;
  auto* c_lya = app.add_subcommand("lyapunov", "Lyapunov spectrum by repeated QR re-orthonormalization");
  add_common(c_lya, common);
  c_lya->add_option("--transient", lya.transient, "time discarded before averaging")->capture_default_str();
  c_lya->add_option("--total", lya.total, "averaging time")->capture_default_str();
  c_lya->add_option("--interval", lya.interval, "time between re-orthonormalizations")->capture_default_str();
  c_lya->add_option("--history-every", lya.history_every, "renormalizations between history rows")
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Context ctx{common, out, err, load_system(common.system)};
    if (*c_sim) return simulate(ctx, sim);
    if (*c_bnd) return bounds_check(ctx, bnd);
    if (*c_ref) return refute(ctx, ref);
    if (*c_sec) return section(ctx, sec);
    if (*c_upo) return upo(ctx, up);
    if (*c_lya) return lyapunov(ctx, lya);
  } catch (const ParseError& e) {
    err << common.system << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const IntegrationError& e) {
    err << "integration error (" << to_string(e.kind()) << ") at t = " << e.time() << ": " << e.what() << '\n';
    return kExitIntegration;
  } catch (const NoReturnError& e) {
    err << "no return: " << e.what() << '\n';
    return kExitIntegration;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace dynbound::cli
