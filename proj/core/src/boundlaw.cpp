#include "dynbound/boundlaw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dynbound {

const char* to_string(BoundCertificate::Source source) {
  return source == BoundCertificate::Source::Certified ? "certified" : "user-asserted";
}

std::optional<BoundCertificate> certify_component(const PolyField& field, std::size_t j) {
  if (j < 1 || j > field.dimension()) throw DimensionError("component index out of range", field.dimension(), j);
  if (auto alpha = certify_lower_bound(field.component(j - 1))) {
    return BoundCertificate{j, *alpha, BoundCertificate::Source::Certified};
  }
  return std::nullopt;
}

std::vector<BoundCertificate> certify_all(const PolyField& field) {
  std::vector<BoundCertificate> out;
  for (std::size_t j = 1; j <= field.dimension(); ++j) {
    if (auto c = certify_component(field, j)) out.push_back(*c);
  }
  return out;
}

double compose_tolerance(double user_tol, const IntegrationOptions& opts) {
  return user_tol + 10.0 * std::max(opts.abs_tol, opts.rel_tol);
}

namespace {

void check_cert(const BoundCertificate& cert, std::size_t dim) {
  if (cert.component < 1 || cert.component > dim) {
    throw DimensionError("certificate component index out of range", dim, cert.component);
  }
  if (!std::isfinite(cert.alpha)) throw Error("certificate bound must be finite");
}

void min_into(std::optional<double>& slot, double v) {
  if (!slot || v < *slot) slot = v;
}

// Folds one trajectory into the report. x_j(t0) and t0 are already set.
void accumulate(BoundReport& r, const Trajectory& traj) {
  const std::size_t j = r.component - 1;
  auto check = [&r](double t, double xj) {
    const double line = bound_line(r.alpha, r.t0, r.xj0, t);
    ++r.samples_checked;
    if (t == r.t0) return;  // the start lies on both lines and says nothing
    if (t > r.t0) {
      const double m = xj - line;
      min_into(r.forward_margin, m);
      if (m < -r.tolerance) r.forward_holds = false;
    } else {
      const double m = line - xj;
      min_into(r.backward_margin, m);
      if (m < -r.tolerance) r.backward_holds = false;
      min_into(r.naive_backward_margin, -m);
      if (-m < -r.tolerance) r.naive_backward_violated = true;
    }
  };

  const auto& s = traj.samples();
  for (std::size_t i = 0; i < s.size(); ++i) {
    check(s[i].t, s[i].x[j]);
    if (i + 1 < s.size()) {
      const StepView step{s[i].t, s[i + 1].t, s[i].x, s[i].dxdt, s[i + 1].x, s[i + 1].dxdt};
      const double tm = 0.5 * (s[i].t + s[i + 1].t);
      check(tm, step.interpolate_component(tm, j));
    }
  }
}

BoundReport start_report(const Trajectory& traj, const BoundCertificate& cert, double tol) {
  if (traj.empty()) throw Error("cannot verify bounds on an empty trajectory");
  check_cert(cert, traj.dimension());
  if (!(tol > 0.0)) throw Error("bound tolerance must be positive");
  BoundReport r;
  r.component = cert.component;
  r.alpha = cert.alpha;
  r.t0 = traj.t0();
  r.xj0 = traj.front().x[cert.component - 1];
  r.tolerance = tol;
  r.forward_reached = r.t0;
  r.backward_reached = r.t0;
  return r;
}

void note_extent(BoundReport& r, const Trajectory& traj) {
  if (traj.size() < 2) return;
  if (traj.backward()) {
    r.backward_reached = std::min(r.backward_reached, traj.back().t);
  } else {
    r.forward_reached = std::max(r.forward_reached, traj.back().t);
  }
}

}  // namespace

BoundReport verify_bounds(const Trajectory& traj, const BoundCertificate& cert, double tol) {
  BoundReport r = start_report(traj, cert, tol);
  accumulate(r, traj);
  note_extent(r, traj);
  return r;
}

BoundReport verify_bounds(const Trajectory& forward, const Trajectory& backward, const BoundCertificate& cert,
                          double tol) {
  BoundReport r = start_report(forward, cert, tol);
  if (backward.empty() || backward.t0() != forward.t0() || backward.front().x != forward.front().x) {
    throw Error("forward and backward runs must share their initial sample");
  }
  accumulate(r, forward);
  accumulate(r, backward);
  note_extent(r, forward);
  note_extent(r, backward);
  return r;
}

namespace {

struct Leg {
  Trajectory traj;
  bool escaped = false;
};

Leg run_leg(const PolyField& field, std::span<const double> x0, double t0, double t1,
            const IntegrationOptions& opts) {
  try {
    return {integrate(field, x0, t0, t1, opts), false};
  } catch (const IntegrationError& e) {
    if (!e.escaped()) throw;
    return {e.partial(), true};
  }
}

double state_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

BoundReport verify_orbit_bounds(const PolyField& field, const BoundCertificate& cert, std::span<const double> x0,
                                double t0, double t_back, double t_fwd, double user_tol,
                                const IntegrationOptions& opts) {
  check_cert(cert, field.dimension());
  if (t_back < 0.0 || t_fwd < 0.0) throw Error("integration lengths must be non-negative");
  const double tol = compose_tolerance(user_tol, opts);

  Leg fwd, back;
  if (t_fwd > 0.0) fwd = run_leg(field, x0, t0, t0 + t_fwd, opts);
  if (t_back > 0.0) back = run_leg(field, x0, t0, t0 - t_back, opts);
  if (fwd.traj.empty() && back.traj.empty()) {
    Trajectory only(t0, field.dimension());
    only.push(t0, x0, field.evaluate(x0));
    return verify_bounds(only, cert, tol);
  }

  BoundReport r = fwd.traj.empty()    ? verify_bounds(back.traj, cert, tol)
                  : back.traj.empty() ? verify_bounds(fwd.traj, cert, tol)
                                      : verify_bounds(fwd.traj, back.traj, cert, tol);
  r.forward_escaped = fwd.escaped;
  r.backward_escaped = back.escaped;
  return r;
}

std::optional<EquilibriumWitness> find_equilibrium(const PolyField& field, std::span<const double> seed,
                                                   double accept, int max_iter) {
  const std::size_t n = field.dimension();
  if (seed.size() != n) throw DimensionError("equilibrium seed", n, seed.size());
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(seed.data(), static_cast<Eigen::Index>(n));
  std::vector<double> f(n);

  auto residual = [&](const Eigen::VectorXd& p) {
    field.evaluate_into(std::span<const double>(p.data(), n), f);
    double r = 0.0;
    for (double v : f) r = std::max(r, std::abs(v));
    return r;
  };

  double res = residual(x);
  for (int it = 0; it <= max_iter; ++it) {
    if (!std::isfinite(res)) return std::nullopt;
    if (res < accept) {
      return EquilibriumWitness{std::vector<double>(x.data(), x.data() + n), res, it};
    }
    if (it == max_iter) break;
    const Eigen::MatrixXd jac = field.jacobian(std::span<const double>(x.data(), n));
    const Eigen::VectorXd fv = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd dx = jac.completeOrthogonalDecomposition().solve(-fv);
    if (!dx.allFinite() || dx.norm() == 0.0) return std::nullopt;
    // backtrack until the residual decreases
    double lambda = 1.0;
    Eigen::VectorXd trial;
    double trial_res = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 30; ++k, lambda *= 0.5) {
      trial = x + lambda * dx;
      trial_res = residual(trial);
      if (trial_res < res) break;
    }
    if (!(trial_res < res)) return std::nullopt;
    x = trial;
    res = trial_res;
  }
  return std::nullopt;
}

std::optional<ClosedOrbitWitness> find_closed_orbit(const PolyField& field, std::span<const double> seed,
                                                    double max_time, const IntegrationOptions& opts,
                                                    double closure_tol) {
  const std::size_t n = field.dimension();
  if (seed.size() != n) throw DimensionError("closed-orbit seed", n, seed.size());
  if (!(max_time > 0.0)) return std::nullopt;
  const auto f0 = field.evaluate(seed);
  double fnorm = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    fnorm += f0[i] * f0[i];
    scale = std::max(scale, std::abs(seed[i]));
  }
  fnorm = std::sqrt(fnorm);
  if (!(fnorm > 1e-12)) return std::nullopt;

  // s(x) = <f0, x - seed> / |f0| increases through zero at the seed.
  auto s_of = [&](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += f0[i] * (x[i] - seed[i]);
    return s / fnorm;
  };

  Stepper stepper(field_rhs(field), n, n, opts);
  stepper.reset(0.0, seed);
  std::vector<double> y(n), fy(n);
  std::optional<ClosedOrbitWitness> found;
  auto observer = [&](const StepView& st) {
    const double s0 = s_of(st.y0), s1 = s_of(st.y1);
    if (!(s0 < 0.0 && s1 >= 0.0)) return true;
    // Newton on the step length, each trial a fresh single step from the bracket start
    double h = (st.t1 - st.t0) * (-s0 / (s1 - s0));
    for (int it = 0; it < 8; ++it) {
      stepper.single_step(st.y0, st.f0, h, y);
      field.evaluate_into(y, fy);
      double ds = 0.0;
      for (std::size_t i = 0; i < n; ++i) ds += f0[i] * fy[i];
      ds /= fnorm;
      const double s = s_of(y);
      if (!(ds > 0.0)) break;
      h -= s / ds;
      if (std::abs(s) < 1e-14 * scale) break;
    }
    stepper.single_step(st.y0, st.f0, h, y);
    double closure = 0.0;
    for (std::size_t i = 0; i < n; ++i) closure = std::max(closure, std::abs(y[i] - seed[i]));
    if (closure <= closure_tol * scale) {
      found = ClosedOrbitWitness{st.t0 + h, closure};
      return false;
    }
    return true;
  };
  try {
    stepper.advance(max_time, observer);
  } catch (const IntegrationError&) {
    return std::nullopt;
  }
  return found;
}

Trajectory periodic_continuation(const PolyField& field, std::span<const double> x0, double period, double t1,
                                 const IntegrationOptions& opts) {
  if (!(period > 0.0)) throw Error("period must be positive");
  if (t1 == 0.0) throw Error("integration interval is empty (t1 == t0)");
  // One period is always integrated forward: a cycle that attracts forward repels
  // backward, and the backward tiles are the same period shifted by -m * period.
  const Trajectory one = integrate(field, x0, 0.0, period, opts);
  const auto& s = one.samples();
  Trajectory out(0.0, field.dimension());
  out.push(0.0, s.front().x, s.front().dxdt);
  auto finish = [&](double local) {
    const auto x = one.state_at(local);
    out.push(t1, x, field.evaluate(x));
    return out;
  };
  if (t1 > 0.0) {
    for (std::size_t m = 0;; ++m) {
      const double shift = static_cast<double>(m) * period;
      for (std::size_t i = 1; i < s.size(); ++i) {
        const double t = s[i].t + shift;
        if (t >= t1) return finish(t1 - shift);
        out.push(t, s[i].x, s[i].dxdt);
      }
    }
  }
  for (std::size_t m = 1;; ++m) {
    const double shift = static_cast<double>(m) * period;
    for (std::size_t i = s.size() - 1; i-- > 0;) {
      const double t = s[i].t - shift;
      if (t <= t1) return finish(t1 + shift);
      out.push(t, s[i].x, s[i].dxdt);
    }
  }
}

std::string RefutationReport::verdict_text() const {
  return verdict == Verdict::Falsified
             ? "bounded backward orbit found — original Theorem 1 claim falsified"
             : "orbit escaped backward — no counterexample from this seed";
}

RefutationReport refute_nonexistence(const PolyField& field, const BoundCertificate& cert,
                                     std::span<const double> x0, double horizon, const IntegrationOptions& opts) {
  check_cert(cert, field.dimension());
  if (x0.size() != field.dimension()) throw DimensionError("refutation seed", field.dimension(), x0.size());
  if (!(horizon > 0.0)) throw Error("refutation horizon must be positive");
  if (cert.source == BoundCertificate::Source::Certified) {
    const auto check = certify_lower_bound(field.component(cert.component - 1));
    if (!check || *check != cert.alpha) throw Error("certificate does not match the field component");
  }

  RefutationReport rep;
  rep.certificate = cert;
  rep.seed.assign(x0.begin(), x0.end());
  rep.horizon = horizon;
  rep.equilibrium = find_equilibrium(field, x0);

  if (!rep.equilibrium) rep.closed_orbit = find_closed_orbit(field, x0, horizon, opts);

  const std::vector<double> start = rep.equilibrium ? rep.equilibrium->point : rep.seed;
  Leg back = rep.closed_orbit ? Leg{periodic_continuation(field, start, rep.closed_orbit->period, -horizon, opts)}
                              : run_leg(field, start, 0.0, -horizon, opts);
  rep.escaped = back.escaped;
  rep.reached_time = back.traj.back().t;

  double early = 0.0, late = 0.0;
  for (const auto& s : back.traj.samples()) {
    const double nrm = state_norm(s.x);
    rep.witnessed_bound = std::max(rep.witnessed_bound, nrm);
    if (s.t >= -0.5 * horizon) {
      early = std::max(early, nrm);
    } else {
      late = std::max(late, nrm);
    }
  }
  rep.growth_ratio = early > 0.0 ? late / early : (late > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  rep.bounds = verify_bounds(back.traj, cert, compose_tolerance(1e-6, opts));
  rep.bounds->backward_escaped = back.escaped;

  constexpr double kGrowthAllowance = 1.05;
  const bool no_growth = late <= kGrowthAllowance * early + 1e-9;
  if (rep.equilibrium) {
    rep.bounded = true;
    rep.verdict = RefutationReport::Verdict::Falsified;
    rep.reason = "exact equilibrium: the constant orbit is bounded for all t";
  } else if (rep.closed_orbit) {
    rep.bounded = true;
    rep.verdict = RefutationReport::Verdict::Falsified;
    rep.reason = "the seed lies on a closed orbit; its periodic continuation is bounded for all t";
  } else if (back.escaped) {
    rep.verdict = RefutationReport::Verdict::NoCounterexample;
    rep.reason = "backward run escaped before reaching -horizon";
  } else if (!no_growth) {
    rep.verdict = RefutationReport::Verdict::NoCounterexample;
    rep.reason = "backward run stayed below the cap but its norm keeps growing";
  } else {
    rep.bounded = true;
    rep.verdict = RefutationReport::Verdict::Falsified;
    rep.reason = "backward run stayed bounded over the whole horizon with no growth trend";
  }
  return rep;
}

}  // namespace dynbound
