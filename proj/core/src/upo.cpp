#include "dynbound/upo.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <optional>
#include <cmath>
#include <map>
#include <thread>
#include <tuple>

namespace dynbound {

const char* to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::NeutralDegenerate: return "neutral-degenerate";
  }
  return "unknown";
}

const char* to_string(ShootingError::Kind kind) {
  switch (kind) {
    case ShootingError::Kind::NoConvergence: return "no-convergence";
    case ShootingError::Kind::LeftBasin: return "left-basin";
    case ShootingError::Kind::Equilibrium: return "equilibrium";
  }
  return "unknown";
}

UpoOptions::UpoOptions() {
  section.integration.abs_tol = 1e-12;
  section.integration.rel_tol = 1e-12;
  monodromy.abs_tol = 1e-12;
  monodromy.rel_tol = 1e-12;
}

namespace {

double chart_distance(const Vec2& a, const Vec2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

}  // namespace

std::vector<RecurrenceSeed> scan_close_recurrences(std::span<const SectionPoint> iterates, std::size_t k_max,
                                                   double threshold) {
  std::vector<RecurrenceSeed> out;
  if (k_max == 0 || !(threshold > 0.0)) return out;
  std::map<std::tuple<std::size_t, long long, long long>, RecurrenceSeed> best;
  for (std::size_t i = 0; i < iterates.size(); ++i) {
    for (std::size_t k = 1; k <= k_max && i + k < iterates.size(); ++k) {
      const double d = chart_distance(iterates[i].coords, iterates[i + k].coords);
      if (!(d < threshold)) continue;
      const auto key = std::make_tuple(k, static_cast<long long>(std::floor(iterates[i].coords[0] / threshold)),
                                       static_cast<long long>(std::floor(iterates[i].coords[1] / threshold)));
      auto it = best.find(key);
      if (it == best.end() || d < it->second.distance) best[key] = RecurrenceSeed{iterates[i], k, d, i};
    }
  }
  out.reserve(best.size());
  for (auto& [key, seed] : best) out.push_back(seed);
  std::sort(out.begin(), out.end(), [](const RecurrenceSeed& a, const RecurrenceSeed& b) {
    return std::tie(a.k, a.distance, a.index) < std::tie(b.k, b.distance, b.index);
  });
  return out;
}

std::vector<RecurrenceSeed> scan_close_recurrences(const PolyField& field, const SectionPlane& plane,
                                                   const SectionPoint& start, std::size_t n_iterates,
                                                   std::size_t k_max, double threshold, const SectionOptions& opts) {
  if (n_iterates > 0 && (k_max < 1 || k_max > n_iterates)) throw Error("need 1 <= k_max <= n_iterates");
  if (threshold < 0.0) throw Error("recurrence threshold must be non-negative");
  const auto iterates = return_map_iterates(field, plane, start, n_iterates, opts);
  return scan_close_recurrences(iterates, k_max, threshold);
}

namespace {

struct MapEval {
  Vec2 image;
  double period = 0.0;
  std::vector<SectionPoint> points;  // p, R(p), ..., R^(k-1)(p)
  std::vector<double> return_times;
};

MapEval eval_map(const PolyField& field, const SectionPlane& plane, const Vec2& p, std::size_t k,
                 const SectionOptions& opts) {
  MapEval out;
  SectionPoint cur = make_section_point(plane, p, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    cur.time = 0.0;
    out.points.push_back(cur);
    const ReturnResult r = first_return(field, plane, cur, opts);
    out.period += r.return_time;
    out.return_times.push_back(r.return_time);
    cur = r.point;
  }
  out.image = cur.coords;
  return out;
}

// d(image)/d(chart) by central differences.
Eigen::Matrix2d fd_jacobian(const PolyField& field, const SectionPlane& plane, const Vec2& p, std::size_t k,
                            const UpoOptions& opts) {
  Eigen::Matrix2d dr;
  for (int d = 0; d < 2; ++d) {
    Vec2 plus = p, minus = p;
    plus[d] += opts.fd_step;
    minus[d] -= opts.fd_step;
    const Vec2 a = eval_map(field, plane, plus, k, opts.section).image;
    const Vec2 b = eval_map(field, plane, minus, k, opts.section).image;
    dr(0, d) = (a[0] - b[0]) / (2 * opts.fd_step);
    dr(1, d) = (a[1] - b[1]) / (2 * opts.fd_step);
  }
  return dr;
}

// d(image)/d(chart) through the variational flow, projecting each return
// along the flow onto the plane: (I - f n^T / <n, f>) Phi.
Eigen::Matrix2d tangent_jacobian(const PolyField& field, const SectionPlane& plane, const MapEval& ev,
                                 const UpoOptions& opts) {
  Eigen::Matrix<double, 3, 2> basis;
  basis << plane.u()[0], plane.v()[0], plane.u()[1], plane.v()[1], plane.u()[2], plane.v()[2];
  const Eigen::Vector3d n(plane.normal()[0], plane.normal()[1], plane.normal()[2]);
  Eigen::Matrix3d acc = Eigen::Matrix3d::Identity();
  for (std::size_t i = 0; i < ev.points.size(); ++i) {
    const auto& x = ev.points[i].state;
    const auto res = integrate_with_tangent(field, x, Eigen::MatrixXd::Identity(3, 3), 0.0, ev.return_times[i],
                                            opts.section.integration);
    const auto& xe = res.trajectory.back().x;
    const Eigen::Vector3d f = Eigen::Map<const Eigen::Vector3d>(field.evaluate(xe).data());
    const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - f * n.transpose() / n.dot(f);
    acc = proj * res.fundamental * acc;
  }
  return basis.transpose() * acc * basis;
}

double vnorm(const Vec2& v) { return std::hypot(v[0], v[1]); }

}  // namespace

MonodromyResult monodromy(const PolyField& field, std::span<const double> orbit_start, double period,
                          const UpoOptions& opts) {
  const std::size_t n = field.dimension();
  const auto ni = static_cast<Eigen::Index>(n);
  if (orbit_start.size() != n) throw DimensionError("monodromy start", n, orbit_start.size());
  if (!(period > 0.0)) throw Error("monodromy period must be positive");

  std::vector<double> y(n + n * n, 0.0);
  std::copy(orbit_start.begin(), orbit_start.end(), y.begin());
  Eigen::Map<Eigen::MatrixXd>(y.data() + n, ni, ni).setIdentity();

  Stepper stepper(tangent_rhs(field), y.size(), n, opts.monodromy);
  stepper.reset(0.0, y);

  double div_integral = 0.0;
  std::vector<double> mid(y.size());
  auto observer = [&](const StepView& s) {
    const double tm = 0.5 * (s.t0 + s.t1);
    s.interpolate(tm, mid);
    const double d0 = field.divergence(s.y0.first(n));
    const double dm = field.divergence(std::span<const double>(mid).first(n));
    const double d1 = field.divergence(s.y1.first(n));
    div_integral += (s.t1 - s.t0) / 6.0 * (d0 + 4.0 * dm + d1);
    return true;
  };

  Eigen::MatrixXd r_total = Eigen::MatrixXd::Identity(ni, ni);
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(ni, ni);
  double log_det = 0.0;
  double sign = 1.0;
  const double segment = opts.monodromy_segment > 0.0 ? opts.monodromy_segment : period;
  double t = 0.0;
  while (t < period) {
    const double t_next = std::min(period, t + segment);
    stepper.advance(t_next, observer);
    t = t_next;
    std::copy(stepper.y().begin(), stepper.y().end(), y.begin());
    Eigen::Map<Eigen::MatrixXd> v(y.data() + n, ni, ni);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    Eigen::MatrixXd qf = qr.householderQ();
    // make diag(R) positive
    for (Eigen::Index i = 0; i < ni; ++i) {
      if (r(i, i) < 0.0) {
        r.row(i) *= -1.0;
        qf.col(i) *= -1.0;
      }
      log_det += std::log(r(i, i));
    }
    sign *= qf.determinant() < 0.0 ? -1.0 : 1.0;
    r_total = r * r_total;
    q = qf;
    v = qf;
    stepper.set_state(y);
  }

  MonodromyResult out;
  out.matrix = q * r_total;
  out.determinant = sign * std::exp(log_det);
  out.liouville = std::exp(div_integral);
  Eigen::EigenSolver<Eigen::MatrixXd> es(out.matrix, false);
  for (Eigen::Index i = 0; i < ni; ++i) out.multipliers.push_back(es.eigenvalues()(i));
  std::sort(out.multipliers.begin(), out.multipliers.end(), [](const auto& a, const auto& b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    return std::arg(a) < std::arg(b);
  });
  // A strongly contracting multiplier sits below the rounding floor of the
  // matrix entries; the QR-accumulated determinant still has full relative
  // precision, so recover the smallest real multiplier from it.
  auto& smallest = out.multipliers.back();
  if (ni > 1 && smallest.imag() == 0.0 && std::abs(smallest) < 1e-6 * std::abs(out.multipliers.front())) {
    std::complex<double> others = 1.0;
    for (Eigen::Index i = 0; i + 1 < ni; ++i) others *= out.multipliers[static_cast<std::size_t>(i)];
    if (std::abs(others.imag()) <= 1e-12 * std::abs(others) && others.real() != 0.0) {
      smallest = out.determinant / others.real();
    }
  }
  return out;
}

namespace {

Stability classify(const std::vector<std::complex<double>>& mult, bool singular) {
  std::size_t near_one = 0;
  std::size_t flow = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mult.size(); ++i) {
    const double d = std::abs(mult[i] - 1.0);
    if (d < 1e-3) ++near_one;
    if (d < best) {
      best = d;
      flow = i;
    }
  }
  if (singular || near_one != 1) return Stability::NeutralDegenerate;
  for (std::size_t i = 0; i < mult.size(); ++i) {
    if (i != flow && std::abs(mult[i]) > 1.0 + 1e-6) return Stability::Unstable;
  }
  return Stability::Stable;
}

}  // namespace

PeriodicOrbit newton_shoot(const PolyField& field, const SectionPlane& plane, const RecurrenceSeed& seed,
                           const UpoOptions& opts) {
  if (field.dimension() != 3) throw DimensionError("periodic orbit search needs a 3D field", 3, field.dimension());
  if (seed.k == 0) throw Error("seed k must be positive");
  const std::size_t k = seed.k;

  Vec2 p = seed.point.coords;
  MapEval ev = eval_map(field, plane, p, k, opts.section);
  Vec2 g{ev.image[0] - p[0], ev.image[1] - p[1]};
  bool singular = false;
  int iter = 0;
  for (; vnorm(g) >= opts.residual_tol; ++iter) {
    if (iter >= opts.max_iter) {
      throw ShootingError(ShootingError::Kind::NoConvergence,
                          "no convergence in " + std::to_string(opts.max_iter) + " Newton iterations (|G| = " +
                              std::to_string(vnorm(g)) + ")");
    }
    const Eigen::Matrix2d dr =
        opts.tangent_jacobian ? tangent_jacobian(field, plane, ev, opts) : fd_jacobian(field, plane, p, k, opts);
    const Eigen::Matrix2d dg = dr - Eigen::Matrix2d::Identity();
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(dg, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector2d step;
    const Eigen::Vector2d gv(g[0], g[1]);
    if (svd.singularValues()(1) < opts.singular_tol) {
      // degenerate family: minimum-norm step in the non-singular directions
      singular = true;
      svd.setThreshold(opts.singular_tol / std::max(svd.singularValues()(0), 1e-300));
      step = -svd.solve(gv);
    } else {
      step = -dg.partialPivLu().solve(gv);
    }
    if (!step.allFinite()) throw ShootingError(ShootingError::Kind::NoConvergence, "non-finite Newton step");

    bool accepted = false;
    double lambda = 1.0;
    for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
      const Eigen::Vector2d s = lambda * step;
      if (s.norm() > opts.trust_radius) continue;
      const Vec2 trial{p[0] + s(0), p[1] + s(1)};
      try {
        MapEval tev = eval_map(field, plane, trial, k, opts.section);
        const Vec2 tg{tev.image[0] - trial[0], tev.image[1] - trial[1]};
        if (vnorm(tg) < vnorm(g)) {
          p = trial;
          ev = std::move(tev);
          g = tg;
          accepted = true;
          break;
        }
      } catch (const NoReturnError&) {
      } catch (const IntegrationError&) {
      }
    }
    if (!accepted) {
      throw ShootingError(ShootingError::Kind::LeftBasin,
                          "no acceptable step within the trust radius after " + std::to_string(opts.max_halvings) +
                              " halvings (|G| = " + std::to_string(vnorm(g)) + ")");
    }
  }

  const Vec3& x = ev.points.front().state;
  const auto fx = field.evaluate(x);
  if (std::hypot(fx[0], fx[1], fx[2]) < opts.equilibrium_tol) {
    throw ShootingError(ShootingError::Kind::Equilibrium, "converged onto an equilibrium, not a cycle");
  }

  // a k-cycle that is really a repeated shorter cycle is reported at its prime period
  for (std::size_t d = 1; d < k; ++d) {
    if (k % d != 0) continue;
    if (chart_distance(ev.points[d].coords, p) < opts.dedup_tol) {
      RecurrenceSeed shorter{make_section_point(plane, p), d, chart_distance(ev.points[d].coords, p), seed.index};
      return newton_shoot(field, plane, shorter, opts);
    }
  }

  PeriodicOrbit orbit;
  orbit.k = k;
  orbit.period = ev.period;
  orbit.orbit_points = ev.points;
  orbit.section_fixed_point = ev.points.front();
  orbit.residual = vnorm(g);
  orbit.newton_iterations = iter;
  orbit.jacobian_singular = singular;

  const MonodromyResult mono = monodromy(field, x, orbit.period, opts);
  orbit.floquet_multipliers = mono.multipliers;
  orbit.monodromy_determinant = mono.determinant;
  orbit.liouville_determinant = mono.liouville;
  orbit.stability = classify(orbit.floquet_multipliers, singular);
  return orbit;
}

bool same_orbit(const PeriodicOrbit& a, const PeriodicOrbit& b, double tol) {
  if (a.k != b.k) return false;
  for (const auto& q : b.orbit_points) {
    if (chart_distance(a.section_fixed_point.coords, q.coords) < tol) return true;
  }
  return false;
}

CensusResult census(const PolyField& field, const SectionPlane& plane, const SectionPoint& start,
                    std::size_t n_iterates, std::size_t k_max, double threshold, const UpoOptions& opts) {
  CensusResult out;
  if (n_iterates == 0) return out;
  out.seeds = scan_close_recurrences(field, plane, start, n_iterates, std::min(k_max, n_iterates), threshold,
                                     opts.section);

  const std::size_t n_seeds = out.seeds.size();
  std::vector<std::optional<PeriodicOrbit>> results(n_seeds);
  std::vector<std::string> errors(n_seeds);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n_seeds; i = next++) {
      try {
        results[i] = newton_shoot(field, plane, out.seeds[i], opts);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    }
  };
  unsigned n_threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, std::max<std::size_t>(n_seeds, 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }

  std::vector<PeriodicOrbit> converged;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    if (results[i]) {
      converged.push_back(std::move(*results[i]));
    } else {
      out.failures.push_back({i, out.seeds[i].k, errors[i]});
    }
  }
  std::stable_sort(converged.begin(), converged.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
    return std::tie(a.period, a.k, a.section_fixed_point.coords) <
           std::tie(b.period, b.k, b.section_fixed_point.coords);
  });
  for (auto& orbit : converged) {
    const bool dup = std::any_of(out.orbits.begin(), out.orbits.end(),
                                 [&](const PeriodicOrbit& o) { return same_orbit(orbit, o, opts.dedup_tol); });
    if (!dup) out.orbits.push_back(std::move(orbit));
  }
  return out;
}

SectionPoint settle_onto_section(const PolyField& field, const SectionPlane& plane, std::span<const double> x0,
                                 double transient, const SectionOptions& opts) {
  if (field.dimension() != 3) throw DimensionError("Poincare sections need a 3D field", 3, field.dimension());
  if (x0.size() != 3) throw DimensionError("section seed", 3, x0.size());
  Vec3 x{x0[0], x0[1], x0[2]};
  if (transient > 0.0) {
    Stepper stepper(field_rhs(field), 3, 3, opts.integration);
    stepper.reset(0.0, x0);
    stepper.advance(transient);
    std::copy(stepper.y().begin(), stepper.y().end(), x.begin());
  }
  SectionPoint p = next_crossing(field, plane, x, 0.0, opts).point;
  p.time = 0.0;
  return p;
}

Trajectory orbit_trajectory(const PolyField& field, const PeriodicOrbit& orbit, const IntegrationOptions& opts) {
  const auto& x = orbit.section_fixed_point.state;
  return integrate(field, x, 0.0, orbit.period, opts);
}

}  // namespace dynbound
