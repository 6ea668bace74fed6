#include "dynbound/poincare.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

namespace dynbound {

namespace {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(Vec3 a) {
  const double n = std::sqrt(dot(a, a));
  if (!(n > 0.0) || !std::isfinite(n)) throw Error("cannot normalize a zero or non-finite vector");
  for (double& x : a) x /= n;
  return a;
}

std::vector<double> parse_reals(std::string_view text, std::string_view what) {
  std::vector<double> out;
  while (true) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0.0;
    if (!item.empty() && item.front() == '+') item.remove_prefix(1);
    auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw Error("invalid number '" + std::string(item) + "' in " + std::string(what));
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

const char* to_string(CrossingDirection d) {
  switch (d) {
    case CrossingDirection::Positive: return "positive";
    case CrossingDirection::Negative: return "negative";
    case CrossingDirection::Both: return "both";
  }
  return "both";
}

SectionPlane::SectionPlane(const Vec3& point, const Vec3& normal, CrossingDirection direction)
    : point_(point), normal_(normalized(normal)), direction_(direction) {
  if (!std::all_of(point_.begin(), point_.end(), [](double x) { return std::isfinite(x); })) {
    throw Error("section plane point must be finite");
  }
  std::size_t axis = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (std::abs(normal_[i]) < std::abs(normal_[axis])) axis = i;
  }
  Vec3 e{0.0, 0.0, 0.0};
  e[axis] = 1.0;
  const double proj = dot(e, normal_);
  for (std::size_t i = 0; i < 3; ++i) e[i] -= proj * normal_[i];
  u_ = normalized(e);
  v_ = cross(normal_, u_);
}

SectionPlane SectionPlane::parse(std::string_view spec) {
  const auto s1 = spec.find('/');
  if (s1 == std::string_view::npos) throw Error("plane must look like px,py,pz/nx,ny,nz/dir");
  const auto s2 = spec.find('/', s1 + 1);
  const auto p = parse_reals(spec.substr(0, s1), "plane point");
  const auto n = parse_reals(spec.substr(s1 + 1, s2 == std::string_view::npos ? std::string_view::npos : s2 - s1 - 1),
                             "plane normal");
  if (p.size() != 3 || n.size() != 3) throw Error("plane point and normal need three components each");
  CrossingDirection dir = CrossingDirection::Both;
  if (s2 != std::string_view::npos) {
    const std::string_view d = spec.substr(s2 + 1);
    if (d == "positive" || d == "+" || d == "pos") {
      dir = CrossingDirection::Positive;
    } else if (d == "negative" || d == "-" || d == "neg") {
      dir = CrossingDirection::Negative;
    } else if (d == "both" || d == "+-" || d == "any") {
      dir = CrossingDirection::Both;
    } else {
      throw Error("unknown crossing direction '" + std::string(d) + "'");
    }
  }
  return SectionPlane({p[0], p[1], p[2]}, {n[0], n[1], n[2]}, dir);
}

double SectionPlane::signed_distance(std::span<const double> x) const {
  return (x[0] - point_[0]) * normal_[0] + (x[1] - point_[1]) * normal_[1] + (x[2] - point_[2]) * normal_[2];
}

Vec2 SectionPlane::to_chart(std::span<const double> x) const {
  const Vec3 d{x[0] - point_[0], x[1] - point_[1], x[2] - point_[2]};
  return {dot(d, u_), dot(d, v_)};
}

Vec3 SectionPlane::from_chart(const Vec2& c) const {
  return {point_[0] + c[0] * u_[0] + c[1] * v_[0], point_[1] + c[0] * u_[1] + c[1] * v_[1],
          point_[2] + c[0] * u_[2] + c[1] * v_[2]};
}

bool SectionPlane::accepts(double ds_dt) const {
  switch (direction_) {
    case CrossingDirection::Positive: return ds_dt > 0.0;
    case CrossingDirection::Negative: return ds_dt < 0.0;
    case CrossingDirection::Both: return ds_dt != 0.0;
  }
  return false;
}

SectionPoint make_section_point(const SectionPlane& plane, const Vec3& state, double time) {
  return {plane.to_chart(state), state, time};
}

SectionPoint make_section_point(const SectionPlane& plane, const Vec2& coords, double time) {
  return {coords, plane.from_chart(coords), time};
}

ReturnResult first_return(const PolyField& field, const SectionPlane& plane, const SectionPoint& start,
                          const SectionOptions& opts) {
  if (std::abs(plane.signed_distance(start.state)) > 1e-9) {
    throw Error("section start is not on the plane");
  }
  return next_crossing(field, plane, start.state, start.time, opts);
}

ReturnResult next_crossing(const PolyField& field, const SectionPlane& plane, const Vec3& x0, double t0,
                           const SectionOptions& opts) {
  if (field.dimension() != 3) throw DimensionError("Poincare sections need a 3D field", 3, field.dimension());
  Stepper stepper(field_rhs(field), 3, 3, opts.integration);
  stepper.reset(t0, x0);
  const double t_start = t0;
  const double t_refractory = t_start + opts.refractory;

  bool found = false;
  double t_cross = 0.0;
  Vec3 x_cross{};

  auto observer = [&](const StepView& step) {
    double ta = step.t0;
    double sa = plane.signed_distance(step.y0);
    const double tb = step.t1;
    const double sb = plane.signed_distance(step.y1);
    if (tb <= t_refractory) return true;
    if (ta < t_refractory) {
      ta = t_refractory;
      sa = plane.signed_distance(std::array<double, 3>{step.interpolate_component(ta, 0),
                                                       step.interpolate_component(ta, 1),
                                                       step.interpolate_component(ta, 2)});
    }
    const bool crosses = (sa < 0.0 && sb >= 0.0) || (sa > 0.0 && sb <= 0.0);
    if (!crosses || !plane.accepts(sb - sa)) return true;

    auto s_at = [&](double t) {
      return plane.signed_distance(std::array<double, 3>{
          step.interpolate_component(t, 0), step.interpolate_component(t, 1), step.interpolate_component(t, 2)});
    };
    // bisection on the dense output
    double lo = ta, hi = tb, s_lo = sa;
    for (int i = 0; i < 200 && std::abs(hi - lo) > opts.bracket_width; ++i) {
      const double mid = 0.5 * (lo + hi);
      const double s_mid = s_at(mid);
      if ((s_mid < 0.0) == (s_lo < 0.0) && s_mid != 0.0) {
        lo = mid;
        s_lo = s_mid;
      } else {
        hi = mid;
      }
    }
    // Newton polish on s(t), re-stepping from the start of the step.
    double t = 0.5 * (lo + hi);
    std::array<double, 3> x{};
    std::array<double, 3> fx{};
    for (int i = 0; i < 20; ++i) {
      if (t == step.t0) {
        std::copy(step.y0.begin(), step.y0.end(), x.begin());
      } else {
        stepper.single_step(step.y0, step.f0, t - step.t0, x);
      }
      const double s = plane.signed_distance(x);
      if (std::abs(s) < opts.distance_tol) break;
      field.evaluate_into(x, fx);
      const double ds = fx[0] * plane.normal()[0] + fx[1] * plane.normal()[1] + fx[2] * plane.normal()[2];
      if (ds == 0.0) break;
      t -= s / ds;
    }
    t_cross = t;
    x_cross = x;
    found = true;
    return false;
  };

  stepper.advance(t_start + opts.max_time, observer);
  if (!found) {
    throw NoReturnError("no return to the section within max time " + std::to_string(opts.max_time));
  }
  if (std::abs(plane.signed_distance(x_cross)) > 1e-9) {
    throw Error("crossing refinement did not converge onto the plane");
  }
  return {make_section_point(plane, x_cross, t_cross), t_cross - t_start};
}

std::vector<SectionPoint> return_map_iterates(const PolyField& field, const SectionPlane& plane,
                                              const SectionPoint& start, std::size_t k,
                                              const SectionOptions& opts) {
  std::vector<SectionPoint> out;
  out.reserve(k);
  SectionPoint current = start;
  for (std::size_t i = 0; i < k; ++i) {
    try {
      current = first_return(field, plane, current, opts).point;
    } catch (const NoReturnError& e) {
      throw NoReturnError("iterate " + std::to_string(i + 1) + ": " + e.what(), i + 1);
    } catch (const IntegrationError& e) {
      throw IntegrationError(e.kind(), e.time(), "iterate " + std::to_string(i + 1) + ": " + e.what());
    }
    out.push_back(current);
  }
  return out;
}

void write_section_csv(std::ostream& out, std::span<const SectionPoint> points) {
  out << "iterate,u,v,t\n";
  char buf[64];
  auto put = [&](double v) {
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    out.write(buf, res.ptr - buf);
  };
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << i + 1 << ',';
    put(points[i].coords[0]);
    out << ',';
    put(points[i].coords[1]);
    out << ',';
    put(points[i].time);
    out << '\n';
  }
}

}  // namespace dynbound
