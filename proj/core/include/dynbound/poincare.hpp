#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dynbound/integrator.hpp"
#include "dynbound/polyfield.hpp"

namespace dynbound {

using Vec3 = std::array<double, 3>;
using Vec2 = std::array<double, 2>;

enum class CrossingDirection { Positive, Negative, Both };

/// Oriented affine plane in R^3. Crossings count when the signed distance
/// <x - point, normal> changes sign in the requested direction.
class SectionPlane {
 public:
  SectionPlane(const Vec3& point, const Vec3& normal, CrossingDirection direction = CrossingDirection::Both);

  /// Parses "px,py,pz/nx,ny,nz/dir" with dir one of positive|negative|both (or +,-,+-).
  static SectionPlane parse(std::string_view spec);

  const Vec3& point() const noexcept { return point_; }
  const Vec3& normal() const noexcept { return normal_; }
  CrossingDirection direction() const noexcept { return direction_; }
  /// Orthonormal in-plane basis (u, v); u comes from Gram-Schmidt of the
  /// coordinate axis least aligned with the normal, v = normal x u.
  const Vec3& u() const noexcept { return u_; }
  const Vec3& v() const noexcept { return v_; }

  double signed_distance(std::span<const double> x) const;
  Vec2 to_chart(std::span<const double> x) const;
  Vec3 from_chart(const Vec2& c) const;
  /// Whether a crossing with the given sign of ds/dt counts.
  bool accepts(double ds_dt) const;

 private:
  Vec3 point_;
  Vec3 normal_;
  CrossingDirection direction_;
  Vec3 u_;
  Vec3 v_;
};

const char* to_string(CrossingDirection d);

struct SectionPoint {
  Vec2 coords;
  Vec3 state;
  double time = 0.0;
};

/// Makes a section point from a state on (or projected onto) the plane.
SectionPoint make_section_point(const SectionPlane& plane, const Vec3& state, double time = 0.0);
SectionPoint make_section_point(const SectionPlane& plane, const Vec2& coords, double time = 0.0);

struct SectionOptions {
  IntegrationOptions integration;
  /// Integration time after which a start is declared non-returning.
  double max_time = 200.0;
  /// Crossings within this time of departure are ignored.
  double refractory = 1e-6;
  /// Bracket width (time) for bisection on the dense output.
  double bracket_width = 1e-12;
  /// Required |signed distance| of a refined crossing.
  double distance_tol = 1e-10;
};

struct ReturnResult {
  SectionPoint point;
  double return_time = 0.0;
};

/// Raised when no crossing occurs within SectionOptions::max_time.
class NoReturnError : public Error {
 public:
  NoReturnError(const std::string& message, std::size_t iterate = 0)
      : Error(message), iterate_(iterate) {}
  std::size_t iterate() const noexcept { return iterate_; }

 private:
  std::size_t iterate_;
};

/// First crossing of the plane after leaving `start` (in the plane's direction).
/// The crossing is bracketed on the Hermite dense output and polished by
/// Newton on s(t) with s'(t) = <f(x), normal>, re-stepping from the start of
/// the bracketing step.
ReturnResult first_return(const PolyField& field, const SectionPlane& plane, const SectionPoint& start,
                          const SectionOptions& opts = {});

/// First accepted crossing of the flow from an arbitrary state (no on-plane
/// requirement), after the refractory time.
ReturnResult next_crossing(const PolyField& field, const SectionPlane& plane, const Vec3& x0, double t0,
                           const SectionOptions& opts = {});

/// k successive first returns. Errors carry the index of the failing iterate.
std::vector<SectionPoint> return_map_iterates(const PolyField& field, const SectionPlane& plane,
                                              const SectionPoint& start, std::size_t k,
                                              const SectionOptions& opts = {});

/// `iterate,u,v,t` rows, 17 significant digits.
void write_section_csv(std::ostream& out, std::span<const SectionPoint> points);

}  // namespace dynbound
