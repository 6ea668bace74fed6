#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dynbound/poincare.hpp"

namespace dynbound {

enum class Stability { Stable, Unstable, NeutralDegenerate };

const char* to_string(Stability s);

/// Section point i whose k-th return came back within `distance`.
struct RecurrenceSeed {
  SectionPoint point;
  std::size_t k = 1;
  double distance = 0.0;
  std::size_t index = 0;  // position in the scanned iterate sequence
};

struct MonodromyResult {
  Eigen::MatrixXd matrix;
  /// Eigenvalues of the matrix, sorted by modulus, descending.
  std::vector<std::complex<double>> multipliers;
  /// det(matrix), accumulated as the product of the QR diagonals along the orbit.
  double determinant = 0.0;
  /// exp of the integrated divergence along the orbit.
  double liouville = 0.0;
};

struct PeriodicOrbit {
  SectionPoint section_fixed_point;
  /// The k section points of the orbit, starting at the fixed point.
  std::vector<SectionPoint> orbit_points;
  std::size_t k = 1;
  double period = 0.0;
  std::vector<std::complex<double>> floquet_multipliers;
  Stability stability = Stability::Stable;
  double residual = 0.0;
  int newton_iterations = 0;
  bool jacobian_singular = false;
  double monodromy_determinant = 0.0;
  double liouville_determinant = 0.0;
};

struct UpoOptions {
  UpoOptions();

  SectionOptions section;
  /// Options for the monodromy integration.
  IntegrationOptions monodromy;
  /// Re-orthonormalize the tangent matrix at this time interval during monodromy.
  double monodromy_segment = 0.05;
  /// Finite-difference step (chart units) for the return-map Jacobian.
  double fd_step = 1e-7;
  /// Use the tangent flow (with the section saltation projection) instead of finite differences.
  bool tangent_jacobian = false;
  int max_iter = 50;
  double residual_tol = 1e-10;
  double trust_radius = 0.5;
  int max_halvings = 8;
  /// Smallest singular value of DR - I below which the shooting Jacobian
  /// counts as singular (degenerate family).
  double singular_tol = 1e-6;
  /// Two orbits coincide when section points agree to this distance (chart units).
  double dedup_tol = 1e-5;
  /// Orbits whose section point has |f| below this are equilibria, not cycles.
  double equilibrium_tol = 1e-6;
  /// Worker threads for the census; 0 picks hardware concurrency.
  unsigned threads = 0;
};

class ShootingError : public Error {
 public:
  enum class Kind { NoConvergence, LeftBasin, Equilibrium };
  ShootingError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(ShootingError::Kind kind);

/// Iterates the return map n_iterates times and reports every (i, k <= k_max)
/// with |P(i+k) - P(i)| < threshold in chart coordinates, keeping the closest
/// per (cell of size threshold, k). Sorted by (k, distance, index).
std::vector<RecurrenceSeed> scan_close_recurrences(const PolyField& field, const SectionPlane& plane,
                                                   const SectionPoint& start, std::size_t n_iterates,
                                                   std::size_t k_max, double threshold,
                                                   const SectionOptions& opts = {});
/// Same scan over an already computed iterate sequence.
std::vector<RecurrenceSeed> scan_close_recurrences(std::span<const SectionPoint> iterates, std::size_t k_max,
                                                   double threshold);

/// Newton shooting on G(p) = R^k(p) - p in the plane's chart.
PeriodicOrbit newton_shoot(const PolyField& field, const SectionPlane& plane, const RecurrenceSeed& seed,
                           const UpoOptions& opts = {});

/// Fundamental matrix of the variational flow over one period from orbit_start.
MonodromyResult monodromy(const PolyField& field, std::span<const double> orbit_start, double period,
                          const UpoOptions& opts = {});

struct SeedFailure {
  std::size_t seed_index = 0;
  std::size_t k = 0;
  std::string reason;
};

struct CensusResult {
  std::vector<PeriodicOrbit> orbits;  // distinct, sorted by period
  std::vector<RecurrenceSeed> seeds;
  std::vector<SeedFailure> failures;
};

CensusResult census(const PolyField& field, const SectionPlane& plane, const SectionPoint& start,
                    std::size_t n_iterates, std::size_t k_max, double threshold = 0.05,
                    const UpoOptions& opts = {});

/// True when the two orbits share k and a section point (up to cyclic shift).
bool same_orbit(const PeriodicOrbit& a, const PeriodicOrbit& b, double tol);

/// Integrates transient time from x0, then follows the flow to the next
/// accepted crossing of the plane.
SectionPoint settle_onto_section(const PolyField& field, const SectionPlane& plane, std::span<const double> x0,
                                 double transient, const SectionOptions& opts = {});

/// One period of the orbit sampled by the integrator, as trajectory CSV rows.
Trajectory orbit_trajectory(const PolyField& field, const PeriodicOrbit& orbit,
                            const IntegrationOptions& opts = {});

}  // namespace dynbound
