#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynbound/integrator.hpp"
#include "dynbound/polyfield.hpp"

namespace dynbound {

/// Lower bound f_j(x) >= alpha for all x. The component index is 1-based.
struct BoundCertificate {
  enum class Source { Certified, UserAsserted };

  std::size_t component = 1;
  double alpha = 0.0;
  Source source = Source::Certified;
};

const char* to_string(BoundCertificate::Source source);

/// Certifies component j (1-based) of the field, if the even-power rule applies.
std::optional<BoundCertificate> certify_component(const PolyField& field, std::size_t j);
/// Every certifiable component, in index order.
std::vector<BoundCertificate> certify_all(const PolyField& field);

/// alpha * (t - t0) + xj0
inline double bound_line(double alpha, double t0, double xj0, double t) { return alpha * (t - t0) + xj0; }

/// Outcome of checking x_j(t) against the bound line on a sampled orbit.
///
/// For t >= t0 the flow must satisfy x_j(t) >= alpha (t - t0) + x_j(t0).
/// For t < t0 integration of f_j >= alpha from t to t0 gives the reversed
/// inequality x_j(t) <= alpha (t - t0) + x_j(t0); the forward inequality need
/// not hold there, and `naive_backward_violated` records when it fails.
struct BoundReport {
  std::size_t component = 1;
  double alpha = 0.0;
  double t0 = 0.0;
  double xj0 = 0.0;
  double tolerance = 0.0;
  bool forward_holds = true;
  /// min over t >= t0 of x_j(t) - line(t); absent when no forward samples.
  std::optional<double> forward_margin;
  bool backward_holds = true;
  /// min over t < t0 of line(t) - x_j(t); absent when no backward samples.
  std::optional<double> backward_margin;
  bool naive_backward_violated = false;
  /// min over t < t0 of x_j(t) - line(t), i.e. the forward inequality applied backward.
  std::optional<double> naive_backward_margin;
  std::size_t samples_checked = 0;
  /// Set by verify_orbit_bounds when an integration leg escaped before its horizon.
  bool forward_escaped = false;
  bool backward_escaped = false;
  double forward_reached = 0.0;
  double backward_reached = 0.0;
};

/// Checks every sample plus the dense-output midpoint of every step. The
/// trajectory may run forward or backward from its t0.
BoundReport verify_bounds(const Trajectory& traj, const BoundCertificate& cert, double tol);
/// Same, merging a forward and a backward run that share (t0, x0).
BoundReport verify_bounds(const Trajectory& forward, const Trajectory& backward,
                          const BoundCertificate& cert, double tol);

/// User tolerance plus ten times the integrator tolerance.
double compose_tolerance(double user_tol, const IntegrationOptions& opts);

/// Integrates x0 forward by t_fwd and backward by t_back from t0 and checks
/// both inequalities. A leg that escapes is checked up to the escape time.
BoundReport verify_orbit_bounds(const PolyField& field, const BoundCertificate& cert,
                                std::span<const double> x0, double t0, double t_back, double t_fwd,
                                double user_tol = 1e-6, const IntegrationOptions& opts = {});

struct EquilibriumWitness {
  std::vector<double> point;
  /// max |f_i(point)|, evaluated on the polynomial itself
  double residual = 0.0;
  int newton_iterations = 0;
};

/// Newton on f(x) = 0 from the seed; accepted only when the symbolic residual is below `accept`.
std::optional<EquilibriumWitness> find_equilibrium(const PolyField& field, std::span<const double> seed,
                                                   double accept = 1e-12, int max_iter = 100);

struct ClosedOrbitWitness {
  double period = 0.0;
  /// max |x(period) - seed| at the polished return
  double closure = 0.0;
};

/// Follows the seed forward for up to max_time and reports the first return
/// to the hyperplane through the seed normal to f(seed) that lands within
/// closure_tol * max(1, |seed|_inf) of the seed.
std::optional<ClosedOrbitWitness> find_closed_orbit(const PolyField& field, std::span<const double> seed,
                                                    double max_time, const IntegrationOptions& opts = {},
                                                    double closure_tol = 1e-6);

/// Orbit of a seed known to close with the given period, from t = 0 to t1 in
/// either direction: one period is integrated and repeated. Long runs along
/// cycles that repel in the chosen direction stay on the cycle this way.
Trajectory periodic_continuation(const PolyField& field, std::span<const double> x0, double period, double t1,
                                 const IntegrationOptions& opts = {});

struct RefutationReport {
  enum class Verdict { Falsified, NoCounterexample };

  Verdict verdict = Verdict::NoCounterexample;
  BoundCertificate certificate;
  std::vector<double> seed;
  double horizon = 0.0;
  std::optional<EquilibriumWitness> equilibrium;
  std::optional<ClosedOrbitWitness> closed_orbit;
  bool bounded = false;
  bool escaped = false;
  /// Time the backward run reached (-horizon unless it escaped).
  double reached_time = 0.0;
  /// Max state norm over the backward run.
  double witnessed_bound = 0.0;
  /// Max norm over the later half of the backward run divided by the max over the earlier half.
  double growth_ratio = 1.0;
  std::optional<BoundReport> bounds;
  std::string reason;

  std::string verdict_text() const;
};

/// Looks for an orbit bounded in backward time under the lower-bounded-component
/// hypothesis. An exact equilibrium is tried first, then a closed orbit through
/// the seed (whose backward run is its periodic continuation, since closed
/// orbits that repel in backward time cannot be followed directly for long).
/// Otherwise the seed is integrated to -horizon and judged bounded when it
/// neither escapes nor shows a growth trend.
RefutationReport refute_nonexistence(const PolyField& field, const BoundCertificate& cert,
                                     std::span<const double> x0, double horizon,
                                     const IntegrationOptions& opts = {});

}  // namespace dynbound
