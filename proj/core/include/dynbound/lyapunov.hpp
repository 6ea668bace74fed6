#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dynbound/integrator.hpp"

namespace dynbound {

struct ConvergencePoint {
  double time = 0.0;  // elapsed time after the transient
  std::vector<double> exponents;
};

struct LyapunovResult {
  /// Sorted descending, units 1/time.
  std::vector<double> exponents;
  double transient_skipped = 0.0;
  double total_time = 0.0;
  double renorm_interval = 0.0;
  std::size_t renormalizations = 0;
  /// Time average of the divergence (trace J) along the measured trajectory.
  double mean_divergence = 0.0;
  std::vector<ConvergencePoint> convergence_history;

  double sum() const;
};

/// Tangent collapse: a QR diagonal vanished, renorm_interval is too long.
class DegenerateTangentError : public Error {
 public:
  using Error::Error;
};

/// In-place modified Gram-Schmidt: on return `v` holds Q and `r` the upper
/// triangular factor with non-negative diagonal.
void modified_gram_schmidt(Eigen::Ref<Eigen::MatrixXd> v, Eigen::Ref<Eigen::MatrixXd> r);

/// Benettin spectrum: skip the transient, then co-integrate n tangent vectors,
/// re-orthonormalizing every renorm_interval and averaging log diag(R).
/// History is recorded every `history_every` renormalizations.
LyapunovResult lyapunov_spectrum(const PolyField& field, std::span<const double> x0, double transient,
                                 double total_time, double renorm_interval, const IntegrationOptions& opts = {},
                                 std::size_t history_every = 100);

/// `time,l1,...,ln` rows.
void write_convergence_csv(std::ostream& out, const LyapunovResult& result);

}  // namespace dynbound
