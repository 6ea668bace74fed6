#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dynbound/errors.hpp"
#include "dynbound/polyfield.hpp"

namespace dynbound {

enum class Method { Rk4Fixed, Rk45Adaptive };

struct IntegrationOptions {
  Method method = Method::Rk45Adaptive;
  /// Fixed step for RK4, initial step for Dormand-Prince. Always positive;
  /// the sign is taken from the integration direction.
  double step = 1e-3;
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  /// Accepted-step budget for a single advance.
  std::size_t max_steps = 5'000'000;
  /// Euclidean norm of the state above which the run counts as escaped.
  double blowup_cap = 1e12;

  void validate() const;
};

struct Sample {
  double t;
  std::vector<double> x;
  std::vector<double> dxdt;
};

/// Time-stamped states from t0, strictly monotone in t. Dense output between
/// samples is cubic Hermite.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(double t0, std::size_t dim);

  double t0() const noexcept { return t0_; }
  std::size_t dimension() const noexcept { return dim_; }
  bool empty() const noexcept { return samples_.empty(); }
  std::size_t size() const noexcept { return samples_.size(); }
  bool backward() const noexcept { return samples_.size() > 1 && samples_[1].t < samples_[0].t; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const Sample& front() const { return samples_.front(); }
  const Sample& back() const { return samples_.back(); }

  void push(double t, std::span<const double> x, std::span<const double> dxdt);

  /// Hermite interpolation at any t within the sampled range.
  std::vector<double> state_at(double t) const;

 private:
  double t0_ = 0.0;
  std::size_t dim_ = 0;
  std::vector<Sample> samples_;
};

/// Raised when an integration cannot reach its end time. Carries whatever was
/// integrated before the failure.
class IntegrationError : public Error {
 public:
  enum class Kind { BlowUp, StepUnderflow, NonFinite, MaxSteps };

  IntegrationError(Kind kind, double t, const std::string& message, Trajectory partial = {});

  Kind kind() const noexcept { return kind_; }
  double time() const noexcept { return t_; }
  const Trajectory& partial() const noexcept { return partial_; }
  /// BlowUp, StepUnderflow and NonFinite all indicate the orbit left every
  /// bounded region (finite-time escape).
  bool escaped() const noexcept { return kind_ != Kind::MaxSteps; }

 private:
  Kind kind_;
  double t_;
  Trajectory partial_;
};

const char* to_string(IntegrationError::Kind kind);

/// Right-hand side of an autonomous ODE on a flat state vector.
using OdeRhs = std::function<void(std::span<const double> y, std::span<double> dydt)>;

/// One accepted step, with cubic Hermite dense output between its ends.
struct StepView {
  double t0;
  double t1;
  std::span<const double> y0;
  std::span<const double> f0;
  std::span<const double> y1;
  std::span<const double> f1;

  void interpolate(double t, std::span<double> out) const;
  double interpolate_component(double t, std::size_t i) const;
};

/// Returns false to stop the integration after the current step.
using StepObserver = std::function<bool(const StepView&)>;

/// Explicit Runge-Kutta stepper that keeps its step size across calls to
/// advance(), so a long run can be cut into segments without restarting.
class Stepper {
 public:
  /// Only the first `norm_dim` components enter the blow-up check (the rest
  /// are, e.g., tangent vectors).
  Stepper(OdeRhs rhs, std::size_t dim, std::size_t norm_dim, IntegrationOptions opts);

  void reset(double t, std::span<const double> y);

  /// Integrates to t_target (either direction). Returns true when t_target is
  /// reached, false when the observer asked to stop.
  bool advance(double t_target, const StepObserver& observer = {});

  /// Single uncontrolled step of size h from (y0, f0), using the active method.
  void single_step(std::span<const double> y0, std::span<const double> f0, double h,
                   std::span<double> y1) const;

  double t() const noexcept { return t_; }
  std::span<const double> y() const noexcept { return y_; }
  std::span<const double> dydt() const noexcept { return f_; }
  std::size_t dimension() const noexcept { return dim_; }
  const IntegrationOptions& options() const noexcept { return opts_; }
  void set_state(std::span<const double> y);

 private:
  double try_dopri(double h, std::span<double> y_new, std::span<double> f_new) const;
  void rk4(std::span<const double> y0, std::span<const double> f0, double h, std::span<double> y1) const;
  void check_state(double t) const;

  OdeRhs rhs_;
  std::size_t dim_;
  std::size_t norm_dim_;
  IntegrationOptions opts_;
  double t_ = 0.0;
  double h_ = 0.0;
  std::vector<double> y_, f_, y_new_, f_new_;
  mutable std::vector<double> k_;  // stage buffers, 7 * dim
  mutable std::vector<double> tmp_;
};

/// RHS of f itself.
OdeRhs field_rhs(const PolyField& field);
/// RHS of the augmented system (x, V) with dV/dt = J(x) V; V is column-major n*n.
OdeRhs tangent_rhs(const PolyField& field);

/// Integrates the field from (t0, x0) to t1; t1 < t0 integrates backward by
/// stepping with negative time increments.
Trajectory integrate(const PolyField& field, std::span<const double> x0, double t0, double t1,
                     const IntegrationOptions& opts = {});

struct TangentResult {
  Trajectory trajectory;
  Eigen::MatrixXd fundamental;  // Phi(t1) Q0
};

/// Co-integrates the state with the variational flow dV/dt = J(x(t)) V from V(t0) = Q0.
TangentResult integrate_with_tangent(const PolyField& field, std::span<const double> x0,
                                     const Eigen::MatrixXd& q0, double t0, double t1,
                                     const IntegrationOptions& opts = {});

/// CSV with header `t,<var1>,...,<varn>`, 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          std::span<const std::string> names);

}  // namespace dynbound
