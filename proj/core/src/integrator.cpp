#include "dynbound/integrator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

namespace dynbound {

void IntegrationOptions::validate() const {
  if (!(step > 0.0)) throw Error("integration step must be positive");
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw Error("integration tolerances must be positive");
  if (max_steps == 0) throw Error("max_steps must be positive");
  if (!(blowup_cap > 0.0)) throw Error("blow-up cap must be positive");
}

Trajectory::Trajectory(double t0, std::size_t dim) : t0_(t0), dim_(dim) {}

void Trajectory::push(double t, std::span<const double> x, std::span<const double> dxdt) {
  if (x.size() != dim_ || dxdt.size() != dim_) throw DimensionError("trajectory sample", dim_, x.size());
  if (samples_.empty()) {
    if (t != t0_) throw Error("first trajectory sample must be at t0");
  } else if (samples_.size() == 1) {
    if (t == samples_.back().t) throw Error("trajectory samples must be strictly monotone in t");
  } else {
    const bool back = backward();
    if (back ? !(t < samples_.back().t) : !(t > samples_.back().t)) {
      throw Error("trajectory samples must be strictly monotone in t");
    }
  }
  samples_.push_back({t, {x.begin(), x.end()}, {dxdt.begin(), dxdt.end()}});
}

std::vector<double> Trajectory::state_at(double t) const {
  if (samples_.empty()) throw Error("state_at on an empty trajectory");
  if (samples_.size() == 1) {
    if (t != samples_[0].t) throw Error("state_at outside the sampled range");
    return samples_[0].x;
  }
  const bool back = backward();
  const double lo = back ? samples_.back().t : samples_.front().t;
  const double hi = back ? samples_.front().t : samples_.back().t;
  if (t < lo || t > hi) throw Error("state_at outside the sampled range");
  // index of the first sample at or past t in the integration direction
  auto it = std::lower_bound(samples_.begin(), samples_.end(), t, [back](const Sample& s, double v) {
    return back ? s.t > v : s.t < v;
  });
  if (it == samples_.begin()) return it->x;
  const Sample& b = *it;
  const Sample& a = *(it - 1);
  StepView view{a.t, b.t, a.x, a.dxdt, b.x, b.dxdt};
  std::vector<double> out(dim_);
  view.interpolate(t, out);
  return out;
}

IntegrationError::IntegrationError(Kind kind, double t, const std::string& message, Trajectory partial)
    : Error(std::string(to_string(kind)) + " at t=" + std::to_string(t) + ": " + message),
      kind_(kind),
      t_(t),
      partial_(std::move(partial)) {}

const char* to_string(IntegrationError::Kind kind) {
  switch (kind) {
    case IntegrationError::Kind::BlowUp: return "blow-up";
    case IntegrationError::Kind::StepUnderflow: return "step-size underflow";
    case IntegrationError::Kind::NonFinite: return "non-finite state";
    case IntegrationError::Kind::MaxSteps: return "max steps exceeded";
  }
  return "integration error";
}

void StepView::interpolate(double t, std::span<double> out) const {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
  }
}

double StepView::interpolate_component(double t, std::size_t i) const {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0[i] + (s3 - 2 * s2 + s) * h * f0[i] + (-2 * s3 + 3 * s2) * y1[i] +
         (s3 - s2) * h * f1[i];
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

Stepper::Stepper(OdeRhs rhs, std::size_t dim, std::size_t norm_dim, IntegrationOptions opts)
    : rhs_(std::move(rhs)),
      dim_(dim),
      norm_dim_(std::min(norm_dim, dim)),
      opts_(opts),
      y_(dim),
      f_(dim),
      y_new_(dim),
      f_new_(dim),
      k_(7 * dim),
      tmp_(dim) {
  opts_.validate();
}

void Stepper::reset(double t, std::span<const double> y) {
  if (y.size() != dim_) throw DimensionError("stepper state", dim_, y.size());
  t_ = t;
  h_ = 0.0;
  set_state(y);
}

void Stepper::set_state(std::span<const double> y) {
  if (y.size() != dim_) throw DimensionError("stepper state", dim_, y.size());
  std::copy(y.begin(), y.end(), y_.begin());
  check_state(t_);
  rhs_(y_, f_);
}

void Stepper::check_state(double t) const {
  if (!all_finite(y_)) throw IntegrationError(IntegrationError::Kind::NonFinite, t, "state is not finite");
  if (norm_of(std::span<const double>(y_).first(norm_dim_)) > opts_.blowup_cap) {
    throw IntegrationError(IntegrationError::Kind::BlowUp, t, "state norm exceeded the blow-up cap");
  }
}

void Stepper::rk4(std::span<const double> y0, std::span<const double> f0, double h,
                  std::span<double> y1) const {
  const std::size_t n = dim_;
  double* k2 = k_.data() + n;
  double* k3 = k_.data() + 2 * n;
  double* k4 = k_.data() + 3 * n;
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = y0[i] + 0.5 * h * f0[i];
  rhs_(tmp_, {k2, n});
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = y0[i] + 0.5 * h * k2[i];
  rhs_(tmp_, {k3, n});
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = y0[i] + h * k3[i];
  rhs_(tmp_, {k4, n});
  for (std::size_t i = 0; i < n; ++i) y1[i] = y0[i] + h / 6.0 * (f0[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

// Computes the 5th-order solution and its derivative into y_new/f_new from
// the current state; returns the scaled error norm.
double Stepper::try_dopri(double h, std::span<double> y_new, std::span<double> f_new) const {
  const std::size_t n = dim_;
  const double* k1 = f_.data();
  double* k2 = k_.data() + n;
  double* k3 = k_.data() + 2 * n;
  double* k4 = k_.data() + 3 * n;
  double* k5 = k_.data() + 4 * n;
  double* k6 = k_.data() + 5 * n;
  const double* y = y_.data();

  for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * a21 * k1[i];
  rhs_(tmp_, {k2, n});
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
  rhs_(tmp_, {k3, n});
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  rhs_(tmp_, {k4, n});
  for (std::size_t i = 0; i < n; ++i) {
    tmp_[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  }
  rhs_(tmp_, {k5, n});
  for (std::size_t i = 0; i < n; ++i) {
    tmp_[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
  }
  rhs_(tmp_, {k6, n});
  for (std::size_t i = 0; i < n; ++i) {
    y_new[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
  }
  rhs_(y_new, f_new);

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * f_new[i]);
    const double scale = opts_.abs_tol + opts_.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
    const double r = err / scale;
    sum += r * r;
  }
  const double norm = std::sqrt(sum / static_cast<double>(n));
  return std::isfinite(norm) ? norm : std::numeric_limits<double>::infinity();
}

void Stepper::single_step(std::span<const double> y0, std::span<const double> f0, double h,
                          std::span<double> y1) const {
  if (opts_.method == Method::Rk4Fixed) {
    rk4(y0, f0, h, y1);
    return;
  }
  const std::size_t n = dim_;
  std::vector<double> stages(6 * n);
  std::vector<double> tmp(n);
  double* k2 = stages.data();
  double* k3 = k2 + n;
  double* k4 = k3 + n;
  double* k5 = k4 + n;
  double* k6 = k5 + n;
  const double* k1 = f0.data();
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y0[i] + h * a21 * k1[i];
  rhs_(tmp, {k2, n});
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y0[i] + h * (a31 * k1[i] + a32 * k2[i]);
  rhs_(tmp, {k3, n});
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y0[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  rhs_(tmp, {k4, n});
  for (std::size_t i = 0; i < n; ++i) {
    tmp[i] = y0[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  }
  rhs_(tmp, {k5, n});
  for (std::size_t i = 0; i < n; ++i) {
    tmp[i] = y0[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
  }
  rhs_(tmp, {k6, n});
  for (std::size_t i = 0; i < n; ++i) {
    y1[i] = y0[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
  }
}

bool Stepper::advance(double t_target, const StepObserver& observer) {
  if (!std::isfinite(t_target)) throw Error("integration end time must be finite");
  if (t_target == t_) return true;
  const double dir = t_target > t_ ? 1.0 : -1.0;
  if (h_ == 0.0 || h_ * dir < 0.0) h_ = dir * opts_.step;
  const double eps = std::numeric_limits<double>::epsilon();

  std::size_t steps = 0;
  while ((t_target - t_) * dir > 0.0) {
    if (++steps > opts_.max_steps) {
      throw IntegrationError(IntegrationError::Kind::MaxSteps, t_,
                             "exceeded " + std::to_string(opts_.max_steps) + " steps");
    }
    const double remaining = t_target - t_;
    double h = h_;
    bool clipped = false;
    if (std::abs(h) >= std::abs(remaining) * (1.0 - 1e-12)) {
      h = remaining;
      clipped = true;
    }

    if (opts_.method == Method::Rk4Fixed) {
      rk4(y_, f_, h, y_new_);
      rhs_(y_new_, f_new_);
    } else {
      for (;;) {
        const double err = try_dopri(h, y_new_, f_new_);
        if (err <= 1.0) {
          const double factor = err == 0.0 ? kMaxFactor
                                           : std::clamp(kSafety * std::pow(err, -0.2), kMinFactor, kMaxFactor);
          // a clipped step says nothing about the natural step size
          if (!clipped || factor * std::abs(h) > std::abs(h_)) h_ = h * factor;
          break;
        }
        const double factor = std::isfinite(err) ? std::max(kMinFactor, kSafety * std::pow(err, -0.2)) : kMinFactor;
        h *= factor;
        h_ = h;
        clipped = false;
        if (std::abs(h) < 16.0 * eps * std::max(1.0, std::abs(t_))) {
          throw IntegrationError(IntegrationError::Kind::StepUnderflow, t_,
                                 "step size fell below the resolution of t");
        }
      }
    }

    const double t_new = clipped ? t_target : t_ + h;
    if (!clipped && std::abs(h) < 16.0 * eps * std::max(1.0, std::abs(t_))) {
      throw IntegrationError(IntegrationError::Kind::StepUnderflow, t_, "step size fell below the resolution of t");
    }
    std::swap(y_, y_new_);
    std::swap(f_, f_new_);
    const double t_old = t_;
    t_ = t_new;
    check_state(t_);
    if (observer) {
      StepView view{t_old, t_new, y_new_, f_new_, y_, f_};
      if (!observer(view)) return false;
    }
  }
  return true;
}

OdeRhs field_rhs(const PolyField& field) {
  const PolyField* f = &field;
  return [f](std::span<const double> y, std::span<double> dy) { f->evaluate_into(y, dy); };
}

OdeRhs tangent_rhs(const PolyField& field) {
  const PolyField* f = &field;
  const std::size_t n = field.dimension();
  std::vector<double> jac(n * n);
  return [f, n, jac](std::span<const double> y, std::span<double> dy) mutable {
    const auto x = y.first(n);
    f->evaluate_into(x, dy.first(n));
    f->jacobian_into(x, jac);
    const double* v = y.data() + n;
    double* dv = dy.data() + n;
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += jac[r + n * k] * v[k + n * c];
        dv[r + n * c] = s;
      }
    }
  };
}

namespace {

void check_initial(const PolyField& field, std::span<const double> x0, double t0, double t1) {
  if (x0.size() != field.dimension()) throw DimensionError("initial state", field.dimension(), x0.size());
  if (!all_finite(x0)) throw Error("initial state must be finite");
  if (!std::isfinite(t0) || !std::isfinite(t1)) throw Error("integration times must be finite");
  if (t0 == t1) throw Error("integration interval is empty (t1 == t0)");
}

}  // namespace

Trajectory integrate(const PolyField& field, std::span<const double> x0, double t0, double t1,
                     const IntegrationOptions& opts) {
  check_initial(field, x0, t0, t1);
  const std::size_t n = field.dimension();
  Stepper stepper(field_rhs(field), n, n, opts);
  Trajectory traj(t0, n);
  stepper.reset(t0, x0);
  traj.push(t0, stepper.y(), stepper.dydt());
  try {
    stepper.advance(t1, [&traj](const StepView& s) {
      traj.push(s.t1, s.y1, s.f1);
      return true;
    });
  } catch (const IntegrationError& e) {
    throw IntegrationError(e.kind(), e.time(), e.what(), std::move(traj));
  }
  return traj;
}

TangentResult integrate_with_tangent(const PolyField& field, std::span<const double> x0,
                                     const Eigen::MatrixXd& q0, double t0, double t1,
                                     const IntegrationOptions& opts) {
  check_initial(field, x0, t0, t1);
  const std::size_t n = field.dimension();
  const auto ni = static_cast<Eigen::Index>(n);
  if (q0.rows() != ni || q0.cols() != ni) throw DimensionError("tangent matrix", n, q0.rows());
  if (!q0.allFinite()) throw Error("tangent matrix must be finite");

  std::vector<double> y(n + n * n);
  std::copy(x0.begin(), x0.end(), y.begin());
  Eigen::Map<Eigen::MatrixXd>(y.data() + n, ni, ni) = q0;

  Stepper stepper(tangent_rhs(field), y.size(), n, opts);
  Trajectory traj(t0, n);
  stepper.reset(t0, y);
  traj.push(t0, stepper.y().first(n), stepper.dydt().first(n));
  try {
    stepper.advance(t1, [&traj, n](const StepView& s) {
      traj.push(s.t1, s.y1.first(n), s.f1.first(n));
      return true;
    });
  } catch (const IntegrationError& e) {
    throw IntegrationError(e.kind(), e.time(), e.what(), std::move(traj));
  }
  Eigen::MatrixXd fundamental = Eigen::Map<const Eigen::MatrixXd>(stepper.y().data() + n, ni, ni);
  return {std::move(traj), std::move(fundamental)};
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::span<const std::string> names) {
  if (names.size() != traj.dimension()) throw DimensionError("csv column names", traj.dimension(), names.size());
  out << 't';
  for (const auto& name : names) out << ',' << name;
  out << '\n';
  char buf[64];
  auto put = [&](double v) {
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    out.write(buf, res.ptr - buf);
  };
  for (const auto& s : traj.samples()) {
    put(s.t);
    for (double v : s.x) {
      out << ',';
      put(v);
    }
    out << '\n';
  }
}

}  // namespace dynbound
