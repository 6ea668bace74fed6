#include "dynbound/lyapunov.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <vector>

namespace dynbound {

double LyapunovResult::sum() const { return std::accumulate(exponents.begin(), exponents.end(), 0.0); }

void modified_gram_schmidt(Eigen::Ref<Eigen::MatrixXd> v, Eigen::Ref<Eigen::MatrixXd> r) {
  // A column counts as collapsed when it has shrunk into the lower half of the
  // exponent range, or when subtracting projections left fewer than about four
  // significant digits of it.
  constexpr double kTiny = 1e-150;
  constexpr double kCancellation = 1e-12;
  const Eigen::Index n = v.cols();
  r.setZero();
  std::vector<double> before(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) before[static_cast<std::size_t>(j)] = v.col(j).norm();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double norm = v.col(j).norm();
    r(j, j) = norm;
    if (!std::isfinite(norm) || !(norm > kTiny) || !(norm > kCancellation * before[static_cast<std::size_t>(j)])) {
      throw DegenerateTangentError("tangent vectors collapsed during re-orthonormalization");
    }
    v.col(j) /= norm;
    for (Eigen::Index k = j + 1; k < n; ++k) {
      const double proj = v.col(j).dot(v.col(k));
      r(j, k) = proj;
      v.col(k) -= proj * v.col(j);
    }
  }
}

LyapunovResult lyapunov_spectrum(const PolyField& field, std::span<const double> x0, double transient,
                                 double total_time, double renorm_interval, const IntegrationOptions& opts,
                                 std::size_t history_every) {
  const std::size_t n = field.dimension();
  const auto ni = static_cast<Eigen::Index>(n);
  if (x0.size() != n) throw DimensionError("Lyapunov seed", n, x0.size());
  if (!(renorm_interval > 0.0)) throw Error("renormalization interval must be positive");
  if (!(total_time > renorm_interval)) throw Error("total time must exceed the renormalization interval");
  if (!(transient >= 0.0)) throw Error("transient must be non-negative");

  std::vector<double> y(n + n * n, 0.0);
  std::copy(x0.begin(), x0.end(), y.begin());
  if (transient > 0.0) {
    Stepper warm(field_rhs(field), n, n, opts);
    warm.reset(0.0, x0);
    warm.advance(transient);
    std::copy(warm.y().begin(), warm.y().end(), y.begin());
  }
  Eigen::Map<Eigen::MatrixXd>(y.data() + n, ni, ni).setIdentity();

  Stepper stepper(tangent_rhs(field), y.size(), n, opts);
  stepper.reset(0.0, y);

  double div_integral = 0.0;
  std::vector<double> mid(y.size());
  auto observer = [&](const StepView& s) {
    const double tm = 0.5 * (s.t0 + s.t1);
    s.interpolate(tm, mid);
    div_integral += (s.t1 - s.t0) / 6.0 *
                    (field.divergence(s.y0.first(n)) + 4.0 * field.divergence(std::span<const double>(mid).first(n)) +
                     field.divergence(s.y1.first(n)));
    return true;
  };

  LyapunovResult out;
  out.transient_skipped = transient;
  out.renorm_interval = renorm_interval;
  const auto segments = static_cast<std::size_t>(std::llround(total_time / renorm_interval));
  std::vector<double> log_sums(n, 0.0);
  Eigen::MatrixXd r(ni, ni);
  double t = 0.0;
  for (std::size_t seg = 1; seg <= segments; ++seg) {
    const double t_next = static_cast<double>(seg) * renorm_interval;
    stepper.advance(t_next, observer);
    t = t_next;
    std::copy(stepper.y().begin(), stepper.y().end(), y.begin());
    Eigen::Map<Eigen::MatrixXd> v(y.data() + n, ni, ni);
    modified_gram_schmidt(v, r);
    for (std::size_t i = 0; i < n; ++i) log_sums[i] += std::log(r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    stepper.set_state(y);
    ++out.renormalizations;
    if (history_every > 0 && seg % history_every == 0) {
      ConvergencePoint cp{t, {}};
      for (double s : log_sums) cp.exponents.push_back(s / t);
      out.convergence_history.push_back(std::move(cp));
    }
  }
  out.total_time = t;
  for (double s : log_sums) out.exponents.push_back(s / t);
  std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
  out.mean_divergence = div_integral / t;
  return out;
}

void write_convergence_csv(std::ostream& out, const LyapunovResult& result) {
  out << "time";
  for (std::size_t i = 0; i < result.exponents.size(); ++i) out << ",l" << i + 1;
  out << '\n';
  char buf[64];
  auto put = [&](double v) {
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    out.write(buf, res.ptr - buf);
  };
  for (const auto& cp : result.convergence_history) {
    put(cp.time);
    for (double e : cp.exponents) {
      out << ',';
      put(e);
    }
    out << '\n';
  }
}

}  // namespace dynbound
