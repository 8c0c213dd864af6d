#include "dpflow/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>

namespace dpflow {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

struct Dopri5::Impl {
  OdeRhs rhs;
  std::size_t n;
  IntegratorOptions opts;
  std::size_t escape_dims;
  std::vector<double> atol;
  odeint::runge_kutta_dopri5<State> stepper;
  StepDiagnostics diag;
  double proposed = 0.0;  // magnitude of the next step, 0 before the first one
  State dxdt, dxdt_new, x_new, err;

  double error_ratio(const State& x0, const State& x1) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = atol[i] + opts.rtol * std::max(std::abs(x0[i]), std::abs(x1[i]));
      const double r = err[i] / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(n));
  }

  double initial_step(const State& x, const State& f) const {
    if (opts.initial_step > 0.0) return opts.initial_step;
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = atol[i] + opts.rtol * std::abs(x[i]);
      d0 += (x[i] / sc) * (x[i] / sc);
      d1 += (f[i] / sc) * (f[i] / sc);
    }
    d0 = std::sqrt(d0 / n);
    d1 = std::sqrt(d1 / n);
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    return std::clamp(h, 1e-10, 0.1);
  }

  bool escaped(const State& x) const {
    for (std::size_t i = 0; i < escape_dims; ++i) {
      if (!std::isfinite(x[i]) || std::abs(x[i]) > opts.escape_bound) return true;
    }
    return false;
  }
};

Dopri5::Dopri5(OdeRhs rhs, std::size_t n, IntegratorOptions opts, std::size_t escape_dims,
               std::vector<double> atol_scale)
    : impl_(std::make_unique<Impl>()) {
  if (!(opts.rtol > 0.0) || !(opts.atol > 0.0)) throw ArgumentError("integrator tolerances must be > 0");
  impl_->rhs = std::move(rhs);
  impl_->n = n;
  impl_->opts = opts;
  impl_->escape_dims = std::min(escape_dims, n);
  impl_->atol.assign(n, opts.atol);
  if (!atol_scale.empty()) {
    if (atol_scale.size() != n) throw ArgumentError("atol scale has the wrong length");
    for (std::size_t i = 0; i < n; ++i) impl_->atol[i] = opts.atol * atol_scale[i];
  }
  impl_->dxdt.resize(n);
  impl_->dxdt_new.resize(n);
  impl_->x_new.resize(n);
  impl_->err.resize(n);
}

Dopri5::~Dopri5() = default;
Dopri5::Dopri5(Dopri5&&) noexcept = default;
Dopri5& Dopri5::operator=(Dopri5&&) noexcept = default;

const StepDiagnostics& Dopri5::diagnostics() const { return impl_->diag; }

AdvanceStatus Dopri5::advance(State& x, double& t, double t_end, const StepObserver& observer) {
  auto& s = *impl_;
  if (x.size() != s.n) throw ArgumentError("integrator state has the wrong length");
  if (s.escaped(x)) return AdvanceStatus::Escaped;
  if (t == t_end) return AdvanceStatus::Completed;
  const double dir = t_end > t ? 1.0 : -1.0;
  auto sys = [&s](const State& xs, State& dx, double ts) { s.rhs(xs, dx, ts); };

  s.rhs(x, s.dxdt, t);
  if (s.proposed <= 0.0) s.proposed = s.initial_step(x, s.dxdt);
  if (s.opts.max_step > 0.0) s.proposed = std::min(s.proposed, s.opts.max_step);

  std::size_t steps = 0;
  while (dir * (t_end - t) > 0.0) {
    if (++steps > s.opts.max_steps) throw NumericError("integrator exceeded max_steps");
    const double remaining = std::abs(t_end - t);
    const bool last = s.proposed >= remaining;
    const double h = last ? remaining : s.proposed;
    const double floor = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (h < floor && !last) throw StepUnderflow(t, x);

    s.stepper.do_step(sys, x, s.dxdt, t, s.x_new, s.dxdt_new, dir * h, s.err);
    double ratio = s.error_ratio(x, s.x_new);
    if (!std::isfinite(ratio)) ratio = 1e10;

    if (ratio <= 1.0) {
      t = last ? t_end : t + dir * h;
      x.swap(s.x_new);
      s.dxdt.swap(s.dxdt_new);
      ++s.diag.accepted;
      s.diag.max_error_ratio = std::max(s.diag.max_error_ratio, ratio);
      const double grow = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
      // A step clipped to land on t_end says nothing about the natural step size.
      if (!last || h >= s.proposed) s.proposed = h * grow;
      if (s.opts.max_step > 0.0) s.proposed = std::min(s.proposed, s.opts.max_step);
      if (observer) observer(t, x);
      if (s.escaped(x)) return AdvanceStatus::Escaped;
    } else {
      ++s.diag.rejected;
      s.proposed = h * std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 1.0);
      if (s.proposed < floor) throw StepUnderflow(t, x);
    }
  }
  return AdvanceStatus::Completed;
}

}  // namespace dpflow
