#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "dpflow/errors.hpp"

namespace dpflow {

struct IntegratorOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 selects a step from the local scale of f
  double max_step = 0.0;      // 0 means unbounded
  double escape_bound = 1e6;  // sup-norm bound on chart coordinates
  std::size_t max_steps = 20'000'000;
};

struct StepDiagnostics {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double max_error_ratio = 0.0;  // largest accepted weighted local error estimate (<= 1)
};

enum class AdvanceStatus { Completed, Escaped };

/// Thrown when the step size underflows; carries the state reached.
class StepUnderflow : public NumericError {
 public:
  StepUnderflow(double t, std::vector<double> state)
      : NumericError("step size underflow (stiff or singular system)"), t_(t), state_(std::move(state)) {}
  double time() const { return t_; }
  const std::vector<double>& state() const { return state_; }

 private:
  double t_;
  std::vector<double> state_;
};

using OdeRhs = std::function<void(const std::vector<double>& x, std::vector<double>& dxdt, double t)>;
using StepObserver = std::function<void(double t, const std::vector<double>& x)>;

/// Adaptive embedded Runge-Kutta 5(4) (Dormand-Prince) integrator with a
/// standard error-per-step controller. The proposed step size survives across
/// calls to advance(), so chunked integration does not restart the controller.
class Dopri5 {
 public:
  /// `escape_dims` leading components are checked against opts.escape_bound.
  /// `atol_scale`, when non-empty, multiplies opts.atol per component.
  Dopri5(OdeRhs rhs, std::size_t n, IntegratorOptions opts, std::size_t escape_dims,
         std::vector<double> atol_scale = {});
  ~Dopri5();
  Dopri5(Dopri5&&) noexcept;
  Dopri5& operator=(Dopri5&&) noexcept;

  /// Integrates x from t to t_end (either direction).
  AdvanceStatus advance(std::vector<double>& x, double& t, double t_end,
                        const StepObserver& observer = {});

  const StepDiagnostics& diagnostics() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dpflow
