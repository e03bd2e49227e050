#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace dipolab::blockade {

using cvec = std::vector<std::complex<double>>;

/// dy/dt = f(t, y), written into dydt (pre-sized).
using Rhs = std::function<void(double t, const cvec& y, cvec& dydt)>;

struct StepControl {
  double rtol = 1e-9;
  double atol = 1e-20;
  double min_step = 1e-12;  // ps
  double max_step = 0.0;    // 0: no limit
};

/// Called after every accepted step with the new time and state.
using StepObserver = std::function<void(double t, const cvec& y)>;

/// Adaptive Dormand–Prince 5(4) integrator with componentwise error control.
/// The step size carries over between calls, so a long trajectory can be
/// advanced segment by segment without restarting the controller.
class DormandPrince {
 public:
  DormandPrince(Rhs rhs, StepControl control = {});

  /// Advances y from t0 to t1 (t1 > t0), landing exactly on t1.
  /// Throws NumericalError when the step size underflows.
  void advance(cvec& y, double t0, double t1, const StepObserver& observer = {});

  /// Forgets the cached derivative. Call after changing y between calls or
  /// when the right-hand side jumps at the segment boundary.
  void invalidate() { fsal_valid_ = false; }

  long accepted_steps() const { return accepted_; }
  long rejected_steps() const { return rejected_; }

 private:
  Rhs rhs_;
  StepControl control_;
  double h_ = 0.0;
  long accepted_ = 0;
  long rejected_ = 0;
  cvec k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_;
  bool fsal_valid_ = false;
  double fsal_t_ = 0.0;
};

}  // namespace dipolab::blockade
