#include "dipolab/blockade/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dipolab/core/errors.hpp"

namespace dipolab::blockade {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b* (difference between the 5th and embedded 4th order weights)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

DormandPrince::DormandPrince(Rhs rhs, StepControl control)
    : rhs_(std::move(rhs)), control_(control) {}

void DormandPrince::advance(cvec& y, double t0, double t1, const StepObserver& observer) {
  if (!(t1 > t0)) return;
  const std::size_t n = y.size();
  for (cvec* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &ynew_}) v->resize(n);

  // Stage times stay strictly inside (t0, t1), so a drive that jumps at a
  // segment boundary is always sampled on this segment's side.
  const double lo = std::nextafter(t0, t1), hi = std::nextafter(t1, t0);
  auto at = [lo, hi](double s) { return std::clamp(s, lo, hi); };

  double t = t0;
  if (!fsal_valid_ || fsal_t_ != t0) rhs_(at(t), y, k1_);
  if (h_ <= 0.0) {
    // Initial guess from the derivative scale.
    double ymax = 0.0, fmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = control_.atol + control_.rtol * std::abs(y[i]);
      ymax = std::max(ymax, std::abs(y[i]) / sc);
      fmax = std::max(fmax, std::abs(k1_[i]) / sc);
    }
    h_ = (fmax > 0.0) ? 0.01 * std::max(ymax, 1e-5) / fmax : 1e-3 * (t1 - t0);
    h_ = std::clamp(h_, control_.min_step, t1 - t0);
  }

  while (t < t1) {
    double h = std::min(h_, t1 - t);
    if (control_.max_step > 0.0) h = std::min(h, control_.max_step);
    const bool last = (t + h >= t1);

    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * (a21 * k1_[i]);
    rhs_(at(t + c2 * h), tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    rhs_(at(t + c3 * h), tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i) {
      tmp_[i] = y[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
    }
    rhs_(at(t + c4 * h), tmp_, k4_);
    for (std::size_t i = 0; i < n; ++i) {
      tmp_[i] = y[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
    }
    rhs_(at(t + c5 * h), tmp_, k5_);
    for (std::size_t i = 0; i < n; ++i) {
      tmp_[i] = y[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] +
                            a65 * k5_[i]);
    }
    const double t_end = last ? t1 : t + h;
    rhs_(at(t_end), tmp_, k6_);
    for (std::size_t i = 0; i < n; ++i) {
      ynew_[i] = y[i] + h * (b1 * k1_[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] +
                             b6 * k6_[i]);
    }
    rhs_(at(t_end), ynew_, k7_);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::complex<double> e =
          h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] +
               e7 * k7_[i]);
      const double sc =
          control_.atol + control_.rtol * std::max(std::abs(y[i]), std::abs(ynew_[i]));
      err = std::max(err, std::abs(e) / sc);
    }

    if (err <= 1.0 || h <= control_.min_step) {
      if (err > 1.0) {
        std::ostringstream msg;
        msg << "Dormand-Prince step size underflow at t=" << t << " ps (h=" << h
            << ", scaled error=" << err << ")";
        throw NumericalError(msg.str());
      }
      t = t_end;
      y.swap(ynew_);
      k1_.swap(k7_);
      ++accepted_;
      if (observer) observer(t, y);
      const double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      const double grown = h * std::clamp(factor, 0.2, 5.0);
      // A step clipped by the segment end should not shrink the next one.
      h_ = last ? std::max(h_, grown) : grown;
    } else {
      ++rejected_;
      h_ = std::max(h * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9), control_.min_step);
    }
  }
  fsal_valid_ = true;
  fsal_t_ = t1;
}

}  // namespace dipolab::blockade
