#include "dipolab/blockade/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "dipolab/core/constants.hpp"
#include "dipolab/core/errors.hpp"
#include "dipolab/core/parallel.hpp"

namespace dipolab::blockade {

std::string_view pulse_kind_name(PulseKind kind) {
  return kind == PulseKind::gaussian ? "gaussian" : "flat_top";
}

PulseKind pulse_kind_from_name(std::string_view name) {
  if (name == "gaussian") return PulseKind::gaussian;
  if (name == "flat_top") return PulseKind::flat_top;
  throw DomainError("unknown pulse kind '" + std::string(name) + "'");
}

double PulseShape::envelope(double t) const {
  switch (kind) {
    case PulseKind::gaussian:
      return std::exp(-2.0 * std::numbers::ln2 * t * t / (fwhm_tau_p * fwhm_tau_p));
    case PulseKind::flat_top:
      return std::abs(t) <= 0.5 * fwhm_tau_p ? 1.0 : 0.0;
  }
  return 0.0;
}

std::vector<double> PulseShape::breakpoints() const {
  if (kind == PulseKind::flat_top) return {-0.5 * fwhm_tau_p, 0.5 * fwhm_tau_p};
  return {};
}

void PulseShape::validate() const {
  if (!(fwhm_tau_p > 0.0)) throw DomainError("pulse: fwhm_tau_p must be > 0");
  if (!(window_T >= 4.0 * fwhm_tau_p)) {
    throw DomainError("pulse: window_T must be at least 4 fwhm_tau_p");
  }
  if (!std::isfinite(amplitude_F0) || amplitude_F0 < 0.0) {
    throw DomainError("pulse: amplitude_F0 must be finite and >= 0");
  }
}

BlockadeParams BlockadeParams::gaussian(double Delta, double U_dd, double gamma_p,
                                        double window_in_tau) {
  BlockadeParams p;
  p.detuning_Delta = Delta;
  p.U_dd = U_dd;
  p.gamma_p = gamma_p;
  p.drive.kind = PulseKind::gaussian;
  p.drive.fwhm_tau_p = gamma_p > 0.0 ? kHbar / gamma_p : 0.0;
  p.drive.window_T = window_in_tau * p.drive.fwhm_tau_p;
  return p;
}

BlockadeParams BlockadeParams::flat_top(double Delta, double U_dd, double gamma_p,
                                        double length_in_tau, double peak_occupation) {
  BlockadeParams p;
  p.detuning_Delta = Delta;
  p.U_dd = U_dd;
  p.gamma_p = gamma_p;
  p.drive.kind = PulseKind::flat_top;
  p.drive.fwhm_tau_p = gamma_p > 0.0 ? length_in_tau * kHbar / gamma_p : 0.0;
  p.drive.window_T = 4.0 * p.drive.fwhm_tau_p;
  p.target_peak_occupation = peak_occupation;
  return p;
}

void BlockadeParams::validate() const {
  if (!(gamma_p > 0.0)) throw DomainError("blockade: gamma_p must be > 0");
  if (fock_cutoff < 4) throw DomainError("blockade: fock_cutoff must be >= 4");
  if (max_fock_cutoff < fock_cutoff) {
    throw DomainError("blockade: max_fock_cutoff must be >= fock_cutoff");
  }
  if (!std::isfinite(detuning_Delta) || !std::isfinite(U_dd)) {
    throw DomainError("blockade: detuning and U_dd must be finite");
  }
  if (coarse_points < 3) throw DomainError("blockade: coarse_points must be >= 3");
  if (auto_scale_drive && !(target_peak_occupation > 0.0)) {
    throw DomainError("blockade: target_peak_occupation must be > 0");
  }
  drive.validate();
}

namespace {

/// Lindblad right-hand side on a row-major d x d matrix. Also used for the
/// non-trace-one jumped matrices of the regression step, since it is linear.
struct Liouvillian {
  int d = 0;
  double rate = 0.0;  // gamma / hbar, 1/ps
  std::vector<double> h;   // diagonal of H/hbar, 1/ps
  std::vector<double> sq;  // sqrt(k), k = 0..d
  const PulseShape* pulse = nullptr;

  Liouvillian(const BlockadeParams& p, int cutoff) : d(cutoff + 1), pulse(&p.drive) {
    rate = p.gamma_p / kHbar;
    const double dp = p.E_p_minus_EL() / kHbar;
    const double u = p.U_dd / kHbar;
    h.resize(d);
    sq.resize(d + 1);
    for (int k = 0; k < d; ++k) h[k] = dp * k + 0.5 * u * k * (k - 1);
    for (int k = 0; k <= d; ++k) sq[k] = std::sqrt(static_cast<double>(k));
  }

  void operator()(double t, const cvec& x, cvec& out) const {
    using C = std::complex<double>;
    const double F = pulse->value(t);
    const C minus_i(0.0, -1.0);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const C xij = x[i * d + j];
        C comm = (h[i] - h[j]) * xij;
        if (F != 0.0) {
          C drive = 0.0;
          if (i > 0) drive += sq[i] * x[(i - 1) * d + j];
          if (i + 1 < d) drive += sq[i + 1] * x[(i + 1) * d + j];
          if (j > 0) drive -= sq[j] * x[i * d + j - 1];
          if (j + 1 < d) drive -= sq[j + 1] * x[i * d + j + 1];
          comm += F * drive;
        }
        C dis = -0.5 * (i + j) * xij;
        if (i + 1 < d && j + 1 < d) dis += sq[i + 1] * sq[j + 1] * x[(i + 1) * d + j + 1];
        out[i * d + j] = minus_i * comm + rate * dis;
      }
    }
  }
};

std::vector<double> coarse_grid(const BlockadeParams& p) {
  const int m = p.coarse_points;
  const double T = p.drive.window_T;
  std::vector<double> t(m);
  for (int k = 0; k < m; ++k) t[k] = -T + 2.0 * T * k / (m - 1);
  t.back() = T;
  return t;
}

/// Breakpoints strictly inside (a, b).
std::vector<double> breaks_between(const PulseShape& pulse, double a, double b) {
  std::vector<double> out;
  for (double x : pulse.breakpoints()) {
    if (x > a && x < b) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Advances y over [a, b], splitting at drive discontinuities.
void advance_segment(DormandPrince& dp, cvec& y, double a, double b, const PulseShape& pulse,
                     const StepObserver& observer = {}) {
  double t = a;
  for (double x : breaks_between(pulse, a, b)) {
    dp.advance(y, t, x, observer);
    dp.invalidate();
    t = x;
  }
  dp.advance(y, t, b, observer);
  for (double x : pulse.breakpoints()) {
    if (x == b) dp.invalidate();
  }
}

struct TruncationSignal {
  double top = 0.0;
};

BlockadeRun evolve_fixed(const BlockadeParams& p, int cutoff, double F0) {
  BlockadeParams local = p;
  local.drive.amplitude_F0 = F0;
  const Liouvillian L(local, cutoff);
  const int d = cutoff + 1;

  BlockadeRun run;
  run.fock_cutoff = cutoff;
  run.drive_amplitude = F0;
  run.times = coarse_grid(local);
  run.diagnostics.min_eigenvalue = 0.0;

  cvec rho(d * d, 0.0);
  rho[0] = 1.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig;
  auto& diag = run.diagnostics;
  auto check = [&](double t, const cvec& y) {
    std::complex<double> trace = 0.0;
    double herm = 0.0;
    for (int i = 0; i < d; ++i) {
      trace += y[i * d + i];
      for (int j = i + 1; j < d; ++j) {
        herm = std::max(herm, std::abs(y[i * d + j] - std::conj(y[j * d + i])));
      }
      herm = std::max(herm, std::abs(y[i * d + i].imag()));
    }
    const double top = y[d * d - 1].real();
    diag.max_trace_error = std::max(diag.max_trace_error, std::abs(trace - 1.0));
    diag.max_hermiticity_error = std::max(diag.max_hermiticity_error, herm);
    diag.max_top_population = std::max(diag.max_top_population, top);
    if (top >= 1e-8) throw TruncationSignal{top};
    Eigen::MatrixXcd m = Eigen::Map<const Eigen::MatrixXcd>(y.data(), d, d);
    eig.compute(m, Eigen::EigenvaluesOnly);
    diag.min_eigenvalue = std::min(diag.min_eigenvalue, eig.eigenvalues().minCoeff());
    if (diag.max_trace_error > 1e-8 || diag.max_hermiticity_error > 1e-10 ||
        diag.min_eigenvalue < -1e-9) {
      std::ostringstream msg;
      msg << "density matrix invariant violated at t=" << t << " ps: trace error "
          << diag.max_trace_error << ", hermiticity error " << diag.max_hermiticity_error
          << ", min eigenvalue " << diag.min_eigenvalue;
      throw NumericalError(msg.str());
    }
  };

  DormandPrince dp(L, local.step);
  const auto& times = run.times;
  run.rho.reserve(times.size());
  run.N_t.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0) advance_segment(dp, rho, times[k - 1], times[k], local.drive, check);
    double n = 0.0;
    for (int i = 1; i < d; ++i) n += i * rho[i * d + i].real();
    run.rho.push_back(rho);
    run.N_t.push_back(n);
    run.peak_occupation = std::max(run.peak_occupation, n);
  }
  diag.accepted_steps = dp.accepted_steps();
  diag.rejected_steps = dp.rejected_steps();
  run.weak_drive = run.peak_occupation <= 0.05;
  return run;
}

}  // namespace

double drive_for_peak_occupation(const BlockadeParams& params, double peak_occupation) {
  params.drive.validate();
  if (!(params.gamma_p > 0.0)) throw DomainError("blockade: gamma_p must be > 0");
  if (!(peak_occupation > 0.0)) throw DomainError("blockade: peak occupation must be > 0");
  PulseShape unit = params.drive;
  unit.amplitude_F0 = 1.0;
  const std::complex<double> decay(params.gamma_p / (2.0 * kHbar),
                                   params.E_p_minus_EL() / kHbar);
  Rhs rhs = [&](double t, const cvec& y, cvec& dy) {
    dy[0] = -decay * y[0] - std::complex<double>(0.0, unit.value(t));
  };
  StepControl control = params.step;
  control.atol = 1e-14;
  DormandPrince dp(rhs, control);
  cvec alpha(1, 0.0);
  double peak = 0.0;
  auto track = [&](double, const cvec& y) { peak = std::max(peak, std::norm(y[0])); };
  const double T = unit.window_T;
  advance_segment(dp, alpha, -T, T, unit, track);
  if (!(peak > 0.0)) throw NumericalError("drive scaling: zero response to the unit drive");
  return std::sqrt(peak_occupation / peak);
}

BlockadeRun evolve(const BlockadeParams& params) {
  params.validate();
  const double F0 = params.auto_scale_drive
                        ? drive_for_peak_occupation(params, params.target_peak_occupation)
                        : params.drive.amplitude_F0;
  double last_top = 0.0;
  for (int cutoff = params.fock_cutoff; cutoff <= params.max_fock_cutoff; cutoff += 2) {
    try {
      return evolve_fixed(params, cutoff, F0);
    } catch (const TruncationSignal& s) {
      last_top = s.top;
    }
  }
  std::ostringstream msg;
  msg << "Fock truncation violated: top-level population " << last_top
      << " >= 1e-8 at cutoff " << params.max_fock_cutoff
      << "; increase max_fock_cutoff or weaken the drive";
  throw TruncationError(msg.str(), params.max_fock_cutoff, last_top);
}

G2Grid two_time_g2(const BlockadeRun& run, const BlockadeParams& params, int jobs) {
  params.validate();
  const int cutoff = run.fock_cutoff;
  const int d = cutoff + 1;
  const std::size_t m = run.times.size();
  if (m == 0 || run.rho.size() != m) throw DomainError("two_time_g2: empty or inconsistent run");

  BlockadeParams local = params;
  local.drive.amplitude_F0 = run.drive_amplitude;
  const Liouvillian L(local, cutoff);

  G2Grid grid;
  grid.times = run.times;
  grid.values.assign(m * m, 0.0);

  auto occupation = [d](const cvec& x) {
    double n = 0.0;
    for (int i = 1; i < d; ++i) n += i * x[i * d + i].real();
    return n;
  };

  parallel_for(m, jobs, [&](std::size_t k) {
    const cvec& rho = run.rho[k];
    cvec x(d * d, 0.0);
    for (int i = 0; i + 1 < d; ++i) {
      for (int j = 0; j + 1 < d; ++j) {
        x[i * d + j] = L.sq[i + 1] * L.sq[j + 1] * rho[(i + 1) * d + j + 1];
      }
    }
    grid.values[k * m + k] = occupation(x);
    DormandPrince dp(L, local.step);
    for (std::size_t j = k + 1; j < m; ++j) {
      advance_segment(dp, x, run.times[j - 1], run.times[j], local.drive);
      const double g = occupation(x);
      grid.values[k * m + j] = g;
      grid.values[j * m + k] = g;
    }
  });
  return grid;
}

namespace {

std::vector<double> trapezoid_weights(std::span<const double> t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double h = t[i] - t[i - 1];
    w[i - 1] += 0.5 * h;
    w[i] += 0.5 * h;
  }
  return w;
}

}  // namespace

double pulse_integrated_g2(const BlockadeRun& run) {
  const auto& g = run.G2_grid;
  const std::size_t m = g.times.size();
  if (m == 0 || g.values.size() != m * m || run.N_t.size() != m) {
    throw DomainError("pulse_integrated_g2: run has no two-time grid");
  }
  const auto w = trapezoid_weights(g.times);
  double pairs = 0.0, single = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    single += w[i] * run.N_t[i];
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) row += w[j] * g.values[i * m + j];
    pairs += w[i] * row;
  }
  if (!(single > 0.0)) throw DomainError("pulse_integrated_g2: undefined correlation, int N = 0");
  return pairs / (single * single);
}

double equal_time_g2(const BlockadeRun& run, std::size_t k) {
  if (k >= run.rho.size()) throw DomainError("equal_time_g2: index out of range");
  const int d = run.dim();
  const cvec& rho = run.rho[k];
  double n = 0.0, pairs = 0.0;
  for (int i = 1; i < d; ++i) {
    const double p = rho[i * d + i].real();
    n += i * p;
    pairs += static_cast<double>(i) * (i - 1) * p;
  }
  if (!(n > 0.0)) throw DomainError("equal_time_g2: undefined correlation, <n> = 0");
  return pairs / (n * n);
}

double simulate_g2(const BlockadeParams& params, int jobs) {
  BlockadeRun run = evolve(params);
  run.G2_grid = two_time_g2(run, params, jobs);
  return pulse_integrated_g2(run);
}

DetuningCurve detuning_sweep(const BlockadeParams& base, std::span<const double> deltas,
                             int jobs) {
  if (deltas.empty()) throw DomainError("detuning_sweep: no detunings");
  if (!std::is_sorted(deltas.begin(), deltas.end())) {
    throw DomainError("detuning_sweep: detunings must be sorted");
  }
  DetuningCurve curve;
  curve.points.resize(deltas.size());
  parallel_for(deltas.size(), jobs, [&](std::size_t i) {
    BlockadeParams p = base;
    p.detuning_Delta = deltas[i];
    curve.points[i] = {deltas[i], simulate_g2(p, 1), 0.0};
  });
  const auto [lo, hi] = std::minmax_element(
      curve.points.begin(), curve.points.end(),
      [](const CurvePoint& a, const CurvePoint& b) { return a.g2_0 < b.g2_0; });
  curve.g2_min = lo->g2_0;
  curve.Delta_min = lo->Delta;
  curve.g2_max = hi->g2_0;
  curve.Delta_max = hi->Delta;
  curve.blockade_shape = curve.Delta_min < 0.0 && curve.Delta_max > 0.0;
  return curve;
}

DipSearch find_g2_minimum(const BlockadeParams& base, double lo, double hi, int scan_points,
                          int jobs) {
  if (!(hi > lo) || scan_points < 3) {
    throw DomainError("find_g2_minimum: need lo < hi and at least 3 scan points");
  }
  std::vector<double> xs(scan_points);
  for (int i = 0; i < scan_points; ++i) xs[i] = lo + (hi - lo) * i / (scan_points - 1);
  std::vector<double> ys(scan_points);
  parallel_for(xs.size(), jobs, [&](std::size_t i) {
    BlockadeParams p = base;
    p.detuning_Delta = xs[i];
    ys[i] = simulate_g2(p, 1);
  });
  const auto best = static_cast<int>(std::min_element(ys.begin(), ys.end()) - ys.begin());
  DipSearch out;
  out.evaluations = scan_points;
  const double a = xs[std::max(best - 1, 0)];
  const double b = xs[std::min(best + 1, scan_points - 1)];
  auto f = [&](double x) {
    BlockadeParams p = base;
    p.detuning_Delta = x;
    ++out.evaluations;
    return simulate_g2(p, jobs);
  };
  std::uintmax_t iterations = 40;
  const auto [x, y] = boost::math::tools::brent_find_minima(f, a, b, 16, iterations);
  out.Delta_min = x;
  out.g2_min = y;
  if (ys[best] < y) {
    out.Delta_min = xs[best];
    out.g2_min = ys[best];
  }
  return out;
}

}  // namespace dipolab::blockade
