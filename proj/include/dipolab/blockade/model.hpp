#pragma once

#include <complex>
#include <span>
#include <string_view>
#include <vector>

#include "dipolab/blockade/ode.hpp"

namespace dipolab::blockade {

enum class PulseKind { gaussian, flat_top };
std::string_view pulse_kind_name(PulseKind kind);
PulseKind pulse_kind_from_name(std::string_view name);

/// Drive envelope F(t) in 1/ps. For the Gaussian, fwhm_tau_p is the FWHM of
/// the intensity |F|²; for the flat top it is the full length.
struct PulseShape {
  PulseKind kind = PulseKind::gaussian;
  double amplitude_F0 = 0.0;  // 1/ps
  double fwhm_tau_p = 0.0;    // ps
  double window_T = 0.0;      // ps, simulation runs over [-T, T]

  double envelope(double t) const;  // F(t) / F0
  double value(double t) const { return amplitude_F0 * envelope(t); }
  /// Times inside the window where F(t) is discontinuous.
  std::vector<double> breakpoints() const;
  void validate() const;
};

/// One blockade simulation point. The public detuning is the figure
/// convention Delta = E_L - E_1P; the Hamiltonian uses E_p - hbar w_L = -Delta.
struct BlockadeParams {
  double detuning_Delta = 0.0;  // meV
  double U_dd = 0.0;            // meV
  double gamma_p = 0.0;         // meV
  PulseShape drive;
  int fock_cutoff = 6;
  int max_fock_cutoff = 16;     // escalation limit
  bool auto_scale_drive = true;
  double target_peak_occupation = 0.01;
  int coarse_points = 201;
  StepControl step;

  double E_p_minus_EL() const { return -detuning_Delta; }

  /// Gaussian pulse with intensity FWHM hbar/gamma on a window of
  /// `window_in_tau` FWHMs, auto-scaled to the default weak drive.
  static BlockadeParams gaussian(double Delta, double U_dd, double gamma_p,
                                 double window_in_tau = 10.0);
  /// Flat-top drive of the given length (in units of hbar/gamma).
  static BlockadeParams flat_top(double Delta, double U_dd, double gamma_p,
                                 double length_in_tau, double peak_occupation);
  void validate() const;
};

struct RunDiagnostics {
  double max_trace_error = 0.0;
  double max_hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;
  double max_top_population = 0.0;
  long accepted_steps = 0;
  long rejected_steps = 0;
};

struct G2Grid {
  std::vector<double> times;   // ps, the coarse grid
  std::vector<double> values;  // row-major M x M, symmetric
  double at(std::size_t i, std::size_t j) const { return values[i * times.size() + j]; }
};

/// Density-matrix trajectory sampled on the coarse grid. rho[k] is the d x d
/// matrix at times[k], row-major, d = fock_cutoff + 1.
struct BlockadeRun {
  std::vector<double> times;
  std::vector<cvec> rho;
  std::vector<double> N_t;  // Tr(a rho a†)
  int fock_cutoff = 0;
  double drive_amplitude = 0.0;  // F0 actually used, 1/ps
  double peak_occupation = 0.0;
  bool weak_drive = true;        // peak <n> <= 0.05
  RunDiagnostics diagnostics;
  G2Grid G2_grid;                // filled by two_time_g2

  int dim() const { return fock_cutoff + 1; }
};

/// Drive amplitude giving the requested peak coherent occupation in the
/// linear (U = 0) response.
double drive_for_peak_occupation(const BlockadeParams& params, double peak_occupation);

/// Lindblad evolution from the vacuum at -T to +T. Invariants are checked
/// on every accepted step. The Fock cutoff grows by 2 while the top level
/// exceeds 1e-8, up to max_fock_cutoff; beyond that TruncationError.
BlockadeRun evolve(const BlockadeParams& params);

/// Quantum-regression G2(t, t') on the coarse grid: for each t' the jumped
/// matrix a rho(t') a† is propagated forward and Tr(a† a X) recorded.
G2Grid two_time_g2(const BlockadeRun& run, const BlockadeParams& params, int jobs = 1);

/// Trapezoidal double integral of G2 over the full square (twice the
/// ordered half) divided by (int N dt)². Requires run.G2_grid.
double pulse_integrated_g2(const BlockadeRun& run);

/// <a†a†aa> / <a†a>² at coarse index k.
double equal_time_g2(const BlockadeRun& run, std::size_t k);

/// evolve + two_time_g2 + pulse_integrated_g2.
double simulate_g2(const BlockadeParams& params, int jobs = 1);

struct CurvePoint {
  double Delta = 0.0;  // meV
  double g2_0 = 0.0;
  double std_error = 0.0;  // deterministic simulation: 0
};

struct DetuningCurve {
  std::vector<CurvePoint> points;
  double g2_min = 0.0, Delta_min = 0.0;
  double g2_max = 0.0, Delta_max = 0.0;
  /// Minimum at Delta < 0 and maximum at Delta > 0.
  bool blockade_shape = false;
};

/// g2_0 at every Delta (sorted ascending). Points run concurrently.
DetuningCurve detuning_sweep(const BlockadeParams& base, std::span<const double> deltas,
                             int jobs = 1);

struct DipSearch {
  double Delta_min = 0.0;
  double g2_min = 0.0;
  int evaluations = 0;
};

/// Minimum of g2_0 over Delta in [lo, hi]: coarse scan, then Brent.
DipSearch find_g2_minimum(const BlockadeParams& base, double lo, double hi, int scan_points = 11,
                          int jobs = 1);

}  // namespace dipolab::blockade
