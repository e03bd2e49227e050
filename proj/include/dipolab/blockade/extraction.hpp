#pragma once

#include <span>
#include <vector>

#include "dipolab/blockade/model.hpp"
#include "dipolab/core/mode_area.hpp"

namespace dipolab::blockade {

struct CalibrationPoint {
  double gamma = 0.0;          // meV
  double u_over_gamma = 0.0;
  double depth = 0.0;          // 1 - g2_min
  double Delta_min = 0.0;      // meV
};

struct QuadraticFit {
  double kappa = 0.0;
  double b = 0.0;
  double rms_residual = 0.0;
  double condition_number = 0.0;
};

struct GammaFit {
  double gamma = 0.0;
  QuadraticFit fit;
};

struct KappaCalibration {
  double kappa = 0.0;  // pooled over every gamma
  double b = 0.0;
  QuadraticFit pooled;
  std::vector<GammaFit> per_gamma;
  std::vector<CalibrationPoint> points;
  double kappa_spread = 0.0;             // (max - min) / mean over gammas
  double residual_at_smallest_u = 0.0;   // |fit - depth| at the smallest U/gamma
};

/// Least-squares fit of y = kappa x + b x² (no constant term). Throws
/// NumericalError when the normal equations are ill-conditioned.
QuadraticFit fit_origin_quadratic(std::span<const double> x, std::span<const double> y);

struct CalibrationOptions {
  double window_in_tau = 10.0;
  double scan_lo_in_gamma = -5.0;  // Delta search interval, units of gamma
  double scan_hi_in_gamma = 0.0;
  int scan_points = 11;
  int jobs = 1;
};

/// For every gamma and U/gamma, locates the g2_0 minimum over Delta and fits
/// 1 - g2_min = kappa U/gamma + b (U/gamma)².
KappaCalibration calibrate_kappa(std::span<const double> gamma_list,
                                 std::span<const double> u_over_gamma_grid,
                                 const CalibrationOptions& options = {});

struct Interaction {
  double U_dd = 0.0;  // meV
  double g_dd = 0.0;  // meV µm²
};

/// U_dd = (1 - g2_min) gamma / kappa and g_dd = U_dd A / 2.
Interaction extract_interaction(double g2_min, double gamma, const ModeArea& area, double kappa);

/// R_b = sqrt(2 g_dd / (pi gamma)).
double blockade_radius(double g_dd, double gamma);

/// Density at which U = g_dd n equals gamma: n_b = gamma / g_dd = 2 / (pi R_b²).
double blockade_density(double g_dd, double gamma);

struct BlockadeVerdict {
  double lhs = 0.0;          // w (1 - chi²) / (d chi⁴), d in µm
  bool verdict = false;      // lhs < C_ex
  double margin = 0.0;       // C_ex - lhs
  double chi2_threshold = 0.0;
};

/// Full-blockade design condition. d is given in nm.
BlockadeVerdict full_blockade_condition(double w_um, double d_nm, double chi2, double C_ex);

/// Exciton-fraction threshold solving w (1 - x) / (d x²) = C_ex by bisection.
double blockade_threshold_fraction(double w_um, double d_nm, double C_ex);

/// Constant C_ex = 2 g_dd (1 - chi²) / (hbar v_g d chi⁴) implied by an
/// operating point, with d in nm.
double exciton_constant(double g_dd, double chi2, double v_g, double d_nm);

struct ExtractionReport {
  DetuningCurve curve;
  double kappa = 0.0;
  double b = 0.0;
  double g2_min = 0.0;
  double gamma = 0.0;
  double U_dd_extracted = 0.0;
  double g_dd = 0.0;
  double R_b = 0.0;
  double n = 0.0;    // 2 / A
  double n_b = 0.0;
  double n_over_n_b = 0.0;
  BlockadeVerdict blockade;
};

/// Assembles the report from a measured (or simulated) dip and the
/// calibration constant. The curve is optional context.
ExtractionReport build_report(double g2_min, double gamma, const ModeArea& area, double kappa,
                              double b, const BlockadeVerdict& verdict, DetuningCurve curve = {});

}  // namespace dipolab::blockade
