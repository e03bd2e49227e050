#include "dipolab/blockade/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "dipolab/core/constants.hpp"
#include "dipolab/core/errors.hpp"

namespace dipolab::blockade {

QuadraticFit fit_origin_quadratic(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DomainError("fit_origin_quadratic: need at least two (x, y) pairs of equal length");
  }
  Eigen::MatrixXd A(x.size(), 2);
  Eigen::VectorXd rhs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    A(i, 0) = x[i];
    A(i, 1) = x[i] * x[i];
    rhs(i) = y[i];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  QuadraticFit fit;
  fit.condition_number = s(1) > 0.0 ? s(0) / s(1) : INFINITY;
  if (!(fit.condition_number < 1e8)) {
    throw NumericalError("kappa fit is ill-conditioned (condition number " +
                         std::to_string(fit.condition_number) +
                         "); use at least two distinct U/gamma values");
  }
  const Eigen::Vector2d c = svd.solve(rhs);
  fit.kappa = c(0);
  fit.b = c(1);
  fit.rms_residual = std::sqrt((A * c - rhs).squaredNorm() / static_cast<double>(x.size()));
  return fit;
}

KappaCalibration calibrate_kappa(std::span<const double> gamma_list,
                                 std::span<const double> u_over_gamma_grid,
                                 const CalibrationOptions& options) {
  if (gamma_list.empty() || u_over_gamma_grid.empty()) {
    throw DomainError("calibrate_kappa: empty gamma list or U/gamma grid");
  }
  for (double u : u_over_gamma_grid) {
    if (u < 0.01 || u > 0.5) throw DomainError("calibrate_kappa: U/gamma must lie in [0.01, 0.5]");
  }
  for (double g : gamma_list) {
    if (!(g > 0.0)) throw DomainError("calibrate_kappa: gamma must be > 0");
  }

  KappaCalibration out;
  std::vector<double> all_x, all_y;
  for (double gamma : gamma_list) {
    std::vector<double> ys;
    for (double u : u_over_gamma_grid) {
      const BlockadeParams base = BlockadeParams::gaussian(0.0, u * gamma, gamma,
                                                           options.window_in_tau);
      const DipSearch dip =
          find_g2_minimum(base, options.scan_lo_in_gamma * gamma,
                          options.scan_hi_in_gamma * gamma, options.scan_points, options.jobs);
      out.points.push_back({gamma, u, 1.0 - dip.g2_min, dip.Delta_min});
      ys.push_back(1.0 - dip.g2_min);
      all_x.push_back(u);
      all_y.push_back(1.0 - dip.g2_min);
    }
    out.per_gamma.push_back({gamma, fit_origin_quadratic(u_over_gamma_grid, ys)});
  }
  out.pooled = fit_origin_quadratic(all_x, all_y);
  out.kappa = out.pooled.kappa;
  out.b = out.pooled.b;

  double kmin = INFINITY, kmax = -INFINITY, ksum = 0.0;
  for (const auto& g : out.per_gamma) {
    kmin = std::min(kmin, g.fit.kappa);
    kmax = std::max(kmax, g.fit.kappa);
    ksum += g.fit.kappa;
  }
  out.kappa_spread = (kmax - kmin) / (ksum / static_cast<double>(out.per_gamma.size()));

  const double u0 = *std::min_element(u_over_gamma_grid.begin(), u_over_gamma_grid.end());
  for (const auto& p : out.points) {
    if (p.u_over_gamma == u0) {
      const double model = out.kappa * u0 + out.b * u0 * u0;
      out.residual_at_smallest_u = std::max(out.residual_at_smallest_u, std::abs(model - p.depth));
    }
  }
  return out;
}

Interaction extract_interaction(double g2_min, double gamma, const ModeArea& area, double kappa) {
  if (!(g2_min < 1.0)) throw DomainError("extract_interaction: no blockade signal (g2_min >= 1)");
  if (!(g2_min > 0.0)) throw DomainError("extract_interaction: g2_min must be > 0");
  if (!(kappa > 0.0) || !(gamma > 0.0)) {
    throw DomainError("extract_interaction: kappa and gamma must be > 0");
  }
  Interaction out;
  out.U_dd = (1.0 - g2_min) * gamma / kappa;
  out.g_dd = out.U_dd * area.area_A / 2.0;
  return out;
}

double blockade_radius(double g_dd, double gamma) {
  if (!(g_dd > 0.0) || !(gamma > 0.0)) throw DomainError("blockade_radius: inputs must be > 0");
  return std::sqrt(2.0 * g_dd / (std::numbers::pi * gamma));
}

double blockade_density(double g_dd, double gamma) {
  if (!(g_dd > 0.0) || !(gamma > 0.0)) throw DomainError("blockade_density: inputs must be > 0");
  return gamma / g_dd;
}

namespace {

double blockade_lhs(double w_um, double d_um, double chi2) {
  return w_um * (1.0 - chi2) / (d_um * chi2 * chi2);
}

void check_geometry(double w_um, double d_nm) {
  if (!(w_um > 0.0) || !(d_nm > 0.0)) {
    throw DomainError("full_blockade_condition: w and d must be > 0");
  }
}

}  // namespace

double blockade_threshold_fraction(double w_um, double d_nm, double C_ex) {
  check_geometry(w_um, d_nm);
  if (!(C_ex > 0.0)) throw DomainError("full_blockade_condition: C_ex must be > 0");
  const double d_um = d_nm * 1e-3;
  // lhs falls monotonically from +inf at 0 to 0 at 1.
  double lo = 1e-12, hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (blockade_lhs(w_um, d_um, mid) > C_ex ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

BlockadeVerdict full_blockade_condition(double w_um, double d_nm, double chi2, double C_ex) {
  check_geometry(w_um, d_nm);
  if (!(chi2 > 0.0) || !(chi2 < 1.0)) {
    throw DomainError("full_blockade_condition: chi2 must lie in (0, 1)");
  }
  BlockadeVerdict v;
  v.lhs = blockade_lhs(w_um, d_nm * 1e-3, chi2);
  v.verdict = v.lhs < C_ex;
  v.margin = C_ex - v.lhs;
  v.chi2_threshold = blockade_threshold_fraction(w_um, d_nm, C_ex);
  return v;
}

double exciton_constant(double g_dd, double chi2, double v_g, double d_nm) {
  if (!(g_dd > 0.0) || !(v_g > 0.0) || !(d_nm > 0.0) || !(chi2 > 0.0) || !(chi2 < 1.0)) {
    throw DomainError("exciton_constant: inputs out of range");
  }
  return 2.0 * g_dd * (1.0 - chi2) / (kHbar * v_g * d_nm * 1e-3 * chi2 * chi2);
}

ExtractionReport build_report(double g2_min, double gamma, const ModeArea& area, double kappa,
                              double b, const BlockadeVerdict& verdict, DetuningCurve curve) {
  const Interaction inter = extract_interaction(g2_min, gamma, area, kappa);
  ExtractionReport r;
  r.curve = std::move(curve);
  r.kappa = kappa;
  r.b = b;
  r.g2_min = g2_min;
  r.gamma = gamma;
  r.U_dd_extracted = inter.U_dd;
  r.g_dd = inter.g_dd;
  r.R_b = blockade_radius(inter.g_dd, gamma);
  r.n = area.density_n;
  r.n_b = blockade_density(inter.g_dd, gamma);
  r.n_over_n_b = r.n / r.n_b;
  r.blockade = verdict;
  return r;
}

}  // namespace dipolab::blockade
