#include "dipolab/polariton/dispersion.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "dipolab/core/constants.hpp"
#include "dipolab/core/errors.hpp"

namespace dipolab::polariton {

CouplingParams CouplingParams::from_wavelengths(double hh_nm, double lh_nm, double omega_hh,
                                                double omega_lh, double n_eff, double voltage) {
  CouplingParams p;
  p.E_hh = wavelength_nm_to_meV(hh_nm);
  p.E_lh = wavelength_nm_to_meV(lh_nm);
  p.Omega_hh = omega_hh;
  p.Omega_lh = omega_lh;
  p.n_eff = n_eff;
  p.voltage_tag = voltage;
  return p;
}

CouplingParams CouplingParams::unbiased() { return from_wavelengths(812.0, 809.3, 6.4, 4.5, 3.6, 0.0); }

CouplingParams CouplingParams::biased_2p5V() {
  return from_wavelengths(817.8, 811.7, 5.4, 3.7, 3.6, 2.5);
}

double CouplingParams::photon_energy(double beta) const {
  const double n = n_eff_of_beta ? n_eff_of_beta(beta) : n_eff;
  return PhysicalConstants::hbar_c * beta / n;
}

double CouplingParams::photon_velocity() const { return kC / n_eff; }

void CouplingParams::validate() const {
  if (!(n_eff > 1.0)) throw DomainError("polariton: n_eff must be > 1");
  if (Omega_hh < 0.0 || Omega_lh < 0.0) throw DomainError("polariton: Rabi splittings must be >= 0");
  if (!(E_hh > 0.0) || !(E_lh > 0.0)) throw DomainError("polariton: exciton energies must be > 0");
}

std::string_view branch_name(BranchId id) {
  switch (id) {
    case BranchId::LP: return "LP";
    case BranchId::MP: return "MP";
    case BranchId::UP: return "UP";
  }
  return "?";
}

std::array<PolaritonBranch, 3> dispersion(const CouplingParams& params,
                                          std::span<const double> beta_grid) {
  params.validate();
  for (std::size_t i = 0; i < beta_grid.size(); ++i) {
    if (!(beta_grid[i] > 0.0)) throw DomainError("dispersion: beta values must be > 0");
    if (i > 0 && !(beta_grid[i] > beta_grid[i - 1])) {
      throw DomainError("dispersion: beta grid must be strictly ascending");
    }
  }

  std::array<PolaritonBranch, 3> out;
  for (int b = 0; b < 3; ++b) {
    out[b].branch_id = static_cast<BranchId>(b);
    out[b].samples.resize(beta_grid.size());
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
  for (std::size_t i = 0; i < beta_grid.size(); ++i) {
    Eigen::Matrix3d h;
    h << params.photon_energy(beta_grid[i]), params.Omega_hh / 2, params.Omega_lh / 2,
        params.Omega_hh / 2, params.E_hh, 0.0,
        params.Omega_lh / 2, 0.0, params.E_lh;
    solver.compute(h);
    const auto& ev = solver.eigenvalues();
    const auto& vec = solver.eigenvectors();
    const bool degenerate = (ev(1) - ev(0)) < 1e-9 || (ev(2) - ev(1)) < 1e-9;
    for (int b = 0; b < 3; ++b) {
      auto& s = out[b].samples[i];
      s.beta = beta_grid[i];
      s.E = ev(b);
      s.chi_te2 = vec(0, b) * vec(0, b);
      s.chi_hh2 = vec(1, b) * vec(1, b);
      s.chi_lh2 = vec(2, b) * vec(2, b);
      s.degenerate = degenerate;
    }
  }

  for (auto& branch : out) {
    auto& s = branch.samples;
    const std::size_t n = s.size();
    if (n < 2) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = i == 0 ? 0 : i - 1;
      const std::size_t b = i + 1 == n ? n - 1 : i + 1;
      s[i].v_g = (s[b].E - s[a].E) / (s[b].beta - s[a].beta) / kHbar;
    }
  }
  return out;
}

std::vector<double> beta_window(const CouplingParams& params, double half_span_meV,
                                std::size_t points) {
  params.validate();
  if (points < 2 || !(half_span_meV > 0.0)) {
    throw DomainError("beta_window: need >= 2 points and a positive span");
  }
  const double k = params.n_eff / PhysicalConstants::hbar_c;
  const double lo = (params.E_hh - half_span_meV) * k;
  const double hi = (params.E_hh + half_span_meV) * k;
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

std::optional<PolaritonSample> sample_at_fraction(const PolaritonBranch& branch, double fraction) {
  const auto& s = branch.samples;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double a = s[i - 1].exciton_fraction() - fraction;
    const double b = s[i].exciton_fraction() - fraction;
    if (a == 0.0) return s[i - 1];
    if ((a < 0.0) != (b < 0.0)) {
      const double t = a / (a - b);
      auto lerp = [t](double x, double y) { return x + t * (y - x); };
      PolaritonSample out;
      out.beta = lerp(s[i - 1].beta, s[i].beta);
      out.E = lerp(s[i - 1].E, s[i].E);
      out.chi_te2 = lerp(s[i - 1].chi_te2, s[i].chi_te2);
      out.chi_hh2 = lerp(s[i - 1].chi_hh2, s[i].chi_hh2);
      out.chi_lh2 = lerp(s[i - 1].chi_lh2, s[i].chi_lh2);
      out.v_g = lerp(s[i - 1].v_g, s[i].v_g);
      return out;
    }
  }
  return std::nullopt;
}

VelocityFractionFit group_velocity_vs_fraction(const PolaritonBranch& branch, double lo,
                                               double hi) {
  if (branch.samples.size() < 3) {
    throw DomainError("group_velocity_vs_fraction: need at least 3 samples");
  }
  VelocityFractionFit fit;
  for (const auto& s : branch.samples) {
    const double x = s.exciton_fraction();
    if (x >= lo && x <= hi) fit.pairs.emplace_back(x, s.v_g);
  }
  std::sort(fit.pairs.begin(), fit.pairs.end());
  if (fit.pairs.size() < 2) return fit;

  double sxy = 0.0, sxx = 0.0, mean = 0.0;
  for (const auto& [x, v] : fit.pairs) {
    sxy += v * (1.0 - x);
    sxx += (1.0 - x) * (1.0 - x);
    mean += v;
  }
  mean /= static_cast<double>(fit.pairs.size());
  fit.v_p = sxy / sxx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& [x, v] : fit.pairs) {
    ss_res += std::pow(v - fit.v_p * (1.0 - x), 2);
    ss_tot += std::pow(v - mean, 2);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

std::vector<double> velocity_from_delays(std::span<const std::pair<double, double>> delays,
                                         double channel_length_um, double v_ref) {
  if (!(channel_length_um > 0.0) || !(v_ref > 0.0)) {
    throw DomainError("velocity_from_delays: channel length and reference velocity must be > 0");
  }
  std::vector<double> out;
  out.reserve(delays.size());
  for (const auto& [voltage, dt] : delays) {
    const double inverse = dt / channel_length_um + 1.0 / v_ref;
    if (!(inverse > 0.0)) {
      throw DomainError("velocity_from_delays: delay at " + std::to_string(voltage) +
                        " V gives a non-positive velocity");
    }
    out.push_back(1.0 / inverse);
  }
  return out;
}

double delay_from_velocity(double velocity, double channel_length_um, double v_ref) {
  if (!(velocity > 0.0) || !(v_ref > 0.0) || !(channel_length_um > 0.0)) {
    throw DomainError("delay_from_velocity: inputs must be > 0");
  }
  return channel_length_um * (1.0 / velocity - 1.0 / v_ref);
}

}  // namespace dipolab::polariton
