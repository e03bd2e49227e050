#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace dipolab::polariton {

/// Coupled-oscillator parameters. The photon couples to each exciton with a
/// matrix element Omega/2, so the resonant splitting equals the quoted Rabi
/// splitting Omega. The two excitons do not couple to each other.
struct CouplingParams {
  double E_hh = 0.0;       // meV
  double E_lh = 0.0;       // meV
  double Omega_hh = 0.0;   // meV
  double Omega_lh = 0.0;   // meV
  double n_eff = 3.6;
  double voltage_tag = 0.0;  // V
  /// Optional n_eff(beta) used instead of the constant n_eff when set.
  std::function<double(double)> n_eff_of_beta;

  static CouplingParams from_wavelengths(double hh_nm, double lh_nm, double omega_hh,
                                         double omega_lh, double n_eff, double voltage);
  /// Exciton and coupling parameters of the unbiased and the 2.5 V device.
  static CouplingParams unbiased();
  static CouplingParams biased_2p5V();

  double photon_energy(double beta) const;  // hbar c beta / n_eff [meV]
  double photon_velocity() const;           // c / n_eff [µm/ps]
  void validate() const;
};

enum class BranchId { LP = 0, MP = 1, UP = 2 };
std::string_view branch_name(BranchId id);

struct PolaritonSample {
  double beta = 0.0;  // µm⁻¹
  double E = 0.0;     // meV
  double chi_te2 = 0.0;
  double chi_hh2 = 0.0;
  double chi_lh2 = 0.0;
  double v_g = 0.0;   // µm/ps
  bool degenerate = false;

  double exciton_fraction() const { return chi_hh2 + chi_lh2; }
};

struct PolaritonBranch {
  BranchId branch_id = BranchId::LP;
  std::vector<PolaritonSample> samples;
};

/// Diagonalises the 3x3 Hamiltonian at every beta (ascending, > 0) and
/// returns LP, MP, UP. Group velocities use centred differences of E(beta).
std::array<PolaritonBranch, 3> dispersion(const CouplingParams& params,
                                          std::span<const double> beta_grid);

/// Uniform beta grid whose bare photon energy spans E_hh ± half_span_meV.
std::vector<double> beta_window(const CouplingParams& params, double half_span_meV,
                                std::size_t points);

/// Linear interpolation of a branch sample at a target exciton fraction.
/// Empty when the fraction is never crossed.
std::optional<PolaritonSample> sample_at_fraction(const PolaritonBranch& branch, double fraction);

struct VelocityFractionFit {
  std::vector<std::pair<double, double>> pairs;  // (|chi_X|², v_g), sorted by fraction
  double v_p = 0.0;        // fitted v_g = v_p (1 - |chi_X|²)
  double r_squared = 0.0;
};

/// Pairs every sample's exciton fraction with its group velocity and fits the
/// photon-weighted linear law. Restrict the fit window with [lo, hi].
VelocityFractionFit group_velocity_vs_fraction(const PolaritonBranch& branch, double lo = 0.0,
                                               double hi = 1.0);

/// Streak-camera delay inversion: 1/v' = dt/x + 1/v_ref, per delay entry.
std::vector<double> velocity_from_delays(std::span<const std::pair<double, double>> delays,
                                         double channel_length_um, double v_ref);
/// Inverse map: dt = x (1/v' - 1/v_ref).
double delay_from_velocity(double velocity, double channel_length_um, double v_ref);

}  // namespace dipolab::polariton
