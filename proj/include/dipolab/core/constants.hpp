#pragma once

// Unit system used throughout dipolab: energies in meV, times in ps,
// lengths in µm. Dipole lengths are reported in nm where noted.

namespace dipolab {

struct PhysicalConstants {
  /// Reduced Planck constant [meV·ps].
  static constexpr double hbar = 0.6582119569;
  /// Speed of light [µm/ps].
  static constexpr double c = 299.792458;
  /// hbar·c [meV·µm].
  static constexpr double hbar_c = hbar * c;
  /// hbar²/(2 m0) [meV·nm²] for the free-electron mass.
  static constexpr double hbar2_over_2m0_nm2 = 38.09982;
  /// Photon energy–wavelength product [meV·nm].
  static constexpr double hc_meV_nm = 1239841.9;
};

inline constexpr double kHbar = PhysicalConstants::hbar;
inline constexpr double kC = PhysicalConstants::c;

/// Photon energy in meV for a vacuum wavelength in nm.
constexpr double wavelength_nm_to_meV(double lambda_nm) {
  return PhysicalConstants::hc_meV_nm / lambda_nm;
}

constexpr double meV_to_wavelength_nm(double energy_meV) {
  return PhysicalConstants::hc_meV_nm / energy_meV;
}

}  // namespace dipolab
