#pragma once

#include <span>
#include <vector>

#include "dipolab/core/device.hpp"

namespace dipolab::stark {

enum class Species { electron, heavy_hole };

/// Material and discretisation parameters for the biased GaAs/AlGaAs well.
/// Offsets follow a 65:35 conduction:valence split of 1.36·x eV.
struct WellMaterial {
  double mass_e = 0.067;       // m0
  double mass_hh = 0.35;       // m0, along the growth axis
  double al_fraction = 0.4;    // barrier Al content x
  double total_gap_offset_meV_per_x = 1360.0;
  double conduction_share = 0.65;
  double barrier_width_nm = 40.0;  // each side
  double grid_step_nm = 0.04;

  double conduction_offset_meV() const {
    return total_gap_offset_meV_per_x * al_fraction * conduction_share;
  }
  double valence_offset_meV() const {
    return total_gap_offset_meV_per_x * al_fraction * (1.0 - conduction_share);
  }
};

/// Potential profiles on a uniform grid with z = 0 at the well centre.
/// Both profiles are confinement energies for their carrier (holes in the
/// hole picture), so each ground state is the lowest eigenvalue.
struct QwPotential {
  std::vector<double> grid_z;       // µm
  double step_h = 0.0;              // µm
  std::vector<double> potential_e;  // meV
  std::vector<double> potential_h;  // meV
  double mass_e = 0.067;
  double mass_h = 0.35;
  double field_F = 0.0;             // V/µm
  double well_width = 0.0;          // µm, 0 for custom potentials
};

/// Builds the biased well. The electron sees +F·z (pushed to negative z) and
/// the hole −F·z; the tilt is exactly linear across the whole grid.
QwPotential make_potential(double well_width_um, double field_V_per_um,
                           const WellMaterial& material = {});

/// Arbitrary single-species potential, used for solver verification.
QwPotential make_custom_potential(std::vector<double> grid_z_um, std::vector<double> potential_meV,
                                  double mass);

struct Eigenstate {
  double energy = 0.0;              // meV
  std::vector<double> wavefunction; // normalised: sum |psi|² h = 1
  int iterations = 0;
};

/// Lowest eigenpair of -(hbar²/2m) d²/dz² + V(z) with Dirichlet ends.
/// Throws NumericalError when inverse iteration does not converge.
Eigenstate solve_ground_state(const QwPotential& pot, Species species);

/// Eigenpair number `index` (0 = lowest), located by Sturm bisection and
/// refined by shifted inverse iteration.
Eigenstate solve_eigenpair(const QwPotential& pot, Species species, int index);

/// Lowest eigenstate with at least half its weight within one well width of
/// the well centre. Strong fields tilt the barrier below the well level and
/// the true ground state then sits against the grid wall; the state that
/// stays in the well is the physical (quasi-bound) one. Falls back to the
/// plain ground state for custom potentials.
Eigenstate solve_confined_state(const QwPotential& pot, Species species);

/// Confined-state energy on the given grid and on a grid with half the step.
/// The solver's accuracy precondition is |difference| < 1e-3 meV.
struct ConvergenceCheck {
  double energy = 0.0;
  double energy_refined = 0.0;
  bool converged = false;
};
ConvergenceCheck check_grid_convergence(double well_width_um, double field_V_per_um,
                                        Species species, const WellMaterial& material = {});

double expectation_z(std::span<const double> grid_z, std::span<const double> psi, double step);

struct StarkResult {
  double field_F = 0.0;          // V/µm
  double voltage = 0.0;          // V, F · structure thickness
  double shift_deltaE = 0.0;     // meV, negative for a red-shift
  double dipole_length_d = 0.0;  // nm, <z>_h - <z>_e
  double wavefunction_overlap = 0.0;
};

/// Solves every field point; results keep the input order. Fields must lie in
/// [0, 10] V/µm.
std::vector<StarkResult> stark_scan(const DeviceConfig& cfg, std::span<const double> fields,
                                    const WellMaterial& material = {}, int jobs = 1);

}  // namespace dipolab::stark
