#pragma once

namespace dipolab {

/// Rectangular area occupied by one polariton pulse: lateral width times
/// the pulse length in space (tau_p · v_g). `density_n` is the two-polariton
/// density 2/A.
struct ModeArea {
  double width_w = 0.0;              // µm
  double pulse_duration_tau_p = 0.0; // ps
  double group_velocity_vg = 0.0;    // µm/ps
  double area_A = 0.0;               // µm²
  double density_n = 0.0;            // µm⁻²
};

/// Mode area for a Fourier-limited pulse, tau_p = hbar / gamma.
ModeArea mode_area(double width_um, double gamma_meV, double vg_um_per_ps);

/// Mode area for an explicit pulse duration.
ModeArea mode_area_from_duration(double width_um, double tau_p_ps, double vg_um_per_ps);

/// Pulse duration broadened by a Gaussian spot of size delta travelling at v_g:
/// sqrt(tau_p² + (delta / v_g)²).
double effective_pulse_width(double tau_p_ps, double spot_size_um, double vg_um_per_ps);

}  // namespace dipolab
