#include "dipolab/core/mode_area.hpp"

#include <cmath>

#include "dipolab/core/constants.hpp"
#include "dipolab/core/errors.hpp"

namespace dipolab {

ModeArea mode_area_from_duration(double width_um, double tau_p_ps, double vg_um_per_ps) {
  if (!(width_um > 0.0) || !(tau_p_ps > 0.0) || !(vg_um_per_ps > 0.0)) {
    throw DomainError("mode_area: width, pulse duration and group velocity must be > 0");
  }
  ModeArea m;
  m.width_w = width_um;
  m.pulse_duration_tau_p = tau_p_ps;
  m.group_velocity_vg = vg_um_per_ps;
  m.area_A = width_um * tau_p_ps * vg_um_per_ps;
  m.density_n = 2.0 / m.area_A;
  return m;
}

ModeArea mode_area(double width_um, double gamma_meV, double vg_um_per_ps) {
  if (!(gamma_meV > 0.0)) throw DomainError("mode_area: linewidth gamma must be > 0");
  return mode_area_from_duration(width_um, kHbar / gamma_meV, vg_um_per_ps);
}

double effective_pulse_width(double tau_p_ps, double spot_size_um, double vg_um_per_ps) {
  if (tau_p_ps < 0.0 || spot_size_um < 0.0 || !(vg_um_per_ps > 0.0) ||
      (tau_p_ps == 0.0 && spot_size_um == 0.0)) {
    throw DomainError("effective_pulse_width: inputs must be non-negative with v_g > 0");
  }
  const double spatial = spot_size_um / vg_um_per_ps;
  return std::hypot(tau_p_ps, spatial);
}

}  // namespace dipolab
