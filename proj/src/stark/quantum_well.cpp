#include "dipolab/stark/quantum_well.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dipolab/core/constants.hpp"
#include "dipolab/core/errors.hpp"
#include "dipolab/core/parallel.hpp"

namespace dipolab::stark {

namespace {

constexpr int kMaxIterations = 5000;

// Solves (diag + off·(shift matrix)) x = rhs for a symmetric tridiagonal
// matrix with constant off-diagonal. Assumes the matrix is positive definite.
void thomas_solve(std::span<const double> diag, double off, std::span<const double> rhs,
                  std::vector<double>& scratch, std::vector<double>& x) {
  const std::size_t n = diag.size();
  scratch.resize(n);
  x.resize(n);
  double denom = diag[0];
  scratch[0] = off / denom;
  x[0] = rhs[0] / denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - off * scratch[i - 1];
    scratch[i] = off / denom;
    x[i] = (rhs[i] - off * x[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= scratch[i] * x[i + 1];
}

double norm2(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

}  // namespace

QwPotential make_potential(double well_width_um, double field_V_per_um,
                           const WellMaterial& material) {
  if (!(well_width_um > 0.0)) throw DomainError("make_potential: well width must be > 0");
  if (!(material.grid_step_nm > 0.0) || !(material.barrier_width_nm > 0.0)) {
    throw DomainError("make_potential: grid step and barrier width must be > 0");
  }
  const double half_well_nm = 0.5 * well_width_um * 1e3;
  const double half_span_nm = half_well_nm + material.barrier_width_nm;
  const auto half_points = static_cast<long>(std::llround(half_span_nm / material.grid_step_nm));
  const double h_nm = half_span_nm / static_cast<double>(half_points);

  QwPotential pot;
  pot.step_h = h_nm * 1e-3;
  pot.mass_e = material.mass_e;
  pot.mass_h = material.mass_hh;
  pot.field_F = field_V_per_um;
  pot.well_width = well_width_um;
  const std::size_t n = 2 * static_cast<std::size_t>(half_points) + 1;
  pot.grid_z.resize(n);
  pot.potential_e.resize(n);
  pot.potential_h.resize(n);
  const double ce = material.conduction_offset_meV();
  const double cv = material.valence_offset_meV();
  for (std::size_t i = 0; i < n; ++i) {
    const double z_nm = (static_cast<double>(i) - static_cast<double>(half_points)) * h_nm;
    // Barrier fraction of the node's cell; a node on the interface gets half
    // the offset, which keeps the discretisation second order.
    const double edge = std::abs(z_nm) - half_well_nm;
    const double barrier = edge > 1e-9 ? 1.0 : (edge >= -1e-9 ? 0.5 : 0.0);
    // V/µm times nm gives mV, i.e. meV for a unit charge.
    const double tilt = field_V_per_um * z_nm;
    pot.grid_z[i] = z_nm * 1e-3;
    pot.potential_e[i] = barrier * ce + tilt;
    pot.potential_h[i] = barrier * cv - tilt;
  }
  return pot;
}

QwPotential make_custom_potential(std::vector<double> grid_z_um, std::vector<double> potential_meV,
                                  double mass) {
  if (grid_z_um.size() < 3 || grid_z_um.size() != potential_meV.size()) {
    throw DomainError("make_custom_potential: grid and potential must match, >= 3 points");
  }
  if (!(mass > 0.0)) throw DomainError("make_custom_potential: mass must be > 0");
  QwPotential pot;
  pot.step_h = grid_z_um[1] - grid_z_um[0];
  if (!(pot.step_h > 0.0)) throw DomainError("make_custom_potential: grid must be increasing");
  for (std::size_t i = 1; i < grid_z_um.size(); ++i) {
    if (std::abs(grid_z_um[i] - grid_z_um[i - 1] - pot.step_h) > 1e-9 * pot.step_h) {
      throw DomainError("make_custom_potential: grid must be uniform");
    }
  }
  pot.grid_z = std::move(grid_z_um);
  pot.potential_e = potential_meV;
  pot.potential_h = std::move(potential_meV);
  pot.mass_e = mass;
  pot.mass_h = mass;
  return pot;
}

Eigenstate solve_ground_state(const QwPotential& pot, Species species) {
  const auto& v = species == Species::electron ? pot.potential_e : pot.potential_h;
  const double mass = species == Species::electron ? pot.mass_e : pot.mass_h;
  const std::size_t n = v.size();
  if (n < 3) throw DomainError("solve_ground_state: grid needs at least 3 points");
  for (double x : v) {
    if (!std::isfinite(x)) throw DomainError("solve_ground_state: potential must be finite");
  }
  const double h_nm = pot.step_h * 1e3;
  const double t = PhysicalConstants::hbar2_over_2m0_nm2 / (mass * h_nm * h_nm);

  // Gershgorin: every eigenvalue is >= min V, so this shift keeps the
  // shifted matrix positive definite and selects the ground state.
  const double shift = *std::min_element(v.begin(), v.end()) - 1.0;
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = v[i] + 2.0 * t - shift;

  std::vector<double> x(n, 1.0), y, scratch;
  double lambda = 0.0;
  double residual = 0.0;
  for (int it = 1; it <= kMaxIterations; ++it) {
    thomas_solve(diag, -t, x, scratch, y);
    const double ny = norm2(y);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;

    // Rayleigh quotient and residual of the unshifted operator.
    double num = 0.0;
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double ax = (v[i] + 2.0 * t) * x[i];
      if (i > 0) ax -= t * x[i - 1];
      if (i + 1 < n) ax -= t * x[i + 1];
      num += x[i] * ax;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double ax = (v[i] + 2.0 * t) * x[i];
      if (i > 0) ax -= t * x[i - 1];
      if (i + 1 < n) ax -= t * x[i + 1];
      residual += (ax - num * x[i]) * (ax - num * x[i]);
    }
    residual = std::sqrt(residual);
    const bool settled = it > 1 && std::abs(num - lambda) <= 1e-12 * std::max(1.0, std::abs(num));
    lambda = num;
    if (settled && residual < 1e-6) {
      Eigenstate out;
      out.energy = lambda;
      out.iterations = it;
      const double sum = std::accumulate(x.begin(), x.end(), 0.0);
      const double scale = (sum < 0.0 ? -1.0 : 1.0) / std::sqrt(h_nm * 1e-3);
      out.wavefunction.resize(n);
      for (std::size_t i = 0; i < n; ++i) out.wavefunction[i] = x[i] * scale;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "solve_ground_state: inverse iteration did not converge after " << kMaxIterations
      << " iterations (last energy " << lambda << " meV, residual " << residual << " meV)";
  throw NumericalError(msg.str());
}

namespace {

// Eigenvalues of the finite-difference matrix strictly below x.
int sturm_count(std::span<const double> v, double t, double x) {
  int count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    q = v[i] + 2.0 * t - x - (i == 0 ? 0.0 : t * t / q);
    if (q == 0.0) q = -1e-300;
    if (q < 0.0) ++count;
  }
  return count;
}

double well_weight(const QwPotential& pot, const std::vector<double>& psi) {
  double w = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (std::abs(pot.grid_z[i]) <= pot.well_width) w += psi[i] * psi[i];
  }
  return w * pot.step_h;
}

}  // namespace

Eigenstate solve_eigenpair(const QwPotential& pot, Species species, int index) {
  const auto& v = species == Species::electron ? pot.potential_e : pot.potential_h;
  const double mass = species == Species::electron ? pot.mass_e : pot.mass_h;
  const std::size_t n = v.size();
  if (n < 3) throw DomainError("solve_eigenpair: grid needs at least 3 points");
  if (index < 0 || static_cast<std::size_t>(index) >= n) {
    throw DomainError("solve_eigenpair: index out of range");
  }
  const double h_nm = pot.step_h * 1e3;
  const double t = PhysicalConstants::hbar2_over_2m0_nm2 / (mass * h_nm * h_nm);

  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end()) + 4.0 * t;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(v, t, mid) > index) hi = mid; else lo = mid;
  }
  const double lambda = 0.5 * (lo + hi);

  // Inverse iteration just below the eigenvalue; tiny pivots are nudged
  // rather than pivoted, which only rescales the growing component.
  const double shift = lambda - 1e-9 * std::max(1.0, std::abs(lambda));
  std::vector<double> x(n), y(n), c(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 1e-3 * static_cast<double>(i % 7);
  for (int it = 1; it <= 8; ++it) {
    double denom = v[0] + 2.0 * t - shift;
    if (std::abs(denom) < 1e-300) denom = 1e-300;
    c[0] = -t / denom;
    y[0] = x[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
      denom = v[i] + 2.0 * t - shift + t * c[i - 1];
      if (std::abs(denom) < 1e-300) denom = 1e-300;
      c[i] = -t / denom;
      y[i] = (x[i] + t * y[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) y[i] -= c[i] * y[i + 1];
    const double ny = norm2(y);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
  }

  double num = 0.0, residual = 0.0;
  std::vector<double> ax(n);
  for (std::size_t i = 0; i < n; ++i) {
    ax[i] = (v[i] + 2.0 * t) * x[i];
    if (i > 0) ax[i] -= t * x[i - 1];
    if (i + 1 < n) ax[i] -= t * x[i + 1];
    num += x[i] * ax[i];
  }
  for (std::size_t i = 0; i < n; ++i) residual += (ax[i] - num * x[i]) * (ax[i] - num * x[i]);
  residual = std::sqrt(residual);
  if (!(residual < 1e-6)) {
    std::ostringstream msg;
    msg << "solve_eigenpair: state " << index << " did not converge (energy " << num
        << " meV, residual " << residual << " meV)";
    throw NumericalError(msg.str());
  }
  Eigenstate out;
  out.energy = num;
  out.iterations = 8;
  const double sum = std::accumulate(x.begin(), x.end(), 0.0);
  const double scale = (sum < 0.0 ? -1.0 : 1.0) / std::sqrt(pot.step_h);
  out.wavefunction.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.wavefunction[i] = x[i] * scale;
  return out;
}

Eigenstate solve_confined_state(const QwPotential& pot, Species species) {
  auto ground = solve_ground_state(pot, species);
  if (!(pot.well_width > 0.0) || well_weight(pot, ground.wavefunction) >= 0.5) return ground;
  constexpr int kMaxStates = 64;
  for (int k = 1; k < kMaxStates; ++k) {
    auto s = solve_eigenpair(pot, species, k);
    if (well_weight(pot, s.wavefunction) >= 0.5) return s;
  }
  throw NumericalError("solve_confined_state: no well-localised state among the lowest 64");
}

ConvergenceCheck check_grid_convergence(double well_width_um, double field_V_per_um,
                                        Species species, const WellMaterial& material) {
  ConvergenceCheck c;
  c.energy =
      solve_confined_state(make_potential(well_width_um, field_V_per_um, material), species).energy;
  WellMaterial fine = material;
  fine.grid_step_nm *= 0.5;
  c.energy_refined =
      solve_confined_state(make_potential(well_width_um, field_V_per_um, fine), species).energy;
  c.converged = std::abs(c.energy - c.energy_refined) < 1e-3;
  return c;
}

double expectation_z(std::span<const double> grid_z, std::span<const double> psi, double step) {
  double acc = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) acc += grid_z[i] * psi[i] * psi[i];
  return acc * step;
}

std::vector<StarkResult> stark_scan(const DeviceConfig& cfg, std::span<const double> fields,
                                    const WellMaterial& material, int jobs) {
  for (double f : fields) {
    if (!(f >= 0.0 && f <= 10.0)) {
      throw DomainError("stark_scan: fields must lie in [0, 10] V/um");
    }
  }
  const double width = cfg.qw_thickness_um;
  const auto zero = make_potential(width, 0.0, material);
  const double e0 = solve_ground_state(zero, Species::electron).energy +
                    solve_ground_state(zero, Species::heavy_hole).energy;

  std::vector<StarkResult> out(fields.size());
  parallel_for(fields.size(), jobs, [&](std::size_t k) {
    const auto pot = make_potential(width, fields[k], material);
    const auto e = solve_confined_state(pot, Species::electron);
    const auto h = solve_confined_state(pot, Species::heavy_hole);
    StarkResult r;
    r.field_F = fields[k];
    r.voltage = fields[k] * cfg.structure_thickness_um;
    r.shift_deltaE = e.energy + h.energy - e0;
    const double ze = expectation_z(pot.grid_z, e.wavefunction, pot.step_h);
    const double zh = expectation_z(pot.grid_z, h.wavefunction, pot.step_h);
    // The unbiased well is mirror symmetric, so any residue is round-off.
    r.dipole_length_d = fields[k] == 0.0 ? 0.0 : (zh - ze) * 1e3;
    double overlap = 0.0;
    for (std::size_t i = 0; i < pot.grid_z.size(); ++i) {
      overlap += e.wavefunction[i] * h.wavefunction[i];
    }
    r.wavefunction_overlap = std::clamp(std::abs(overlap * pot.step_h), 0.0, 1.0);
    out[k] = r;
  });
  return out;
}

}  // namespace dipolab::stark
