#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include "doctest.h"
#include "dipolab/core/constants.hpp"
#include "dipolab/core/device.hpp"
#include "dipolab/core/errors.hpp"
#include "dipolab/stark/quantum_well.hpp"

using namespace dipolab;
using namespace dipolab::stark;

namespace {

std::vector<double> uniform_grid_um(double half_span_nm, double step_nm) {
  const auto half = static_cast<long>(std::llround(half_span_nm / step_nm));
  std::vector<double> z;
  for (long i = -half; i <= half; ++i) z.push_back(i * step_nm * 1e-3);
  return z;
}

std::vector<double> field_scan(double hi, int n) {
  std::vector<double> f;
  for (int i = 0; i < n; ++i) f.push_back(hi * i / (n - 1));
  return f;
}

}  // namespace

TEST_CASE("particle in a box limit") {
  const double L = 20.0, m = 0.067;
  const auto z = uniform_grid_um(15.0, 0.01);
  std::vector<double> v;
  for (double zi : z) v.push_back(std::abs(zi * 1e3) > 0.5 * L + 1e-9 ? 1e6 : 0.0);
  const auto pot = make_custom_potential(z, v, m);
  const auto s = solve_ground_state(pot, Species::electron);
  const double analytic =
      PhysicalConstants::hbar2_over_2m0_nm2 * std::numbers::pi * std::numbers::pi / (m * L * L);
  CHECK(analytic == doctest::Approx(14.05).epsilon(0.02));
  CHECK(s.energy == doctest::Approx(analytic).epsilon(0.02));
}

TEST_CASE("harmonic oscillator ground state") {
  const double m = 0.067, hw = 10.0;
  const double A = PhysicalConstants::hbar2_over_2m0_nm2 / m;
  const auto z = uniform_grid_um(90.0, 0.05);
  std::vector<double> v;
  for (double zi : z) {
    const double znm = zi * 1e3;
    v.push_back(hw * hw * znm * znm / (4.0 * A));
  }
  const auto s = solve_ground_state(make_custom_potential(z, v, m), Species::electron);
  CHECK(s.energy == doctest::Approx(0.5 * hw).epsilon(0.005));
}

TEST_CASE("ground state normalisation and symmetry") {
  const auto pot = make_potential(0.020, 0.0);
  for (auto sp : {Species::electron, Species::heavy_hole}) {
    const auto s = solve_ground_state(pot, sp);
    double norm = 0.0;
    for (double p : s.wavefunction) norm += p * p * pot.step_h;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    const double zc = expectation_z(pot.grid_z, s.wavefunction, pot.step_h);
    CHECK(std::abs(zc) < 1e-6 * 0.020);
  }
}

TEST_CASE("grid satisfies the convergence precondition") {
  for (double f : {0.0, 1.0, 2.36, 4.0, 5.0}) {
    for (auto sp : {Species::electron, Species::heavy_hole}) {
      const auto c = check_grid_convergence(0.020, f, sp);
      CHECK(c.converged);
    }
  }
}

TEST_CASE("potential geometry and tilt") {
  const WellMaterial mat;
  const auto pot = make_potential(0.020, 1.5, mat);
  const double span = pot.grid_z.back() - pot.grid_z.front();
  CHECK(span >= 0.020 + 2 * 2 * 0.020 - 1e-12);  // barriers >= 2x well width each side
  const double ce = mat.conduction_offset_meV(), cv = mat.valence_offset_meV();
  for (std::size_t i = 0; i < pot.grid_z.size(); ++i) {
    const double sum = pot.potential_e[i] + pot.potential_h[i];  // tilt cancels
    const double tilt = 0.5 * (pot.potential_e[i] - pot.potential_h[i] - sum * (ce - cv) / (ce + cv));
    CHECK(tilt == doctest::Approx(1.5 * pot.grid_z[i] * 1e3).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("stark scan at zero field") {
  const auto cfg = DeviceConfig::reference();
  const std::vector<double> f{0.0};
  const auto r = stark_scan(cfg, f).front();
  CHECK(r.dipole_length_d == 0.0);
  CHECK(r.shift_deltaE == 0.0);
  CHECK(r.wavefunction_overlap > 0.9);
}

TEST_CASE("quadratic shift at low field") {
  const auto cfg = DeviceConfig::reference();
  const auto fields = field_scan(0.5, 6);
  const auto r = stark_scan(cfg, fields);
  double num = 0.0, den = 0.0;
  for (const auto& x : r) {
    num += x.shift_deltaE * x.field_F * x.field_F;
    den += std::pow(x.field_F, 4);
  }
  const double a = num / den;
  CHECK(a < 0.0);
  for (const auto& x : r) {
    if (x.field_F == 0.0) continue;
    const double fit = a * x.field_F * x.field_F;
    CHECK(std::abs(x.shift_deltaE - fit) < 0.05 * std::abs(fit));
  }
  // Even order at the origin: the slope vanishes.
  const std::vector<double> tiny{0.0, 1e-3};
  const auto t = stark_scan(cfg, tiny);
  CHECK(std::abs(t[1].shift_deltaE / 1e-3) < 1e-2);
}

TEST_CASE("monotone dipole and shift on [0, 5] V/um") {
  const auto cfg = DeviceConfig::reference();
  const auto fields = field_scan(5.0, 21);
  const auto r = stark_scan(cfg, fields);
  for (std::size_t i = 1; i < r.size(); ++i) {
    CHECK(r[i].dipole_length_d >= r[i - 1].dipole_length_d);
    CHECK(r[i].shift_deltaE <= r[i - 1].shift_deltaE);
    CHECK(r[i].voltage == doctest::Approx(r[i].field_F * 1.06));
  }
}

TEST_CASE("grid refinement changes d by less than 1%") {
  const auto cfg = DeviceConfig::reference();
  const auto fields = field_scan(5.0, 11);
  WellMaterial fine;
  fine.grid_step_nm = 0.02;
  const auto coarse = stark_scan(cfg, fields);
  const auto refined = stark_scan(cfg, fields, fine);
  for (std::size_t i = 1; i < fields.size(); ++i) {
    CHECK(std::abs(coarse[i].dipole_length_d - refined[i].dipole_length_d) <
          0.01 * refined[i].dipole_length_d);
  }
}

TEST_CASE("operating point dipole length") {
  const auto cfg = DeviceConfig::reference();
  const std::vector<double> f{2.5 / 1.06};
  const auto r = stark_scan(cfg, f).front();
  CHECK(r.dipole_length_d >= 5.6);
  CHECK(r.dipole_length_d <= 10.4);
}

TEST_CASE("stark scan preconditions") {
  const auto cfg = DeviceConfig::reference();
  const std::vector<double> bad{-0.1};
  CHECK_THROWS_AS(stark_scan(cfg, bad), DomainError);
  const std::vector<double> high{10.5};
  CHECK_THROWS_AS(stark_scan(cfg, high), DomainError);
  CHECK_THROWS_AS(make_custom_potential({0.0, 1.0}, {0.0, 0.0}, 0.1), DomainError);
}

TEST_CASE("excited eigenpairs match a dense eigen-solve") {
  // Coarse grid so the dense oracle stays cheap.
  WellMaterial m;
  m.grid_step_nm = 0.5;
  const auto pot = make_potential(0.020, 1.0, m);
  const std::size_t n = pot.grid_z.size();
  const double h_nm = pot.step_h * 1e3;
  const double t = 38.09982 / (pot.mass_e * h_nm * h_nm);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    H(i, i) = pot.potential_e[i] + 2 * t;
    if (i + 1 < n) H(i, i + 1) = H(i + 1, i) = -t;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  for (int k = 0; k < 4; ++k) {
    const auto s = solve_eigenpair(pot, Species::electron, k);
    CHECK(s.energy == doctest::Approx(es.eigenvalues()(k)).epsilon(1e-9));
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += s.wavefunction[i] * es.eigenvectors()(i, k);
    CHECK(std::abs(dot) * std::sqrt(pot.step_h) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("strong field keeps the hole in the well") {
  // At 5 V/um the tilted barrier falls below the hole level, so the lowest
  // eigenstate is pinned at the grid wall.
  const auto pot = make_potential(0.020, 5.0);
  const auto wall = solve_ground_state(pot, Species::heavy_hole);
  CHECK(expectation_z(pot.grid_z, wall.wavefunction, pot.step_h) > 0.030);
  const auto bound = solve_confined_state(pot, Species::heavy_hole);
  const double zh = expectation_z(pot.grid_z, bound.wavefunction, pot.step_h);
  CHECK(zh > 0.0);
  CHECK(zh < 0.010);
  CHECK(bound.energy > wall.energy);
}
