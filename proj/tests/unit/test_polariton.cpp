#include <cmath>
#include <algorithm>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "dipolab/core/constants.hpp"
#include "dipolab/core/errors.hpp"
#include "dipolab/polariton/dispersion.hpp"

using namespace dipolab;
using namespace dipolab::polariton;

namespace {

CouplingParams two_level(double omega) {
  CouplingParams p;
  p.E_hh = 1520.0;
  p.E_lh = 1540.0;
  p.Omega_hh = omega;
  p.Omega_lh = 0.0;
  return p;
}

double beta_for_photon(const CouplingParams& p, double E) {
  return E * p.n_eff / (PhysicalConstants::hbar_c);
}

}  // namespace

TEST_CASE("nm to meV conversion") {
  const auto p = CouplingParams::unbiased();
  CHECK(p.E_hh == doctest::Approx(1239841.9 / 812.0).epsilon(1e-12));
  CHECK(p.E_lh == doctest::Approx(1239841.9 / 809.3).epsilon(1e-12));
  CHECK(p.E_lh > p.E_hh);
  CHECK(p.Omega_hh == 6.4);
  const auto b = CouplingParams::biased_2p5V();
  CHECK(b.E_hh == doctest::Approx(1239841.9 / 817.8).epsilon(1e-12));
  CHECK(b.Omega_lh == 3.7);
  CHECK(b.voltage_tag == 2.5);
}

TEST_CASE("uncoupled limit gives bare modes") {
  auto p = CouplingParams::unbiased();
  p.Omega_hh = p.Omega_lh = 0.0;
  // Even point count keeps every sample off the exact photon/exciton crossing.
  const auto grid = beta_window(p, 20.0, 40);
  const auto br = dispersion(p, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double ete = p.photon_energy(grid[i]);
    std::vector<double> bare{ete, p.E_hh, p.E_lh};
    std::sort(bare.begin(), bare.end());
    for (int b = 0; b < 3; ++b) {
      const auto& s = br[b].samples[i];
      CHECK(s.E == doctest::Approx(bare[b]).epsilon(1e-9));
      for (double w : {s.chi_te2, s.chi_hh2, s.chi_lh2}) {
        CHECK((w < 1e-12 || w > 1.0 - 1e-12));
      }
    }
  }
  // Exactly at the crossing the pair is degenerate and flagged.
  const std::vector<double> at{beta_for_photon(p, p.E_hh)};
  const auto cross = dispersion(p, at);
  CHECK((cross[0].samples[0].degenerate || cross[1].samples[0].degenerate));
}

TEST_CASE("single exciton resonance splits by Omega") {
  const auto p = two_level(5.4);
  const double b0 = beta_for_photon(p, p.E_hh);
  const std::vector<double> beta{b0 * (1 - 1e-6), b0, b0 * (1 + 1e-6)};
  const auto br = dispersion(p, beta);
  const auto& lp = br[0].samples[1];
  const auto& mp = br[1].samples[1];
  CHECK(mp.E - lp.E == doctest::Approx(5.4).epsilon(1e-9));
  CHECK(lp.chi_te2 == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(lp.chi_hh2 == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(mp.chi_te2 == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(mp.chi_hh2 == doctest::Approx(0.5).epsilon(1e-9));
  // Analytic 2x2 group velocity at resonance: half the photon velocity.
  CHECK(lp.v_g == doctest::Approx(0.5 * p.photon_velocity()).epsilon(1e-6));
}

TEST_CASE("level repulsion in the single exciton case") {
  const auto p = two_level(5.4);
  const double b0 = beta_for_photon(p, p.E_hh);
  std::vector<double> beta;
  for (int i = -200; i <= 200; ++i) beta.push_back(b0 * (1.0 + 1e-4 * i));
  const auto br = dispersion(p, beta);
  double min_gap = 1e9;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    min_gap = std::min(min_gap, br[1].samples[i].E - br[0].samples[i].E);
  }
  CHECK(min_gap >= 0.5 * 5.4 * (1 - 1e-6));
  CHECK(min_gap == doctest::Approx(5.4).epsilon(1e-6));
}

TEST_CASE("Hopfield weights against an independent diagonalisation") {
  const auto p = CouplingParams::biased_2p5V();
  const auto grid = beta_window(p, 8.0, 161);
  const auto br = dispersion(p, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double ete = p.photon_energy(grid[i]);
    Eigen::Matrix3d H;
    H << ete, p.Omega_hh / 2, p.Omega_lh / 2, p.Omega_hh / 2, p.E_hh, 0, p.Omega_lh / 2, 0, p.E_lh;
    // Characteristic polynomial roots as an oracle for the energies.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H);
    double trace = 0.0;
    Eigen::Matrix3d hop;
    for (int b = 0; b < 3; ++b) {
      const auto& s = br[b].samples[i];
      CHECK(s.E == doctest::Approx(es.eigenvalues()(b)).epsilon(1e-12));
      CHECK(std::abs(s.chi_te2 + s.chi_hh2 + s.chi_lh2 - 1.0) < 1e-10);
      CHECK(s.exciton_fraction() > 0.0);
      CHECK(s.exciton_fraction() < 1.0);
      trace += s.E;
      hop.col(b) << std::sqrt(s.chi_te2), std::sqrt(s.chi_hh2), std::sqrt(s.chi_lh2);
      // Weights are the squared oracle eigenvector components.
      Eigen::Vector3d v = es.eigenvectors().col(b);
      for (int k = 0; k < 3; ++k) CHECK(std::abs(v(k) * v(k) - hop(k, b) * hop(k, b)) < 1e-10);
    }
    CHECK(std::abs(trace - (ete + p.E_hh + p.E_lh)) < 1e-9);
    CHECK(br[0].samples[i].E < br[1].samples[i].E);
    CHECK(br[1].samples[i].E < br[2].samples[i].E);
    const Eigen::Matrix3d V = es.eigenvectors();
    CHECK((V.transpose() * V - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("operating point and linear velocity law") {
  const auto p = CouplingParams::biased_2p5V();
  const auto grid = beta_window(p, 8.0, 801);
  const auto br = dispersion(p, grid);
  const auto& lp = br[0];
  const auto op = sample_at_fraction(lp, 0.68);
  REQUIRE(op.has_value());
  CHECK(op->v_g == doctest::Approx(25.6).epsilon(0.15));
  const auto op2 = sample_at_fraction(lp, 0.31);
  REQUIRE(op2.has_value());
  CHECK(op2->v_g == doctest::Approx(52.1).epsilon(0.15));
  CHECK_FALSE(sample_at_fraction(lp, 1.5).has_value());

  const auto fit = group_velocity_vs_fraction(lp, 0.2, 0.8);
  CHECK(fit.r_squared > 0.99);
  CHECK(fit.pairs.size() >= 3);
  for (std::size_t i = 1; i < fit.pairs.size(); ++i) {
    CHECK(fit.pairs[i].first >= fit.pairs[i - 1].first);
  }
  // The intercept is the photon velocity.
  CHECK(fit.v_p == doctest::Approx(PhysicalConstants::c / 3.6).epsilon(0.05));
}

TEST_CASE("photon-like samples approach c over n_eff") {
  const auto p = CouplingParams::biased_2p5V();
  const double far = beta_for_photon(p, p.E_hh - 400.0);
  const std::vector<double> beta{far * 0.999, far, far * 1.001};
  const auto br = dispersion(p, beta);
  CHECK(br[0].samples[1].v_g == doctest::Approx(83.275).epsilon(1e-3));
  CHECK(p.photon_velocity() == doctest::Approx(299.792458 / 3.6).epsilon(1e-12));
}

TEST_CASE("group velocity needs three samples") {
  const auto p = CouplingParams::biased_2p5V();
  PolaritonBranch b;
  b.samples.resize(2);
  CHECK_THROWS_AS(group_velocity_vs_fraction(b), DomainError);
  const std::vector<double> unsorted{10.0, 9.0};
  CHECK_THROWS_AS(dispersion(p, unsorted), DomainError);
  const std::vector<double> negative{-1.0, 1.0};
  CHECK_THROWS_AS(dispersion(p, negative), DomainError);
}

TEST_CASE("streak delay inversion") {
  const std::vector<std::pair<double, double>> d{{0.0, 0.0}, {2.5, 4.0}};
  const auto v = velocity_from_delays(d, 200.0, 50.0);
  CHECK(v[0] == doctest::Approx(50.0).epsilon(1e-14));
  CHECK(v[1] == doctest::Approx(25.0).epsilon(1e-14));
  for (double vel : {10.0, 25.0, 49.0, 80.0}) {
    const double dt = delay_from_velocity(vel, 200.0, 50.0);
    const std::vector<std::pair<double, double>> one{{0.0, dt}};
    CHECK(velocity_from_delays(one, 200.0, 50.0)[0] == doctest::Approx(vel).epsilon(1e-12));
  }
  const std::vector<std::pair<double, double>> bad{{0.0, -4.0}};
  CHECK_THROWS_AS(velocity_from_delays(bad, 200.0, 50.0), DomainError);
  CHECK_THROWS_AS(velocity_from_delays(d, -1.0, 50.0), DomainError);
}
