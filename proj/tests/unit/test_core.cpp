#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dipolab/core/constants.hpp"
#include "dipolab/core/device.hpp"
#include "dipolab/core/errors.hpp"
#include "dipolab/core/mode_area.hpp"
#include "dipolab/core/parallel.hpp"

using namespace dipolab;

TEST_CASE("constants") {
  CHECK(kHbar == doctest::Approx(0.6582119569).epsilon(1e-12));
  CHECK(kC == doctest::Approx(299.792458).epsilon(1e-12));
  CHECK(wavelength_nm_to_meV(812.0) == doctest::Approx(1e6 * 1239.8419 / 812.0 / 1000.0).epsilon(1e-12));
  CHECK(meV_to_wavelength_nm(wavelength_nm_to_meV(817.8)) == doctest::Approx(817.8).epsilon(1e-14));
}

TEST_CASE("mode area examples") {
  const auto a = mode_area(5.0, 0.215, 25.6);
  CHECK(a.pulse_duration_tau_p == doctest::Approx(3.06).epsilon(0.005));
  // Quoted 385 µm² is a rounding of the same product.
  CHECK(a.area_A == doctest::Approx(392.0).epsilon(0.005));
  CHECK(std::abs(a.area_A - 385.0) / 385.0 < 0.02);
  CHECK(a.density_n == doctest::Approx(5.1e-3).epsilon(0.01));

  const auto b = mode_area(5.0, 0.115, 52.1);
  CHECK(b.pulse_duration_tau_p == doctest::Approx(5.72).epsilon(0.005));
  CHECK(b.area_A == doctest::Approx(1490.0).epsilon(0.005));
  CHECK(std::abs(b.area_A - 1465.0) / 1465.0 < 0.02);

  const auto unit = mode_area(1.0, 0.6582119569, 1.0);
  CHECK(unit.pulse_duration_tau_p == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(unit.area_A == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(unit.density_n == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("mode area invariants and homogeneity") {
  for (double w : {0.28, 1.0, 5.0}) {
    const auto a = mode_area(w, 0.12, 40.0);
    CHECK(a.area_A == a.width_w * a.pulse_duration_tau_p * a.group_velocity_vg);
    CHECK(a.density_n == 2.0 / a.area_A);
    const auto b = mode_area(2.0 * w, 0.12, 40.0);
    CHECK(b.area_A == doctest::Approx(2.0 * a.area_A).epsilon(1e-14));
    CHECK(b.density_n == doctest::Approx(0.5 * a.density_n).epsilon(1e-14));
  }
  CHECK_THROWS_AS(mode_area(0.0, 0.2, 1.0), DomainError);
  CHECK_THROWS_AS(mode_area(1.0, -0.2, 1.0), DomainError);
  CHECK_THROWS_AS(mode_area(1.0, 0.2, 0.0), DomainError);
}

TEST_CASE("effective pulse width") {
  CHECK(effective_pulse_width(3.06, 0.0, 25.6) == doctest::Approx(3.06));
  CHECK(effective_pulse_width(0.0, 25.6, 25.6) == doctest::Approx(1.0));
  CHECK(effective_pulse_width(3.0, 100.0, 25.0) == doctest::Approx(5.0).epsilon(1e-14));
  double prev = 0.0;
  for (double d = 0.0; d < 200.0; d += 10.0) {
    const double t = effective_pulse_width(2.0, d, 30.0);
    CHECK(t >= prev);
    prev = t;
  }
  CHECK_THROWS_AS(effective_pulse_width(1.0, 1.0, 0.0), DomainError);
}

TEST_CASE("device config") {
  const auto ref = DeviceConfig::reference();
  CHECK_NOTHROW(ref.validate());
  CHECK(ref.field_V_per_um() == doctest::Approx(2.5 / 1.06));
  CHECK(averaged_core_index(12, 0.02, 3.65, 0.51, 3.30) ==
        doctest::Approx((0.24 * 3.65 + 0.27 * 3.30) / 0.51));

  const auto round = device_from_json(device_to_json(ref));
  CHECK(round.layer_stack.size() == ref.layer_stack.size());
  CHECK(round.strip_layer.index == ref.strip_layer.index);
  CHECK(round.voltage_V == ref.voltage_V);

  auto j = device_to_json(ref);
  j.erase("qw_count");
  try {
    device_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "device.qw_count");
  }
  j = device_to_json(ref);
  j["layer_stack"][1]["index"] = "high";
  try {
    device_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "device.layer_stack[1].index");
  }
  j = device_to_json(ref);
  j["layer_stack"][0]["thickness_um"] = -1.0;
  CHECK_THROWS_AS(device_from_json(j), DomainError);
}

TEST_CASE("parallel_for keeps input order and reports the first failure") {
  std::vector<int> out(100, -1);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));

  try {
    parallel_for(50, 3, [](std::size_t i) {
      if (i == 7 || i == 31) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "7");
  }
}
