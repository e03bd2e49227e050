#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace dipolab {

struct Layer {
  std::string material;
  double thickness_um = 0.0;
  double index = 1.0;  // refractive index at the working wavelength
};

/// Thickness-weighted refractive index of a multi-quantum-well core.
double averaged_core_index(int qw_count, double qw_thickness_um, double qw_index,
                           double core_thickness_um, double host_index);

/// Device description shared by every pipeline.
///
/// `layer_stack` runs from the substrate side upwards. Its first entry is
/// the lower cladding, which the slab solver treats as semi-infinite. The
/// strip layer sits on top of the stack only under the electrode; `cover_index`
/// is the medium above everything (air).
struct DeviceConfig {
  std::vector<Layer> layer_stack;
  Layer strip_layer;
  double cover_index = 1.0;
  double wavelength_um = 0.81;
  int qw_count = 12;
  double qw_thickness_um = 0.020;
  double strip_width_um = 5.0;
  double channel_length_um = 200.0;
  double voltage_V = 0.0;
  /// Electrode-to-electrode distance used for F = V / thickness.
  double structure_thickness_um = 1.06;

  /// Field across the structure for the configured voltage [V/µm].
  double field_V_per_um() const { return voltage_V / structure_thickness_um; }

  /// Throws DomainError naming the first violated invariant.
  void validate() const;

  /// The reference device: Al0.8Ga0.2As clad, 510 nm core with twelve 20 nm
  /// GaAs wells averaged into one layer, 10 nm GaAs cap, 50 nm ITO strip.
  static DeviceConfig reference();
};

/// Parses the `device` object. Throws ConfigError with the dotted key path
/// when a required key is missing or has the wrong type.
DeviceConfig device_from_json(const nlohmann::json& j, const std::string& path = "device");
nlohmann::json device_to_json(const DeviceConfig& cfg);

}  // namespace dipolab
