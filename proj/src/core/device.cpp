#include "dipolab/core/device.hpp"

#include <cmath>

#include "dipolab/core/errors.hpp"

namespace dipolab {

namespace {

constexpr double kIndexAl80 = 3.10;
constexpr double kIndexAl40 = 3.30;
constexpr double kIndexGaAs = 3.65;
constexpr double kIndexIto = 1.7;

const nlohmann::json& require(const nlohmann::json& j, const std::string& key,
                              const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError(path + "." + key, "missing required key '" + path + "." + key + "'");
  }
  return *it;
}

double number(const nlohmann::json& j, const std::string& key, const std::string& path) {
  const auto& v = require(j, key, path);
  if (!v.is_number()) {
    throw ConfigError(path + "." + key, "key '" + path + "." + key + "' must be a number");
  }
  return v.get<double>();
}

double number_or(const nlohmann::json& j, const std::string& key, const std::string& path,
                 double fallback) {
  return j.contains(key) ? number(j, key, path) : fallback;
}

Layer layer_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "'" + path + "' must be an object");
  Layer l;
  l.material = j.value("material", std::string{});
  l.thickness_um = number(j, "thickness_um", path);
  l.index = number(j, "index", path);
  return l;
}

nlohmann::json layer_to_json(const Layer& l) {
  return {{"material", l.material}, {"thickness_um", l.thickness_um}, {"index", l.index}};
}

}  // namespace

double averaged_core_index(int qw_count, double qw_thickness_um, double qw_index,
                           double core_thickness_um, double host_index) {
  const double well_total = qw_count * qw_thickness_um;
  if (qw_count < 0 || qw_thickness_um <= 0.0 || core_thickness_um <= 0.0 ||
      well_total > core_thickness_um) {
    throw DomainError("averaged_core_index: wells must fit inside a positive core thickness");
  }
  return (well_total * qw_index + (core_thickness_um - well_total) * host_index) /
         core_thickness_um;
}

void DeviceConfig::validate() const {
  if (layer_stack.empty()) throw DomainError("device: layer_stack is empty");
  auto check_layer = [](const Layer& l, const std::string& where) {
    if (!(l.thickness_um > 0.0)) {
      throw DomainError("device: " + where + " '" + l.material + "' thickness must be > 0");
    }
    if (!(l.index > 1.0)) {
      throw DomainError("device: " + where + " '" + l.material + "' refractive index must be > 1");
    }
  };
  for (const auto& l : layer_stack) check_layer(l, "layer");
  check_layer(strip_layer, "strip layer");
  if (!(cover_index >= 1.0)) throw DomainError("device: cover_index must be >= 1");
  if (!(wavelength_um > 0.0)) throw DomainError("device: wavelength_um must be > 0");
  if (qw_count < 1) throw DomainError("device: qw_count must be >= 1");
  if (!(qw_thickness_um > 0.0)) throw DomainError("device: qw_thickness_um must be > 0");
  if (!(strip_width_um > 0.0)) throw DomainError("device: strip_width_um must be > 0");
  if (!(channel_length_um > 0.0)) throw DomainError("device: channel_length_um must be > 0");
  if (!(structure_thickness_um > 0.0)) {
    throw DomainError("device: structure_thickness_um must be > 0");
  }
  if (!std::isfinite(voltage_V)) throw DomainError("device: voltage_V must be finite");
}

DeviceConfig DeviceConfig::reference() {
  DeviceConfig cfg;
  const double core = averaged_core_index(12, 0.020, kIndexGaAs, 0.510, kIndexAl40);
  cfg.layer_stack = {
      {"Al0.8Ga0.2As", 0.500, kIndexAl80},
      {"Al0.4Ga0.6As+12xGaAs QW", 0.510, core},
      {"GaAs cap", 0.010, kIndexGaAs},
  };
  cfg.strip_layer = {"ITO", 0.050, kIndexIto};
  cfg.voltage_V = 2.5;
  return cfg;
}

DeviceConfig device_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "'" + path + "' must be an object");
  DeviceConfig cfg = DeviceConfig::reference();

  const auto& stack = require(j, "layer_stack", path);
  if (!stack.is_array()) {
    throw ConfigError(path + ".layer_stack", "'" + path + ".layer_stack' must be an array");
  }
  cfg.layer_stack.clear();
  for (std::size_t i = 0; i < stack.size(); ++i) {
    cfg.layer_stack.push_back(
        layer_from_json(stack[i], path + ".layer_stack[" + std::to_string(i) + "]"));
  }
  if (j.contains("strip_layer")) {
    cfg.strip_layer = layer_from_json(j.at("strip_layer"), path + ".strip_layer");
  }
  cfg.cover_index = number_or(j, "cover_index", path, cfg.cover_index);
  cfg.wavelength_um = number_or(j, "wavelength_um", path, cfg.wavelength_um);
  const double qw = number(j, "qw_count", path);
  if (qw != std::floor(qw)) throw ConfigError(path + ".qw_count", "qw_count must be an integer");
  cfg.qw_count = static_cast<int>(qw);
  cfg.qw_thickness_um = number(j, "qw_thickness_um", path);
  cfg.strip_width_um = number(j, "strip_width_um", path);
  cfg.channel_length_um = number(j, "channel_length_um", path);
  cfg.voltage_V = number(j, "voltage_V", path);
  cfg.structure_thickness_um =
      number_or(j, "structure_thickness_um", path, cfg.structure_thickness_um);
  cfg.validate();
  return cfg;
}

nlohmann::json device_to_json(const DeviceConfig& cfg) {
  nlohmann::json stack = nlohmann::json::array();
  for (const auto& l : cfg.layer_stack) stack.push_back(layer_to_json(l));
  return {{"layer_stack", stack},
          {"strip_layer", layer_to_json(cfg.strip_layer)},
          {"cover_index", cfg.cover_index},
          {"wavelength_um", cfg.wavelength_um},
          {"qw_count", cfg.qw_count},
          {"qw_thickness_um", cfg.qw_thickness_um},
          {"strip_width_um", cfg.strip_width_um},
          {"channel_length_um", cfg.channel_length_um},
          {"voltage_V", cfg.voltage_V},
          {"structure_thickness_um", cfg.structure_thickness_um}};
}

}  // namespace dipolab
