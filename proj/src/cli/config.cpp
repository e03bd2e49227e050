#include "dipolab/cli/config.hpp"

#include <cmath>
#include <fstream>

#include "dipolab/core/device.hpp"
#include "dipolab/core/errors.hpp"
#include "dipolab/hbt/timetags.hpp"

namespace dipolab::cli {

Json default_config() {
  Json c = Json::object();
  c["device"] = Json::parse(device_to_json(DeviceConfig::reference()).dump());
  c["stark"] = {{"field_max_V_per_um", 5.0},
                {"field_points", 21},
                {"material",
                 {{"mass_e", 0.067},
                  {"mass_hh", 0.35},
                  {"al_fraction", 0.4},
                  {"conduction_share", 0.65},
                  {"barrier_width_nm", 40.0},
                  {"grid_step_nm", 0.04}}}};
  c["waveguide"] = {{"mode_order", 0}, {"guide", "strip"}, {"ridge_side_index", 1.0}};
  c["polariton"] = {{"preset", "biased_2p5V"},
                    {"n_eff", 3.6},
                    {"half_span_meV", 8.0},
                    {"points", 801},
                    {"fit_fraction_range", {0.2, 0.8}},
                    {"operating_fractions", {0.68, 0.31}}};
  c["blockade"] = {{"gamma_meV", 0.215},
                   {"U_over_gamma", 0.1},
                   {"delta_lo_in_gamma", -5.0},
                   {"delta_hi_in_gamma", 5.0},
                   {"delta_points", 21},
                   {"pulse", "gaussian"},
                   {"window_in_tau", 10.0},
                   {"flat_top_length_in_tau", 50.0},
                   {"fock_cutoff", 6},
                   {"peak_occupation", 0.01},
                   {"coarse_points", 201}};
  c["calibration"] = {{"gammas_meV", {0.12, 0.22}},
                      {"u_over_gamma", {0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5}},
                      {"scan_points", 11},
                      {"window_in_tau", 10.0}};
  c["extraction"] = {{"g2_min", 0.94},
                     {"gamma_meV", 0.215},
                     {"width_um", 5.0},
                     {"v_g_um_per_ps", 25.6},
                     {"kappa", 0.61},
                     {"b", -0.56},
                     {"dipole_nm", 8.0},
                     {"chi2", 0.68},
                     {"C_ex", 50.0},
                     {"design_width_um", 0.28}};
  Json crosstalk = Json::array();
  for (const auto& x : hbt::default_crosstalk()) {
    crosstalk.push_back({{"delay_ps", x.delay_ps}, {"probability", x.probability}});
  }
  c["hbt"] = {{"n_pulses", 10000000},
              {"p_click", 0.0158},
              {"g2_target", 0.94},
              {"jitter_sigma_ps", 300.0},
              {"crosstalk", crosstalk},
              {"seed", 1},
              {"rep_period_ps", 12500.0},
              {"input", "timetags.csv"},
              {"bin_width_ps", 87.0},
              {"max_order", 50},
              {"window_fraction", 0.5},
              {"mask", "auto"},
              {"threshold_sigma", 5.0},
              {"bootstrap_resamples", 400},
              {"bootstrap_blocks", 200}};
  return c;
}

Json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string(), "config file '" + path.string() + "' is not valid JSON: " +
                                         e.what());
  }
}

namespace {

std::vector<std::string> split_key(std::string_view key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= key.size()) {
    const auto dot = key.find('.', start);
    const auto end = dot == std::string_view::npos ? key.size() : dot;
    parts.emplace_back(key.substr(start, end - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

bool is_index(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

}  // namespace

void apply_override(Json& root, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError(std::string(assignment),
                      "override '" + std::string(assignment) + "' must have the form key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  const auto parts = split_key(key);
  Json* node = &root;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p.empty()) throw ConfigError(key, "override key '" + key + "' has an empty segment");
    const bool last = i + 1 == parts.size();
    if (node->is_array() && is_index(p)) {
      const auto idx = std::stoul(p);
      if (idx >= node->size()) throw ConfigError(key, "override index out of range in '" + key + "'");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = Json::object();
      if (!node->is_object()) {
        throw ConfigError(key, "override '" + key + "' descends into a non-object value");
      }
      node = &(*node)[p];
    }
    if (last) *node = value;
  }
}

Json merged_with_defaults(const Json& config, const Json& defaults) {
  if (!config.is_object() || !defaults.is_object()) return config;
  Json out = config;
  for (auto it = defaults.begin(); it != defaults.end(); ++it) {
    if (!out.contains(it.key())) {
      out[it.key()] = it.value();
    } else if (out[it.key()].is_object() && it.value().is_object()) {
      out[it.key()] = merged_with_defaults(out[it.key()], it.value());
    }
  }
  return out;
}

Section::Section(const Json& node, std::string path) : node_(&node), path_(std::move(path)) {
  if (!node.is_object()) throw ConfigError(path_, "'" + path_ + "' must be an object");
}

std::string Section::key_path(std::string_view key) const {
  return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
}

bool Section::has(std::string_view key) const { return node_->contains(std::string(key)); }

const Json& Section::raw(std::string_view key) const {
  const auto it = node_->find(std::string(key));
  if (it == node_->end()) {
    throw ConfigError(key_path(key), "missing required key '" + key_path(key) + "'");
  }
  return *it;
}

Section Section::child(std::string_view key) const { return Section(raw(key), key_path(key)); }

double Section::number(std::string_view key) const {
  const Json& v = raw(key);
  if (!v.is_number()) throw ConfigError(key_path(key), "key '" + key_path(key) + "' must be a number");
  return v.get<double>();
}

std::int64_t Section::integer64(std::string_view key) const {
  const double v = number(key);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) {
    throw ConfigError(key_path(key), "key '" + key_path(key) + "' must be an integer");
  }
  return static_cast<std::int64_t>(v);
}

int Section::integer(std::string_view key) const {
  const auto v = integer64(key);
  if (v < INT32_MIN || v > INT32_MAX) {
    throw ConfigError(key_path(key), "key '" + key_path(key) + "' is out of range");
  }
  return static_cast<int>(v);
}

bool Section::boolean(std::string_view key) const {
  const Json& v = raw(key);
  if (!v.is_boolean()) throw ConfigError(key_path(key), "key '" + key_path(key) + "' must be a boolean");
  return v.get<bool>();
}

std::string Section::string(std::string_view key) const {
  const Json& v = raw(key);
  if (!v.is_string()) throw ConfigError(key_path(key), "key '" + key_path(key) + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> Section::numbers(std::string_view key) const {
  const Json& v = raw(key);
  if (!v.is_array()) throw ConfigError(key_path(key), "key '" + key_path(key) + "' must be an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw ConfigError(key_path(key) + "." + std::to_string(i),
                        "entries of '" + key_path(key) + "' must be numbers");
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::vector<int> Section::integers(std::string_view key) const {
  std::vector<int> out;
  for (double x : numbers(key)) {
    if (x != std::floor(x)) {
      throw ConfigError(key_path(key), "entries of '" + key_path(key) + "' must be integers");
    }
    out.push_back(static_cast<int>(x));
  }
  return out;
}

}  // namespace dipolab::cli
