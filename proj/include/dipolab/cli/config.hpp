#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dipolab/cli/output.hpp"

namespace dipolab::cli {

/// Complete configuration with every default filled in.
Json default_config();

/// Parses a JSON file. Parse failures raise ConfigError keyed by the path.
Json load_config(const std::filesystem::path& path);

/// Applies `dotted.key=value`. The value is read as JSON when it parses
/// (numbers, booleans, arrays, quoted strings) and as a bare string
/// otherwise. Missing intermediate objects are created; numeric segments
/// index arrays.
void apply_override(Json& root, std::string_view assignment);

/// Fills keys missing from `config` with the defaults, recursively through
/// objects. Arrays and scalars present in `config` win.
Json merged_with_defaults(const Json& config, const Json& defaults);

/// Typed read access to one object of the configuration. Every failure
/// names the full dotted key.
class Section {
 public:
  Section(const Json& node, std::string path);

  bool has(std::string_view key) const;
  Section child(std::string_view key) const;
  const Json& raw(std::string_view key) const;

  double number(std::string_view key) const;
  int integer(std::string_view key) const;
  std::int64_t integer64(std::string_view key) const;
  bool boolean(std::string_view key) const;
  std::string string(std::string_view key) const;
  std::vector<double> numbers(std::string_view key) const;
  std::vector<int> integers(std::string_view key) const;

  std::string key_path(std::string_view key) const;
  const std::string& path() const { return path_; }

 private:
  const Json* node_;
  std::string path_;
};

}  // namespace dipolab::cli
