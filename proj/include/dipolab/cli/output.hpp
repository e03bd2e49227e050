#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dipolab::cli {

using Json = nlohmann::ordered_json;

/// Nine significant digits, '.' separator, independent of the locale.
std::string format_double(double value);

/// Rounds every floating-point number in the document to nine significant
/// digits so that dumps are stable.
Json rounded(const Json& j);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

/// Writes through a temporary file in the same directory and renames it
/// into place.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// CSV document whose first line is `# manifest=<hash>`.
class CsvDocument {
 public:
  CsvDocument(std::string manifest_hash, std::vector<std::string> header);
  void comment(std::string_view text);
  void row(const std::vector<double>& values);
  /// Mixed row: strings are written verbatim.
  void row_cells(const std::vector<std::string>& cells);
  std::string str() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

/// Pretty JSON with a leading "manifest" field.
std::string json_document(const std::string& manifest_hash, const Json& body);

}  // namespace dipolab::cli
