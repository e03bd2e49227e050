#include "dipolab/cli/output.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace dipolab::cli {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 9);
  return std::string(buf, r.ptr);
}

Json rounded(const Json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) return nullptr;
    double out = 0.0;
    const std::string s = format_double(v);
    std::from_chars(s.data(), s.data() + s.size(), out);
    return out;
  }
  if (j.is_array()) {
    Json a = Json::array();
    for (const auto& x : j) a.push_back(rounded(x));
    return a;
  }
  if (j.is_object()) {
    Json o = Json::object();
    for (auto it = j.begin(); it != j.end(); ++it) o[it.key()] = rounded(it.value());
    return o;
  }
  return j;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[value & 0xf];
    value >>= 4;
  }
  return s;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename into '" + path.string() + "': " + ec.message());
  }
}

CsvDocument::CsvDocument(std::string manifest_hash, std::vector<std::string> header)
    : columns_(header.size()) {
  text_ = "# manifest=" + manifest_hash + "\n";
  for (std::size_t i = 0; i < header.size(); ++i) {
    text_ += (i ? "," : "") + header[i];
  }
  text_ += '\n';
}

void CsvDocument::comment(std::string_view text) {
  text_ += "# ";
  text_ += text;
  text_ += '\n';
}

void CsvDocument::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw std::logic_error("CSV row has the wrong width");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text_ += ',';
    text_ += format_double(values[i]);
  }
  text_ += '\n';
}

void CsvDocument::row_cells(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("CSV row has the wrong width");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
}

std::string json_document(const std::string& manifest_hash, const Json& body) {
  Json doc = Json::object();
  doc["manifest"] = manifest_hash;
  const Json r = rounded(body);
  for (auto it = r.begin(); it != r.end(); ++it) doc[it.key()] = it.value();
  return doc.dump(2) + "\n";
}

}  // namespace dipolab::cli
