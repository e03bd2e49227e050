#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dipolab/cli/config.hpp"
#include "dipolab/cli/output.hpp"

namespace dipolab::cli {

struct RunContext {
  Json config;
  std::string config_path;
  std::string subcommand;
  std::vector<std::string> overrides;
  std::filesystem::path out_dir;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::string manifest_hash;
  std::vector<std::string> written;

  Section section(const char* name) const { return Section(config.at(name), name); }
  void write_csv(const std::string& name, const CsvDocument& doc);
  void write_json(const std::string& name, const Json& body);
};

Json cmd_stark_scan(RunContext& ctx);
Json cmd_wg_mode(RunContext& ctx);
Json cmd_dispersion(RunContext& ctx);
Json cmd_g2_sweep(RunContext& ctx);
Json cmd_calibrate(RunContext& ctx);
Json cmd_extract(RunContext& ctx);
Json cmd_hbt_generate(RunContext& ctx);
Json cmd_hbt_analyze(RunContext& ctx);
Json cmd_reproduce(RunContext& ctx);

}  // namespace dipolab::cli
