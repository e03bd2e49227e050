#include "dipolab/cli/app.hpp"

#include <functional>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "context.hpp"
#include "dipolab/core/errors.hpp"

#ifndef DIPOLAB_VERSION
#define DIPOLAB_VERSION "0.0.0"
#endif

namespace dipolab::cli {

namespace {

struct Command {
  const char* name;
  const char* help;
  Json (*fn)(RunContext&);
};

constexpr Command kCommands[] = {
    {"stark-scan", "Stark shift and dipole length of the biased quantum well", cmd_stark_scan},
    {"wg-mode", "Slab and effective-index TE modes of the strip waveguide", cmd_wg_mode},
    {"dispersion", "Three-branch polariton dispersion and group velocities", cmd_dispersion},
    {"g2-sweep", "Pulse-integrated g2(0) versus laser detuning", cmd_g2_sweep},
    {"calibrate", "Fit kappa and b of the blockade dip depth", cmd_calibrate},
    {"extract", "Interaction strength, blockade radius and design condition", cmd_extract},
    {"hbt-generate", "Synthetic HBT timetag stream", cmd_hbt_generate},
    {"hbt-analyze", "Coincidence histogram and side-peak g2(0) estimate", cmd_hbt_analyze},
    {"reproduce-paper", "Full pipeline with a reference-versus-computed summary", cmd_reproduce},
};

std::string error_record(const char* kind, const std::string& message, const std::string& key = {}) {
  Json j = Json::object();
  j["error"] = kind;
  if (!key.empty()) j["key"] = key;
  j["message"] = message;
  return j.dump();
}

Json build_config(const std::string& path, const std::vector<std::string>& overrides) {
  const Json defaults = default_config();
  Json config = defaults;
  if (!path.empty()) {
    const Json file = load_config(path);
    if (!file.is_object()) throw ConfigError(path, "config root must be an object");
    config = merged_with_defaults(file, defaults);
    // The device block is taken verbatim so that missing keys are reported.
    if (file.contains("device")) config["device"] = file["device"];
  }
  for (const auto& o : overrides) apply_override(config, o);
  return config;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"dipolab: dipolar waveguide-polariton blockade laboratory", "dipolab"};
  app.fallthrough();
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", DIPOLAB_VERSION);

  std::string config_path;
  std::string out_dir = ".";
  int jobs = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--out-dir", out_dir, "Directory for output files")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads for parallel sweeps")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides hbt.seed)");
  app.add_option("--set", overrides, "Override a config key: dotted.key=value")
      ->type_name("KEY=VALUE")
      ->take_all();

  std::map<std::string, const Command*> by_name;
  for (const auto& c : kCommands) {
    app.add_subcommand(c.name, c.help);
    by_name[c.name] = &c;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_record("usage", e.what()) << '\n';
    return 2;
  }

  RunContext ctx;
  ctx.subcommand = app.get_subcommands().front()->get_name();
  ctx.config_path = config_path;
  ctx.overrides = overrides;
  ctx.out_dir = out_dir;
  ctx.jobs = jobs;
  if (seed_opt->count() > 0) ctx.seed = seed;

  try {
    ctx.config = build_config(config_path, overrides);
    std::string material = ctx.config.dump() + "\n" + ctx.subcommand + "\n" + DIPOLAB_VERSION + "\n";
    for (const auto& o : overrides) material += o + "\n";
    material += ctx.seed ? std::to_string(*ctx.seed) : std::string("-");
    ctx.manifest_hash = hex64(fnv1a64(material));

    Json manifest = {{"config_path", config_path},
                     {"subcommand", ctx.subcommand},
                     {"overrides", overrides},
                     {"output_directory", out_dir},
                     {"tool_version", DIPOLAB_VERSION},
                     {"hash", ctx.manifest_hash}};
    if (ctx.seed) manifest["seed"] = *ctx.seed;
    ctx.write_json("manifest.json", manifest);

    by_name.at(ctx.subcommand)->fn(ctx);
    for (const auto& f : ctx.written) out << (ctx.out_dir / f).string() << '\n';
    return 0;
  } catch (const ConfigError& e) {
    err << error_record("config", e.what(), e.key()) << '\n';
    return 2;
  } catch (const std::exception& e) {
    const char* kind = "error";
    if (dynamic_cast<const TruncationError*>(&e)) kind = "truncation";
    else if (dynamic_cast<const NumericalError*>(&e)) kind = "numerical";
    else if (dynamic_cast<const DomainError*>(&e)) kind = "domain";
    else if (dynamic_cast<const ModeCutoffError*>(&e)) kind = "mode_cutoff";
    else if (dynamic_cast<const StatisticsError*>(&e)) kind = "statistics";
    const std::string record = error_record(kind, e.what());
    err << record << '\n';
    try {
      atomic_write(ctx.out_dir / "error.json", record + "\n");
    } catch (...) {
    }
    return 1;
  }
}

}  // namespace dipolab::cli
