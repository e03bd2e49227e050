#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "context.hpp"
#include "dipolab/blockade/extraction.hpp"
#include "dipolab/blockade/model.hpp"
#include "dipolab/core/device.hpp"
#include "dipolab/core/errors.hpp"
#include "dipolab/core/mode_area.hpp"
#include "dipolab/hbt/histogram.hpp"
#include "dipolab/hbt/timetags.hpp"
#include "dipolab/polariton/dispersion.hpp"
#include "dipolab/stark/quantum_well.hpp"
#include "dipolab/waveguide/slab.hpp"

namespace dipolab::cli {

void RunContext::write_csv(const std::string& name, const CsvDocument& doc) {
  atomic_write(out_dir / name, doc.str());
  written.push_back(name);
}

void RunContext::write_json(const std::string& name, const Json& body) {
  atomic_write(out_dir / name, json_document(manifest_hash, body));
  written.push_back(name);
}

namespace {

std::vector<double> linspace(double lo, double hi, int n, const std::string& key) {
  if (n < 2) throw ConfigError(key, "'" + key + "' must be at least 2");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  v.back() = hi;
  return v;
}

DeviceConfig load_device(const RunContext& ctx) {
  const nlohmann::json j = nlohmann::json::parse(ctx.config.at("device").dump());
  try {
    return device_from_json(j, "device");
  } catch (const DomainError& e) {
    throw ConfigError("device", e.what());
  }
}

stark::WellMaterial load_material(const Section& s) {
  stark::WellMaterial m;
  m.mass_e = s.number("mass_e");
  m.mass_hh = s.number("mass_hh");
  m.al_fraction = s.number("al_fraction");
  m.conduction_share = s.number("conduction_share");
  m.barrier_width_nm = s.number("barrier_width_nm");
  m.grid_step_nm = s.number("grid_step_nm");
  return m;
}

polariton::CouplingParams load_coupling(const Section& s) {
  const std::string preset = s.string("preset");
  polariton::CouplingParams p;
  if (preset == "biased_2p5V") {
    p = polariton::CouplingParams::biased_2p5V();
  } else if (preset == "unbiased") {
    p = polariton::CouplingParams::unbiased();
  } else if (preset == "custom") {
    p = polariton::CouplingParams::from_wavelengths(
        s.number("E_hh_nm"), s.number("E_lh_nm"), s.number("Omega_hh_meV"),
        s.number("Omega_lh_meV"), s.number("n_eff"), s.has("voltage_V") ? s.number("voltage_V") : 0.0);
  } else {
    throw ConfigError(s.key_path("preset"),
                      "'" + s.key_path("preset") + "' must be biased_2p5V, unbiased or custom");
  }
  p.n_eff = s.number("n_eff");
  return p;
}

blockade::BlockadeParams load_blockade(const Section& s) {
  const double gamma = s.number("gamma_meV");
  const double U = s.has("U_dd_meV") ? s.number("U_dd_meV") : s.number("U_over_gamma") * gamma;
  const std::string pulse = s.string("pulse");
  blockade::BlockadeParams p;
  if (pulse == "gaussian") {
    p = blockade::BlockadeParams::gaussian(0.0, U, gamma, s.number("window_in_tau"));
    p.target_peak_occupation = s.number("peak_occupation");
  } else if (pulse == "flat_top") {
    p = blockade::BlockadeParams::flat_top(0.0, U, gamma, s.number("flat_top_length_in_tau"),
                                           s.number("peak_occupation"));
  } else {
    throw ConfigError(s.key_path("pulse"), "'" + s.key_path("pulse") + "' must be gaussian or flat_top");
  }
  p.fock_cutoff = s.integer("fock_cutoff");
  p.max_fock_cutoff = std::max(p.max_fock_cutoff, p.fock_cutoff);
  p.coarse_points = s.integer("coarse_points");
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ConfigError("blockade", e.what());
  }
  return p;
}

Json curve_json(const blockade::DetuningCurve& c) {
  return {{"g2_min", c.g2_min},       {"Delta_min_meV", c.Delta_min},
          {"g2_max", c.g2_max},       {"Delta_max_meV", c.Delta_max},
          {"blockade_shape", c.blockade_shape}};
}

std::filesystem::path resolve_input(const RunContext& ctx, const std::string& name) {
  const std::filesystem::path p(name);
  if (p.is_absolute()) return p;
  const auto in_out = ctx.out_dir / p;
  if (std::filesystem::exists(in_out)) return in_out;
  return p;
}

}  // namespace

Json cmd_stark_scan(RunContext& ctx) {
  const DeviceConfig dev = load_device(ctx);
  const Section s = ctx.section("stark");
  const stark::WellMaterial mat = load_material(s.child("material"));
  const std::vector<double> fields =
      s.has("fields_V_per_um")
          ? s.numbers("fields_V_per_um")
          : linspace(0.0, s.number("field_max_V_per_um"), s.integer("field_points"),
                     "stark.field_points");
  const auto results = stark::stark_scan(dev, fields, mat, ctx.jobs);

  CsvDocument csv(ctx.manifest_hash, {"field_V_per_um", "voltage_V", "shift_meV", "dipole_nm"});
  for (const auto& r : results) csv.row({r.field_F, r.voltage, r.shift_deltaE, r.dipole_length_d});
  ctx.write_csv("stark.csv", csv);

  const double f_op = dev.field_V_per_um();
  const std::vector<double> op{std::abs(f_op)};
  const auto at_op = stark::stark_scan(dev, op, mat, 1).front();
  return {{"operating_field_V_per_um", at_op.field_F},
          {"operating_dipole_nm", at_op.dipole_length_d},
          {"operating_shift_meV", at_op.shift_deltaE}};
}

Json cmd_wg_mode(RunContext& ctx) {
  const DeviceConfig dev = load_device(ctx);
  const Section s = ctx.section("waveguide");
  const int order = s.integer("mode_order");
  const std::string guide = s.string("guide");

  const auto outside = waveguide::device_slab(dev, false);
  const auto under = waveguide::device_slab(dev, true);
  const auto slab = waveguide::solve_slab_te(outside, order);
  const auto slab_strip = waveguide::solve_slab_te(under, order);
  waveguide::GuidedMode lateral;
  if (guide == "strip") {
    lateral = waveguide::effective_index_strip(under, outside, dev.strip_width_um);
  } else if (guide == "ridge") {
    lateral = waveguide::effective_index_ridge(outside, s.number("ridge_side_index"),
                                               dev.strip_width_um);
  } else {
    throw ConfigError(s.key_path("guide"), "'" + s.key_path("guide") + "' must be strip or ridge");
  }

  CsvDocument lat(ctx.manifest_hash, {"y_um", "field"});
  for (std::size_t i = 0; i < lateral.x.size(); ++i) lat.row({lateral.x[i], lateral.profile[i]});
  ctx.write_csv("wg_profile.csv", lat);
  CsvDocument vert(ctx.manifest_hash, {"x_um", "field"});
  for (std::size_t i = 0; i < slab.x.size(); ++i) vert.row({slab.x[i], slab.profile[i]});
  ctx.write_csv("wg_slab_profile.csv", vert);

  Json body = {{"guide", guide},
               {"width_um", dev.strip_width_um},
               {"slab_n_eff", slab.n_eff},
               {"slab_n_eff_under_strip", slab_strip.n_eff},
               {"slab_residual", waveguide::mode_equation_residual(outside, slab)},
               {"n_eff", lateral.n_eff},
               {"fwhm_um", lateral.fwhm_width}};
  ctx.write_json("wg_mode.json", body);
  return body;
}

Json cmd_dispersion(RunContext& ctx) {
  const Section s = ctx.section("polariton");
  const auto params = load_coupling(s);
  const auto grid = polariton::beta_window(params, s.number("half_span_meV"), s.integer("points"));
  const auto branches = polariton::dispersion(params, grid);
  for (const auto& b : branches) {
    CsvDocument csv(ctx.manifest_hash, {"beta", "E_meV", "chi_te2", "chi_hh2", "chi_lh2", "vg"});
    for (const auto& x : b.samples) csv.row({x.beta, x.E, x.chi_te2, x.chi_hh2, x.chi_lh2, x.v_g});
    ctx.write_csv("dispersion_" + std::string(polariton::branch_name(b.branch_id)) + ".csv", csv);
  }
  const auto range = s.numbers("fit_fraction_range");
  if (range.size() != 2) {
    throw ConfigError(s.key_path("fit_fraction_range"), "'polariton.fit_fraction_range' needs two values");
  }
  const auto& lp = branches[0];
  const auto fit = polariton::group_velocity_vs_fraction(lp, range[0], range[1]);
  Json ops = Json::array();
  for (double f : s.numbers("operating_fractions")) {
    const auto x = polariton::sample_at_fraction(lp, f);
    if (!x) throw DomainError("dispersion: the LP never reaches exciton fraction " + std::to_string(f));
    ops.push_back({{"exciton_fraction", f}, {"beta", x->beta}, {"E_meV", x->E}, {"v_g", x->v_g}});
  }
  Json body = {{"E_hh_meV", params.E_hh},
               {"E_lh_meV", params.E_lh},
               {"photon_velocity", params.photon_velocity()},
               {"fit", {{"v_p", fit.v_p}, {"r_squared", fit.r_squared}, {"samples", fit.pairs.size()}}},
               {"operating_points", ops}};
  ctx.write_json("dispersion.json", body);
  return body;
}

Json cmd_g2_sweep(RunContext& ctx) {
  const Section s = ctx.section("blockade");
  const auto base = load_blockade(s);
  const double g = base.gamma_p;
  const auto deltas = linspace(s.number("delta_lo_in_gamma") * g, s.number("delta_hi_in_gamma") * g,
                               s.integer("delta_points"), "blockade.delta_points");
  const auto curve = blockade::detuning_sweep(base, deltas, ctx.jobs);
  CsvDocument csv(ctx.manifest_hash, {"delta_meV", "g2_0"});
  for (const auto& p : curve.points) csv.row({p.Delta, p.g2_0});
  ctx.write_csv("g2_sweep.csv", csv);
  Json body = curve_json(curve);
  body["gamma_meV"] = g;
  body["U_dd_meV"] = base.U_dd;
  ctx.write_json("g2_sweep.json", body);
  return body;
}

Json cmd_calibrate(RunContext& ctx) {
  const Section s = ctx.section("calibration");
  blockade::CalibrationOptions opt;
  opt.window_in_tau = s.number("window_in_tau");
  opt.scan_points = s.integer("scan_points");
  opt.jobs = ctx.jobs;
  const auto gammas = s.numbers("gammas_meV");
  const auto us = s.numbers("u_over_gamma");
  const auto cal = blockade::calibrate_kappa(gammas, us, opt);

  CsvDocument csv(ctx.manifest_hash, {"gamma_meV", "u_over_gamma", "depth", "delta_min_meV"});
  for (const auto& p : cal.points) csv.row({p.gamma, p.u_over_gamma, p.depth, p.Delta_min});
  ctx.write_csv("calibration.csv", csv);
  Json per = Json::array();
  for (const auto& g : cal.per_gamma) {
    per.push_back({{"gamma_meV", g.gamma}, {"kappa", g.fit.kappa}, {"b", g.fit.b}});
  }
  Json body = {{"kappa", cal.kappa},
               {"b", cal.b},
               {"rms_residual", cal.pooled.rms_residual},
               {"kappa_spread", cal.kappa_spread},
               {"residual_at_smallest_u", cal.residual_at_smallest_u},
               {"per_gamma", per}};
  ctx.write_json("calibration.json", body);
  return body;
}

Json cmd_extract(RunContext& ctx) {
  const Section s = ctx.section("extraction");
  const double gamma = s.number("gamma_meV");
  const double vg = s.number("v_g_um_per_ps");
  const double chi2 = s.number("chi2");
  const double d = s.number("dipole_nm");
  const ModeArea area = mode_area(s.number("width_um"), gamma, vg);
  const auto verdict =
      blockade::full_blockade_condition(s.number("design_width_um"), d, chi2, s.number("C_ex"));
  const auto r = blockade::build_report(s.number("g2_min"), gamma, area, s.number("kappa"),
                                        s.number("b"), verdict);
  Json body = {{"g2_min", r.g2_min},
               {"gamma_meV", r.gamma},
               {"kappa", r.kappa},
               {"b", r.b},
               {"tau_p_ps", area.pulse_duration_tau_p},
               {"area_um2", area.area_A},
               {"U_dd_meV", r.U_dd_extracted},
               {"g_dd_meV_um2", r.g_dd},
               {"R_b_um", r.R_b},
               {"n_um2", r.n},
               {"n_b_um2", r.n_b},
               {"n_over_n_b", r.n_over_n_b},
               {"blockade_lhs", r.blockade.lhs},
               {"blockade_verdict", r.blockade.verdict},
               {"blockade_margin", r.blockade.margin},
               {"chi2_threshold", r.blockade.chi2_threshold},
               {"C_ex_implied", blockade::exciton_constant(r.g_dd, chi2, vg, d)}};
  ctx.write_json("extraction.json", body);
  return body;
}

namespace {

hbt::GeneratorConfig load_generator(const RunContext& ctx, const Section& s) {
  hbt::GeneratorConfig g;
  g.n_pulses = s.integer64("n_pulses");
  g.p_click = s.number("p_click");
  g.g2_target = s.number("g2_target");
  g.jitter_sigma = s.number("jitter_sigma_ps");
  g.rep_period_T = s.number("rep_period_ps");
  g.seed = ctx.seed ? *ctx.seed : static_cast<std::uint64_t>(s.integer64("seed"));
  const Json& xt = s.raw("crosstalk");
  if (!xt.is_array()) throw ConfigError("hbt.crosstalk", "'hbt.crosstalk' must be an array");
  for (std::size_t i = 0; i < xt.size(); ++i) {
    const Section e(xt[i], "hbt.crosstalk." + std::to_string(i));
    g.crosstalk.push_back({e.number("delay_ps"), e.number("probability")});
  }
  return g;
}

hbt::HistogramOptions load_histogram_options(const Section& s) {
  hbt::HistogramOptions o;
  o.bin_width = s.number("bin_width_ps");
  o.max_order = s.integer("max_order");
  o.window_fraction = s.number("window_fraction");
  return o;
}

}  // namespace

Json cmd_hbt_generate(RunContext& ctx) {
  const Section s = ctx.section("hbt");
  const auto stream = hbt::generate_stream(load_generator(ctx, s));
  std::ostringstream text;
  text << "# manifest=" << ctx.manifest_hash << '\n';
  hbt::write_timetags(text, stream);
  const std::string name = std::filesystem::path(s.string("input")).filename().string();
  atomic_write(ctx.out_dir / name, text.str());
  ctx.written.push_back(name);
  return {{"events", stream.events.size()}, {"file", name}};
}

Json cmd_hbt_analyze(RunContext& ctx) {
  const Section s = ctx.section("hbt");
  const auto path = resolve_input(ctx, s.string("input"));
  std::ifstream in(path);
  if (!in) throw ConfigError("hbt.input", "cannot open timetag file '" + path.string() + "'");
  const auto stream = hbt::read_timetags(in);
  const auto opt = load_histogram_options(s);
  auto hist = hbt::build_histogram(stream, opt);

  hbt::MaskSpec mask;
  mask.threshold_sigma = s.number("threshold_sigma");
  const Json& m = s.raw("mask");
  if (m.is_string() && m.get<std::string>() == "auto") {
    mask.automatic = true;
  } else if (m.is_array()) {
    mask.automatic = false;
    mask.explicit_m = s.integers("mask");
  } else {
    throw ConfigError("hbt.mask", "'hbt.mask' must be \"auto\" or an array of peak indices");
  }
  const auto est = hbt::estimate_g2(hist, mask);

  CsvDocument h(ctx.manifest_hash, {"delay_ps", "counts"});
  for (std::size_t i = 0; i < hist.bins.size(); ++i) {
    h.row({hist.bin_center(i), static_cast<double>(hist.bins[i])});
  }
  ctx.write_csv("histogram.csv", h);
  CsvDocument peaks(ctx.manifest_hash, {"m", "counts", "masked"});
  for (int k = -hist.max_order; k <= hist.max_order; ++k) {
    const bool masked = std::any_of(est.masked.begin(), est.masked.end(),
                                    [k](const auto& x) { return x.m == k; });
    peaks.row({static_cast<double>(k), static_cast<double>(hist.peak(k)), masked ? 1.0 : 0.0});
  }
  ctx.write_csv("peaks.csv", peaks);

  Json masked = Json::array();
  for (const auto& x : est.masked) masked.push_back({{"m", x.m}, {"reason", x.reason}});
  Json body = {{"C", est.C},
               {"S", est.S},
               {"sigma_S", est.sigma_S},
               {"N_side", est.N_side},
               {"g2_0", est.g2_0},
               {"uncertainty", est.uncertainty},
               {"masked", masked}};
  const int resamples = s.integer("bootstrap_resamples");
  if (resamples > 0 && stream.n_pulses >= s.integer("bootstrap_blocks")) {
    const auto boot = hbt::bootstrap_g2(stream, opt, est.masked, resamples,
                                        s.integer("bootstrap_blocks"), stream.seed + 1);
    body["bootstrap_std"] = boot.std_dev;
  }
  ctx.write_json("hbt_estimate.json", body);
  return body;
}

Json cmd_reproduce(RunContext& ctx) {
  CsvDocument table(ctx.manifest_hash, {"quantity", "reference", "computed", "unit"});
  Json rows = Json::array();
  auto add = [&](const std::string& name, double reference, double computed, const std::string& unit) {
    table.row_cells({name, format_double(reference), format_double(computed), unit});
    rows.push_back({{"quantity", name}, {"reference", reference}, {"computed", computed}, {"unit", unit}});
  };

  const Json stark = cmd_stark_scan(ctx);
  add("dipole_length", 8.0, stark["operating_dipole_nm"].get<double>(), "nm");

  const Json wg = cmd_wg_mode(ctx);
  add("slab_n_eff", 3.6, wg["slab_n_eff"].get<double>(), "1");
  add("mode_fwhm_wide_strip", 4.9, wg["fwhm_um"].get<double>(), "um");
  {
    const DeviceConfig dev = load_device(ctx);
    const auto narrow = waveguide::effective_index_ridge(
        waveguide::device_slab(dev, false), ctx.section("waveguide").number("ridge_side_index"), 0.5);
    add("mode_fwhm_narrow_ridge", 0.28, narrow.fwhm_width, "um");
  }

  const Json disp = cmd_dispersion(ctx);
  const auto& ops = disp["operating_points"];
  const double refs[] = {25.6, 52.1};
  for (std::size_t i = 0; i < ops.size() && i < 2; ++i) {
    add("v_g_at_fraction_" + format_double(ops[i]["exciton_fraction"].get<double>()), refs[i],
        ops[i]["v_g"].get<double>(), "um/ps");
  }
  add("v_g_fit_r_squared", 0.99, disp["fit"]["r_squared"].get<double>(), "1");

  const Json cal = cmd_calibrate(ctx);
  add("kappa", 0.61, cal["kappa"].get<double>(), "1");
  add("b", -0.56, cal["b"].get<double>(), "1");

  const Json sweep = cmd_g2_sweep(ctx);
  add("g2_min_simulated", 0.94, sweep["g2_min"].get<double>(), "1");

  const Json ex = cmd_extract(ctx);
  add("g_dd", 4.0, ex["g_dd_meV_um2"].get<double>(), "meV um^2");
  add("R_b", 3.4, ex["R_b_um"].get<double>(), "um");
  add("n_b", 0.05, ex["n_b_um2"].get<double>(), "um^-2");
  add("n", 5e-3, ex["n_um2"].get<double>(), "um^-2");
  add("n_over_n_b", 0.1, ex["n_over_n_b"].get<double>(), "1");
  add("chi2_threshold", 0.56, ex["chi2_threshold"].get<double>(), "1");
  add("C_ex", 50.0, ex["C_ex_implied"].get<double>(), "1");

  cmd_hbt_generate(ctx);
  const Json hb = cmd_hbt_analyze(ctx);
  add("hbt_g2_recovered", ctx.section("hbt").number("g2_target"), hb["g2_0"].get<double>(), "1");
  add("hbt_g2_uncertainty", 0.02, hb["uncertainty"].get<double>(), "1");

  ctx.write_csv("summary.csv", table);
  Json body = {{"rows", rows}};
  ctx.write_json("summary.json", body);
  return body;
}

}  // namespace dipolab::cli
