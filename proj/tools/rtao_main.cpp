// Copyright 2026 The rtao Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: transport solves, ballistic decomposition, internal
// data extraction (direct or measured), attenuation reconstruction, the
// (kn, h) error-scaling sweep and its fits.  Exit codes: 0 success, 2 bad
// usage/configuration, 3 solver failure, 4 unexpected error.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rtao/rtao.hpp"

namespace fs = std::filesystem;
using namespace rtao;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir, prefix;
  int workers = 1;
  bool no_accel = false;
};

void add_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--config", c.config_path, "JSON run configuration")->required();
  sub->add_option("--out", c.out_dir, "output directory (overrides config)");
  sub->add_option("--prefix", c.prefix, "output file prefix (overrides config)");
  sub->add_option("--workers", c.workers, "worker threads")->check(CLI::Range(1, 256));
  sub->add_flag("--no-accel", c.no_accel, "disable GMRES acceleration");
}

ExperimentConfig load_cfg(const CommonOpts& c) {
  ExperimentConfig cfg = load_config(c.config_path);
  if (!c.out_dir.empty()) cfg.output.dir = c.out_dir;
  if (!c.prefix.empty()) cfg.output.prefix = c.prefix;
  if (c.no_accel) cfg.solver.accelerate = false;
  return cfg;
}

fs::path out_path(const ExperimentConfig& cfg, const std::string& tail) {
  fs::path dir(cfg.output.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + dir.string());
  return dir / (cfg.output.prefix + "_" + tail);
}

void echo(const ExperimentConfig& cfg, const std::string& cmd, int workers) {
  std::cerr << "rtao " << cmd << ": grid=" << cfg.nx << "x" << cfg.ny
            << " n_dirs=" << cfg.n_dirs << " kn=" << format_double(cfg.kn)
            << " h=" << format_double(cfg.beam.h)
            << " accel=" << (cfg.solver.accelerate ? "on" : "off")
            << " workers=" << workers << "\n";
}

ScalarField masked_field(const ScalarField& f, const std::vector<char>& mask) {
  ScalarField out = f;
  for (size_t c = 0; c < out.v.size(); ++c)
    if (!mask[c]) out.v[c] = std::numeric_limits<double>::quiet_NaN();
  return out;
}

void emit(const std::string& key, double value) {
  std::cout << key << "=" << format_double(value) << "\n";
}
void emit(const std::string& key, int value) {
  std::cout << key << "=" << value << "\n";
}

int cmd_solve(const CommonOpts& co, bool adjoint, bool full) {
  ExperimentConfig cfg = load_cfg(co);
  echo(cfg, adjoint ? "solve (adjoint)" : "solve", co.workers);
  Grids gr = make_grids(cfg);
  MediaCoefficients media = make_media_at(cfg, gr.spatial, cfg.kn);
  SolveOptions opt = cfg.solver;
  opt.workers = co.workers;
  TransportSolution sol;
  if (!adjoint) {
    BeamSource beam = make_forward_beam(cfg, gr.angular, cfg.beam.h);
    std::vector<double> f = beam_trace(beam, gr.gamma_minus, gr.spatial);
    sol = solve_transport(gr, {media, f, VolumeSource::none(), TransportSign::forward},
                          opt);
  } else {
    BeamSource beam = make_adjoint_beam(cfg, gr.angular, cfg.beam.h);
    std::vector<double> g = beam_trace(beam, gr.gamma_plus, gr.spatial);
    sol = solve_transport(gr, {media, g, VolumeSource::none(), TransportSign::adjoint},
                          opt);
  }
  require_converged(sol.report, adjoint ? "adjoint" : "forward");
  const std::string tag = adjoint ? "adj" : "fwd";
  std::vector<std::string> outputs;
  fs::path mean_path = out_path(cfg, tag + "_mean.csv");
  write_scalar_csv(mean_path.string(), sol.mean);
  outputs.push_back(mean_path.filename().string());
  if (full) {
    fs::path phase_path = out_path(cfg, tag + "_phase.csv");
    write_phase_csv(phase_path.string(), sol.u);
    outputs.push_back(phase_path.filename().string());
  }
  nlohmann::json man = manifest_base(cfg, adjoint ? "solve-adjoint" : "solve");
  man["metrics"] = {{"iterations", sol.report.iterations},
                    {"residual", sol.report.residual},
                    {"scale", sol.report.scale},
                    {"accelerated", sol.report.accelerated}};
  man["outputs"] = outputs;
  write_manifest(out_path(cfg, tag + "_solve.manifest.json").string(), man);
  emit("iterations", sol.report.iterations);
  emit("residual", sol.report.residual);
  emit("mean_sup", sol.mean.sup_norm());
  return 0;
}

int cmd_decompose(const CommonOpts& co) {
  ExperimentConfig cfg = load_cfg(co);
  echo(cfg, "decompose", co.workers);
  Grids gr = make_grids(cfg);
  MediaCoefficients media = make_media_at(cfg, gr.spatial, cfg.kn);
  BeamSource beam_f = make_forward_beam(cfg, gr.angular, cfg.beam.h);
  BeamSource beam_g = make_adjoint_beam(cfg, gr.angular, cfg.beam.h);
  std::vector<double> f = beam_trace(beam_f, gr.gamma_minus, gr.spatial);
  SolveOptions opt = cfg.solver;
  opt.workers = co.workers;

  TransportSolution direct = solve_transport(
      gr, {media, f, VolumeSource::none(), TransportSign::forward}, opt);
  require_converged(direct.report, "forward");
  BallisticPart b1 = ballistic_forward(gr, media, beam_f);
  TransportSolution rem =
      scattered_remainder(gr, media, b1.mean, TransportSign::forward, opt);
  require_converged(rem.report, "remainder");

  // Grid-consistent split: single upwind sweep plus its remainder must
  // reproduce the direct solve to solver tolerance.
  PhaseSpaceField b1u = ballistic_forward_upwind(gr, media, f, co.workers);
  TransportSolution remu = scattered_remainder(gr, media, angular_average(b1u),
                                               TransportSign::forward, opt);
  require_converged(remu.report, "remainder (grid-consistent)");
  double cons = 0;
  for (size_t t = 0; t < direct.u.v.size(); ++t)
    cons = std::max(cons, std::abs(b1u.v[t] + remu.u.v[t] - direct.u.v[t]));
  double gap = 0;
  ScalarField b1u_mean = angular_average(b1u);
  for (size_t c = 0; c < b1.mean.v.size(); ++c)
    gap = std::max(gap, std::abs(b1.mean.v[c] - b1u_mean.v[c]));

  PairedBallistic pair = ballistic_pair_mean(gr, media, beam_f, beam_g);
  std::vector<std::string> outputs;
  for (auto& [tail, field] :
       std::vector<std::pair<std::string, const ScalarField*>>{
           {"ballistic_mean.csv", &b1.mean},
           {"scattered_mean.csv", &rem.mean},
           {"pair.csv", &pair.value}}) {
    fs::path p = out_path(cfg, tail);
    write_scalar_csv(p.string(), *field);
    outputs.push_back(p.filename().string());
  }
  nlohmann::json man = manifest_base(cfg, "decompose");
  man["metrics"] = {{"consistency_sup", cons},
                    {"consistency_rel", cons / std::max(1e-300, direct.u.sup_norm())},
                    {"ballistic_mean_gap_sup", gap},
                    {"pair_sup", pair.value.sup_norm()},
                    {"direct_iterations", direct.report.iterations}};
  man["outputs"] = outputs;
  write_manifest(out_path(cfg, "decompose.manifest.json").string(), man);
  emit("consistency_sup", cons);
  emit("consistency_rel", cons / std::max(1e-300, direct.u.sup_norm()));
  emit("ballistic_mean_gap_sup", gap);
  emit("pair_sup", pair.value.sup_norm());
  return 0;
}

int cmd_internal(const CommonOpts& co) {
  ExperimentConfig cfg = load_cfg(co);
  echo(cfg, "internal", co.workers);
  PipelineResult pr = run_pipeline(cfg, co.workers, "direct");
  fs::path hp = out_path(cfg, "h_direct.csv");
  write_scalar_csv(hp.string(), pr.h_direct.h);
  nlohmann::json man = manifest_base(cfg, "internal");
  man["metrics"] = {{"fwd_iterations", pr.metrics.fwd_iterations},
                    {"adj_iterations", pr.metrics.adj_iterations},
                    {"h_sup", pr.h_direct.h.sup_norm()}};
  man["outputs"] = {hp.filename().string()};
  write_manifest(out_path(cfg, "internal.manifest.json").string(), man);
  emit("fwd_iterations", pr.metrics.fwd_iterations);
  emit("adj_iterations", pr.metrics.adj_iterations);
  emit("h_sup", pr.h_direct.h.sup_norm());
  return 0;
}

int cmd_measure(const CommonOpts& co) {
  ExperimentConfig cfg = load_cfg(co);
  echo(cfg, "measure", co.workers);
  Grids gr = make_grids(cfg);
  MediaCoefficients media = make_media_at(cfg, gr.spatial, cfg.kn);
  BeamSource beam_f = make_forward_beam(cfg, gr.angular, cfg.beam.h);
  BeamSource beam_g = make_adjoint_beam(cfg, gr.angular, cfg.beam.h);
  std::vector<double> f = beam_trace(beam_f, gr.gamma_minus, gr.spatial);
  std::vector<double> g = beam_trace(beam_g, gr.gamma_plus, gr.spatial);
  SolveOptions opt = cfg.solver;
  opt.workers = 1;  // parallelism goes to the measurement lattice
  BtEvaluator bt(gr, media, f, g, opt);
  MeasurementSet ms = measure_lattice(bt, gr.spatial, cfg.order, cfg.eps, co.workers);
  apply_measurement_noise(ms, cfg.noise);
  fs::path mp = out_path(cfg, "measurements.csv");
  write_measurements_csv(mp.string(), ms);
  double sup = 0;
  for (const auto& r : ms.rows) sup = std::max(sup, std::abs(r.bt));
  nlohmann::json man = manifest_base(cfg, "measure");
  man["metrics"] = {{"rows", static_cast<int>(ms.rows.size())},
                    {"order", cfg.order},
                    {"eps", cfg.eps},
                    {"noise_level", cfg.noise.level},
                    {"bt_sup", sup}};
  man["outputs"] = {mp.filename().string()};
  write_manifest(out_path(cfg, "measure.manifest.json").string(), man);
  emit("rows", static_cast<int>(ms.rows.size()));
  emit("bt_sup", sup);
  return 0;
}

int cmd_recover(const CommonOpts& co, const std::string& measurements_path) {
  ExperimentConfig cfg = load_cfg(co);
  echo(cfg, "recover", co.workers);
  Grids gr = make_grids(cfg);
  MeasurementSet ms = read_measurements_csv(measurements_path);
  InternalField h = recover_internal(ms, gr.spatial);
  fs::path hp = out_path(cfg, "h_measured.csv");
  write_scalar_csv(hp.string(), h.h);
  nlohmann::json man = manifest_base(cfg, "recover");
  man["metrics"] = {{"rows", static_cast<int>(ms.rows.size())},
                    {"order", h.order},
                    {"imag_residue", h.imag_residue},
                    {"h_sup", h.h.sup_norm()}};
  man["outputs"] = {hp.filename().string()};
  write_manifest(out_path(cfg, "recover.manifest.json").string(), man);
  emit("rows", static_cast<int>(ms.rows.size()));
  emit("imag_residue", h.imag_residue);
  emit("h_sup", h.h.sup_norm());
  return 0;
}

int cmd_reconstruct(const CommonOpts& co, const std::string& mode) {
  ExperimentConfig cfg = load_cfg(co);
  echo(cfg, "reconstruct (" + mode + ")", co.workers);
  PipelineResult pr = run_pipeline(cfg, co.workers, mode);
  std::vector<std::string> outputs;
  auto dump = [&](const std::string& tail, const ScalarField& f) {
    fs::path p = out_path(cfg, tail);
    write_scalar_csv(p.string(), f);
    outputs.push_back(p.filename().string());
  };
  dump("fwd_mean.csv", pr.fwd.mean);
  dump("adj_mean.csv", pr.adj.mean);
  dump("h_direct.csv", pr.h_direct.h);
  if (mode == "measured") {
    dump("h_measured.csv", pr.h_used.h);
    fs::path mp = out_path(cfg, "measurements.csv");
    write_measurements_csv(mp.string(), pr.measurements);
    outputs.push_back(mp.filename().string());
  }
  dump("pair.csv", pr.pair.value);
  dump("remainder.csv", pr.remainder);
  dump("pred_error.csv", masked_field(pr.pred_err.err, pr.pred_err.mask));
  dump("recon.csv", masked_field(pr.recon.sigma_over_kn, pr.recon.mask));

  nlohmann::json man = manifest_base(cfg, "reconstruct");
  man["mode"] = mode;
  man["metrics"] = {{"fwd_iterations", pr.metrics.fwd_iterations},
                    {"adj_iterations", pr.metrics.adj_iterations},
                    {"pred_err_l2", pr.metrics.pred_err_l2},
                    {"pred_err_sup", pr.metrics.pred_err_sup},
                    {"line_sup", pr.metrics.line_sup},
                    {"line_rms", pr.metrics.line_rms},
                    {"recon_line_sup", pr.metrics.recon_line_sup},
                    {"recon_masked", pr.metrics.recon_masked},
                    {"pred_masked", pr.metrics.pred_masked}};
  if (mode == "measured") {
    man["metrics"]["h_rel_l2"] = pr.metrics.h_rel_l2;
    man["metrics"]["imag_residue"] = pr.metrics.imag_residue;
    man["metrics"]["bt_rows"] = pr.metrics.bt_rows;
  }
  man["outputs"] = outputs;
  write_manifest(out_path(cfg, "reconstruct.manifest.json").string(), man);
  emit("fwd_iterations", pr.metrics.fwd_iterations);
  emit("adj_iterations", pr.metrics.adj_iterations);
  emit("pred_err_l2", pr.metrics.pred_err_l2);
  emit("pred_err_sup", pr.metrics.pred_err_sup);
  emit("line_sup", pr.metrics.line_sup);
  emit("recon_line_sup", pr.metrics.recon_line_sup);
  emit("recon_masked", pr.metrics.recon_masked);
  if (mode == "measured") {
    emit("h_rel_l2", pr.metrics.h_rel_l2);
    emit("imag_residue", pr.metrics.imag_residue);
    emit("bt_rows", pr.metrics.bt_rows);
  }
  return 0;
}

int cmd_sweep(const CommonOpts& co) {
  ExperimentConfig cfg = load_cfg(co);
  echo(cfg, "sweep", co.workers);
  SweepResult sw = run_figure_sweep(cfg, co.workers);
  fs::path sp = out_path(cfg, "sweep.csv");
  write_sweep_csv(sp.string(), sw);
  nlohmann::json man = manifest_base(cfg, "sweep");
  man["rows"] = static_cast<int>(sw.rows.size());
  man["kn_values"] = sw.kn_values;
  man["h_values"] = sw.h_values;
  man["monotonicity"] = sweep_monotonicity(sw);
  man["outputs"] = {sp.filename().string()};
  write_manifest(out_path(cfg, "sweep.manifest.json").string(), man);
  emit("rows", static_cast<int>(sw.rows.size()));
  return 0;
}

int cmd_fit(const CommonOpts& co, const std::string& sweep_path) {
  ExperimentConfig cfg = load_cfg(co);
  echo(cfg, "fit", co.workers);
  SweepResult sw = read_sweep_csv(sweep_path);
  std::vector<FitRow> fits = fit_scalings(sw);
  if (fits.empty()) throw ConfigError("fit: sweep table has too few usable rows");
  fs::path fp = out_path(cfg, "fits.csv");
  write_fits_csv(fp.string(), fits);
  nlohmann::json man = manifest_base(cfg, "fit");
  man["rows"] = static_cast<int>(fits.size());
  man["outputs"] = {fp.filename().string()};
  write_manifest(out_path(cfg, "fit.manifest.json").string(), man);
  for (const auto& f : fits)
    std::cout << f.kind << " fixed=" << format_double(f.fixed)
              << " slope=" << format_double(f.fit.slope)
              << " r2=" << format_double(f.fit.r2) << " n=" << f.fit.n << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Transport-based internal-data toolkit: forward/adjoint solves, "
      "ballistic decomposition, coefficient-modulation measurements and "
      "attenuation reconstruction"};
  app.require_subcommand(1);

  CommonOpts co_solve, co_dec, co_int, co_meas, co_rec, co_recon, co_sweep, co_fit;
  bool adjoint = false, full = false;
  std::string measurements_path, mode = "direct", sweep_path;

  CLI::App* s_solve = app.add_subcommand("solve", "forward or adjoint transport solve");
  add_common(s_solve, co_solve);
  s_solve->add_flag("--adjoint", adjoint, "solve the adjoint problem instead");
  s_solve->add_flag("--full", full, "also dump the full phase-space solution");

  CLI::App* s_dec =
      app.add_subcommand("decompose", "ballistic/scattered splitting and checks");
  add_common(s_dec, co_dec);

  CLI::App* s_int =
      app.add_subcommand("internal", "internal field from a forward/adjoint pair");
  add_common(s_int, co_int);

  CLI::App* s_meas =
      app.add_subcommand("measure", "boundary-pairing measurements on the lattice");
  add_common(s_meas, co_meas);

  CLI::App* s_rec =
      app.add_subcommand("recover", "internal field from recorded measurements");
  add_common(s_rec, co_rec);
  s_rec->add_option("--measurements", measurements_path, "measurement CSV")->required();

  CLI::App* s_recon =
      app.add_subcommand("reconstruct", "end-to-end attenuation reconstruction");
  add_common(s_recon, co_recon);
  s_recon->add_option("--mode", mode, "internal-data route: direct or measured")
      ->check(CLI::IsMember({"direct", "measured"}));

  CLI::App* s_sweep =
      app.add_subcommand("sweep", "(kn, h) error-scaling sweep");
  add_common(s_sweep, co_sweep);

  CLI::App* s_fit = app.add_subcommand("fit", "power-law fits of a sweep table");
  add_common(s_fit, co_fit);
  s_fit->add_option("--sweep", sweep_path, "sweep CSV produced by the sweep command")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (s_solve->parsed()) return cmd_solve(co_solve, adjoint, full);
    if (s_dec->parsed()) return cmd_decompose(co_dec);
    if (s_int->parsed()) return cmd_internal(co_int);
    if (s_meas->parsed()) return cmd_measure(co_meas);
    if (s_rec->parsed()) return cmd_recover(co_rec, measurements_path);
    if (s_recon->parsed()) return cmd_reconstruct(co_recon, mode);
    if (s_sweep->parsed()) return cmd_sweep(co_sweep);
    if (s_fit->parsed()) return cmd_fit(co_fit, sweep_path);
    std::cerr << "no subcommand selected\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const SolveError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
