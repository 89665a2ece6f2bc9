// Copyright 2026 The rtao Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment harness: JSON run configuration with strict validation, the
// end-to-end single-point pipeline, the (kn, h) error-scaling sweep with its
// least-squares fits, and deterministic manifests for every artifact.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtao/acousto.hpp"
#include "rtao/decomposition.hpp"
#include "rtao/field.hpp"
#include "rtao/geometry.hpp"
#include "rtao/media.hpp"
#include "rtao/reconstruct.hpp"
#include "rtao/transport.hpp"
#include "rtao/util.hpp"

namespace rtao {

inline constexpr int kConfigVersion = 1;
inline constexpr double kKnLower = 1.0 / 256.0;  // supported Knudsen range
inline constexpr double kKnUpper = 1.0;

struct MediaConfig {
  std::string profile = "constant";  // constant | gaussian-bump | two-inclusions | csv
  double sigma_s = 1.0;
  double sigma_a = 0.5;
  double amplitude = 0.5;             // extra scattering of the structured profiles
  double absorption_amplitude = 0.25; // extra absorption of two-inclusions
  Vec2 center{0.5, 0.5};
  double width = 0.15;
  std::string sigma_s_csv, sigma_a_csv;
};

struct BeamConfig {
  double h = kTwoPi / 25.0;  // angular half-width
  EntryRegion region = EntryRegion::all_faces();
  Vec2 axis{1.0, 0.0};
};

struct NoiseConfig {
  double level = 0.0;    // additive, relative to the largest |bt| in the set
  uint64_t seed = 7071;
};

struct OutputConfig {
  std::string dir = "out";
  std::string prefix = "run";
};

struct ExperimentConfig {
  int nx = 32, ny = 32, n_dirs = 50;
  double lx = 1.0, ly = 1.0;
  MediaConfig media;
  double kn = 1.0;
  std::vector<double> kn_list;  // sweep only
  BeamConfig beam;
  std::vector<double> h_list;   // sweep only
  SolveOptions solver;
  double eps = 0.01;            // modulation amplitude
  int order = 8;                // Fourier order of the measured lattice
  NoiseConfig noise;
  OutputConfig output;
  std::string raw;              // source bytes, hashed into manifests
};

namespace detail {

inline void check_keys(const nlohmann::json& o,
                       std::initializer_list<std::string_view> allowed,
                       const char* where) {
  for (auto it = o.begin(); it != o.end(); ++it) {
    bool ok = false;
    for (auto a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
  }
}

inline void check_kn(double kn) {
  if (!(kn >= kKnLower - 1e-12) || !(kn <= kKnUpper + 1e-12))
    throw ConfigError("config: kn values must lie in [1/256, 1]");
}

inline void check_h(double h) {
  if (!(h > 0) || h > kTwoPi + 1e-12)
    throw ConfigError("config: beam widths must lie in (0, 2*pi]");
}

inline Side parse_side(const std::string& s) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  if (s == "bottom") return Side::bottom;
  if (s == "top") return Side::top;
  throw ConfigError("config: side must be left, right, bottom or top");
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text, const std::string& name) {
  ExperimentConfig cfg;
  cfg.raw = text;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + name + ": " + e.what());
  }
  try {
    detail::check_keys(j,
                       {"version", "grid", "media", "kn", "kn_list", "beam", "h_list",
                        "solver", "modulation", "noise", "output"},
                       "the top level");
    if (!j.contains("version") || !j["version"].is_number_integer() ||
        j["version"].get<int>() != kConfigVersion)
      throw ConfigError("config: requires \"version\": " +
                        std::to_string(kConfigVersion));

    const auto& g = j.at("grid");
    detail::check_keys(g, {"nx", "ny", "n_dirs", "lx", "ly"}, "grid");
    cfg.nx = g.at("nx").get<int>();
    cfg.ny = g.at("ny").get<int>();
    cfg.n_dirs = g.at("n_dirs").get<int>();
    cfg.lx = g.value("lx", 1.0);
    cfg.ly = g.value("ly", 1.0);

    const auto& m = j.at("media");
    detail::check_keys(m,
                       {"profile", "sigma_s", "sigma_a", "amplitude",
                        "absorption_amplitude", "center", "width", "sigma_s_csv",
                        "sigma_a_csv"},
                       "media");
    cfg.media.profile = m.value("profile", std::string("constant"));
    cfg.media.sigma_s = m.value("sigma_s", 1.0);
    cfg.media.sigma_a = m.value("sigma_a", 0.5);
    cfg.media.amplitude = m.value("amplitude", 0.5);
    cfg.media.absorption_amplitude = m.value("absorption_amplitude", 0.25);
    cfg.media.width = m.value("width", 0.15);
    if (m.contains("center")) {
      auto c = m["center"];
      if (!c.is_array() || c.size() != 2)
        throw ConfigError("config: media.center must be [x, y]");
      cfg.media.center = {c[0].get<double>(), c[1].get<double>()};
    }
    cfg.media.sigma_s_csv = m.value("sigma_s_csv", std::string());
    cfg.media.sigma_a_csv = m.value("sigma_a_csv", std::string());
    if (cfg.media.profile != "constant" && cfg.media.profile != "gaussian-bump" &&
        cfg.media.profile != "two-inclusions" && cfg.media.profile != "csv")
      throw ConfigError("config: media.profile must be constant, gaussian-bump, "
                        "two-inclusions or csv");
    if (cfg.media.profile == "csv" &&
        (cfg.media.sigma_s_csv.empty() || cfg.media.sigma_a_csv.empty()))
      throw ConfigError("config: csv media needs sigma_s_csv and sigma_a_csv");

    cfg.kn = j.value("kn", 1.0);
    detail::check_kn(cfg.kn);
    if (j.contains("kn_list")) {
      for (const auto& v : j["kn_list"]) {
        double kn = v.get<double>();
        detail::check_kn(kn);
        cfg.kn_list.push_back(kn);
      }
      if (cfg.kn_list.empty()) throw ConfigError("config: kn_list must not be empty");
    }

    const auto& b = j.at("beam");
    detail::check_keys(b, {"h", "region", "side", "coord", "axis"}, "beam");
    cfg.beam.h = b.value("h", kTwoPi / 25.0);
    detail::check_h(cfg.beam.h);
    std::string region = b.value("region", std::string("all"));
    Side side = detail::parse_side(b.value("side", std::string("left")));
    double coord = b.value("coord", 0.5);
    if (region == "all") cfg.beam.region = EntryRegion::all_faces();
    else if (region == "edge") cfg.beam.region = EntryRegion::whole_edge(side);
    else if (region == "face") cfg.beam.region = EntryRegion::single_face(side, coord);
    else throw ConfigError("config: beam.region must be all, edge or face");
    if (b.contains("axis")) {
      auto a = b["axis"];
      if (!a.is_array() || a.size() != 2)
        throw ConfigError("config: beam.axis must be [x, y]");
      cfg.beam.axis = {a[0].get<double>(), a[1].get<double>()};
      if (!(norm(cfg.beam.axis) > 0))
        throw ConfigError("config: beam.axis must be nonzero");
    }
    if (j.contains("h_list")) {
      for (const auto& v : j["h_list"]) {
        double h = v.get<double>();
        detail::check_h(h);
        cfg.h_list.push_back(h);
      }
      if (cfg.h_list.empty()) throw ConfigError("config: h_list must not be empty");
    }

    if (j.contains("solver")) {
      const auto& s = j["solver"];
      detail::check_keys(
          s, {"tol", "max_iter", "accelerate", "gmres_restart", "inner_safety"},
          "solver");
      cfg.solver.tol = s.value("tol", cfg.solver.tol);
      cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
      cfg.solver.accelerate = s.value("accelerate", cfg.solver.accelerate);
      cfg.solver.gmres_restart = s.value("gmres_restart", cfg.solver.gmres_restart);
      cfg.solver.inner_safety = s.value("inner_safety", cfg.solver.inner_safety);
      if (!(cfg.solver.tol > 0) || cfg.solver.max_iter < 1 ||
          cfg.solver.gmres_restart < 1 || !(cfg.solver.inner_safety > 0) ||
          cfg.solver.inner_safety > 1)
        throw ConfigError("config: bad solver parameters");
    }

    if (j.contains("modulation")) {
      const auto& mo = j["modulation"];
      detail::check_keys(mo, {"eps", "order"}, "modulation");
      cfg.eps = mo.value("eps", cfg.eps);
      cfg.order = mo.value("order", cfg.order);
      if (!(cfg.eps > 0) || cfg.eps >= 1)
        throw ConfigError("config: modulation.eps must lie in (0, 1)");
      if (cfg.order < 1 || cfg.order > 64)
        throw ConfigError("config: modulation.order must lie in [1, 64]");
    }

    if (j.contains("noise")) {
      const auto& nz = j["noise"];
      detail::check_keys(nz, {"level", "seed"}, "noise");
      cfg.noise.level = nz.value("level", 0.0);
      cfg.noise.seed = nz.value("seed", cfg.noise.seed);
      if (cfg.noise.level < 0) throw ConfigError("config: noise.level must be >= 0");
    }

    if (j.contains("output")) {
      const auto& o = j["output"];
      detail::check_keys(o, {"dir", "prefix"}, "output");
      cfg.output.dir = o.value("dir", cfg.output.dir);
      cfg.output.prefix = o.value("prefix", cfg.output.prefix);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + name + ": " + e.what());
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text, path);
}

// --- experiment assembly ---------------------------------------------------

inline Grids make_grids(const ExperimentConfig& cfg) {
  return build_grids(cfg.nx, cfg.ny, cfg.n_dirs, cfg.lx, cfg.ly);
}

inline MediaCoefficients make_media_at(const ExperimentConfig& cfg,
                                       const SpatialGrid& g, double kn) {
  const MediaConfig& m = cfg.media;
  if (m.profile == "constant") return constant_media(g, kn, m.sigma_s, m.sigma_a);
  if (m.profile == "gaussian-bump")
    return gaussian_bump_media(g, kn, m.sigma_s, m.sigma_a, m.amplitude, m.center,
                               m.width);
  if (m.profile == "two-inclusions")
    return two_inclusions_media(g, kn, m.sigma_s, m.sigma_a, m.amplitude,
                                m.absorption_amplitude);
  ScalarField s = read_scalar_csv(m.sigma_s_csv);
  ScalarField a = read_scalar_csv(m.sigma_a_csv);
  if (!same_grid(s.grid, g) || !same_grid(a.grid, g))
    throw ConfigError("config: csv media does not match the configured grid");
  return make_media(std::move(s), std::move(a), kn);
}

inline BeamSource make_forward_beam(const ExperimentConfig& cfg, const AngularGrid& ag,
                                    double h) {
  return make_beam(cfg.beam.axis, h, ag, cfg.beam.region);
}

// The downstream datum: same cone, mirrored region on the opposite side.
inline BeamSource make_adjoint_beam(const ExperimentConfig& cfg, const AngularGrid& ag,
                                    double h) {
  return make_beam(cfg.beam.axis, h, ag, mirror_region(cfg.beam.region));
}

// Probe line for scalar metrics: the grid line along the beam axis through
// the configured entry coordinate.
inline bool beam_along_x(const BeamSource& beam) {
  return std::abs(beam.theta0.x) >= std::abs(beam.theta0.y);
}

inline int probe_line(const ExperimentConfig& cfg, const SpatialGrid& g, bool along_x) {
  double coord = cfg.beam.region.kind == EntryRegion::Kind::face ? cfg.beam.region.coord
                                                                 : 0.5 * (along_x ? g.ly : g.lx);
  int line = along_x ? g.locate_y(coord) : g.locate_x(coord);
  int n = along_x ? g.ny : g.nx;
  return std::clamp(line, 0, n - 1);
}

// --- single-point pipeline -------------------------------------------------

struct PipelineMetrics {
  int fwd_iterations = 0, adj_iterations = 0;
  double fwd_residual = 0, adj_residual = 0;
  double pred_err_l2 = 0, pred_err_sup = 0;   // prediction error, masked global
  double line_sup = 0, line_rms = 0;          // prediction error on the probe line
  int line_used = 0, line_masked = 0;
  int pred_masked = 0;
  double recon_line_sup = 0;                  // recovered vs true sigma/kn
  int recon_masked = 0;
  double h_rel_l2 = 0;                        // measured-vs-direct internal field
  double imag_residue = 0;
  int bt_rows = 0;
};

struct PipelineResult {
  Grids grids;
  TransportSolution fwd, adj;
  InternalField h_direct;
  InternalField h_used;     // == h_direct in direct mode
  PairedBallistic pair;
  ScalarField remainder;    // internal field minus its leading ballistic part
  ErrorField pred_err;
  Reconstruction recon;
  MeasurementSet measurements;  // measured mode only
  PipelineMetrics metrics;
  std::string mode;
};

// Relative L2 guard: exclude cells whose predicted value is negligible
// against the field maximum (deep off-beam shadow).
inline constexpr double kPredictionGuard = 1e-8;

inline void apply_measurement_noise(MeasurementSet& ms, const NoiseConfig& noise) {
  if (noise.level <= 0 || ms.rows.empty()) return;
  double m = 0;
  for (const auto& r : ms.rows) m = std::max(m, std::abs(r.bt));
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (auto& r : ms.rows) r.bt += noise.level * m * nd(rng);
}

inline PipelineResult run_pipeline(const ExperimentConfig& cfg, int workers,
                                   const std::string& mode) {
  if (mode != "direct" && mode != "measured")
    throw ConfigError("pipeline: mode must be direct or measured");
  PipelineResult res;
  res.mode = mode;
  res.grids = make_grids(cfg);
  const Grids& gr = res.grids;
  MediaCoefficients media = make_media_at(cfg, gr.spatial, cfg.kn);
  BeamSource beam_f = make_forward_beam(cfg, gr.angular, cfg.beam.h);
  BeamSource beam_g = make_adjoint_beam(cfg, gr.angular, cfg.beam.h);
  std::vector<double> f = beam_trace(beam_f, gr.gamma_minus, gr.spatial);
  std::vector<double> g = beam_trace(beam_g, gr.gamma_plus, gr.spatial);

  SolveOptions opt = cfg.solver;
  opt.workers = workers;
  res.fwd = solve_transport(gr, {media, f, VolumeSource::none(), TransportSign::forward},
                            opt);
  require_converged(res.fwd.report, "forward");
  res.adj = solve_transport(gr, {media, g, VolumeSource::none(), TransportSign::adjoint},
                            opt);
  require_converged(res.adj.report, "adjoint");
  res.metrics.fwd_iterations = res.fwd.report.iterations;
  res.metrics.adj_iterations = res.adj.report.iterations;
  res.metrics.fwd_residual = res.fwd.report.residual;
  res.metrics.adj_residual = res.adj.report.residual;

  res.h_direct = internal_direct(media, res.fwd.u, res.adj.u);
  if (mode == "measured") {
    SolveOptions mopt = cfg.solver;
    mopt.workers = 1;  // measurements parallelize over the lattice instead
    BtEvaluator bt(gr, media, f, g, mopt);
    res.measurements = measure_lattice(bt, gr.spatial, cfg.order, cfg.eps, workers);
    apply_measurement_noise(res.measurements, cfg.noise);
    res.h_used = recover_internal(res.measurements, gr.spatial);
    res.metrics.imag_residue = res.h_used.imag_residue;
    res.metrics.bt_rows = static_cast<int>(res.measurements.rows.size());
    double num = 0, den = 0;
    const double da = gr.spatial.dx() * gr.spatial.dy();
    for (size_t c = 0; c < res.h_direct.h.v.size(); ++c) {
      double d = res.h_used.h.v[c] - res.h_direct.h.v[c];
      num += d * d * da;
      den += res.h_direct.h.v[c] * res.h_direct.h.v[c] * da;
    }
    res.metrics.h_rel_l2 = den > 0 ? std::sqrt(num / den) : 0.0;
  } else {
    res.h_used = res.h_direct;
  }

  // Leading-order prediction: -kn*H matches sigma * <u1 v1>.
  res.pair = ballistic_pair_mean(gr, media, beam_f, beam_g);
  const ScalarField sigma = total_sigma(media);
  ScalarField predicted(gr.spatial), actual(gr.spatial);
  for (size_t c = 0; c < predicted.v.size(); ++c) {
    predicted.v[c] = sigma.v[c] * res.pair.value.v[c];
    actual.v[c] = -cfg.kn * res.h_used.h.v[c];
  }
  res.pred_err = relative_error_field(actual, predicted,
                                      kPredictionGuard * predicted.sup_norm());
  res.metrics.pred_err_l2 = masked_l2(res.pred_err);
  res.metrics.pred_err_sup = masked_sup(res.pred_err);
  for (char msk : res.pred_err.mask)
    if (!msk) ++res.metrics.pred_masked;
  const bool along_x = beam_along_x(beam_f);
  const int line = probe_line(cfg, gr.spatial, along_x);
  LineStats ls = line_stats(res.pred_err, along_x, line, 0.8);
  res.metrics.line_sup = ls.sup;
  res.metrics.line_rms = ls.rms;
  res.metrics.line_used = ls.used;
  res.metrics.line_masked = ls.masked;

  res.remainder = ScalarField(gr.spatial);
  for (size_t c = 0; c < res.remainder.v.size(); ++c)
    res.remainder.v[c] =
        res.h_used.h.v[c] + sigma.v[c] / cfg.kn * res.pair.value.v[c];

  res.recon = reconstruct_sigma(gr, res.h_used.h, beam_f,
                                outflow_trace(gr, res.fwd.u, TransportSign::forward));
  res.metrics.recon_masked = res.recon.masked;
  ScalarField truth(gr.spatial);
  for (size_t c = 0; c < truth.v.size(); ++c) truth.v[c] = sigma.v[c] / cfg.kn;
  res.metrics.recon_line_sup = line_sup_rel_error(res.recon, truth, along_x, line, 0.8);
  return res;
}

// --- error-scaling sweep -----------------------------------------------------

struct SweepRow {
  double kn = 0, h = 0;
  double err_l2 = 0, err_sup = 0;
  double line_sup = 0, line_rms = 0;
  int line_used = 0, line_masked = 0;
  int fwd_iters = 0, adj_iters = 0;
  int masked = 0;
};

struct SweepResult {
  std::vector<double> kn_values, h_values;
  std::vector<SweepRow> rows;  // kn outer, h inner
};

inline SweepRow sweep_point(const ExperimentConfig& cfg, const Grids& gr, double kn,
                            double h) {
  SweepRow row;
  row.kn = kn;
  row.h = h;
  MediaCoefficients media = make_media_at(cfg, gr.spatial, kn);
  BeamSource beam_f = make_forward_beam(cfg, gr.angular, h);
  BeamSource beam_g = make_adjoint_beam(cfg, gr.angular, h);
  std::vector<double> f = beam_trace(beam_f, gr.gamma_minus, gr.spatial);
  std::vector<double> g = beam_trace(beam_g, gr.gamma_plus, gr.spatial);
  SolveOptions opt = cfg.solver;
  opt.workers = 1;  // rows already run in parallel
  TransportSolution fwd =
      solve_transport(gr, {media, f, VolumeSource::none(), TransportSign::forward}, opt);
  require_converged(fwd.report, "sweep forward");
  TransportSolution adj =
      solve_transport(gr, {media, g, VolumeSource::none(), TransportSign::adjoint}, opt);
  require_converged(adj.report, "sweep adjoint");
  row.fwd_iters = fwd.report.iterations;
  row.adj_iters = adj.report.iterations;

  InternalField hf = internal_direct(media, fwd.u, adj.u);
  PairedBallistic pair = ballistic_pair_mean(gr, media, beam_f, beam_g);
  const ScalarField sigma = total_sigma(media);
  ScalarField predicted(gr.spatial), actual(gr.spatial);
  for (size_t c = 0; c < predicted.v.size(); ++c) {
    predicted.v[c] = sigma.v[c] * pair.value.v[c];
    actual.v[c] = -kn * hf.h.v[c];
  }
  ErrorField err = relative_error_field(actual, predicted,
                                        kPredictionGuard * predicted.sup_norm());
  row.err_l2 = masked_l2(err);
  row.err_sup = masked_sup(err);
  for (char msk : err.mask)
    if (!msk) ++row.masked;
  const bool along_x = beam_along_x(beam_f);
  LineStats ls = line_stats(err, along_x, probe_line(cfg, gr.spatial, along_x), 0.8);
  row.line_sup = ls.sup;
  row.line_rms = ls.rms;
  row.line_used = ls.used;
  row.line_masked = ls.masked;
  return row;
}

inline SweepResult run_figure_sweep(const ExperimentConfig& cfg, int workers) {
  if (cfg.kn_list.empty() || cfg.h_list.empty())
    throw ConfigError("sweep: config needs kn_list and h_list");
  SweepResult out;
  out.kn_values = cfg.kn_list;
  out.h_values = cfg.h_list;
  const Grids gr = make_grids(cfg);
  const int nk = static_cast<int>(cfg.kn_list.size());
  const int nh = static_cast<int>(cfg.h_list.size());
  out.rows.resize(static_cast<size_t>(nk) * nh);
  parallel_for_index(nk * nh, workers, [&](int r) {
    out.rows[r] = sweep_point(cfg, gr, cfg.kn_list[r / nh], cfg.h_list[r % nh]);
  });
  return out;
}

inline void write_sweep_csv(const std::string& path, const SweepResult& sw) {
  std::string body =
      "kn,h,err_l2,err_sup,line_sup,line_rms,line_used,line_masked,fwd_iters,adj_"
      "iters,masked\n";
  for (const auto& r : sw.rows) {
    body += format_double(r.kn) + "," + format_double(r.h) + "," +
            format_double(r.err_l2) + "," + format_double(r.err_sup) + "," +
            format_double(r.line_sup) + "," + format_double(r.line_rms) + "," +
            std::to_string(r.line_used) + "," + std::to_string(r.line_masked) + "," +
            std::to_string(r.fwd_iters) + "," + std::to_string(r.adj_iters) + "," +
            std::to_string(r.masked) + "\n";
  }
  write_text_file(path, body);
}

inline SweepResult read_sweep_csv(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.empty() || split_csv_line(lines[0])[0] != "kn")
    throw ConfigError("sweep CSV " + path + ": bad header");
  SweepResult out;
  for (size_t r = 1; r < lines.size(); ++r) {
    auto c = split_csv_line(lines[r]);
    if (c.size() != 11) throw ConfigError("sweep CSV " + path + ": row needs 11 fields");
    SweepRow row;
    row.kn = parse_double(c[0]);
    row.h = parse_double(c[1]);
    row.err_l2 = parse_double(c[2]);
    row.err_sup = parse_double(c[3]);
    row.line_sup = parse_double(c[4]);
    row.line_rms = parse_double(c[5]);
    row.line_used = static_cast<int>(parse_double(c[6]));
    row.line_masked = static_cast<int>(parse_double(c[7]));
    row.fwd_iters = static_cast<int>(parse_double(c[8]));
    row.adj_iters = static_cast<int>(parse_double(c[9]));
    row.masked = static_cast<int>(parse_double(c[10]));
    out.rows.push_back(row);
    bool seen_kn = false, seen_h = false;
    for (double v : out.kn_values) seen_kn = seen_kn || v == row.kn;
    for (double v : out.h_values) seen_h = seen_h || v == row.h;
    if (!seen_kn) out.kn_values.push_back(row.kn);
    if (!seen_h) out.h_values.push_back(row.h);
  }
  return out;
}

// --- scaling fits ------------------------------------------------------------

// One fitted power law from the sweep table: log(line_sup) regressed on
// log(h) at fixed kn ("h-scaling") or on log(1/kn) at fixed h ("kn-scaling").
struct FitRow {
  std::string kind;  // "h-scaling" | "kn-scaling"
  double fixed = 0;  // the held parameter (kn resp. h)
  LineFit fit;
};

inline std::vector<FitRow> fit_scalings(const SweepResult& sw) {
  std::vector<FitRow> out;
  for (double kn : sw.kn_values) {
    std::vector<double> xs, ys;
    for (const auto& r : sw.rows)
      if (r.kn == kn && r.line_sup > 0) {
        xs.push_back(std::log(r.h));
        ys.push_back(std::log(r.line_sup));
      }
    if (xs.size() >= 2) out.push_back({"h-scaling", kn, fit_line(xs, ys)});
  }
  for (double h : sw.h_values) {
    std::vector<double> xs, ys;
    for (const auto& r : sw.rows)
      if (r.h == h && r.line_sup > 0) {
        xs.push_back(std::log(1.0 / r.kn));
        ys.push_back(std::log(r.line_sup));
      }
    if (xs.size() >= 2) out.push_back({"kn-scaling", h, fit_line(xs, ys)});
  }
  return out;
}

inline void write_fits_csv(const std::string& path, const std::vector<FitRow>& fits) {
  std::string body = "kind,fixed,slope,intercept,r2,n\n";
  for (const auto& f : fits) {
    body += f.kind + "," + format_double(f.fixed) + "," + format_double(f.fit.slope) +
            "," + format_double(f.fit.intercept) + "," + format_double(f.fit.r2) + "," +
            std::to_string(f.fit.n) + "\n";
  }
  write_text_file(path, body);
}

// --- manifests ---------------------------------------------------------------

// Deterministic by construction: sorted keys, shortest-round-trip numbers,
// no timestamps and no worker counts.
inline nlohmann::json manifest_base(const ExperimentConfig& cfg,
                                    const std::string& command) {
  nlohmann::json m;
  m["command"] = command;
  m["config_hash"] = hex64(fnv1a64(cfg.raw));
  m["grid"] = {{"nx", cfg.nx}, {"ny", cfg.ny}, {"n_dirs", cfg.n_dirs},
               {"lx", cfg.lx}, {"ly", cfg.ly}};
  m["version"] = kConfigVersion;
  return m;
}

inline void write_manifest(const std::string& path, const nlohmann::json& m) {
  write_text_file(path, m.dump(2) + "\n");
}

// Sweep monotonicity summary: line_sup should grow (with 10% slack) as kn
// falls at fixed h, and as h grows at fixed kn.
inline nlohmann::json sweep_monotonicity(const SweepResult& sw) {
  nlohmann::json flags;
  const int nh = static_cast<int>(sw.h_values.size());
  const int nk = static_cast<int>(sw.kn_values.size());
  auto row = [&](int ik, int ih) -> const SweepRow& {
    return sw.rows[static_cast<size_t>(ik) * nh + ih];
  };
  nlohmann::json in_kn = nlohmann::json::array();
  for (int ih = 0; ih < nh; ++ih) {
    bool mono = true;
    for (int ik = 0; ik + 1 < nk; ++ik) {
      // kn_values are expected in decreasing order for this flag to be
      // meaningful; compare against the smaller-kn neighbour with slack.
      if (sw.kn_values[ik + 1] < sw.kn_values[ik] &&
          row(ik + 1, ih).line_sup < 0.9 * row(ik, ih).line_sup)
        mono = false;
    }
    in_kn.push_back(mono);
  }
  flags["line_sup_grows_as_kn_falls"] = in_kn;
  nlohmann::json in_h = nlohmann::json::array();
  for (int ik = 0; ik < nk; ++ik) {
    bool mono = true;
    for (int ih = 0; ih + 1 < nh; ++ih) {
      if (sw.h_values[ih + 1] > sw.h_values[ih] &&
          row(ik, ih + 1).line_sup < 0.9 * row(ik, ih).line_sup)
        mono = false;
    }
    in_h.push_back(mono);
  }
  flags["line_sup_grows_with_h"] = in_h;
  return flags;
}

}  // namespace rtao
