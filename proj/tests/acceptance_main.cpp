// Copyright 2026 The rtao Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate.  Runs nine numbered end-to-end criteria and prints one
// "A<k> <name>: PASS|FAIL (detail)" line per criterion; any FAIL flips the
// exit status to 1.  Criteria can be selected by id on the command line
// (default: all).  Every tolerance is a pinned constant below — the gate is
// meant to be read top to bottom as the contract of the library.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dense_oracle.hpp"
#include "rtao/rtao.hpp"
#include "test_support.hpp"

using namespace rtao;
using nlohmann::json;

namespace {

// --- pinned tolerances -------------------------------------------------------
// A1: sup-norm gap between the iterative solver and a dense direct solve.
constexpr double kDenseGap = 1e-8;
// A2: solver target for the invariants suite and the residual multiplier
// allowed in each identity.
constexpr double kInvTol = 1e-11;
constexpr double kInvFactor = 10.0;
constexpr double kFluxRel = 1e-8;
constexpr int kInvTrials = 5;
// A3: fitted-constant cap for err <= C*h/kn and the allowed range of the
// error ratio when h is halved ("halves within 25%", i.e. 0.5 +/- 0.25).
constexpr double kPairConstCap = 10.0;
constexpr double kPairHalveLo = 0.25, kPairHalveHi = 0.75;
// A4: allowed range of the sup ratio of the scattered pairings when h halves.
constexpr double kScatterHalveLo = 0.4, kScatterHalveHi = 0.6;
// A5: fit quality thresholds for the error-scaling sweep.
constexpr double kSweepR2Kn = 0.95;  // log(err) vs 1/kn at fixed h
constexpr double kSweepR2H = 0.9;    // err vs h at fixed kn
// A6: max/min spread of the first-order perturbation ratio across eps.
constexpr double kPerturbSpread = 1.2;
// A7: measured-vs-direct internal field, relative L2 <= max(floor, C*eps);
// synthetic bandlimited recovery must close to machine precision.
constexpr double kRecoverFloor = 0.05;
constexpr double kRecoverEpsConst = 2.0;
constexpr double kSyntheticGap = 1e-12;
// A8: sup-relative reconstruction error on the central 80% of the beam line
// at kn = 1, monotone-degradation slack as kn halves, and the fabricated
// inversion identity gap.
constexpr double kReconLine = 0.10;
constexpr double kReconMonotoneSlack = 0.95;
constexpr double kReconIdentity = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) { return format_double(v); }

double sup_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// --- A1 ----------------------------------------------------------------------

Outcome a1_dense_oracle() {
  std::mt19937_64 rng(101);
  double worst = 0;
  // forward, forward with volume source, adjoint; plain and accelerated.
  for (int inst = 0; inst < 3; ++inst) {
    Grids gr = inst == 2 ? build_grids(5, 6, 8, 1.1, 0.8) : build_grids(6, 6, 8);
    double kn = inst == 1 ? 0.5 : 1.0;
    MediaCoefficients media = rtao_test::random_media(gr.spatial, kn, rng);
    TransportSign sign = inst == 2 ? TransportSign::adjoint : TransportSign::forward;
    const BoundarySet& inset =
        sign == TransportSign::forward ? gr.gamma_minus : gr.gamma_plus;
    std::vector<double> data =
        rtao_test::random_values(inset.entries.size(), rng, 0.0, 1.0);
    VolumeSource src = VolumeSource::none();
    if (inst == 1) {
      ScalarField s(gr.spatial);
      for (auto& v : s.v) v = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
      src = VolumeSource::isotropic(std::move(s));
    }
    std::vector<double> dense =
        rtao_test::dense_transport_solve(gr, media, data, src, sign);
    for (bool accel : {false, true}) {
      SolveOptions opt;
      opt.tol = 1e-12;
      opt.accelerate = accel;
      opt.max_iter = 20000;
      TransportSolution sol = solve_transport(gr, {media, data, src, sign}, opt);
      require_converged(sol.report, "a1");
      worst = std::max(worst, rtao_test::sup_diff(sol.u.v, dense));
    }
  }
  return {worst <= kDenseGap,
          "sup gap " + num(worst) + " <= " + num(kDenseGap) + " on 3 instances x "
          "{plain, accelerated}"};
}

// --- A2 ----------------------------------------------------------------------

Outcome a2_invariants() {
  std::mt19937_64 rng(202);
  SolveOptions opt;
  opt.tol = kInvTol;
  std::string worst_note;
  bool ok = true;
  auto fail = [&](const std::string& why) {
    ok = false;
    if (worst_note.empty()) worst_note = why;
  };
  for (int trial = 0; trial < kInvTrials; ++trial) {
    Grids gr = build_grids(16, 16, 16);
    MediaCoefficients media = rtao_test::random_media(gr.spatial, 1.0, rng);
    std::vector<double> f =
        rtao_test::random_values(gr.gamma_minus.entries.size(), rng, 0.0, 1.0);
    std::vector<double> g =
        rtao_test::random_values(gr.gamma_plus.entries.size(), rng, 0.0, 1.0);
    const double nf = sup_abs(f), ng = sup_abs(g);

    TransportSolution u = solve_transport(
        gr, {media, f, VolumeSource::none(), TransportSign::forward}, opt);
    TransportSolution v = solve_transport(
        gr, {media, g, VolumeSource::none(), TransportSign::adjoint}, opt);
    require_converged(u.report, "a2 forward");
    require_converged(v.report, "a2 adjoint");

    // maximum principle
    double lo = 0, hi = 0;
    for (double x : u.u.v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    if (lo < -kInvFactor * kInvTol * u.report.scale ||
        hi > nf + kInvFactor * kInvTol * u.report.scale)
      fail("max principle: range [" + num(lo) + ", " + num(hi) + "] vs datum sup " +
           num(nf));

    // linearity of the data-to-solution map
    std::vector<double> f2 =
        rtao_test::random_values(gr.gamma_minus.entries.size(), rng, 0.0, 1.0);
    const double ca = 1.3, cb = -0.6;
    std::vector<double> fc(f.size());
    for (size_t i = 0; i < f.size(); ++i) fc[i] = ca * f[i] + cb * f2[i];
    TransportSolution u2 = solve_transport(
        gr, {media, f2, VolumeSource::none(), TransportSign::forward}, opt);
    TransportSolution uc = solve_transport(
        gr, {media, fc, VolumeSource::none(), TransportSign::forward}, opt);
    require_converged(u2.report, "a2 linearity");
    require_converged(uc.report, "a2 linearity");
    double lin = 0;
    for (size_t t = 0; t < uc.u.v.size(); ++t)
      lin = std::max(lin, std::abs(uc.u.v[t] - ca * u.u.v[t] - cb * u2.u.v[t]));
    if (lin > 1e-9) fail("linearity gap " + num(lin));

    // conservation with sigma_a = 0: outflux equals influx
    MediaCoefficients lossless =
        make_media(media.sigma_s, ScalarField(gr.spatial, 0.0), media.kn);
    TransportSolution uc0 = solve_transport(
        gr, {lossless, f, VolumeSource::none(), TransportSign::forward}, opt);
    require_converged(uc0.report, "a2 conservation");
    std::vector<double> trace = outflow_trace(gr, uc0.u, TransportSign::forward);
    double influx = 0, outflux = 0;
    for (size_t e = 0; e < gr.gamma_minus.entries.size(); ++e) {
      const auto& en = gr.gamma_minus.entries[e];
      influx -= gr.angular.weight[en.dir] * en.n_dot_theta * f[e] * en.ds;
    }
    for (size_t e = 0; e < gr.gamma_plus.entries.size(); ++e) {
      const auto& en = gr.gamma_plus.entries[e];
      outflux += gr.angular.weight[en.dir] * en.n_dot_theta * trace[e] * en.ds;
    }
    if (std::abs(outflux - influx) > kFluxRel * std::abs(influx))
      fail("flux balance: in " + num(influx) + " out " + num(outflux));

    // source-free same-coefficient pairing vanishes
    double bp = boundary_pairing(gr, f, u.u, v.u, g);
    if (std::abs(bp) > kInvFactor * kInvTol * nf * ng)
      fail("boundary pairing " + num(bp) + " vs bound " +
           num(kInvFactor * kInvTol * nf * ng));

    // adjoint reflection consistency: the reflected adjoint is a fixed point
    // of the reflected-datum sweep
    PhaseSpaceField w = reflect_directions(v.u);
    std::vector<double> gt = reflect_outflow_datum(gr, g);
    PhaseSpaceField w2 =
        sweep_once(gr, media, gt, VolumeSource::none(), angular_average(w));
    double refl = rtao_test::sup_diff(w.v, w2.v);
    if (refl > kInvFactor * kInvTol * v.report.scale)
      fail("adjoint reflection gap " + num(refl));
  }
  return {ok, ok ? std::to_string(kInvTrials) + " randomized media, all identities "
                   "within " + num(kInvFactor) + "*tol"
                 : worst_note};
}

// --- A3 ----------------------------------------------------------------------

Outcome a3_ballistic_pairing() {
  const std::vector<double> kns = {1.0, 0.5, 0.25};
  const std::vector<double> hs = {4.0 * kPi / 25.0, kTwoPi / 25.0, kTwoPi / 50.0};
  Grids gr = build_grids(64, 64, 50);
  const SpatialGrid& g = gr.spatial;
  const int line = g.locate_y(0.5);
  const int skip = g.nx / 10;  // central 80% of the beam line

  double cmax = 0;
  std::vector<std::vector<double>> err(kns.size());
  for (size_t ik = 0; ik < kns.size(); ++ik) {
    MediaCoefficients media = constant_media(g, kns[ik], 1.0, 0.0);  // sigma == 1
    const double ref = std::exp(-g.lx / kns[ik]);                    // axis chord
    for (double h : hs) {
      BeamSource bf = make_beam({1.0, 0.0}, h, gr.angular);
      BeamSource bg = make_beam({1.0, 0.0}, h, gr.angular);
      PairedBallistic pair = ballistic_pair_mean(gr, media, bf, bg);
      double e = 0;
      for (int i = skip; i < g.nx - skip; ++i)
        e = std::max(e, std::abs(pair.value.at(i, line) - ref) / ref);
      err[ik].push_back(e);
      cmax = std::max(cmax, e / (h / kns[ik]));
    }
  }
  bool ok = cmax <= kPairConstCap;
  std::string ratios;
  for (size_t ik = 0; ik < kns.size(); ++ik)
    for (size_t ih = 0; ih + 1 < hs.size(); ++ih) {
      double r = err[ik][ih + 1] / err[ik][ih];  // error ratio under h halving
      ok = ok && r >= kPairHalveLo && r <= kPairHalveHi;
      ratios += (ratios.empty() ? "" : " ") + num(r);
    }
  return {ok, "fitted C " + num(cmax) + " (cap " + num(kPairConstCap) +
              "), halving ratios [" + ratios + "] in [" + num(kPairHalveLo) + ", " +
              num(kPairHalveHi) + "]"};
}

// --- A4 ----------------------------------------------------------------------

Outcome a4_scattered_scaling() {
  const std::vector<double> kns = {1.0, 0.25};
  const std::vector<double> hs = {4.0 * kPi / 25.0, kTwoPi / 25.0, kTwoPi / 50.0};
  Grids gr = build_grids(64, 64, 50);
  SolveOptions opt;
  opt.tol = 1e-10;
  bool ok = true;
  std::string ratios;
  for (double kn : kns) {
    MediaCoefficients media = constant_media(gr.spatial, kn, 1.0, 0.0);
    std::vector<double> s22, s12;
    for (double h : hs) {
      BeamSource bf = make_beam({1.0, 0.0}, h, gr.angular);
      BeamSource bg = make_beam({1.0, 0.0}, h, gr.angular);
      BallisticPart b1 = ballistic_forward(gr, media, bf);
      BallisticPart bv = ballistic_adjoint(gr, media, bg);
      TransportSolution u2 =
          scattered_remainder(gr, media, b1.mean, TransportSign::forward, opt);
      TransportSolution v2 =
          scattered_remainder(gr, media, bv.mean, TransportSign::adjoint, opt);
      require_converged(u2.report, "a4 forward remainder");
      require_converged(v2.report, "a4 adjoint remainder");
      s22.push_back(average_of_product(u2.u, v2.u).sup_norm());
      s12.push_back(average_of_product(b1.field, v2.u).sup_norm());
    }
    for (size_t ih = 0; ih + 1 < hs.size(); ++ih)
      for (const auto* s : {&s22, &s12}) {
        double r = (*s)[ih + 1] / (*s)[ih];
        ok = ok && r >= kScatterHalveLo && r <= kScatterHalveHi;
        ratios += (ratios.empty() ? "" : " ") + num(r);
      }
  }
  return {ok, "halving ratios [" + ratios + "] in [" + num(kScatterHalveLo) + ", " +
              num(kScatterHalveHi) + "] for sup<u2 v2>, sup<u1 v2> at kn {1, 1/4}"};
}

// --- A5 ----------------------------------------------------------------------

Outcome a5_sweep_fits() {
  json j = {{"version", 1},
            {"grid", {{"nx", 64}, {"ny", 64}, {"n_dirs", 50}}},
            {"media", {{"sigma_s", 1.0}, {"sigma_a", 0.0}}},
            {"kn_list", {1.0, 0.5, 0.25, 0.125, 0.0625}},
            {"beam",
             {{"region", "face"}, {"side", "left"}, {"coord", 0.5},
              {"axis", {1.0, 0.0}},
              {"h", kTwoPi / 25.0}}},
            // Widths stay inside the concentrated-beam regime (largest cone
            // here spans 8pi/25 ~ 1 rad); near-isotropic beams saturate the
            // error and the linear-in-h growth no longer applies.
            {"h_list",
             {kTwoPi / 50.0, kTwoPi / 25.0, 4.0 * kPi / 25.0, 6.0 * kPi / 25.0,
              8.0 * kPi / 25.0}},
            {"solver", {{"tol", 1e-9}}}};
  ExperimentConfig cfg = parse_config(j.dump(), "a5");
  SweepResult sw = run_figure_sweep(cfg, 1);
  const int nh = static_cast<int>(cfg.h_list.size());
  const int nk = static_cast<int>(cfg.kn_list.size());

  bool ok = true;
  double min_r2_kn = 1.0, min_r2_h = 1.0;
  // (i) at each fixed h: log error against raw 1/kn must be near-linear with
  // positive slope.
  for (int ih = 0; ih < nh; ++ih) {
    std::vector<double> xs, ys;
    for (int ik = 0; ik < nk; ++ik) {
      double e = sw.rows[static_cast<size_t>(ik) * nh + ih].err_l2;
      if (!(e > 0)) return {false, "nonpositive sweep error at fixed h"};
      xs.push_back(1.0 / cfg.kn_list[ik]);
      ys.push_back(std::log(e));
    }
    LineFit fit = fit_line(xs, ys);
    min_r2_kn = std::min(min_r2_kn, fit.r2);
    ok = ok && fit.slope > 0 && fit.r2 >= kSweepR2Kn;
  }
  // (ii) at each fixed kn: error against raw h near-linear.
  for (int ik = 0; ik < nk; ++ik) {
    std::vector<double> xs, ys;
    for (int ih = 0; ih < nh; ++ih) {
      xs.push_back(cfg.h_list[ih]);
      ys.push_back(sw.rows[static_cast<size_t>(ik) * nh + ih].err_l2);
    }
    LineFit fit = fit_line(xs, ys);
    min_r2_h = std::min(min_r2_h, fit.r2);
    ok = ok && fit.slope > 0 && fit.r2 >= kSweepR2H;
  }
  return {ok, "min R2 " + num(min_r2_kn) + " (log err vs 1/kn, need >= " +
              num(kSweepR2Kn) + "), " + num(min_r2_h) + " (err vs h, need >= " +
              num(kSweepR2H) + "), slopes positive, " +
              std::to_string(nk * nh) + " grid points"};
}

// --- A6 ----------------------------------------------------------------------

Outcome a6_perturbation() {
  const std::vector<double> epss = {1e-2, 5e-3, 2.5e-3};
  Grids gr = build_grids(32, 32, 50);
  SolveOptions opt;
  opt.tol = 1e-11;
  BeamSource beam = make_beam({1.0, 0.0}, 1.5 * kTwoPi / 50.0, gr.angular);
  std::vector<double> f = beam_trace(beam, gr.gamma_minus, gr.spatial);
  Vec2 q = lattice_q(1, 1, gr.spatial.lx, gr.spatial.ly);
  bool ok = true;
  std::string spreads;
  for (double kn : {1.0, 0.25}) {
    MediaCoefficients media = constant_media(gr.spatial, kn, 1.0, 0.25);
    TransportSolution u = solve_transport(
        gr, {media, f, VolumeSource::none(), TransportSign::forward}, opt);
    require_converged(u.report, "a6 base");
    double rlo = 0, rhi = 0;
    for (double eps : epss) {
      MediaCoefficients med_eps = modulate(media, {eps, q, Phase::cosine});
      TransportSolution ue = solve_transport(
          gr, {med_eps, f, VolumeSource::none(), TransportSign::forward}, opt);
      require_converged(ue.report, "a6 perturbed");
      double r = rtao_test::sup_diff(ue.u.v, u.u.v) / (eps * sup_abs(ue.u.v));
      rlo = rlo == 0 ? r : std::min(rlo, r);
      rhi = std::max(rhi, r);
    }
    double spread = rhi / rlo;
    ok = ok && spread <= kPerturbSpread;
    spreads += (spreads.empty() ? "" : " ") + num(spread);
  }
  return {ok, "sup|u_eps - u| / (eps sup|u_eps|) spread [" + spreads +
              "] <= " + num(kPerturbSpread) + " across eps {1e-2, 5e-3, 2.5e-3} at "
              "kn {1, 1/4}"};
}

// --- A7 ----------------------------------------------------------------------

Outcome a7_recovery() {
  // Synthetic bandlimited closure: fabricate pairings of a known trig
  // polynomial and demand exact recovery.
  const int K = 8;
  Grids gr = build_grids(32, 32, 50);
  const SpatialGrid& g = gr.spatial;
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> uc(-1.0, 1.0);
  struct Mode {
    int kx, ky;
    double c, s;
  };
  std::vector<Mode> modes;
  for (int kx = 0; kx <= K; ++kx)
    for (int ky = (kx == 0 ? 0 : -K); ky <= K; ++ky) {
      double decay = 1.0 / (1.0 + kx * kx + ky * ky);
      modes.push_back({kx, ky, uc(rng) * decay,
                       (kx == 0 && ky == 0) ? 0.0 : uc(rng) * decay});
    }
  auto truth = [&](Vec2 x) {
    double acc = 0;
    for (const auto& m : modes) {
      Vec2 q = lattice_q(m.kx, m.ky, g.lx, g.ly);
      double ph = q.x * x.x + q.y * x.y;
      acc += m.c * std::cos(ph) + m.s * std::sin(ph);
    }
    return acc;
  };
  ScalarField href(g);
  for (int jj = 0; jj < g.ny; ++jj)
    for (int ii = 0; ii < g.nx; ++ii) href.at(ii, jj) = truth(g.cell_center(ii, jj));

  const double eps = 1e-2;
  const double da = g.dx() * g.dy();
  MeasurementSet ms;
  ms.lx = g.lx;
  ms.ly = g.ly;
  ms.order = K;
  for (const auto& m : modes) {
    Vec2 q = lattice_q(m.kx, m.ky, g.lx, g.ly);
    for (Phase ph : {Phase::cosine, Phase::sine}) {
      if (m.kx == 0 && m.ky == 0 && ph == Phase::sine) continue;
      double acc = 0;
      for (int jj = 0; jj < g.ny; ++jj)
        for (int ii = 0; ii < g.nx; ++ii) {
          Vec2 x = g.cell_center(ii, jj);
          double p = q.x * x.x + q.y * x.y;
          double osc = ph == Phase::cosine ? std::cos(p) : std::sin(p);
          acc += osc * href.at(ii, jj);
        }
      ms.rows.push_back({q, ph, eps, eps * kTwoPi * da * acc});
    }
  }
  InternalField synth = recover_internal(ms, g);
  double synth_gap = 0;
  for (size_t c = 0; c < href.v.size(); ++c)
    synth_gap = std::max(synth_gap, std::abs(synth.h.v[c] - href.v[c]));
  double synth_bound = kSyntheticGap * (1.0 + href.sup_norm());
  if (synth_gap > synth_bound || synth.imag_residue > synth_bound)
    return {false, "synthetic closure gap " + num(synth_gap) + " (residue " +
                   num(synth.imag_residue) + ") vs " + num(synth_bound)};

  // Measured route against the direct internal field on the full pipeline.
  json j = {{"version", 1},
            {"grid", {{"nx", 32}, {"ny", 32}, {"n_dirs", 50}}},
            {"media", {{"sigma_s", 1.0}, {"sigma_a", 0.0}}},
            {"kn", 1.0},
            {"beam", {{"region", "all"}, {"axis", {1.0, 0.0}},
                      {"h", 1.5 * kTwoPi / 50.0}}},
            {"modulation", {{"eps", eps}, {"order", K}}},
            {"solver", {{"tol", 1e-10}}}};
  ExperimentConfig cfg = parse_config(j.dump(), "a7");
  PipelineResult pr = run_pipeline(cfg, 1, "measured");
  double bound = std::max(kRecoverFloor, kRecoverEpsConst * eps);
  bool ok = pr.metrics.h_rel_l2 <= bound;
  return {ok, "measured vs direct rel-L2 " + num(pr.metrics.h_rel_l2) + " <= " +
              num(bound) + " (" + std::to_string(pr.metrics.bt_rows) +
              " pairings, K=" + std::to_string(K) + ", imag residue " +
              num(pr.metrics.imag_residue) + "), synthetic gap " + num(synth_gap)};
}

// --- A8 ----------------------------------------------------------------------

Outcome a8_reconstruction() {
  // Exact-ingredient identity: with internal data fabricated from a known
  // attenuation and exit trace, the line inversion returns it exactly.
  {
    Grids gr = build_grids(32, 24, 16);
    BeamSource beam = make_beam({1.0, 0.0}, 2.0 * kTwoPi / 16.0, gr.angular);
    const SpatialGrid& g = gr.spatial;
    ScalarField truth(g), h(g);
    std::vector<double> trace(gr.gamma_plus.entries.size(), 0.0);
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> ds(0.4, 2.4), dt(0.05, 0.9);
    for (int jj = 0; jj < g.ny; ++jj) {
      double a = dt(rng);
      trace[gr.gamma_plus.lookup(Side::right, jj, beam.k0)] = a;
      for (int ii = 0; ii < g.nx; ++ii) {
        truth.at(ii, jj) = ds(rng);
        h.at(ii, jj) = -truth.at(ii, jj) * a / beam.value;
      }
    }
    Reconstruction rec = reconstruct_sigma(gr, h, beam, trace);
    if (rec.masked != 0) return {false, "identity check masked cells"};
    double gap = 0;
    for (int c = 0; c < g.cell_count(); ++c)
      gap = std::max(gap,
                     std::abs(rec.sigma_over_kn.v[c] - truth.v[c]) / truth.v[c]);
    if (gap > kReconIdentity)
      return {false, "inversion identity gap " + num(gap) + " > " +
                     num(kReconIdentity)};
  }

  // Grid fine enough that scheme error does not mask the physical O(h)
  // model error: the line error converges ~0.110 (64^2) -> ~0.099 (256^2)
  // -> 0.0985 (320^2) under refinement.
  json j = {{"version", 1},
            {"grid", {{"nx", 320}, {"ny", 320}, {"n_dirs", 100}}},
            {"media", {{"sigma_s", 1.0}, {"sigma_a", 0.0}}},
            {"kn", 1.0},
            {"beam", {{"region", "all"}, {"axis", {1.0, 0.0}}, {"h", kTwoPi / 50.0}}},
            {"solver", {{"tol", 1e-10}}}};
  ExperimentConfig cfg = parse_config(j.dump(), "a8");
  const std::vector<double> kns = {1.0, 0.5, 0.25, 0.125, 0.0625};
  std::vector<double> line_err;
  bool unmasked_mild = true;
  for (double kn : kns) {
    cfg.kn = kn;
    PipelineResult pr = run_pipeline(cfg, 1, "direct");
    line_err.push_back(pr.metrics.recon_line_sup);
    if (kn >= 0.25) unmasked_mild = unmasked_mild && pr.metrics.recon_masked == 0;
  }
  bool ok = line_err[0] <= kReconLine && unmasked_mild;
  for (size_t k = 0; k + 1 < line_err.size(); ++k)
    ok = ok && line_err[k + 1] >= kReconMonotoneSlack * line_err[k];
  std::string errs;
  for (double e : line_err) errs += (errs.empty() ? "" : " ") + num(e);
  return {ok, "line sup error at kn {1 ... 1/16}: [" + errs + "]; first <= " +
              num(kReconLine) + ", monotone within slack " +
              num(kReconMonotoneSlack) + ", no masked cells at kn >= 1/4, "
              "identity exact"};
}

// --- A9 ----------------------------------------------------------------------

Outcome a9_determinism() {
  json j = {{"version", 1},
            {"grid", {{"nx", 20}, {"ny", 20}, {"n_dirs", 16}}},
            {"media", {{"sigma_s", 1.0}, {"sigma_a", 0.2}}},
            {"kn_list", {1.0, 0.5}},
            {"beam",
             {{"region", "face"}, {"side", "left"}, {"coord", 0.5},
              {"axis", {1.0, 0.0}}, {"h", 1.5 * kTwoPi / 16.0}}},
            {"h_list", {1.5 * kTwoPi / 16.0, 3.0 * kTwoPi / 16.0}},
            {"solver", {{"tol", 1e-9}}}};
  ExperimentConfig cfg = parse_config(j.dump(), "a9");
  rtao_test::TempDir tmp("rtao-acceptance");
  std::vector<std::string> bodies;
  for (int workers : {1, 4, 8}) {
    SweepResult sw = run_figure_sweep(cfg, workers);
    std::string path = tmp.file("sweep-w" + std::to_string(workers) + ".csv");
    write_sweep_csv(path, sw);
    bodies.push_back(slurp(path));
  }
  bool ok = !bodies[0].empty() && bodies[0] == bodies[1] && bodies[0] == bodies[2];
  return {ok, ok ? "sweep CSV byte-identical across 1, 4, 8 workers ("
                   + std::to_string(bodies[0].size()) + " bytes)"
                 : "worker outputs differ"};
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    const char* id;
    const char* name;
    Outcome (*fn)();
  };
  const std::vector<Entry> table = {
      {"A1", "dense-oracle equivalence", a1_dense_oracle},
      {"A2", "structural invariants", a2_invariants},
      {"A3", "ballistic pairing error scale", a3_ballistic_pairing},
      {"A4", "scattered-term width scaling", a4_scattered_scaling},
      {"A5", "error-scaling sweep fits", a5_sweep_fits},
      {"A6", "first-order perturbation ratio", a6_perturbation},
      {"A7", "measured-field recovery", a7_recovery},
      {"A8", "attenuation reconstruction", a8_reconstruction},
      {"A9", "sweep determinism", a9_determinism},
  };

  std::vector<std::string> want(argv + 1, argv + argc);
  for (const auto& w : want) {
    bool known = false;
    for (const auto& e : table) known = known || w == e.id;
    if (!known) {
      std::cerr << "unknown criterion '" << w << "'; expected A1..A9\n";
      return 2;
    }
  }

  int failures = 0;
  for (const auto& e : table) {
    if (!want.empty() &&
        std::find(want.begin(), want.end(), e.id) == want.end())
      continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = e.fn();
    } catch (const std::exception& ex) {
      out = {false, std::string("exception: ") + ex.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    std::cout << e.id << " " << e.name << ": " << (out.pass ? "PASS" : "FAIL")
              << " (" << out.detail << ") [" << format_double(secs) << " s]"
              << std::endl;
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
