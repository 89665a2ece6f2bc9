// Copyright 2026 The rtao Authors
// SPDX-License-Identifier: Apache-2.0
//
// Internal functional extraction: the direct formula from a forward/adjoint
// solution pair, and the measurement route that modulates the coefficients
// with harmonic oscillations, records the boundary pairing and recovers the
// internal field from its Fourier data.

#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "rtao/field.hpp"
#include "rtao/geometry.hpp"
#include "rtao/media.hpp"
#include "rtao/transport.hpp"
#include "rtao/util.hpp"

namespace rtao {

// H = (sigma_s/kn)<u><v> - (sigma/kn)<u v>.
struct InternalField {
  ScalarField h;
  std::string provenance;   // "direct" or "measured"
  double eps = 0;           // modulation amplitude (measured route)
  int order = 0;            // Fourier order K (measured route)
  double imag_residue = 0;  // max imaginary part discarded during synthesis
};

inline InternalField internal_direct(const MediaCoefficients& media,
                                     const PhaseSpaceField& u,
                                     const PhaseSpaceField& v) {
  if (!same_grid(media.sigma_s.grid, u.grid) || !same_grid(u.grid, v.grid))
    throw ConfigError("internal: fields must share the media grid");
  const ScalarField mu = angular_average(u);
  const ScalarField mv = angular_average(v);
  const ScalarField muv = average_of_product(u, v);
  const ScalarField sigma = total_sigma(media);
  InternalField out;
  out.h = ScalarField(u.grid);
  out.provenance = "direct";
  const double inv_kn = 1.0 / media.kn;
  for (size_t c = 0; c < out.h.v.size(); ++c)
    out.h.v[c] =
        inv_kn * (media.sigma_s.v[c] * mu.v[c] * mv.v[c] - sigma.v[c] * muv.v[c]);
  return out;
}

// One boundary-pairing measurement at modulation (q, phase, eps).
struct Measurement {
  Vec2 q{0, 0};
  Phase phase = Phase::cosine;
  double eps = 0;
  double bt = 0;
};

struct MeasurementSet {
  double lx = 1, ly = 1;
  int order = 0;
  std::vector<Measurement> rows;
};

// Evaluates BT(q, phase, eps): solves the forward problem with modulated
// coefficients and pairs it against the cached unmodulated adjoint solution.
// measure() is safe to call concurrently.
class BtEvaluator {
 public:
  BtEvaluator(const Grids& gr, const MediaCoefficients& media, std::vector<double> f,
              std::vector<double> g, const SolveOptions& opt)
      : gr_(gr), media_(media), f_(std::move(f)), g_(std::move(g)), opt_(opt) {
    TransportProblem adj{media_, g_, VolumeSource::none(), TransportSign::adjoint};
    TransportSolution sol = solve_transport(gr_, adj, opt_);
    require_converged(sol.report, "measurement adjoint");
    v_ = std::move(sol.u);
  }

  double measure(const ModulationParams& p) const {
    TransportProblem fwd{modulate(media_, p), f_, VolumeSource::none(),
                         TransportSign::forward};
    TransportSolution sol = solve_transport(gr_, fwd, opt_);
    require_converged(sol.report, "modulated forward");
    return boundary_pairing(gr_, f_, sol.u, v_, g_);
  }

  const PhaseSpaceField& adjoint() const { return v_; }
  const Grids& grids() const { return gr_; }

 private:
  const Grids& gr_;
  MediaCoefficients media_;
  std::vector<double> f_, g_;
  SolveOptions opt_;
  PhaseSpaceField v_;
};

// Oscillation wave vector for integer lattice indices on the domain box.
inline Vec2 lattice_q(int kx, int ky, double lx, double ly) {
  return {kTwoPi * kx / lx, kTwoPi * ky / ly};
}

namespace detail {

// Canonical measured lattice: kx > 0, or kx == 0 and ky >= 0.  The opposite
// half is redundant because the internal field is real.
inline std::vector<std::pair<int, int>> half_lattice(int order) {
  std::vector<std::pair<int, int>> ks;
  for (int kx = 0; kx <= order; ++kx)
    for (int ky = (kx == 0 ? 0 : -order); ky <= order; ++ky) ks.push_back({kx, ky});
  return ks;
}

}  // namespace detail

// Measures cos/sin pairings on the canonical half lattice up to the given
// order.  Rows are emitted in a fixed order; measurements are distributed
// over workers with results stored by slot, so the output is identical for
// any worker count.
inline MeasurementSet measure_lattice(const BtEvaluator& bt, const SpatialGrid& g,
                                      int order, double eps, int workers = 1) {
  if (order < 1) throw ConfigError("measure: order must be at least 1");
  if (!(eps > 0) || eps >= 1) throw ConfigError("measure: eps must lie in (0, 1)");
  MeasurementSet ms;
  ms.lx = g.lx;
  ms.ly = g.ly;
  ms.order = order;
  for (auto [kx, ky] : detail::half_lattice(order)) {
    Vec2 q = lattice_q(kx, ky, g.lx, g.ly);
    ms.rows.push_back({q, Phase::cosine, eps, 0.0});
    if (kx != 0 || ky != 0) ms.rows.push_back({q, Phase::sine, eps, 0.0});
  }
  parallel_for_index(static_cast<int>(ms.rows.size()), workers, [&](int r) {
    Measurement& m = ms.rows[r];
    m.bt = bt.measure(ModulationParams{m.eps, m.q, m.phase});
  });
  return ms;
}

inline void write_measurements_csv(const std::string& path, const MeasurementSet& ms) {
  std::string body = "lx,ly,order\n";
  body += format_double(ms.lx) + "," + format_double(ms.ly) + "," +
          std::to_string(ms.order) + "\n";
  body += "qx,qy,phase,eps,bt\n";
  for (const auto& m : ms.rows) {
    body += format_double(m.q.x) + "," + format_double(m.q.y) + ",";
    body += (m.phase == Phase::cosine) ? "cos" : "sin";
    body += "," + format_double(m.eps) + "," + format_double(m.bt) + "\n";
  }
  write_text_file(path, body);
}

inline MeasurementSet read_measurements_csv(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.size() < 3 || split_csv_line(lines[0])[0] != "lx")
    throw ConfigError("measurements " + path + ": expected 'lx,ly,order' header");
  auto hdr = split_csv_line(lines[1]);
  if (hdr.size() != 3) throw ConfigError("measurements " + path + ": bad header row");
  MeasurementSet ms;
  ms.lx = parse_double(hdr[0]);
  ms.ly = parse_double(hdr[1]);
  ms.order = static_cast<int>(parse_double(hdr[2]));
  if (split_csv_line(lines[2])[0] != "qx")
    throw ConfigError("measurements " + path + ": expected 'qx,qy,phase,eps,bt' header");
  for (size_t r = 3; r < lines.size(); ++r) {
    auto cells = split_csv_line(lines[r]);
    if (cells.size() != 5)
      throw ConfigError("measurements " + path + ": row needs 5 fields");
    Measurement m;
    m.q = {parse_double(cells[0]), parse_double(cells[1])};
    if (cells[2] == "cos") m.phase = Phase::cosine;
    else if (cells[2] == "sin") m.phase = Phase::sine;
    else throw ConfigError("measurements " + path + ": phase must be cos or sin");
    m.eps = parse_double(cells[3]);
    m.bt = parse_double(cells[4]);
    ms.rows.push_back(m);
  }
  return ms;
}

namespace detail {

inline int lattice_index_of(double q, double extent, int order, const char* axis) {
  double t = q * extent / kTwoPi;
  double r = std::round(t);
  if (std::abs(t - r) > 1e-9)
    throw ConfigError(std::string("recover: q") + axis +
                      " is not on the domain lattice");
  int k = static_cast<int>(r);
  if (std::abs(k) > order)
    throw ConfigError(std::string("recover: q") + axis + " exceeds the stated order");
  return k;
}

}  // namespace detail

// Recovers the internal field from a complete canonical half-lattice of
// boundary-pairing measurements: each value divided by (2*pi*eps) is a
// Fourier coefficient of the field against its oscillation, and the complex
// synthesis over the mirrored full lattice is evaluated at cell centers.
// The imaginary part (identically zero in exact arithmetic) is discarded and
// its maximum magnitude reported.
inline InternalField recover_internal(const MeasurementSet& ms, const SpatialGrid& g) {
  if (std::abs(ms.lx - g.lx) > 1e-12 || std::abs(ms.ly - g.ly) > 1e-12)
    throw ConfigError("recover: measurement domain does not match the grid");
  const int K = ms.order;
  if (K < 1) throw ConfigError("recover: order must be at least 1");
  const int side = 2 * K + 1;
  // c[idx], s[idx] indexed by (kx+K)*side + (ky+K) over the half lattice.
  std::vector<double> cval(static_cast<size_t>(side) * side, 0.0);
  std::vector<double> sval(static_cast<size_t>(side) * side, 0.0);
  std::vector<char> chave(static_cast<size_t>(side) * side, 0);
  std::vector<char> shave(static_cast<size_t>(side) * side, 0);
  double mean_eps = 0;
  for (const auto& m : ms.rows) {
    int kx = detail::lattice_index_of(m.q.x, ms.lx, K, "x");
    int ky = detail::lattice_index_of(m.q.y, ms.ly, K, "y");
    if (kx < 0 || (kx == 0 && ky < 0))
      throw ConfigError("recover: measurement off the canonical half lattice");
    if (!(m.eps > 0)) throw ConfigError("recover: eps must be positive");
    size_t idx = static_cast<size_t>(kx + K) * side + (ky + K);
    double coeff = m.bt / (kTwoPi * m.eps);
    if (m.phase == Phase::cosine) {
      if (chave[idx]) throw ConfigError("recover: duplicate cosine measurement");
      cval[idx] = coeff;
      chave[idx] = 1;
    } else {
      if (kx == 0 && ky == 0)
        throw ConfigError("recover: sine measurement at q = 0 carries no data");
      if (shave[idx]) throw ConfigError("recover: duplicate sine measurement");
      sval[idx] = coeff;
      shave[idx] = 1;
    }
    mean_eps += m.eps;
  }
  for (int kx = 0; kx <= K; ++kx)
    for (int ky = (kx == 0 ? 0 : -K); ky <= K; ++ky) {
      size_t idx = static_cast<size_t>(kx + K) * side + (ky + K);
      if (!chave[idx] || (!shave[idx] && !(kx == 0 && ky == 0)))
        throw ConfigError("recover: incomplete half lattice at k = (" +
                          std::to_string(kx) + ", " + std::to_string(ky) + ")");
    }

  InternalField out;
  out.h = ScalarField(g);
  out.provenance = "measured";
  out.order = K;
  out.eps = ms.rows.empty() ? 0.0 : mean_eps / static_cast<double>(ms.rows.size());
  const double inv_area = 1.0 / (g.lx * g.ly);
  double residue = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Vec2 x = g.cell_center(i, j);
      std::complex<double> acc = 0;
      for (int kx = -K; kx <= K; ++kx)
        for (int ky = -K; ky <= K; ++ky) {
          // Mirror the conjugate half: hat(-k) = conj(hat(k)).
          int mx = kx, my = ky;
          double sign = 1;
          if (mx < 0 || (mx == 0 && my < 0)) {
            mx = -mx;
            my = -my;
            sign = -1;
          }
          size_t idx = static_cast<size_t>(mx + K) * side + (my + K);
          std::complex<double> hat(cval[idx], -sign * sval[idx]);
          Vec2 q = lattice_q(kx, ky, g.lx, g.ly);
          double ph = q.x * x.x + q.y * x.y;
          acc += hat * std::complex<double>(std::cos(ph), std::sin(ph));
        }
      out.h.at(i, j) = acc.real() * inv_area;
      residue = std::max(residue, std::abs(acc.imag()) * inv_area);
    }
  out.imag_residue = residue;
  return out;
}

}  // namespace rtao
