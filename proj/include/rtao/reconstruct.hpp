// Copyright 2026 The rtao Authors
// SPDX-License-Identifier: Apache-2.0
//
// Attenuation recovery from internal data along axis-aligned beam lines,
// masked relative-error fields, and the least-squares fits used by the
// scaling studies.

#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "rtao/field.hpp"
#include "rtao/geometry.hpp"
#include "rtao/media.hpp"
#include "rtao/transport.hpp"
#include "rtao/util.hpp"

namespace rtao {

struct Reconstruction {
  ScalarField sigma_over_kn;  // recovered total attenuation over kn
  std::vector<char> mask;     // 1 where the recovery is valid
  int masked = 0;             // number of masked cells
};

namespace detail {

// The recovery runs line-by-line along the beam axis, so the axis must be a
// grid axis.  Returns true for the x axis, false for the y axis.
inline bool beam_axis_is_x(const BeamSource& beam) {
  const Vec2 t = beam.theta0;
  if (std::abs(t.x) == 1.0 && t.y == 0.0) return true;
  if (std::abs(t.y) == 1.0 && t.x == 0.0) return false;
  throw ConfigError(
      "reconstruct: beam axis must be a coordinate axis of the grid (pick a "
      "direction count that contains it exactly)");
}

}  // namespace detail

// Recovers sigma/kn from the internal field of a concentrated beam pair:
// on each grid line parallel to the beam axis, -H equals (sigma/kn) times
// the attenuated beam product, and the measured exit trace of the forward
// solution supplies the attenuation.  Worked in log space with an exponent
// clamp; cells where -H or the exit value is not positive are masked.
inline Reconstruction reconstruct_sigma(const Grids& gr, const ScalarField& h,
                                        const BeamSource& beam,
                                        const std::vector<double>& exit_trace) {
  if (!same_grid(h.grid, gr.spatial))
    throw ConfigError("reconstruct: internal field grid does not match");
  if (exit_trace.size() != gr.gamma_plus.entries.size())
    throw ConfigError("reconstruct: exit trace must be indexed by the outflow set");
  const SpatialGrid& g = gr.spatial;
  const bool along_x = detail::beam_axis_is_x(beam);
  const bool positive = along_x ? beam.theta0.x > 0 : beam.theta0.y > 0;
  const Side exit_side = along_x ? (positive ? Side::right : Side::left)
                                 : (positive ? Side::top : Side::bottom);
  Reconstruction out;
  out.sigma_over_kn = ScalarField(g);
  out.mask.assign(g.cell_count(), 0);
  const int lines = along_x ? g.ny : g.nx;
  const int per_line = along_x ? g.nx : g.ny;
  const double log_f = std::log(beam.value);
  for (int line = 0; line < lines; ++line) {
    int pos = gr.gamma_plus.lookup(exit_side, line, beam.k0);
    double a = pos >= 0 ? exit_trace[pos] : 0.0;
    const bool line_ok = pos >= 0 && std::isfinite(a) && a > 0;
    const double log_gain = line_ok ? log_f - std::log(a) : 0.0;
    for (int t = 0; t < per_line; ++t) {
      int i = along_x ? t : line;
      int j = along_x ? line : t;
      int c = g.cell_index(i, j);
      if (!line_ok) continue;
      double num = -h.v[c];
      if (!(num > 0) || !std::isfinite(num)) continue;
      double ex = std::log(num) + log_gain;
      if (ex > 700.0) continue;  // overflow guard: leave masked
      out.sigma_over_kn.v[c] = std::exp(ex);
      out.mask[c] = 1;
    }
  }
  for (char m : out.mask)
    if (!m) ++out.masked;
  return out;
}

// Elementwise (a - p)/p where |p| exceeds the guard; masked elsewhere.
struct ErrorField {
  ScalarField err;
  std::vector<char> mask;
};

inline ErrorField relative_error_field(const ScalarField& a, const ScalarField& p,
                                       double guard) {
  if (!same_grid(a.grid, p.grid))
    throw ConfigError("error field: grids do not match");
  ErrorField out{ScalarField(a.grid), std::vector<char>(a.v.size(), 0)};
  for (size_t c = 0; c < a.v.size(); ++c) {
    if (!(std::abs(p.v[c]) > guard)) continue;
    out.err.v[c] = (a.v[c] - p.v[c]) / p.v[c];
    out.mask[c] = 1;
  }
  return out;
}

// sqrt( sum err^2 dx dy ) over unmasked cells.
inline double masked_l2(const ErrorField& e) {
  const double da = e.err.grid.dx() * e.err.grid.dy();
  double s = 0;
  for (size_t c = 0; c < e.err.v.size(); ++c)
    if (e.mask[c]) s += e.err.v[c] * e.err.v[c] * da;
  return std::sqrt(s);
}

inline double masked_sup(const ErrorField& e) {
  double m = 0;
  for (size_t c = 0; c < e.err.v.size(); ++c)
    if (e.mask[c]) m = std::max(m, std::abs(e.err.v[c]));
  return m;
}

// sup and RMS of an error field over the central fraction of one grid line
// (row when along_x, column otherwise); masked cells are skipped and counted.
struct LineStats {
  double sup = 0, rms = 0;
  int used = 0, masked = 0;
};

inline LineStats line_stats(const ErrorField& e, bool along_x, int line,
                            double central_fraction) {
  const SpatialGrid& g = e.err.grid;
  const int n = along_x ? g.nx : g.ny;
  const int skip = static_cast<int>(std::floor(0.5 * (1.0 - central_fraction) * n));
  LineStats s;
  double ss = 0;
  for (int t = skip; t < n - skip; ++t) {
    int c = along_x ? g.cell_index(t, line) : g.cell_index(line, t);
    if (!e.mask[c]) {
      ++s.masked;
      continue;
    }
    double v = e.err.v[c];
    s.sup = std::max(s.sup, std::abs(v));
    ss += v * v;
    ++s.used;
  }
  s.rms = s.used > 0 ? std::sqrt(ss / s.used) : 0.0;
  return s;
}

// sup relative deviation |rec - ref|/|ref| over the central fraction of one
// grid line (row for x-axis beams, column otherwise); masked cells on the
// line are counted as failures and returned as +infinity.
inline double line_sup_rel_error(const Reconstruction& rec, const ScalarField& ref,
                                 bool along_x, int line, double central_fraction) {
  const SpatialGrid& g = ref.grid;
  const int n = along_x ? g.nx : g.ny;
  const int skip = static_cast<int>(std::floor(0.5 * (1.0 - central_fraction) * n));
  double m = 0;
  for (int t = skip; t < n - skip; ++t) {
    int c = along_x ? g.cell_index(t, line) : g.cell_index(line, t);
    if (!rec.mask[c]) return std::numeric_limits<double>::infinity();
    double denom = std::abs(ref.v[c]);
    if (denom == 0) return std::numeric_limits<double>::infinity();
    m = std::max(m, std::abs(rec.sigma_over_kn.v[c] - ref.v[c]) / denom);
  }
  return m;
}

// Ordinary least squares y = intercept + slope * x with the coefficient of
// determination; requires at least two distinct abscissae.
struct LineFit {
  double slope = 0, intercept = 0, r2 = 0;
  int n = 0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("fit: need at least two points");
  const int n = static_cast<int>(x.size());
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw ConfigError("fit: abscissae are all identical");
  LineFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (int i = 0; i < n; ++i) {
    double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r2 = syy > 0 ? 1.0 - ss_res / syy : (ss_res == 0 ? 1.0 : 0.0);
  return f;
}

}  // namespace rtao
