// Copyright 2026 The rtao Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scattering/absorption coefficient fields, harmonic modulation, analytic
// profiles, and the angularly concentrated boundary beam.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rtao/field.hpp"
#include "rtao/geometry.hpp"
#include "rtao/util.hpp"

namespace rtao {

// Cell-centered piecewise-constant coefficients at a fixed Knudsen number.
// The total attenuation sigma_s + kn^2 sigma_a is always recomputed on
// demand, never cached.
struct MediaCoefficients {
  ScalarField sigma_s;
  ScalarField sigma_a;
  double kn = 1.0;
};

inline MediaCoefficients make_media(ScalarField sigma_s, ScalarField sigma_a, double kn) {
  if (!same_grid(sigma_s.grid, sigma_a.grid))
    throw ConfigError("media: sigma_s and sigma_a must share a grid");
  if (!(kn > 0)) throw ConfigError("media: kn must be positive");
  for (double v : sigma_s.v)
    if (!(v > 0) || !std::isfinite(v))
      throw ConfigError("media: sigma_s must be uniformly positive");
  for (double v : sigma_a.v)
    if (v < 0 || !std::isfinite(v))
      throw ConfigError("media: sigma_a must be nonnegative");
  return MediaCoefficients{std::move(sigma_s), std::move(sigma_a), kn};
}

inline ScalarField total_sigma(const MediaCoefficients& m) {
  ScalarField s(m.sigma_s.grid);
  const double k2 = m.kn * m.kn;
  for (size_t c = 0; c < s.v.size(); ++c) s.v[c] = m.sigma_s.v[c] + k2 * m.sigma_a.v[c];
  return s;
}

enum class Phase { cosine, sine };

struct ModulationParams {
  double eps = 0.0;
  Vec2 q{0, 0};
  Phase phase = Phase::cosine;
};

// (1 + eps*osc(q.x)) scaling of both coefficients, evaluated at cell centers
// so the modulated collision operator is an exact cell-wise multiple of the
// unmodulated one.
inline MediaCoefficients modulate(const MediaCoefficients& m, const ModulationParams& p) {
  if (!(p.eps >= 0) || p.eps >= 1)
    throw ConfigError("modulate: eps must lie in [0, 1)");
  MediaCoefficients out = m;
  const SpatialGrid& g = m.sigma_s.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      Vec2 xc = g.cell_center(i, j);
      double ph = p.q.x * xc.x + p.q.y * xc.y;
      double osc = (p.phase == Phase::cosine) ? std::cos(ph) : std::sin(ph);
      double f = 1.0 + p.eps * osc;
      int c = g.cell_index(i, j);
      out.sigma_s.v[c] = f * m.sigma_s.v[c];
      out.sigma_a.v[c] = f * m.sigma_a.v[c];
    }
  if (out.sigma_s.min_value() <= 0)
    throw ConfigError("modulate: modulated sigma_s loses positivity");
  return out;
}

// --- analytic profiles ---------------------------------------------------

inline MediaCoefficients constant_media(const SpatialGrid& g, double kn, double s,
                                        double a) {
  return make_media(ScalarField(g, s), ScalarField(g, a), kn);
}

// Smooth bump on sigma_s over a constant background.
inline MediaCoefficients gaussian_bump_media(const SpatialGrid& g, double kn,
                                             double base_s, double base_a, double amp,
                                             Vec2 center, double width) {
  if (!(width > 0)) throw ConfigError("gaussian-bump: width must be positive");
  ScalarField s(g), a(g, base_a);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      Vec2 xc = g.cell_center(i, j);
      double r2 = dot(xc - center, xc - center);
      s.at(i, j) = base_s + amp * std::exp(-r2 / (width * width));
    }
  return make_media(std::move(s), std::move(a), kn);
}

// Two disk inclusions with raised scattering and absorption.
inline MediaCoefficients two_inclusions_media(const SpatialGrid& g, double kn,
                                              double base_s, double base_a, double amp_s,
                                              double amp_a) {
  ScalarField s(g), a(g);
  Vec2 c1{g.x0 + 0.3 * g.lx, g.y0 + 0.35 * g.ly};
  Vec2 c2{g.x0 + 0.7 * g.lx, g.y0 + 0.65 * g.ly};
  double r1 = 0.12 * std::min(g.lx, g.ly), r2 = 0.16 * std::min(g.lx, g.ly);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      Vec2 xc = g.cell_center(i, j);
      bool in1 = norm(xc - c1) < r1, in2 = norm(xc - c2) < r2;
      s.at(i, j) = base_s + ((in1 || in2) ? amp_s : 0.0);
      a.at(i, j) = base_a + (in2 ? amp_a : 0.0);
    }
  return make_media(std::move(s), std::move(a), kn);
}

// --- concentrated boundary beam ------------------------------------------

// Which boundary faces carry the beam datum.  "all" places it on every face
// of the relevant boundary set; "edge" on one side; "face" on the single
// face of that side containing the given coordinate.
struct EntryRegion {
  enum class Kind { all, edge, face };
  Kind kind = Kind::all;
  Side side = Side::left;
  double coord = 0.5;

  static EntryRegion all_faces() { return {Kind::all, Side::left, 0.0}; }
  static EntryRegion whole_edge(Side s) { return {Kind::edge, s, 0.0}; }
  static EntryRegion single_face(Side s, double coord) { return {Kind::face, s, coord}; }
};

inline bool face_in_region(const EntryRegion& r, Side side, int face,
                           const SpatialGrid& g) {
  if (r.kind == EntryRegion::Kind::all) return true;
  if (side != r.side) return false;
  if (r.kind == EntryRegion::Kind::edge) return true;
  bool horizontal = (side == Side::left || side == Side::right);
  double d = horizontal ? g.dy() : g.dx();
  double o = horizontal ? g.y0 : g.x0;
  int n = side_face_count(side, g);
  int target = std::clamp(static_cast<int>(std::floor((r.coord - o) / d)), 0, n - 1);
  return face == target;
}

// Mirror of a region through the domain for the downstream boundary datum of
// an axis-aligned beam: same coordinate on the opposite side.
inline EntryRegion mirror_region(const EntryRegion& r) {
  EntryRegion out = r;
  out.side = opposite_side(r.side);
  return out;
}

// Piecewise-constant-in-angle beam: value c_norm*h^{-1/2} on directions with
// signed arc offset in [-h, h) around the snapped axis, zero elsewhere.  The
// constant is chosen so the discrete angular mean of f^2 is exactly one.
struct BeamSource {
  int k0 = 0;          // snapped axis direction index
  Vec2 theta0{1, 0};   // snapped axis direction
  double h = 0;        // angular half-width (arc distance)
  double value = 0;    // beam amplitude on the cone
  double c_norm = 0;   // value * sqrt(h); tends to sqrt(pi) as n_dirs grows
  std::vector<int> cone;
  std::vector<char> in_cone;  // per-direction flag
  EntryRegion region;

  double value_for(int k) const { return in_cone[k] ? value : 0.0; }
};

inline BeamSource make_beam(Vec2 theta0, double h, const AngularGrid& ag,
                            EntryRegion region = EntryRegion::all_faces()) {
  if (!(h > 0)) throw ConfigError("beam: h must be positive");
  BeamSource b;
  b.h = h;
  b.region = region;
  b.k0 = ag.nearest(theta0);
  b.theta0 = ag.dir[b.k0];
  b.in_cone.assign(ag.n_dirs, 0);
  // Cone membership in index space: offset jj included iff
  // -h <= (2*pi/n)*jj < h, with a small tolerance so exact cell multiples of
  // h are not split by rounding.
  const double m = h * ag.n_dirs / kTwoPi;
  const double tol = 1e-9;
  long lo = static_cast<long>(std::ceil(-m - tol));
  long hi = static_cast<long>(std::ceil(m - tol)) - 1;
  if (hi - lo + 1 >= ag.n_dirs) {  // beam covers the full circle
    lo = 0;
    hi = ag.n_dirs - 1;
  }
  double wsum = 0;
  for (long jj = lo; jj <= hi; ++jj) {
    int k = ag.wrap(b.k0 + static_cast<int>(jj));
    if (b.in_cone[k]) continue;
    b.in_cone[k] = 1;
    wsum += ag.weight[k];
  }
  for (int k = 0; k < ag.n_dirs; ++k)
    if (b.in_cone[k]) b.cone.push_back(k);
  if (static_cast<int>(b.cone.size()) < 2)
    throw ConfigError(
        "beam: h is below the angular resolution (cone has fewer than two "
        "directions); raise n_dirs or widen h");
  b.value = 1.0 / std::sqrt(wsum);
  b.c_norm = b.value * std::sqrt(h);
  return b;
}

// Boundary datum aligned with the given boundary set (inflow for forward
// problems, outflow for adjoint data).  Rejects a beam with empty support.
inline std::vector<double> beam_trace(const BeamSource& b, const BoundarySet& bs,
                                      const SpatialGrid& g) {
  std::vector<double> out(bs.entries.size(), 0.0);
  bool any = false;
  for (size_t e = 0; e < bs.entries.size(); ++e) {
    const auto& en = bs.entries[e];
    if (b.in_cone[en.dir] && face_in_region(b.region, en.side, en.face, g)) {
      out[e] = b.value;
      any = true;
    }
  }
  if (!any)
    throw ConfigError("beam: empty boundary support (axis points away from the region)");
  return out;
}

}  // namespace rtao
