// Copyright 2026 The rtao Authors
// SPDX-License-Identifier: Apache-2.0
//
// Rectangular cell grid, unit-circle direction set, inflow/outflow boundary
// enumerations and exact ray tracing through the cell grid.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "rtao/util.hpp"

namespace rtao {

struct Vec2 {
  double x = 0, y = 0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

// Uniform nx-by-ny cell grid over [x0, x0+lx] x [y0, y0+ly].
// Cell (i,j) covers the half-open box [x0+i*dx, x0+(i+1)*dx) x [...): a point
// on a shared edge belongs to the cell on its upper/right side.
struct SpatialGrid {
  double x0 = 0, y0 = 0;
  double lx = 1, ly = 1;
  int nx = 0, ny = 0;

  double dx() const { return lx / nx; }
  double dy() const { return ly / ny; }
  int cell_count() const { return nx * ny; }
  int cell_index(int i, int j) const { return j * nx + i; }
  Vec2 cell_center(int i, int j) const {
    return {x0 + (i + 0.5) * dx(), y0 + (j + 0.5) * dy()};
  }
  int locate_x(double x) const { return static_cast<int>(std::floor((x - x0) / dx())); }
  int locate_y(double y) const { return static_cast<int>(std::floor((y - y0) / dy())); }
  bool strictly_inside(Vec2 p) const {
    return p.x > x0 && p.x < x0 + lx && p.y > y0 && p.y < y0 + ly;
  }
};

inline SpatialGrid make_spatial_grid(int nx, int ny, double lx = 1.0, double ly = 1.0,
                                     Vec2 origin = {0, 0}) {
  if (nx <= 0 || ny <= 0) throw ConfigError("grid: cell counts must be positive");
  if (!(lx > 0) || !(ly > 0)) throw ConfigError("grid: extents must be positive");
  return SpatialGrid{origin.x, origin.y, lx, ly, nx, ny};
}

// Direction set theta_k = (cos phi_k, sin phi_k), phi_k = 2*pi*k/n, uniform
// weights summing to one.  n must be even so the set is closed under
// negation; the second half is constructed by negating the first so the
// closure is exact in floating point.  Components below 1e-15 are snapped to
// zero so tangential directions are excluded from boundary sets exactly.
struct AngularGrid {
  int n_dirs = 0;
  std::vector<Vec2> dir;
  std::vector<double> weight;
  std::vector<int> opposite;

  double angle(int k) const { return kTwoPi * k / n_dirs; }
  int wrap(int k) const {
    int m = k % n_dirs;
    return m < 0 ? m + n_dirs : m;
  }
  // Index of the direction closest (in angle) to the given vector.
  int nearest(Vec2 theta) const {
    double phi = std::atan2(theta.y, theta.x);
    int k = wrap(static_cast<int>(std::llround(phi / (kTwoPi / n_dirs))));
    return k;
  }
};

inline AngularGrid make_angular_grid(int n_dirs) {
  if (n_dirs < 8 || n_dirs % 2 != 0)
    throw ConfigError("angular grid: n_dirs must be even and at least 8");
  AngularGrid g;
  g.n_dirs = n_dirs;
  g.dir.resize(n_dirs);
  g.weight.assign(n_dirs, 1.0 / n_dirs);
  g.opposite.resize(n_dirs);
  int half = n_dirs / 2;
  for (int k = 0; k < half; ++k) {
    double phi = kTwoPi * k / n_dirs;
    double c = std::cos(phi), s = std::sin(phi);
    if (std::abs(c) < 1e-15) c = 0.0;
    if (std::abs(s) < 1e-15) s = 0.0;
    g.dir[k] = {c, s};
    g.dir[k + half] = {-c, -s};
  }
  for (int k = 0; k < n_dirs; ++k) g.opposite[k] = (k + half) % n_dirs;
  return g;
}

enum class Side : int { left = 0, right = 1, bottom = 2, top = 3 };

inline Vec2 outward_normal(Side s) {
  switch (s) {
    case Side::left: return {-1, 0};
    case Side::right: return {1, 0};
    case Side::bottom: return {0, -1};
    default: return {0, 1};
  }
}

inline Side opposite_side(Side s) {
  switch (s) {
    case Side::left: return Side::right;
    case Side::right: return Side::left;
    case Side::bottom: return Side::top;
    default: return Side::bottom;
  }
}

inline const char* side_name(Side s) {
  switch (s) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::bottom: return "bottom";
    default: return "top";
  }
}

inline int side_face_count(Side s, const SpatialGrid& g) {
  return (s == Side::left || s == Side::right) ? g.ny : g.nx;
}

// One (boundary face, direction) pair.  n_dot_theta is negative on the
// inflow set and positive on the outflow set; ds is the face measure.
struct BoundaryEntry {
  Side side;
  int face;
  int dir;
  double ds;
  double n_dot_theta;
};

struct BoundarySet {
  bool inflow = true;
  std::vector<BoundaryEntry> entries;
  // Dense lookup (side, face, dir) -> entry position, -1 when absent.
  std::vector<int32_t> pos;
  int n_dirs = 0;
  int face_counts[4] = {0, 0, 0, 0};
  int side_offsets[4] = {0, 0, 0, 0};

  int lookup(Side side, int face, int dir) const {
    int s = static_cast<int>(side);
    if (face < 0 || face >= face_counts[s] || dir < 0 || dir >= n_dirs) return -1;
    return pos[(side_offsets[s] + face) * static_cast<size_t>(n_dirs) + dir];
  }
};

struct Grids {
  SpatialGrid spatial;
  AngularGrid angular;
  BoundarySet gamma_minus;  // inflow:  n.theta < 0
  BoundarySet gamma_plus;   // outflow: n.theta > 0
};

namespace detail {
inline BoundarySet enumerate_boundary(const SpatialGrid& sg, const AngularGrid& ag,
                                      bool inflow) {
  BoundarySet bs;
  bs.inflow = inflow;
  bs.n_dirs = ag.n_dirs;
  int total_faces = 0;
  for (int s = 0; s < 4; ++s) {
    bs.face_counts[s] = side_face_count(static_cast<Side>(s), sg);
    bs.side_offsets[s] = total_faces;
    total_faces += bs.face_counts[s];
  }
  bs.pos.assign(static_cast<size_t>(total_faces) * ag.n_dirs, -1);
  for (int s = 0; s < 4; ++s) {
    Side side = static_cast<Side>(s);
    Vec2 n = outward_normal(side);
    double ds = (side == Side::left || side == Side::right) ? sg.dy() : sg.dx();
    for (int face = 0; face < bs.face_counts[s]; ++face) {
      for (int k = 0; k < ag.n_dirs; ++k) {
        double nt = dot(n, ag.dir[k]);
        if (nt == 0.0) continue;  // tangential directions excluded
        if ((nt < 0.0) != inflow) continue;
        bs.pos[(bs.side_offsets[s] + face) * static_cast<size_t>(ag.n_dirs) + k] =
            static_cast<int32_t>(bs.entries.size());
        bs.entries.push_back({side, face, k, ds, nt});
      }
    }
  }
  return bs;
}
}  // namespace detail

inline Grids build_grids(int nx, int ny, int n_dirs, double lx = 1.0, double ly = 1.0,
                         Vec2 origin = {0, 0}) {
  Grids g;
  g.spatial = make_spatial_grid(nx, ny, lx, ly, origin);
  g.angular = make_angular_grid(n_dirs);
  g.gamma_minus = detail::enumerate_boundary(g.spatial, g.angular, true);
  g.gamma_plus = detail::enumerate_boundary(g.spatial, g.angular, false);
  return g;
}

// Cell index of the interior cell adjacent to a boundary face.
inline int boundary_adjacent_cell(const SpatialGrid& g, Side side, int face) {
  switch (side) {
    case Side::left: return g.cell_index(0, face);
    case Side::right: return g.cell_index(g.nx - 1, face);
    case Side::bottom: return g.cell_index(face, 0);
    default: return g.cell_index(face, g.ny - 1);
  }
}

struct RaySegment {
  int cell;
  double length;
};

// Exact traversal record for the full chord through x along theta.
// seg_minus walks from x toward the boundary against theta (ordered from x
// outward); seg_plus walks along theta.  Segment lengths on each side sum to
// tau_minus / tau_plus exactly (the final segment is clamped to the analytic
// exit distance).
struct RayTrace {
  Vec2 x, theta;
  double tau_minus = 0, tau_plus = 0;
  std::vector<RaySegment> seg_minus, seg_plus;
  Side entry_side = Side::left;  // boundary hit against theta
  Side exit_side = Side::right;  // boundary hit along theta
  int entry_face = 0, exit_face = 0;
  double chord() const { return tau_minus + tau_plus; }
};

namespace detail {

struct Walk {
  double tau;
  Side side;
  int face;
  std::vector<RaySegment> segs;
};

inline Walk walk_ray(Vec2 x, Vec2 d, const SpatialGrid& g) {
  Walk w;
  // Analytic distance to the boundary; x-axis wins corner ties.
  double tau = std::numeric_limits<double>::infinity();
  Side side = Side::right;
  if (d.x > 0) {
    tau = (g.x0 + g.lx - x.x) / d.x;
    side = Side::right;
  } else if (d.x < 0) {
    tau = (g.x0 - x.x) / d.x;
    side = Side::left;
  }
  if (d.y > 0) {
    double t = (g.y0 + g.ly - x.y) / d.y;
    if (t < tau) { tau = t; side = Side::top; }
  } else if (d.y < 0) {
    double t = (g.y0 - x.y) / d.y;
    if (t < tau) { tau = t; side = Side::bottom; }
  }
  w.tau = tau;
  w.side = side;
  Vec2 exit = x + tau * d;
  double along = (side == Side::left || side == Side::right) ? exit.y : exit.x;
  int nfaces = side_face_count(side, g);
  double dd = (side == Side::left || side == Side::right) ? g.dy() : g.dx();
  double o = (side == Side::left || side == Side::right) ? g.y0 : g.x0;
  int face = static_cast<int>(std::floor((along - o) / dd));
  w.face = std::clamp(face, 0, nfaces - 1);

  // Voxel walk.  Edge positions are recomputed from integer indices each
  // step, so the parameter sums telescope exactly to tau.
  int i = std::clamp(g.locate_x(x.x), 0, g.nx - 1);
  int j = std::clamp(g.locate_y(x.y), 0, g.ny - 1);
  const double inf = std::numeric_limits<double>::infinity();
  double t = 0;
  const double tau_guard = tau * (1.0 - 1e-15);
  while (true) {
    double tx = inf, ty = inf;
    if (d.x > 0) tx = (g.x0 + (i + 1) * g.dx() - x.x) / d.x;
    else if (d.x < 0) tx = (g.x0 + i * g.dx() - x.x) / d.x;
    if (d.y > 0) ty = (g.y0 + (j + 1) * g.dy() - x.y) / d.y;
    else if (d.y < 0) ty = (g.y0 + j * g.dy() - x.y) / d.y;
    double tn = std::min(tx, ty);
    if (tn >= tau_guard) {
      if (tau > t) w.segs.push_back({g.cell_index(i, j), tau - t});
      break;
    }
    if (tn > t) w.segs.push_back({g.cell_index(i, j), tn - t});
    if (tx <= tn) i += (d.x > 0) ? 1 : -1;
    if (ty <= tn) j += (d.y > 0) ? 1 : -1;
    t = tn;
    if (i < 0 || i >= g.nx || j < 0 || j >= g.ny) break;
  }
  return w;
}

}  // namespace detail

inline RayTrace trace_ray(Vec2 x, Vec2 theta, const SpatialGrid& g) {
  if (!g.strictly_inside(x))
    throw std::invalid_argument("trace_ray: point must lie strictly inside the domain");
  double n = norm(theta);
  if (!(std::abs(n - 1.0) < 1e-9))
    throw std::invalid_argument("trace_ray: direction must be a unit vector");
  theta = (1.0 / n) * theta;
  RayTrace r;
  r.x = x;
  r.theta = theta;
  auto plus = detail::walk_ray(x, theta, g);
  auto minus = detail::walk_ray(x, {-theta.x, -theta.y}, g);
  r.tau_plus = plus.tau;
  r.exit_side = plus.side;
  r.exit_face = plus.face;
  r.seg_plus = std::move(plus.segs);
  r.tau_minus = minus.tau;
  r.entry_side = minus.side;
  r.entry_face = minus.face;
  r.seg_minus = std::move(minus.segs);
  return r;
}

enum class RaySide { minus, plus, full };

// Integral of a piecewise-constant cell field along the traced ray.
inline double line_integral(std::span<const double> cell_values, const RayTrace& r,
                            RaySide side) {
  double acc = 0;
  if (side != RaySide::plus)
    for (const auto& s : r.seg_minus) acc += cell_values[s.cell] * s.length;
  if (side != RaySide::minus)
    for (const auto& s : r.seg_plus) acc += cell_values[s.cell] * s.length;
  return acc;
}

}  // namespace rtao
