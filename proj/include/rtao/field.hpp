// Copyright 2026 The rtao Authors
// SPDX-License-Identifier: Apache-2.0
//
// Cell-indexed scalar fields, (cell x direction) phase-space fields, and
// their CSV dump/load formats.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rtao/geometry.hpp"
#include "rtao/util.hpp"

namespace rtao {

struct ScalarField {
  SpatialGrid grid;
  std::vector<double> v;  // row-major, index j*nx + i

  ScalarField() = default;
  explicit ScalarField(const SpatialGrid& g, double fill = 0.0)
      : grid(g), v(static_cast<size_t>(g.cell_count()), fill) {}

  double& at(int i, int j) { return v[grid.cell_index(i, j)]; }
  double at(int i, int j) const { return v[grid.cell_index(i, j)]; }
  double sup_norm() const {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (double x : v) m = std::min(m, x);
    return m;
  }
};

inline bool same_grid(const SpatialGrid& a, const SpatialGrid& b) {
  return a.nx == b.nx && a.ny == b.ny && a.x0 == b.x0 && a.y0 == b.y0 && a.lx == b.lx &&
         a.ly == b.ly;
}

// Angular slabs are contiguous: index (k*ny + j)*nx + i.
struct PhaseSpaceField {
  SpatialGrid grid;
  AngularGrid angular;
  std::vector<double> v;

  PhaseSpaceField() = default;
  PhaseSpaceField(const SpatialGrid& g, const AngularGrid& a, double fill = 0.0)
      : grid(g),
        angular(a),
        v(static_cast<size_t>(g.cell_count()) * a.n_dirs, fill) {}

  size_t index(int i, int j, int k) const {
    return (static_cast<size_t>(k) * grid.ny + j) * grid.nx + i;
  }
  double& at(int i, int j, int k) { return v[index(i, j, k)]; }
  double at(int i, int j, int k) const { return v[index(i, j, k)]; }
  double& at_cell(int c, int k) { return v[static_cast<size_t>(k) * grid.cell_count() + c]; }
  double at_cell(int c, int k) const {
    return v[static_cast<size_t>(k) * grid.cell_count() + c];
  }
  double* slab(int k) { return v.data() + static_cast<size_t>(k) * grid.cell_count(); }
  const double* slab(int k) const {
    return v.data() + static_cast<size_t>(k) * grid.cell_count();
  }
  double sup_norm() const {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
};

// Normalized angular average <u>.  Directions are accumulated in fixed index
// order so the reduction is bit-reproducible for any worker count.
inline ScalarField angular_average(const PhaseSpaceField& u) {
  ScalarField out(u.grid, 0.0);
  const int nc = u.grid.cell_count();
  for (int k = 0; k < u.angular.n_dirs; ++k) {
    const double w = u.angular.weight[k];
    const double* s = u.slab(k);
    for (int c = 0; c < nc; ++c) out.v[c] += w * s[c];
  }
  return out;
}

// Pointwise products and averages used by the decomposition diagnostics.
inline ScalarField average_of_product(const PhaseSpaceField& a, const PhaseSpaceField& b) {
  ScalarField out(a.grid, 0.0);
  const int nc = a.grid.cell_count();
  for (int k = 0; k < a.angular.n_dirs; ++k) {
    const double w = a.angular.weight[k];
    const double* sa = a.slab(k);
    const double* sb = b.slab(k);
    for (int c = 0; c < nc; ++c) out.v[c] += w * sa[c] * sb[c];
  }
  return out;
}

// --- CSV formats ---------------------------------------------------------
//
// Scalar grid file (media coefficients): header "nx,ny,Lx,Ly" then the
// row-major values, one grid row per line.
// Phase-space dump: header "nx,ny,ndirs" then one line per cell (j outer,
// i inner) carrying n_dirs values.
// Matrix dump (plot data): no header, ny lines of nx values.

inline void write_scalar_csv(const std::string& path, const ScalarField& f) {
  std::string body = "nx,ny,Lx,Ly\n";
  body += std::to_string(f.grid.nx) + "," + std::to_string(f.grid.ny) + "," +
          format_double(f.grid.lx) + "," + format_double(f.grid.ly) + "\n";
  for (int j = 0; j < f.grid.ny; ++j) {
    for (int i = 0; i < f.grid.nx; ++i) {
      if (i) body += ',';
      body += format_double(f.at(i, j));
    }
    body += '\n';
  }
  write_text_file(path, body);
}

inline ScalarField read_scalar_csv(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.size() < 2 || split_csv_line(lines[0])[0] != "nx")
    throw ConfigError("scalar CSV " + path + ": expected 'nx,ny,Lx,Ly' header");
  auto hdr = split_csv_line(lines[1]);
  if (hdr.size() != 4) throw ConfigError("scalar CSV " + path + ": bad header row");
  int nx = static_cast<int>(parse_double(hdr[0]));
  int ny = static_cast<int>(parse_double(hdr[1]));
  double lx = parse_double(hdr[2]);
  double ly = parse_double(hdr[3]);
  ScalarField f(make_spatial_grid(nx, ny, lx, ly));
  if (static_cast<int>(lines.size()) != 2 + ny)
    throw ConfigError("scalar CSV " + path + ": expected " + std::to_string(ny) +
                      " value rows");
  for (int j = 0; j < ny; ++j) {
    auto cells = split_csv_line(lines[2 + j]);
    if (static_cast<int>(cells.size()) != nx)
      throw ConfigError("scalar CSV " + path + ": row width mismatch");
    for (int i = 0; i < nx; ++i) f.at(i, j) = parse_double(cells[i]);
  }
  return f;
}

inline void write_phase_csv(const std::string& path, const PhaseSpaceField& u) {
  std::string body = "nx,ny,ndirs\n";
  body += std::to_string(u.grid.nx) + "," + std::to_string(u.grid.ny) + "," +
          std::to_string(u.angular.n_dirs) + "\n";
  for (int j = 0; j < u.grid.ny; ++j)
    for (int i = 0; i < u.grid.nx; ++i) {
      std::string row;
      for (int k = 0; k < u.angular.n_dirs; ++k) {
        if (k) row += ',';
        row += format_double(u.at(i, j, k));
      }
      row += '\n';
      body += row;
    }
  write_text_file(path, body);
}

struct PhaseDump {
  int nx = 0, ny = 0, ndirs = 0;
  std::vector<double> v;  // same layout as PhaseSpaceField
  double at(int i, int j, int k) const {
    return v[(static_cast<size_t>(k) * ny + j) * nx + i];
  }
};

inline PhaseDump read_phase_csv(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.size() < 2 || split_csv_line(lines[0])[0] != "nx")
    throw ConfigError("phase CSV " + path + ": expected 'nx,ny,ndirs' header");
  auto hdr = split_csv_line(lines[1]);
  if (hdr.size() != 3) throw ConfigError("phase CSV " + path + ": bad header row");
  PhaseDump d;
  d.nx = static_cast<int>(parse_double(hdr[0]));
  d.ny = static_cast<int>(parse_double(hdr[1]));
  d.ndirs = static_cast<int>(parse_double(hdr[2]));
  if (d.nx <= 0 || d.ny <= 0 || d.ndirs <= 0)
    throw ConfigError("phase CSV " + path + ": bad dimensions");
  if (static_cast<int>(lines.size()) != 2 + d.nx * d.ny)
    throw ConfigError("phase CSV " + path + ": wrong number of cell rows");
  d.v.assign(static_cast<size_t>(d.nx) * d.ny * d.ndirs, 0.0);
  int row = 2;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i, ++row) {
      auto cells = split_csv_line(lines[row]);
      if (static_cast<int>(cells.size()) != d.ndirs)
        throw ConfigError("phase CSV " + path + ": row width mismatch");
      for (int k = 0; k < d.ndirs; ++k)
        d.v[(static_cast<size_t>(k) * d.ny + j) * d.nx + i] = parse_double(cells[k]);
    }
  return d;
}

inline void write_matrix_csv(const std::string& path, const ScalarField& f) {
  std::string body;
  for (int j = 0; j < f.grid.ny; ++j) {
    for (int i = 0; i < f.grid.nx; ++i) {
      if (i) body += ',';
      body += format_double(f.at(i, j));
    }
    body += '\n';
  }
  write_text_file(path, body);
}

inline std::vector<std::vector<double>> read_matrix_csv(const std::string& path) {
  auto lines = read_lines(path);
  std::vector<std::vector<double>> rows;
  for (const auto& line : lines) {
    auto cells = split_csv_line(line);
    std::vector<double> r;
    r.reserve(cells.size());
    for (auto c : cells) r.push_back(parse_double(c));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace rtao
