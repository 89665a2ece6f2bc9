// Copyright 2026 The rtao Authors
// SPDX-License-Identifier: Apache-2.0
//
// Ballistic / scattered splitting of forward and adjoint solutions: analytic
// single-pass attenuation along exact ray traces, the matching zero-datum
// remainder solves, and the closed-form angular mean of the product of the
// two ballistic parts.

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "rtao/field.hpp"
#include "rtao/geometry.hpp"
#include "rtao/media.hpp"
#include "rtao/transport.hpp"

namespace rtao {

struct BallisticPart {
  PhaseSpaceField field;  // supported on the beam cone
  ScalarField mean;
};

// u1(x,theta) = f(entry) * exp(-(1/kn) * integral of sigma upstream of x);
// zero off the beam cone or when the ray enters outside the beam region.
inline BallisticPart ballistic_forward(const Grids& gr, const MediaCoefficients& media,
                                       const BeamSource& beam) {
  const ScalarField sigma = total_sigma(media);
  const SpatialGrid& g = gr.spatial;
  BallisticPart out{PhaseSpaceField(g, gr.angular), ScalarField(g)};
  for (int k : beam.cone) {
    double* slab = out.field.slab(k);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        RayTrace ray = trace_ray(g.cell_center(i, j), gr.angular.dir[k], g);
        if (!face_in_region(beam.region, ray.entry_side, ray.entry_face, g)) continue;
        double tau = line_integral(sigma.v, ray, RaySide::minus);
        slab[g.cell_index(i, j)] = beam.value * std::exp(-tau / media.kn);
      }
  }
  out.mean = angular_average(out.field);
  return out;
}

// v1(x,theta) = g(exit) * exp(-(1/kn) * integral of sigma downstream of x):
// the adjoint transports against theta, so its datum is reached by
// integrating along +theta to the outflow boundary.
inline BallisticPart ballistic_adjoint(const Grids& gr, const MediaCoefficients& media,
                                       const BeamSource& beam) {
  const ScalarField sigma = total_sigma(media);
  const SpatialGrid& g = gr.spatial;
  BallisticPart out{PhaseSpaceField(g, gr.angular), ScalarField(g)};
  for (int k : beam.cone) {
    double* slab = out.field.slab(k);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        RayTrace ray = trace_ray(g.cell_center(i, j), gr.angular.dir[k], g);
        if (!face_in_region(beam.region, ray.exit_side, ray.exit_face, g)) continue;
        double tau = line_integral(sigma.v, ray, RaySide::plus);
        slab[g.cell_index(i, j)] = beam.value * std::exp(-tau / media.kn);
      }
  }
  out.mean = angular_average(out.field);
  return out;
}

// Grid-consistent ballistic part: one upwind sweep with the scattering mean
// frozen at zero.  Discretely consistent with solve_transport, so ballistic
// plus remainder reproduces the direct solve to solver tolerance; the
// analytic ray version differs from it at the spatial discretization order.
inline PhaseSpaceField ballistic_forward_upwind(const Grids& gr,
                                                const MediaCoefficients& media,
                                                const std::vector<double>& inflow,
                                                int workers = 1) {
  return sweep_once(gr, media, inflow, VolumeSource::none(),
                    ScalarField(gr.spatial, 0.0), workers);
}

inline PhaseSpaceField ballistic_adjoint_upwind(const Grids& gr,
                                                const MediaCoefficients& media,
                                                const std::vector<double>& outflow_data,
                                                int workers = 1) {
  std::vector<double> reflected = reflect_outflow_datum(gr, outflow_data);
  PhaseSpaceField w = sweep_once(gr, media, reflected, VolumeSource::none(),
                                 ScalarField(gr.spatial, 0.0), workers);
  return reflect_directions(w);
}

// Remainder solve: zero boundary datum, isotropic source (sigma_s/kn)<b1>.
// Adding it to the matching ballistic part recovers the full solution.
inline TransportSolution scattered_remainder(const Grids& gr,
                                             const MediaCoefficients& media,
                                             const ScalarField& ballistic_mean,
                                             TransportSign sign,
                                             const SolveOptions& opt = {}) {
  if (!same_grid(ballistic_mean.grid, gr.spatial))
    throw ConfigError("remainder: mean field grid does not match");
  ScalarField src(gr.spatial);
  for (size_t c = 0; c < src.v.size(); ++c)
    src.v[c] = media.sigma_s.v[c] / media.kn * ballistic_mean.v[c];
  const BoundarySet& bs =
      sign == TransportSign::forward ? gr.gamma_minus : gr.gamma_plus;
  TransportProblem p{media, std::vector<double>(bs.entries.size(), 0.0),
                     VolumeSource::isotropic(std::move(src)), sign};
  return solve_transport(gr, p, opt);
}

// <u1 v1> with its log.  Along one direction the upstream and downstream
// attenuations join into a single full-chord integral, so the product is
// constant along each ray and the angular mean reduces to a cone sum; the
// sum is taken in log space so deep attenuation keeps relative accuracy.
struct PairedBallistic {
  ScalarField value;      // <u1 v1>
  ScalarField log_value;  // log <u1 v1>; -infinity where the support is empty
  std::vector<char> support;
};

inline PairedBallistic ballistic_pair_mean(const Grids& gr,
                                           const MediaCoefficients& media,
                                           const BeamSource& beam_f,
                                           const BeamSource& beam_g) {
  const ScalarField sigma = total_sigma(media);
  const SpatialGrid& g = gr.spatial;
  PairedBallistic out{ScalarField(g), ScalarField(g, -std::numeric_limits<double>::infinity()),
                      std::vector<char>(g.cell_count(), 0)};
  std::vector<double> logs;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      logs.clear();
      for (int k = 0; k < gr.angular.n_dirs; ++k) {
        if (!beam_f.in_cone[k] || !beam_g.in_cone[k]) continue;
        RayTrace ray = trace_ray(g.cell_center(i, j), gr.angular.dir[k], g);
        if (!face_in_region(beam_f.region, ray.entry_side, ray.entry_face, g)) continue;
        if (!face_in_region(beam_g.region, ray.exit_side, ray.exit_face, g)) continue;
        double tau = line_integral(sigma.v, ray, RaySide::full);
        logs.push_back(std::log(gr.angular.weight[k] * beam_f.value * beam_g.value) -
                       tau / media.kn);
      }
      if (logs.empty()) continue;
      double m = logs[0];
      for (double t : logs) m = std::max(m, t);
      double s = 0;
      for (double t : logs) s += std::exp(t - m);
      int c = g.cell_index(i, j);
      out.log_value.v[c] = m + std::log(s);
      out.value.v[c] = std::exp(out.log_value.v[c]);
      out.support[c] = 1;
    }
  return out;
}

}  // namespace rtao
