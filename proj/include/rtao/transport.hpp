// Copyright 2026 The rtao Authors
// SPDX-License-Identifier: Apache-2.0
//
// Discrete-ordinates transport: exact per-direction upwind sweeps, source
// iteration with matrix-free GMRES acceleration on the mean intensity,
// adjoint solves by direction reflection, outgoing boundary traces and the
// discrete boundary pairing underlying all internal-data extraction.

#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "rtao/field.hpp"
#include "rtao/geometry.hpp"
#include "rtao/media.hpp"
#include "rtao/util.hpp"

namespace rtao {

struct SolveOptions {
  double tol = 1e-10;    // sup-norm fixed-point residual target (relative)
  int max_iter = 5000;   // sweeps (plain) or operator applications (GMRES)
  bool accelerate = true;
  int gmres_restart = 60;
  // GMRES 2-norm target = inner_safety * tol * scale; the 2-norm bounds the
  // sup norm, and the margin absorbs the residual amplification in the
  // boundary pairing.
  double inner_safety = 0.05;
  int workers = 1;  // threads for per-direction sweeps
};

struct SolveReport {
  int iterations = 0;   // sweeps (plain) or operator applications (GMRES)
  double residual = 0;  // achieved sup|<u> - phi| for the returned solution
  double scale = 1;     // residual normalization: max(|data|, |source|, 1)
  bool converged = false;
  bool accelerated = false;
};

enum class TransportSign { forward, adjoint };

struct VolumeSource {
  enum class Kind { none, isotropic, full };
  Kind kind = Kind::none;
  ScalarField iso;       // Kind::isotropic: one value per cell, all directions
  PhaseSpaceField full;  // Kind::full: one value per (cell, direction)

  static VolumeSource none() { return {}; }
  static VolumeSource isotropic(ScalarField f) {
    VolumeSource s;
    s.kind = Kind::isotropic;
    s.iso = std::move(f);
    return s;
  }
  static VolumeSource of_phase(PhaseSpaceField f) {
    VolumeSource s;
    s.kind = Kind::full;
    s.full = std::move(f);
    return s;
  }
  double sup_norm() const {
    if (kind == Kind::isotropic) return iso.sup_norm();
    if (kind == Kind::full) return full.sup_norm();
    return 0.0;
  }
};

// Forward: theta.grad u = (sigma_s/kn)(<u> - u) - kn*sigma_a*u + S with u
// imposed on the inflow set.  Adjoint: transport sign flipped, datum imposed
// on the outflow set; solved by reflecting directions, which maps it onto a
// forward problem with the same collision operator.  boundary_data is
// indexed by gamma_minus entries (forward) or gamma_plus entries (adjoint).
struct TransportProblem {
  MediaCoefficients media;
  std::vector<double> boundary_data;
  VolumeSource source;
  TransportSign sign = TransportSign::forward;
};

struct TransportSolution {
  PhaseSpaceField u;
  ScalarField mean;  // <u>, recomputed from the returned u
  SolveReport report;
};

inline void require_converged(const SolveReport& r, const std::string& what) {
  if (!r.converged)
    throw SolveError(what + ": transport solve stalled at residual " +
                     format_double(r.residual) + " (scale " + format_double(r.scale) +
                     ")");
}

// Maps a datum on the outflow set to the inflow set of the reflected
// problem: the inflow entry (side, face, theta) receives the outflow value
// at (side, face, -theta).
inline std::vector<double> reflect_outflow_datum(const Grids& gr,
                                                 const std::vector<double>& g) {
  if (g.size() != gr.gamma_plus.entries.size())
    throw ConfigError("reflect: datum must be indexed by the outflow set");
  std::vector<double> reflected(gr.gamma_minus.entries.size(), 0.0);
  for (size_t e = 0; e < gr.gamma_minus.entries.size(); ++e) {
    const auto& en = gr.gamma_minus.entries[e];
    int p = gr.gamma_plus.lookup(en.side, en.face, gr.angular.opposite[en.dir]);
    if (p < 0) throw SolveError("reflect: outflow set is not reflection-complete");
    reflected[e] = g[p];
  }
  return reflected;
}

// v(x, theta) := u(x, -theta); exact because the direction set is closed
// under negation.
inline PhaseSpaceField reflect_directions(const PhaseSpaceField& u) {
  PhaseSpaceField out(u.grid, u.angular);
  const int nc = u.grid.cell_count();
  for (int k = 0; k < u.angular.n_dirs; ++k) {
    const double* src = u.slab(u.angular.opposite[k]);
    double* dst = out.slab(k);
    for (int c = 0; c < nc; ++c) dst[c] = src[c];
  }
  return out;
}

namespace detail {

inline double sup_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Exact upwind solve of theta_k.grad u + (sigma/kn) u = (sigma_s/kn) phi + S
// for one direction: each cell update is
//   u_c = (ax*u_upx + ay*u_upy + (sigma_s/kn)*phi_c + S_c) / (ax + ay + sigma_c/kn)
// with ax = |theta_x|/dx, ay = |theta_y|/dy and inflow ghosts taken from the
// boundary datum.  Tangential components contribute coefficient zero.
inline void sweep_direction(const Grids& gr, const MediaCoefficients& media,
                            const ScalarField& sigma, const std::vector<double>& inflow,
                            const VolumeSource& src, const ScalarField& phi, int k,
                            double* out) {
  const SpatialGrid& g = gr.spatial;
  const Vec2 th = gr.angular.dir[k];
  const double inv_kn = 1.0 / media.kn;
  const double ax = std::abs(th.x) / g.dx();
  const double ay = std::abs(th.y) / g.dy();
  const int istep = th.x < 0 ? -1 : 1;
  const int jstep = th.y < 0 ? -1 : 1;
  const int i0 = istep > 0 ? 0 : g.nx - 1;
  const int j0 = jstep > 0 ? 0 : g.ny - 1;
  const Side xside = th.x < 0 ? Side::right : Side::left;
  const Side yside = th.y < 0 ? Side::top : Side::bottom;
  const double* sfull =
      src.kind == VolumeSource::Kind::full ? src.full.slab(k) : nullptr;
  const double* siso =
      src.kind == VolumeSource::Kind::isotropic ? src.iso.v.data() : nullptr;

  for (int jj = 0, j = j0; jj < g.ny; ++jj, j += jstep) {
    for (int ii = 0, i = i0; ii < g.nx; ++ii, i += istep) {
      const int c = g.cell_index(i, j);
      double flux = 0;
      if (ax > 0) {
        if (ii == 0) {
          int e = gr.gamma_minus.lookup(xside, j, k);
          flux += ax * (e >= 0 ? inflow[e] : 0.0);
        } else {
          flux += ax * out[c - istep];
        }
      }
      if (ay > 0) {
        if (jj == 0) {
          int e = gr.gamma_minus.lookup(yside, i, k);
          flux += ay * (e >= 0 ? inflow[e] : 0.0);
        } else {
          flux += ay * out[c - jstep * g.nx];
        }
      }
      const double s = sfull ? sfull[c] : (siso ? siso[c] : 0.0);
      out[c] = (flux + inv_kn * media.sigma_s.v[c] * phi.v[c] + s) /
               (ax + ay + inv_kn * sigma.v[c]);
    }
  }
}

}  // namespace detail

// One lagged transport sweep T_{f,S}(phi): solves the per-direction systems
// exactly with the scattering mean frozen at phi.  This is also the zero-phi
// "single collision" operator used by the grid-consistent ballistic part.
inline PhaseSpaceField sweep_once(const Grids& gr, const MediaCoefficients& media,
                                  const std::vector<double>& inflow,
                                  const VolumeSource& src, const ScalarField& phi,
                                  int workers = 1) {
  if (!same_grid(media.sigma_s.grid, gr.spatial))
    throw ConfigError("sweep: media grid does not match the spatial grid");
  if (inflow.size() != gr.gamma_minus.entries.size())
    throw ConfigError("sweep: inflow vector does not match the inflow set");
  const ScalarField sigma = total_sigma(media);
  PhaseSpaceField u(gr.spatial, gr.angular);
  parallel_for_index(gr.angular.n_dirs, workers, [&](int k) {
    detail::sweep_direction(gr, media, sigma, inflow, src, phi, k, u.slab(k));
  });
  return u;
}

namespace detail {

inline double dot_v(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm2_v(const std::vector<double>& a) { return std::sqrt(dot_v(a, a)); }

struct GmresResult {
  int matvecs = 0;
  double residual2 = 0;
  bool converged = false;
};

// Restarted GMRES with modified Gram-Schmidt and Givens rotations.  All
// reductions run single-threaded in fixed order, so the returned iterate is
// bit-identical for any worker count of the surrounding solve.
inline GmresResult gmres(
    const std::function<std::vector<double>(const std::vector<double>&)>& apply_op,
    const std::vector<double>& b, std::vector<double>& x, double tol2, int restart,
    int max_matvecs) {
  const size_t n = b.size();
  GmresResult res;
  x.assign(n, 0.0);
  std::vector<double> r = b;  // residual at x = 0
  const int m = std::max(1, restart);
  std::vector<std::vector<double>> V, H;
  std::vector<double> cs(m, 0.0), sn(m, 0.0), g(m + 1, 0.0);
  bool first_cycle = true;
  while (true) {
    if (!first_cycle) {
      if (res.matvecs >= max_matvecs) break;
      std::vector<double> ax = apply_op(x);
      ++res.matvecs;
      r = b;
      for (size_t t = 0; t < n; ++t) r[t] -= ax[t];
    }
    first_cycle = false;
    double beta = norm2_v(r);
    res.residual2 = beta;
    if (beta <= tol2) {
      res.converged = true;
      return res;
    }
    V.assign(1, r);
    for (double& t : V[0]) t /= beta;
    H.clear();
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    bool breakdown = false;
    int cols = 0;
    while (cols < m && res.matvecs < max_matvecs && !breakdown) {
      const int j = cols;
      std::vector<double> w = apply_op(V[j]);
      ++res.matvecs;
      std::vector<double> h(j + 2, 0.0);
      for (int i = 0; i <= j; ++i) {
        h[i] = dot_v(w, V[i]);
        for (size_t t = 0; t < n; ++t) w[t] -= h[i] * V[i][t];
      }
      h[j + 1] = norm2_v(w);
      if (h[j + 1] > 0) {
        for (double& t : w) t /= h[j + 1];
        V.push_back(std::move(w));
      } else {
        breakdown = true;  // Krylov space exhausted; current cycle is exact
        V.push_back(std::vector<double>(n, 0.0));
      }
      for (int i = 0; i < j; ++i) {
        double t = cs[i] * h[i] + sn[i] * h[i + 1];
        h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
        h[i] = t;
      }
      double denom = std::hypot(h[j], h[j + 1]);
      if (denom == 0) {
        cs[j] = 1;
        sn[j] = 0;
      } else {
        cs[j] = h[j] / denom;
        sn[j] = h[j + 1] / denom;
      }
      h[j] = denom;
      h[j + 1] = 0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      H.push_back(std::move(h));
      ++cols;
      res.residual2 = std::abs(g[cols]);
      if (res.residual2 <= tol2) break;
    }
    // Back-substitute y from the rotated Hessenberg factor and update x.
    std::vector<double> y(cols, 0.0);
    for (int i = cols - 1; i >= 0; --i) {
      double s = g[i];
      for (int l = i + 1; l < cols; ++l) s -= H[l][i] * y[l];
      y[i] = H[i][i] != 0 ? s / H[i][i] : 0.0;
    }
    for (int l = 0; l < cols; ++l)
      for (size_t t = 0; t < n; ++t) x[t] += y[l] * V[l][t];
    if (res.residual2 <= tol2) {
      res.converged = true;
      return res;
    }
    if (res.matvecs >= max_matvecs || breakdown) break;
  }
  return res;
}

inline TransportSolution solve_forward(const Grids& gr, const MediaCoefficients& media,
                                       const std::vector<double>& data,
                                       const VolumeSource& src,
                                       const SolveOptions& opt) {
  SolveReport rep;
  rep.accelerated = opt.accelerate;
  const double scale0 = std::max(sup_abs(data), src.sup_norm());
  rep.scale = scale0 > 0 ? scale0 : 1.0;
  const double target = opt.tol * rep.scale;

  ScalarField phi(gr.spatial, 0.0);
  if (!opt.accelerate) {
    // Plain source iteration: phi <- <T_{f,S}(phi)>.
    double diff = std::numeric_limits<double>::infinity();
    int it = 0;
    while (it < opt.max_iter) {
      PhaseSpaceField u = sweep_once(gr, media, data, src, phi, opt.workers);
      ScalarField mean = angular_average(u);
      ++it;
      diff = 0;
      for (size_t c = 0; c < phi.v.size(); ++c)
        diff = std::max(diff, std::abs(mean.v[c] - phi.v[c]));
      phi = std::move(mean);
      if (diff <= target) break;
    }
    rep.iterations = it;
  } else {
    // Solve (I - K) phi = b, K phi = <T_0(phi)>, b = <T_{f,S}(0)>.
    const std::vector<double> zero_data(gr.gamma_minus.entries.size(), 0.0);
    const VolumeSource no_src = VolumeSource::none();
    PhaseSpaceField u0 = sweep_once(gr, media, data, src, phi, opt.workers);
    std::vector<double> b = angular_average(u0).v;
    auto apply_op = [&](const std::vector<double>& x) {
      ScalarField xf(gr.spatial);
      xf.v = x;
      PhaseSpaceField ux = sweep_once(gr, media, zero_data, no_src, xf, opt.workers);
      ScalarField kx = angular_average(ux);
      std::vector<double> out(x.size());
      for (size_t c = 0; c < x.size(); ++c) out[c] = x[c] - kx.v[c];
      return out;
    };
    GmresResult gm = gmres(apply_op, b, phi.v, opt.inner_safety * target,
                           opt.gmres_restart, opt.max_iter);
    rep.iterations = gm.matvecs;
  }

  // Authoritative a-posteriori check: the returned u is an exact per-direction
  // solve with mean frozen at phi, so sup|<u> - phi| is the full defect.
  TransportSolution sol;
  sol.u = sweep_once(gr, media, data, src, phi, opt.workers);
  sol.mean = angular_average(sol.u);
  double resid = 0;
  for (size_t c = 0; c < phi.v.size(); ++c)
    resid = std::max(resid, std::abs(sol.mean.v[c] - phi.v[c]));
  rep.residual = resid;
  rep.converged = resid <= target;
  for (double v : sol.u.v)
    if (!std::isfinite(v)) throw SolveError("transport solve produced non-finite values");
  sol.report = rep;
  return sol;
}

}  // namespace detail

inline TransportSolution solve_transport(const Grids& gr, const TransportProblem& prob,
                                         const SolveOptions& opt = {}) {
  if (!same_grid(prob.media.sigma_s.grid, gr.spatial))
    throw ConfigError("solve: media grid does not match the spatial grid");
  if (prob.sign == TransportSign::forward) {
    if (prob.boundary_data.size() != gr.gamma_minus.entries.size())
      throw ConfigError("solve: forward datum must be indexed by the inflow set");
    return detail::solve_forward(gr, prob.media, prob.boundary_data, prob.source, opt);
  }
  // Adjoint: w(x,theta) = v(x,-theta) solves the forward problem with the
  // reflected datum and source, because the angular mean is invariant under
  // direction reflection on a negation-closed set.
  std::vector<double> reflected = reflect_outflow_datum(gr, prob.boundary_data);
  VolumeSource src = prob.source;
  if (src.kind == VolumeSource::Kind::full) src.full = reflect_directions(src.full);
  TransportSolution sol = detail::solve_forward(gr, prob.media, reflected, src, opt);
  sol.u = reflect_directions(sol.u);
  sol.mean = angular_average(sol.u);
  return sol;
}

// Collision operator application (sigma_s/kn)<u> - (sigma/kn) u, cell-wise.
inline PhaseSpaceField apply_collision(const MediaCoefficients& media,
                                       const PhaseSpaceField& u) {
  const ScalarField mean = angular_average(u);
  const ScalarField sigma = total_sigma(media);
  const double inv_kn = 1.0 / media.kn;
  PhaseSpaceField out(u.grid, u.angular);
  const int nc = u.grid.cell_count();
  for (int k = 0; k < u.angular.n_dirs; ++k) {
    const double* s = u.slab(k);
    double* d = out.slab(k);
    for (int c = 0; c < nc; ++c)
      d[c] = inv_kn * (media.sigma_s.v[c] * mean.v[c] - sigma.v[c] * s[c]);
  }
  return out;
}

// Outgoing boundary trace (adjacent-cell values): the measurement the albedo
// operator exposes.  Forward solutions exit through gamma_plus, adjoint
// solutions through gamma_minus.
inline std::vector<double> outflow_trace(const Grids& gr, const PhaseSpaceField& u,
                                         TransportSign sign) {
  const BoundarySet& bs =
      sign == TransportSign::forward ? gr.gamma_plus : gr.gamma_minus;
  std::vector<double> out(bs.entries.size(), 0.0);
  for (size_t e = 0; e < bs.entries.size(); ++e) {
    const auto& en = bs.entries[e];
    int c = boundary_adjacent_cell(gr.spatial, en.side, en.face);
    out[e] = u.at_cell(c, en.dir);
  }
  return out;
}

// Discrete boundary pairing 2*pi * sum w_k (n.theta) (trace product) ds.
// On the inflow set the imposed forward datum f pairs with the adjacent-cell
// trace of the adjoint v; on the outflow set the adjacent-cell trace of u
// pairs with the imposed adjoint datum g.  When u and v solve the
// source-free forward/adjoint problems with the SAME coefficients this
// vanishes to solver tolerance; a coefficient perturbation on the forward
// side leaves exactly the internal term the measurement pipeline extracts.
inline double boundary_pairing(const Grids& gr, const std::vector<double>& f,
                               const PhaseSpaceField& u, const PhaseSpaceField& v,
                               const std::vector<double>& g) {
  if (f.size() != gr.gamma_minus.entries.size() ||
      g.size() != gr.gamma_plus.entries.size())
    throw ConfigError("pairing: data sizes do not match the boundary sets");
  const auto& ag = gr.angular;
  double acc = 0;
  for (size_t e = 0; e < gr.gamma_minus.entries.size(); ++e) {
    const auto& en = gr.gamma_minus.entries[e];
    int c = boundary_adjacent_cell(gr.spatial, en.side, en.face);
    acc += ag.weight[en.dir] * en.n_dot_theta * f[e] * v.at_cell(c, en.dir) * en.ds;
  }
  for (size_t e = 0; e < gr.gamma_plus.entries.size(); ++e) {
    const auto& en = gr.gamma_plus.entries[e];
    int c = boundary_adjacent_cell(gr.spatial, en.side, en.face);
    acc += ag.weight[en.dir] * en.n_dot_theta * u.at_cell(c, en.dir) * g[e] * en.ds;
  }
  return kTwoPi * acc;
}

}  // namespace rtao
