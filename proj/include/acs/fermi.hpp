#pragma once

#include <functional>
#include <vector>

#include <json.hpp>

#include "acs/grid.hpp"
#include "acs/profile.hpp"
#include "acs/surface.hpp"

namespace acs {

// Coefficients of the Euclidean Laplacian in the coordinates (xi, t), where xi
// are the unscaled chart parameters of M and x = Y(xi)/alpha + (t + h(xi)) nu(xi):
//
//   Delta_x = c_tt d_tt + C^{ij} d_ij + 2 c_it^i d_it + c_i^i d_i + c_t d_t.
//
// With Z = alpha (t + h), G(Z) the metric of the parallel surface, B(Z) its
// first-order Laplace-Beltrami coefficients and H(Z) its mean curvature:
//   c_tt = 1 + alpha^2 G^{ij} h_i h_j,   C = alpha^2 G^{-1},
//   c_it = -alpha^2 G^{ij} h_j,          c_i = alpha^2 B,
//   c_t  = -alpha^2 (G^{ij} h_ij + B^j h_j) - alpha H(Z).
// The split fields follow the expansion in powers of Z:
//   G^{-1} = a0 + Z a1,  a1 = a10 + Z a2,   B = b0 + Z b1,  b1 = b10 + Z b2,
//   H = H(0) + Z |A|^2 - Z^2 b31.
struct LaplacianExpansion {
  double Z = 0;
  Mat2 Ginv, a0, a1, a10, a2;
  Eigen::Vector2d B, b0, b1, b10, b2;
  double H = 0, H0 = 0, b31 = 0;
  double volume = 1;  // det(I - Z S): volume factor of the map
  double c_tt = 1, c_t = 0;
  Mat2 C;
  Eigen::Vector2d c_it, c_i;
};

// Parallel-surface geometry at offset Z.
struct ParallelGeometry {
  Mat2 Ginv;
  Eigen::Vector2d B;
  double H = 0, det = 1;
};
ParallelGeometry parallel_geometry(const PointGeometry& P, double Z);

// Full coefficient set at one surface point and normal coordinate t, given
// h and its chart derivatives there. lap_h is Delta_M h on M itself.
LaplacianExpansion expansion_at(const PointGeometry& P, double alpha, double t, double h,
                                const Eigen::Vector2d& hd, const Mat2& hdd, double lap_h);

// 4 max{1/sigma_-, 1/sigma_+}
double gamma_log(const Profile& p);

struct FermiOptions {
  double delta = 0.3;
  double dt = 0.05;
  double L_cap = 12.0;         // largest tube half-width used on the grid
  double injective_fraction = 0.9;  // keep |Z| kappa below this on the grid
  int injectivity_stride = 4;  // sampling stride of the global collision check
  double L_fixed = 0;          // > 0: use this half-width instead of the computed one
};

// Interpolated surface data at arbitrary chart parameters.
struct SurfacePoint {
  int chart = 0;
  double u = 0, v = 0;
  PointGeometry geom;
  double h = 0, h1 = 0;
  double z = 0;  // signed distance along nu from M_alpha
  double theta = 0;  // azimuth (meridian-reduced surfaces)
};

class FermiChart {
 public:
  const Surface* surface = nullptr;
  double alpha = 0, delta = 0, gamma_log = 0;
  double L = 0, dt = 0;
  int nt = 0;
  std::vector<double> h0, h1, h;  // nodal, functions on the unscaled M
  SurfaceDerivatives dh;
  std::vector<double> lap_h;      // discrete Delta_M h (same stencil as the Jacobi operator)
  std::vector<double> kappa;      // max |principal curvature| per node
  std::vector<double> rho;        // delta/alpha + gamma_log log(1 + r)
  std::vector<double> rho_eff;    // rho clipped to the injective width
  double injectivity_margin = 0;  // min det(I - Z S) on the grid
  double collision_margin = 0;    // min over samples of (distance to M_alpha) / |z|
  bool meridian = false;          // axisymmetric n_theta = 1 reduction

  double t(int j) const { return -L + dt * j; }
  Vec3 point(std::size_t node, double t) const;
  // Throws OutsideTube when |t| > L.
  LaplacianExpansion coefficients(std::size_t node, double t) const;

  // Nearest-point projection onto M_alpha (Newton on the chart parameters).
  // Throws PointOutsideCharts when the foot point is outside the meshed part.
  SurfacePoint project(const Vec3& x) const;
  // Interpolated nodal field at chart parameters (cubic in u, periodic cubic in v).
  double interpolate(const std::vector<double>& f, int chart, double u, double v) const;
  double interpolate(const std::function<double(std::size_t)>& f, int chart, double u, double v) const;

  nlohmann::json summary() const;

  // Coefficient cache, node-major, filled by build_chart.
  struct Cached {
    double c_tt, c_t, C00, C01, C11, cit0, cit1, ci0, ci1;
  };
  std::vector<Cached> cache;
  const Cached& cached(std::size_t node, int j) const { return cache[node * nt + static_cast<std::size_t>(j)]; }
};

FermiChart build_chart(const Surface& S, const Profile& p, double alpha, const std::vector<double>& h0,
                       const std::vector<double>& h1, const FermiOptions& opt = {}, Exec exec = Exec::Serial);

// Separated field v = k(xi) psi(t); psi supplies (psi, psi', psi'') at t.
using ProfileFn = std::function<void(double t, double& f, double& f1, double& f2)>;

// Delta_x (k psi) on the tube grid from the cached coefficients, with
// analytic t-derivatives and surface differences for k. The z = 0 surface
// part uses the divergence-form Laplace-Beltrami stencil.
GridField apply_separated(const FermiChart& C, const std::vector<double>& k, const ProfileFn& psi,
                          Exec exec = Exec::Serial);

// Delta_x of a general grid field: surface differences per t-slice and
// fourth-order differences in t (second order on the two outer rows).
GridField apply_laplacian(const FermiChart& C, const GridField& V, Exec exec = Exec::Serial);
// Delta_x - d_tt - alpha^2 Delta_M applied to V (the curvature/shift corrections).
GridField apply_correction(const FermiChart& C, const GridField& V, Exec exec = Exec::Serial);

struct Cutoffs {
  double eta_delta = 1, zeta = 1;
};
// eta_delta = eta(|t + h1| - rho_eff - 3), zeta_n = eta(|t + h1| - delta/alpha - n).
Cutoffs cutoffs(const FermiChart& C, std::size_t node, double t, int n);
GridField cutoff_field(const FermiChart& C, int n, bool eta_delta);

// Independent check of the coefficients: the Laplacian of a smooth Cartesian
// test function F is evaluated (a) through the Fermi representation, with
// fourth-order differences of F(X(u, v, t)) in the chart parameters and t,
// and (b) with a fourth-order 3-D Cartesian stencil. h is an analytic shift
// on the chart; its derivatives are taken by differences as well.
struct FermiAudit {
  double max_rel_error = 0;  // relative to max |Delta F| over the samples
  double max_abs_error = 0;
  int samples = 0;
};
struct AuditSample {
  double u, v, t;
};
FermiAudit audit_laplacian(const Chart& chart, double alpha, const std::function<double(double, double)>& h,
                           const std::function<double(const Vec3&)>& F, const std::vector<AuditSample>& samples,
                           double step = 1e-3);

}  // namespace acs
