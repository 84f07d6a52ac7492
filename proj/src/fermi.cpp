#include "acs/fermi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "acs/errors.hpp"

namespace acs {

namespace {

// Derivative of G(Z) = g - 2 Z L + Z^2 L g^{-1} L along chart direction k.
Mat2 dG(const PointGeometry& P, int k, double Z) {
  const Mat2 dginv = -P.ginv * P.dg[k] * P.ginv;
  const Mat2 dLgL = P.dL[k] * P.ginv * P.L + P.L * dginv * P.L + P.L * P.ginv * P.dL[k];
  return P.dg[k] - 2 * Z * P.dL[k] + Z * Z * dLgL;
}

}  // namespace

ParallelGeometry parallel_geometry(const PointGeometry& P, double Z) {
  ParallelGeometry out;
  const Mat2 Ms = Mat2::Identity() - Z * P.S;
  out.det = Ms.determinant();
  const Mat2 G = P.g - 2 * Z * P.L + Z * Z * P.L * P.ginv * P.L;
  out.Ginv = G.inverse();
  out.H = (Ms.inverse() * P.S).trace();
  Eigen::Vector2d B = Eigen::Vector2d::Zero();
  for (int i = 0; i < 2; ++i) {
    const Mat2 GidG = out.Ginv * dG(P, i, Z);
    const Mat2 d = 0.5 * GidG.trace() * out.Ginv - GidG * out.Ginv;
    B += d.row(i).transpose();
  }
  out.B = B;
  return out;
}

LaplacianExpansion expansion_at(const PointGeometry& P, double alpha, double t, double h,
                                const Eigen::Vector2d& hd, const Mat2& hdd, double lap_h) {
  LaplacianExpansion E;
  const double Z = alpha * (t + h);
  E.Z = Z;
  const auto PG = parallel_geometry(P, Z);
  E.Ginv = PG.Ginv;
  E.B = PG.B;
  E.H = PG.H;
  E.volume = PG.det;
  E.H0 = P.H;
  E.a0 = P.ginv;
  E.b0 = P.b0;
  const Mat2 S = P.S, gi = P.ginv;
  const Mat2 Pm = (Mat2::Identity() - Z * S).inverse();
  E.a1 = S * Pm * gi * Pm.transpose() + gi * Pm.transpose() * S.transpose();
  E.a10 = S * gi + gi * S.transpose();
  E.a2 = S * E.a1 + gi * Pm.transpose() * S.transpose() * S.transpose();
  E.b31 = -(S * S * S * Pm).trace();
  {
    const double e1 = 1e-4, e2 = 1e-3;
    const auto Bp = parallel_geometry(P, e1).B, Bm = parallel_geometry(P, -e1).B;
    E.b10 = (Bp - Bm) / (2 * e1);
    const auto Bp2 = parallel_geometry(P, e2).B, Bm2 = parallel_geometry(P, -e2).B;
    const Eigen::Vector2d b2_0 = (Bp2 + Bm2 - 2 * P.b0) / (2 * e2 * e2);
    if (std::abs(Z) > 1e-3) {
      E.b1 = (E.B - E.b0) / Z;
      E.b2 = (E.b1 - E.b10) / Z;
    } else {
      E.b1 = E.b10 + Z * b2_0;
      E.b2 = b2_0;
    }
  }
  const double a2f = alpha * alpha;
  E.c_tt = 1 + a2f * hd.dot(PG.Ginv * hd);
  E.C = a2f * PG.Ginv;
  E.c_it = -a2f * (PG.Ginv * hd);
  E.c_i = a2f * PG.B;
  const double corr = ((PG.Ginv - gi).cwiseProduct(hdd)).sum() + (PG.B - P.b0).dot(hd);
  E.c_t = -a2f * (lap_h + corr) - alpha * PG.H;
  return E;
}

double gamma_log(const Profile& p) { return 4.0 * std::max(1.0 / p.sigma_minus, 1.0 / p.sigma_plus); }

Vec3 FermiChart::point(std::size_t node, double t) const {
  const auto& G = surface->node[node];
  return G.Y / alpha + (t + h[node]) * G.nu;
}

LaplacianExpansion FermiChart::coefficients(std::size_t node, double t) const {
  if (std::abs(t) > L * (1 + 1e-12)) {
    throw Error(ErrorCode::OutsideTube, "normal coordinate outside the tube", {{"t", t}, {"L", L}, {"node", node}});
  }
  Eigen::Vector2d hd(dh.fu[node], dh.fv[node]);
  Mat2 hdd;
  hdd << dh.fuu[node], dh.fuv[node], dh.fuv[node], dh.fvv[node];
  return expansion_at(surface->node[node], alpha, t, h[node], hd, hdd, lap_h[node]);
}

double FermiChart::interpolate(const std::vector<double>& f, int c, double u, double v) const {
  return interpolate([&f](std::size_t k) { return f[k]; }, c, u, v);
}

double FermiChart::interpolate(const std::function<double(std::size_t)>& f, int c, double u, double v) const {
  const Surface& S = *surface;
  const ChartMesh& m = S.mesh[c];
  auto value = [&](int i, int j) {
    j = ((j % m.nv) + m.nv) % m.nv;
    if (i < 0) return f(S.index(c, -1 - i, (j + m.nv / 2) % m.nv));
    return f(S.index(c, i, j));
  };
  auto lagrange = [](double x, double w[4]) {
    // Nodes at -1, 0, 1, 2.
    w[0] = -x * (x - 1) * (x - 2) / 6;
    w[1] = (x + 1) * (x - 1) * (x - 2) / 2;
    w[2] = -(x + 1) * x * (x - 2) / 2;
    w[3] = (x + 1) * x * (x - 1) / 6;
  };
  const double pu = (u - m.u0) / m.du;
  int i0 = static_cast<int>(std::floor(pu));
  const int lo = m.pole_left ? -1 : 0;
  i0 = std::clamp(i0, lo + 1, m.nu - 3);
  double wu[4];
  lagrange(pu - i0, wu);
  if (m.nv == 1) {
    double s = 0;
    for (int a = 0; a < 4; ++a) s += wu[a] * value(i0 - 1 + a, 0);
    return s;
  }
  const double pv = v / m.dv;
  const int j0 = static_cast<int>(std::floor(pv));
  double wv[4];
  lagrange(pv - j0, wv);
  double s = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) s += wu[a] * wv[b] * value(i0 - 1 + a, j0 - 1 + b);
  return s;
}

SurfacePoint FermiChart::project(const Vec3& x) const {
  const Surface& S = *surface;
  Vec3 q = x;
  double theta = 0;
  if (meridian) {
    theta = std::atan2(x[1], x[0]);
    q = Vec3(std::hypot(x[0], x[1]), 0.0, x[2]);
  }
  // Nearest node start.
  double best = std::numeric_limits<double>::infinity();
  std::size_t kb = 0;
  for (std::size_t k = 0; k < S.num_nodes(); ++k) {
    const double d = (S.node[k].Y / alpha - q).squaredNorm();
    if (d < best) {
      best = d;
      kb = k;
    }
  }
  int c, i, j;
  S.locate(kb, c, i, j);
  const ChartMesh& m = S.mesh[c];
  const Chart& ch = *S.charts[c];
  double u = m.u(i), v = m.v(j);
  const double u_lo = m.pole_left ? 0.0 : m.u(0), u_hi = m.u(m.nu - 1);
  const bool one_d = meridian || m.nv == 1;
  auto dist2 = [&](double uu, double vv) { return (ch.jet(uu, vv).Y / alpha - q).squaredNorm(); };
  bool at_edge = false;
  for (int it = 0; it < 100; ++it) {
    const ChartJet J = ch.jet(u, v);
    const Vec3 d = J.Y / alpha - q;
    const Eigen::Vector2d grad(d.dot(J.Yu) / alpha, one_d ? 0.0 : d.dot(J.Yv) / alpha);
    Mat2 Hs;
    Hs(0, 0) = J.Yu.dot(J.Yu) / (alpha * alpha) + d.dot(J.Yuu) / alpha;
    Hs(0, 1) = J.Yu.dot(J.Yv) / (alpha * alpha) + d.dot(J.Yuv) / alpha;
    Hs(1, 1) = J.Yv.dot(J.Yv) / (alpha * alpha) + d.dot(J.Yvv) / alpha;
    Hs(1, 0) = Hs(0, 1);
    Eigen::Vector2d step;
    if (one_d) {
      step = Eigen::Vector2d(Hs(0, 0) > 0 ? grad[0] / Hs(0, 0) : grad[0] / (J.Yu.squaredNorm() / (alpha * alpha)), 0);
    } else {
      Eigen::SelfAdjointEigenSolver<Mat2> es(Hs);
      if (es.eigenvalues().minCoeff() > 0) {
        step = Hs.ldlt().solve(grad);
      } else {
        step = grad / (Hs.diagonal().cwiseAbs().maxCoeff() + 1e-300);
      }
    }
    // Backtracking on the squared distance. Near the foot point the distance
    // is flat to rounding (relative 1e-16 of |d|^2 resolves u only to ~1e-9),
    // so short steps are taken as they are.
    const double f0 = d.squaredNorm();
    const bool short_step = std::abs(step[0]) + std::abs(step[1]) < 1e-7 * (1 + std::abs(u));
    double lam = 1, un = u, vn = v;
    at_edge = false;
    for (; lam > 1e-12; lam *= 0.5) {
      un = u - lam * step[0];
      vn = v - lam * step[1];
      if (m.pole_left && un < 0) {
        un = -un;
        vn += std::numbers::pi;
      }
      if (un < u_lo) {
        un = u_lo;
        at_edge = true;
      }
      if (un > u_hi) {
        un = u_hi;
        at_edge = true;
      }
      if (short_step || dist2(un, vn) <= f0) break;
      at_edge = false;
    }
    const double moved = std::abs(un - u) + std::abs(vn - v);
    u = un;
    v = vn;
    if (moved < 1e-13 * (1 + std::abs(u))) break;
  }
  if (at_edge || !std::isfinite(u)) {
    throw Error(ErrorCode::PointOutsideCharts, "foot point outside the meshed surface",
                {{"x", {x[0], x[1], x[2]}}, {"u", u}});
  }
  v = std::fmod(v, 2 * std::numbers::pi);
  if (v < 0) v += 2 * std::numbers::pi;
  SurfacePoint P;
  P.chart = c;
  P.u = u;
  P.v = v;
  P.theta = theta;
  P.geom = ch.geometry(u, v);
  P.z = (q - P.geom.Y / alpha).dot(P.geom.nu);
  P.h = interpolate(h, c, u, v);
  P.h1 = interpolate(h1, c, u, v);
  return P;
}

FermiChart build_chart(const Surface& S, const Profile& p, double alpha, const std::vector<double>& h0,
                       const std::vector<double>& h1, const FermiOptions& opt, Exec exec) {
  if (!(alpha > 0 && alpha <= 0.5)) {
    throw Error(ErrorCode::InvalidSpec, "alpha must lie in (0, 0.5]", {{"alpha", alpha}});
  }
  const std::size_t N = S.num_nodes();
  if (h0.size() != N || h1.size() != N) {
    throw Error(ErrorCode::InvalidSpec, "h0 and h1 must be nodal fields on the surface");
  }
  FermiChart C;
  C.surface = &S;
  C.alpha = alpha;
  C.delta = opt.delta;
  C.gamma_log = gamma_log(p);
  C.h0 = h0;
  C.h1 = h1;
  C.h.resize(N);
  for (std::size_t k = 0; k < N; ++k) C.h[k] = h0[k] + h1[k];
  C.dh = surface_derivatives(S, C.h);
  C.lap_h = laplace_beltrami_apply(S, C.h, exec);
  C.meridian = S.axisymmetric;
  for (const auto& m : S.mesh) C.meridian = C.meridian && m.nv == 1;
  C.kappa.resize(N);
  C.rho.resize(N);
  C.rho_eff.resize(N);
  double L = opt.L_cap;
  for (std::size_t k = 0; k < N; ++k) {
    const auto& G = S.node[k];
    C.kappa[k] = std::abs(G.H) / 2 + std::sqrt(std::max(0.0, G.H * G.H / 4 - G.K));
    const double width = C.kappa[k] > 0 ? opt.injective_fraction / (alpha * C.kappa[k]) - std::abs(C.h[k])
                                        : std::numeric_limits<double>::infinity();
    L = std::min(L, width);
    C.rho[k] = opt.delta / alpha + C.gamma_log * std::log1p(G.radius);
    C.rho_eff[k] = std::max(-3.0, std::min(C.rho[k], width - 5));
  }
  if (!(L >= 2.0)) {
    throw Error(ErrorCode::NotInjective, "tube half-width below 2 (alpha too large for the curvature)",
                {{"alpha", alpha}, {"L", L}});
  }
  if (opt.L_fixed > 0) L = opt.L_fixed;
  C.L = L;
  C.nt = static_cast<int>(std::ceil(2 * L / opt.dt)) + 1;
  if (C.nt % 2 == 0) ++C.nt;
  C.dt = 2 * L / (C.nt - 1);
  C.cache.resize(N * static_cast<std::size_t>(C.nt));
  std::vector<double> margin(N, 1.0);
  auto fill = [&](std::size_t k) {
    double mk = 1.0;
    for (int j = 0; j < C.nt; ++j) {
      const auto E = C.coefficients(k, C.t(j));
      mk = std::min(mk, E.volume);
      C.cache[k * C.nt + j] = {E.c_tt,  E.c_t,     E.C(0, 0), E.C(0, 1), E.C(1, 1),
                               E.c_it[0], E.c_it[1], E.c_i[0],  E.c_i[1]};
    }
    margin[k] = mk;
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(N); ++k) fill(static_cast<std::size_t>(k));
  } else {
    for (std::size_t k = 0; k < N; ++k) fill(k);
  }
  C.injectivity_margin = *std::min_element(margin.begin(), margin.end());
  if (!(C.injectivity_margin > 0)) {
    throw Error(ErrorCode::NotInjective, "Fermi map Jacobian not positive", {{"margin", C.injectivity_margin}});
  }
  // Global check: sampled tube points must project back to their own foot.
  C.collision_margin = std::numeric_limits<double>::infinity();
  const int stride = std::max(1, opt.injectivity_stride);
  for (std::size_t k = 0; k < N; k += static_cast<std::size_t>(stride)) {
    if (S.boundary[k]) continue;
    for (int j = 0; j < C.nt; j += stride * 4) {
      const double t = C.t(j);
      const Vec3 x = C.point(k, t);
      int c, i, jj;
      S.locate(k, c, i, jj);
      SurfacePoint P;
      try {
        P = C.project(x);
      } catch (const Error&) {
        continue;  // foot beyond the ring: not a collision
      }
      const double z = t + C.h[k];
      const double du = std::abs(P.u - S.mesh[c].u(i));
      const double dz = std::abs(P.z - z);
      if (P.chart != c || du > 1e-6 * (1 + std::abs(S.mesh[c].u(i))) || dz > 1e-6 * (1 + std::abs(z))) {
        throw Error(ErrorCode::NotInjective, "normal segments of the tube collide",
                    {{"node", k}, {"t", t}, {"foot_u", P.u}, {"expected_u", S.mesh[c].u(i)}, {"z", P.z}});
      }
      if (std::abs(z) > 1e-12) C.collision_margin = std::min(C.collision_margin, 1.0 - dz / std::abs(z));
    }
  }
  return C;
}

nlohmann::json FermiChart::summary() const {
  return {{"alpha", alpha},
          {"delta", delta},
          {"gamma_log", gamma_log},
          {"tube_half_width", L},
          {"dt", dt},
          {"nt", nt},
          {"injectivity_margin", injectivity_margin},
          {"collision_margin", collision_margin},
          {"meridian_reduction", meridian}};
}

GridField apply_separated(const FermiChart& C, const std::vector<double>& k, const ProfileFn& psi, Exec exec) {
  const Surface& S = *C.surface;
  const std::size_t N = S.num_nodes();
  const auto kd = surface_derivatives(S, k);
  const auto Lk = laplace_beltrami_apply(S, k, exec);
  std::vector<double> f0(C.nt), f1(C.nt), f2(C.nt);
  for (int j = 0; j < C.nt; ++j) psi(C.t(j), f0[j], f1[j], f2[j]);
  GridField out(&C, N, C.nt);
  const double a2 = C.alpha * C.alpha;
  auto node = [&](std::size_t n) {
    const auto& G = S.node[n];
    for (int j = 0; j < C.nt; ++j) {
      const auto& c = C.cached(n, j);
      const double dC00 = c.C00 - a2 * G.ginv(0, 0), dC01 = c.C01 - a2 * G.ginv(0, 1),
                   dC11 = c.C11 - a2 * G.ginv(1, 1);
      const double dci0 = c.ci0 - a2 * G.b0[0], dci1 = c.ci1 - a2 * G.b0[1];
      const double surf = a2 * Lk[n] + dC00 * kd.fuu[n] + 2 * dC01 * kd.fuv[n] + dC11 * kd.fvv[n] +
                          dci0 * kd.fu[n] + dci1 * kd.fv[n];
      const double mixed = 2 * (c.cit0 * kd.fu[n] + c.cit1 * kd.fv[n]);
      out.at(n, j) = c.c_tt * k[n] * f2[j] + surf * f0[j] + (mixed + c.c_t * k[n]) * f1[j];
    }
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n) node(static_cast<std::size_t>(n));
  } else {
    for (std::size_t n = 0; n < N; ++n) node(n);
  }
  return out;
}

namespace {

// t-derivatives of a grid field: fourth order in the interior.
void t_derivatives(const GridField& V, double dt, GridField& Vt, GridField& Vtt) {
  const int nt = V.nt;
  for (std::size_t k = 0; k < V.nodes; ++k) {
    for (int j = 0; j < nt; ++j) {
      double d1, d2;
      if (j >= 2 && j <= nt - 3) {
        d1 = (V.at(k, j - 2) - 8 * V.at(k, j - 1) + 8 * V.at(k, j + 1) - V.at(k, j + 2)) / (12 * dt);
        d2 = (-V.at(k, j - 2) + 16 * V.at(k, j - 1) - 30 * V.at(k, j) + 16 * V.at(k, j + 1) - V.at(k, j + 2)) /
             (12 * dt * dt);
      } else if (j == 1 || j == nt - 2) {
        d1 = (V.at(k, j + 1) - V.at(k, j - 1)) / (2 * dt);
        d2 = (V.at(k, j + 1) - 2 * V.at(k, j) + V.at(k, j - 1)) / (dt * dt);
      } else if (j == 0) {
        d1 = (-3 * V.at(k, 0) + 4 * V.at(k, 1) - V.at(k, 2)) / (2 * dt);
        d2 = (2 * V.at(k, 0) - 5 * V.at(k, 1) + 4 * V.at(k, 2) - V.at(k, 3)) / (dt * dt);
      } else {
        d1 = (3 * V.at(k, j) - 4 * V.at(k, j - 1) + V.at(k, j - 2)) / (2 * dt);
        d2 = (2 * V.at(k, j) - 5 * V.at(k, j - 1) + 4 * V.at(k, j - 2) - V.at(k, j - 3)) / (dt * dt);
      }
      Vt.at(k, j) = d1;
      Vtt.at(k, j) = d2;
    }
  }
}

GridField apply_impl(const FermiChart& C, const GridField& V, bool correction_only, Exec exec) {
  const Surface& S = *C.surface;
  const std::size_t N = S.num_nodes();
  GridField Vt(&C, N, C.nt), Vtt(&C, N, C.nt), out(&C, N, C.nt);
  t_derivatives(V, C.dt, Vt, Vtt);
  const double a2 = C.alpha * C.alpha;
  auto slice = [&](int j) {
    std::vector<double> f(N), ft(N);
    for (std::size_t n = 0; n < N; ++n) {
      f[n] = V.at(n, j);
      ft[n] = Vt.at(n, j);
    }
    const auto d = surface_derivatives(S, f);
    const auto dt_ = surface_derivatives(S, ft);
    const auto Lf = laplace_beltrami_apply(S, f);
    for (std::size_t n = 0; n < N; ++n) {
      const auto& G = S.node[n];
      const auto& c = C.cached(n, j);
      const double dC00 = c.C00 - a2 * G.ginv(0, 0), dC01 = c.C01 - a2 * G.ginv(0, 1),
                   dC11 = c.C11 - a2 * G.ginv(1, 1);
      const double dci0 = c.ci0 - a2 * G.b0[0], dci1 = c.ci1 - a2 * G.b0[1];
      const double corr = (c.c_tt - 1) * Vtt.at(n, j) + dC00 * d.fuu[n] + 2 * dC01 * d.fuv[n] +
                          dC11 * d.fvv[n] + dci0 * d.fu[n] + dci1 * d.fv[n] +
                          2 * (c.cit0 * dt_.fu[n] + c.cit1 * dt_.fv[n]) + c.c_t * Vt.at(n, j);
      out.at(n, j) = correction_only ? corr : corr + Vtt.at(n, j) + a2 * Lf[n];
    }
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (int j = 0; j < C.nt; ++j) slice(j);
  } else {
    for (int j = 0; j < C.nt; ++j) slice(j);
  }
  return out;
}

}  // namespace

GridField apply_laplacian(const FermiChart& C, const GridField& V, Exec exec) {
  return apply_impl(C, V, false, exec);
}

GridField apply_correction(const FermiChart& C, const GridField& V, Exec exec) {
  return apply_impl(C, V, true, exec);
}

Cutoffs cutoffs(const FermiChart& C, std::size_t node, double t, int n) {
  if (n != 1 && n != 2 && n != 4) throw Error(ErrorCode::InvalidSpec, "cutoff index must be 1, 2 or 4", {{"n", n}});
  const double s = std::abs(t + C.h1[node]);
  Cutoffs out;
  out.eta_delta = cutoff_eta(s - C.rho_eff[node] - 3);
  out.zeta = cutoff_eta(s - C.delta / C.alpha - n);
  return out;
}

GridField cutoff_field(const FermiChart& C, int n, bool eta_delta) {
  GridField out(&C, C.surface->num_nodes(), C.nt);
  for (std::size_t k = 0; k < out.nodes; ++k) {
    for (int j = 0; j < C.nt; ++j) {
      const auto c = cutoffs(C, k, C.t(j), n);
      out.at(k, j) = eta_delta ? c.eta_delta : c.zeta;
    }
  }
  return out;
}

FermiAudit audit_laplacian(const Chart& chart, double alpha, const std::function<double(double, double)>& h,
                           const std::function<double(const Vec3&)>& F, const std::vector<AuditSample>& samples,
                           double step) {
  FermiAudit out;
  const double eu = step * alpha;  // chart step ~ `step` in x units
  auto X = [&](double u, double v, double t) {
    const auto P = chart.geometry(u, v);
    return Vec3(P.Y / alpha + (t + h(u, v)) * P.nu);
  };
  auto V = [&](double u, double v, double t) { return F(X(u, v, t)); };
  // Fourth-order first and second differences of a scalar function of one variable.
  auto d1 = [](const std::function<double(double)>& g, double e) {
    return (g(-2 * e) - 8 * g(-e) + 8 * g(e) - g(2 * e)) / (12 * e);
  };
  auto d2 = [](const std::function<double(double)>& g, double e) {
    return (-g(-2 * e) + 16 * g(-e) - 30 * g(0) + 16 * g(e) - g(2 * e)) / (12 * e * e);
  };
  std::vector<double> fermi, cart;
  for (const auto& s : samples) {
    const auto P = chart.geometry(s.u, s.v);
    const double hv = h(s.u, s.v);
    const Eigen::Vector2d hd(d1([&](double e) { return h(s.u + e, s.v); }, eu),
                             d1([&](double e) { return h(s.u, s.v + e); }, eu));
    Mat2 hdd;
    hdd(0, 0) = d2([&](double e) { return h(s.u + e, s.v); }, eu);
    hdd(1, 1) = d2([&](double e) { return h(s.u, s.v + e); }, eu);
    hdd(0, 1) = hdd(1, 0) = d1([&](double e) { return d1([&](double f) { return h(s.u + e, s.v + f); }, eu); }, eu);
    const double lap_h = (P.ginv.cwiseProduct(hdd)).sum() + P.b0.dot(hd);
    const auto E = expansion_at(P, alpha, s.t, hv, hd, hdd, lap_h);
    const double Vtt = d2([&](double e) { return V(s.u, s.v, s.t + e); }, step);
    const double Vt = d1([&](double e) { return V(s.u, s.v, s.t + e); }, step);
    const double Vu = d1([&](double e) { return V(s.u + e, s.v, s.t); }, eu);
    const double Vv = d1([&](double e) { return V(s.u, s.v + e, s.t); }, eu);
    const double Vuu = d2([&](double e) { return V(s.u + e, s.v, s.t); }, eu);
    const double Vvv = d2([&](double e) { return V(s.u, s.v + e, s.t); }, eu);
    const double Vuv =
        d1([&](double e) { return d1([&](double f) { return V(s.u + e, s.v + f, s.t); }, eu); }, eu);
    const double Vut =
        d1([&](double e) { return d1([&](double f) { return V(s.u + e, s.v, s.t + f); }, step); }, eu);
    const double Vvt =
        d1([&](double e) { return d1([&](double f) { return V(s.u, s.v + e, s.t + f); }, step); }, eu);
    const double lf = E.c_tt * Vtt + E.C(0, 0) * Vuu + 2 * E.C(0, 1) * Vuv + E.C(1, 1) * Vvv +
                      2 * (E.c_it[0] * Vut + E.c_it[1] * Vvt) + E.c_i[0] * Vu + E.c_i[1] * Vv + E.c_t * Vt;
    const Vec3 x = X(s.u, s.v, s.t);
    double lc = 0;
    for (int a = 0; a < 3; ++a) {
      lc += d2(
          [&](double e) {
            Vec3 y = x;
            y[a] += e;
            return F(y);
          },
          step);
    }
    fermi.push_back(lf);
    cart.push_back(lc);
  }
  double scale = 0;
  for (double c : cart) scale = std::max(scale, std::abs(c));
  for (std::size_t i = 0; i < cart.size(); ++i) {
    const double e = std::abs(fermi[i] - cart[i]);
    out.max_abs_error = std::max(out.max_abs_error, e);
  }
  out.max_rel_error = scale > 0 ? out.max_abs_error / scale : out.max_abs_error;
  out.samples = static_cast<int>(samples.size());
  return out;
}

}  // namespace acs
