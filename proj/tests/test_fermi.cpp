#include <doctest.h>

#include <cmath>
#include <numbers>

#include "acs/errors.hpp"
#include "acs/fermi.hpp"
#include "acs/jacobi.hpp"

using namespace acs;

namespace {

const Profile& cubic_profile() {
  static const Profile p = solve_heteroclinic(cubic_nonlinearity(), 20.0, 2001);
  return p;
}

ProfileFn w1_fn() {
  const Profile* p = &cubic_profile();
  return [p](double t, double& f, double& f1, double& f2) {
    const auto s = p->eval(t);
    f = s.w1;
    f1 = s.w2;
    f2 = s.w3;
  };
}

}  // namespace

TEST_CASE("flat plane: no corrections and straight normals") {
  const Surface P = plane(20.0, 40, 8);
  const std::vector<double> zero(P.num_nodes(), 0.0);
  const auto C = build_chart(P, cubic_profile(), 0.1, zero, zero);
  for (std::size_t k = 0; k < P.num_nodes(); k += 37) {
    for (double t : {-3.0, 0.0, 2.5}) {
      const auto E = C.coefficients(k, t);
      CHECK(E.a1.cwiseAbs().maxCoeff() == 0.0);
      CHECK(E.b1.cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(E.b31 == 0.0);
      CHECK(E.c_t == 0.0);
      CHECK(E.c_tt == 1.0);
      const Vec3 x = C.point(k, t);
      const Vec3 y = P.node[k].Y / 0.1;
      CHECK((x - y - t * Vec3(0, 0, 1)).norm() <= 1e-12);
    }
  }
  // k = 1, psi = w' on the plane: only d_tt acts.
  const auto V = apply_separated(C, std::vector<double>(P.num_nodes(), 1.0), w1_fn());
  double err = 0;
  for (std::size_t k = 0; k < V.nodes; ++k)
    for (int j = 0; j < V.nt; ++j) err = std::max(err, std::abs(V.at(k, j) - cubic_profile().eval(C.t(j)).w3));
  CHECK(err <= 1e-14);
}

TEST_CASE("catenoid chart: zero offset, volume factor, injectivity") {
  const Surface S = catenoid(20.0, 201, 8);
  const std::vector<double> zero(S.num_nodes(), 0.0);
  const double alpha = 0.1;
  const auto C = build_chart(S, cubic_profile(), alpha, zero, zero);
  CHECK(C.L == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(C.injectivity_margin > 0);
  for (std::size_t k = 0; k < S.num_nodes(); k += 11) CHECK((C.point(k, 0.0) - S.node[k].Y / alpha).norm() == 0.0);

  // Volume factor against a direct 3x3 determinant of DX by differences.
  const CatenoidChart ch;
  double err = 0;
  for (double s : {-2.0, -0.5, 0.0, 0.3, 1.7}) {
    for (double t : {-6.0, -1.0, 0.0, 2.0, 7.5}) {
      const double th = 0.7, e = 1e-5;
      auto X = [&](double u, double v, double tt) {
        const auto P = ch.geometry(u, v);
        return Vec3(P.Y / alpha + tt * P.nu);
      };
      Eigen::Matrix3d D;
      D.col(0) = (X(s + e, th, t) - X(s - e, th, t)) / (2 * e);
      D.col(1) = (X(s, th + e, t) - X(s, th - e, t)) / (2 * e);
      D.col(2) = (X(s, th, t + e) - X(s, th, t - e)) / (2 * e);
      const auto P = ch.geometry(s, th);
      const double ratio = D.determinant() / (P.sqrtg / (alpha * alpha));
      const double Z = alpha * t;
      const auto E = expansion_at(P, alpha, t, 0.0, Eigen::Vector2d::Zero(), Mat2::Zero(), 0.0);
      CHECK(E.volume == doctest::Approx(1 - 0.5 * Z * Z * P.A2).epsilon(1e-13));
      err = std::max(err, std::abs(ratio - E.volume));
    }
  }
  CHECK(err <= 1e-8);

  // The normal segments of a too-wide tube would cross near the neck.
  CHECK_THROWS_AS(build_chart(S, cubic_profile(), 0.5, zero, zero), Error);
  try {
    build_chart(S, cubic_profile(), 0.5, zero, zero);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotInjective);
  }
  CHECK_THROWS_AS(C.coefficients(0, C.L + 1), Error);
}

TEST_CASE("Fermi Laplacian against a 3-D Cartesian stencil") {
  const CatenoidChart ch;
  auto h = [](double s, double th) { return s * std::tanh(s) - 1 + 0.3 * std::sin(th) / std::cosh(s); };
  for (double alpha : {0.2, 0.1}) {
    const Vec3 c0(1.0 / alpha, 0.5, 0.3);
    auto F = [&](const Vec3& x) {
      const Vec3 d = x - c0;
      return std::exp(-d.squaredNorm() / 8) * (1 + 0.1 * d[0] - 0.05 * d[2]);
    };
    std::vector<AuditSample> samples;
    for (double s : {-0.4, -0.1, 0.0, 0.2, 0.5})
      for (double th : {-0.3, 0.0, 0.4})
        for (double t : {-2.0, 0.0, 1.0, 2.5}) samples.push_back({s, th, t});
    const auto A = audit_laplacian(ch, alpha, h, F, samples);
    MESSAGE("alpha=" << alpha << " audit rel error " << A.max_rel_error);
    CHECK(A.max_rel_error <= 1e-4);
  }
}

TEST_CASE("coefficient decay on a logarithmic end") {
  EndData lo, hi;
  lo.a = -1;
  lo.b = -std::log(2.0);
  lo.sign = -1;
  hi.a = 1;
  hi.b = std::log(2.0);
  CoreSpec core;
  core.R_max = 200;
  core.n_r = 400;
  core.n_theta = 1;
  const Surface S = from_end_data({lo, hi}, core);
  const double alpha = 0.1;
  std::vector<double> r, a1, b1, b31;
  for (int i = 0; i < core.n_r; ++i) {
    const double rr = S.mesh[1].u(i);
    if (rr < 20) continue;
    const auto& P = S.node[S.index(1, i, 0)];
    const auto E = expansion_at(P, alpha, 3.0, 0.0, Eigen::Vector2d::Zero(), Mat2::Zero(), 0.0);
    r.push_back(rr);
    a1.push_back(std::abs(E.a1(0, 0)));
    b1.push_back(std::abs(E.b1[0]));
    b31.push_back(std::abs(E.b31));
  }
  const auto fa = fit_loglog(r, a1), fb = fit_loglog(r, b1), fc = fit_loglog(r, b31);
  MESSAGE("slopes a1 " << fa.slope << " b1 " << fb.slope << " b31 " << fc.slope);
  CHECK(fa.slope == doctest::Approx(-2).epsilon(0.15));
  CHECK(fb.slope >= -3.5);
  CHECK(fb.slope <= -2.5);
  CHECK(fc.slope <= -5.5);
}

TEST_CASE("separated application matches the composed operator") {
  const Surface S = catenoid(20.0, 161, 1);
  const auto L = log_jacobi_field(S, {-1.0, 1.0});
  const std::vector<double> zero(S.num_nodes(), 0.0);
  FermiOptions opt;
  opt.dt = 0.01;
  const auto C = build_chart(S, cubic_profile(), 0.1, L.h0, zero, opt);
  const auto F = normal_and_fields(S);
  const auto sep = apply_separated(C, F.z3, w1_fn());
  GridField V(&C, S.num_nodes(), C.nt);
  for (std::size_t k = 0; k < V.nodes; ++k)
    for (int j = 0; j < C.nt; ++j) V.at(k, j) = F.z3[k] * cubic_profile().eval(C.t(j)).w1;
  const auto comp = apply_laplacian(C, V);
  double err = 0, scale = 0;
  for (std::size_t k = 0; k < V.nodes; ++k) {
    for (int j = 2; j < C.nt - 2; ++j) {
      err = std::max(err, std::abs(sep.at(k, j) - comp.at(k, j)));
      scale = std::max(scale, std::abs(sep.at(k, j)));
    }
  }
  MESSAGE("separated vs composed " << err << " scale " << scale);
  CHECK(err <= 1e-8);

  // alpha -> 0: every alpha-dependent coefficient vanishes.
  const auto E = expansion_at(S.node[80], 1e-12, 1.0, 0.5, Eigen::Vector2d(0.3, 0.0), Mat2::Identity(), 0.2);
  CHECK(std::abs(E.c_tt - 1) <= 1e-20);
  CHECK(E.C.cwiseAbs().maxCoeff() <= 1e-20);
  CHECK(std::abs(E.c_t) <= 1e-11);
}

TEST_CASE("cutoffs and tube width") {
  const Surface S = catenoid(20.0, 101, 1);
  std::vector<double> h1(S.num_nodes());
  for (std::size_t k = 0; k < h1.size(); ++k) h1[k] = 0.05 * std::sin(3.0 * k / h1.size());
  const std::vector<double> zero(S.num_nodes(), 0.0);
  const auto C = build_chart(S, cubic_profile(), 0.1, zero, h1);
  CHECK(C.gamma_log == doctest::Approx(2 * std::sqrt(2.0)).epsilon(1e-9));
  for (std::size_t k = 0; k < S.num_nodes(); ++k) {
    const double sig = std::sqrt(2.0);
    CHECK(std::exp(-sig * C.rho[k]) <=
          std::pow(1 + S.node[k].radius, -4) * std::exp(-sig * C.delta / C.alpha) * (1 + 1e-12));
    for (int j = 0; j < C.nt; ++j) {
      const double t = C.t(j);
      const auto c1 = cutoffs(C, k, t, 1), c2 = cutoffs(C, k, t, 2);
      CHECK(c2.zeta * c1.zeta == c1.zeta);
      const double s = std::abs(t + h1[k]);
      if (s <= C.rho_eff[k] + 3) CHECK(c1.eta_delta == 1.0);
      // Gradient of eta_delta lives in the transition band only.
      const double g = cutoff_eta_d1(s - C.rho_eff[k] - 3);
      if (g != 0) {
        CHECK(s >= C.rho_eff[k] + 4 - 1e-12);
        CHECK(s <= C.rho_eff[k] + 5 + 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(cutoffs(C, 0, 0.0, 3), Error);
}

TEST_CASE("projection onto the dilated surface") {
  const Surface S = catenoid(20.0, 201, 1);
  const auto L = log_jacobi_field(S, {-1.0, 1.0});
  const std::vector<double> zero(S.num_nodes(), 0.0);
  const auto C = build_chart(S, cubic_profile(), 0.1, L.h0, zero);
  for (std::size_t k = 20; k < 180; k += 17) {
    for (double t : {-4.0, 0.0, 3.0}) {
      const Vec3 x = C.point(k, t);
      const double th = 1.1;
      const Vec3 xr(std::cos(th) * x[0], std::sin(th) * x[0], x[2]);
      const auto P = C.project(xr);
      CHECK(P.u == doctest::Approx(S.mesh[0].u(static_cast<int>(k))).epsilon(1e-9));
      CHECK(P.z == doctest::Approx(t + L.h0[k]).epsilon(1e-9));
      CHECK(P.h == doctest::Approx(L.h0[k]).epsilon(1e-9));
      CHECK(P.theta == doctest::Approx(th).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(C.project(Vec3(1000.0, 0, 500.0)), Error);
}
