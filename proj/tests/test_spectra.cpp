#include <doctest.h>

#include <cmath>
#include <numbers>

#include "acs/ansatz.hpp"
#include "acs/errors.hpp"
#include "acs/jacobi.hpp"
#include "acs/spectra.hpp"

using namespace acs;

namespace {

const Profile& cubic_profile() {
  static const Profile p = solve_heteroclinic(cubic_nonlinearity(), 20.0, 2001);
  return p;
}

const Surface& meridian_catenoid() {
  static const Surface S = catenoid(20.0, 201, 1);
  return S;
}

// The ansatz u1 on the catenoid with balanced log data. The reduction
// solution is used by the acceptance run; u1 differs from it by O(alpha^2)
// in the tube and keeps these tests fast.
struct CatenoidField {
  FermiChart chart;
  Ansatz ansatz;
  GlobalField W;
  explicit CatenoidField(double alpha)
      : chart(build_chart(meridian_catenoid(), cubic_profile(), alpha,
                          log_jacobi_field(meridian_catenoid(), {-1.0, 1.0}).h0,
                          std::vector<double>(meridian_catenoid().num_nodes(), 0.0))),
        ansatz(build_ansatz(chart, cubic_profile())),
        W(build_global(ansatz)) {}
  ScalarField3 field() const {
    return [this](const Vec3& x) { return W(x); };
  }
};

// Lowest Dirichlet eigenvalue of -(r g')'/r = lambda p(alpha r) g on [0, R]
// by shooting from the axis (RK4) and bisection on lambda.
double radial_shooting(double alpha, double R, std::vector<double>* profile = nullptr,
                       const std::vector<double>& at = {}) {
  auto end_value = [&](double lam, std::vector<double>* out) {
    const int n = 20000;
    const double h = R / n;
    // y = (g, r g'); start slightly off the axis with the series g = 1 - lam p r^2 / 4.
    double r = 1e-6, g = 1.0, q = -lam * r * r / 2;
    auto rhs = [&](double rr, double gg, double qq, double& dg, double& dq) {
      const double x = alpha * rr;
      dg = qq / rr;
      dq = -lam * rr * gg / (1 + x * x * x * x);
    };
    std::size_t next = 0;
    for (int i = 0; i < n; ++i) {
      double k1g, k1q, k2g, k2q, k3g, k3q, k4g, k4q;
      rhs(r, g, q, k1g, k1q);
      rhs(r + h / 2, g + h / 2 * k1g, q + h / 2 * k1q, k2g, k2q);
      rhs(r + h / 2, g + h / 2 * k2g, q + h / 2 * k2q, k3g, k3q);
      rhs(r + h, g + h * k3g, q + h * k3q, k4g, k4q);
      const double gn = g + h / 6 * (k1g + 2 * k2g + 2 * k3g + k4g);
      const double qn = q + h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q);
      while (out && next < at.size() && at[next] <= r + h) {
        const double f = (at[next] - r) / h;
        out->push_back((1 - f) * g + f * gn);
        ++next;
      }
      g = gn;
      q = qn;
      r += h;
    }
    return g;
  };
  double lo = 0, hi = 1e-4;
  while (end_value(hi, nullptr) > 0) hi *= 2;
  for (int it = 0; it < 80; ++it) {
    const double m = 0.5 * (lo + hi);
    (end_value(m, nullptr) > 0 ? lo : hi) = m;
  }
  if (profile) end_value(0.5 * (lo + hi), profile);
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("u = 1 has no negative directions") {
  const auto& p = cubic_profile();
  const Surface P = plane(4.0, 8, 1);
  const ScalarField3 one = [](const Vec3&) { return 1.0; };
  MeridianGrid g;
  g.n_s = 61;
  const auto T = build_tube(one, p, P, 0.1, 40.0, g);
  CHECK(T.h[0] == 0.0);
  for (int m = 0; m <= 2; ++m) {
    const auto op = assemble_linearized(T, m);
    CHECK(op.symmetry_defect <= 1e-10);
    CHECK(negative_inertia(op.K) == 0);
  }
  const auto sp = solve_spectrum(assemble_linearized(T, 0), 2);
  // -Delta + 2 against the weight p <= 1.
  CHECK(sp.eigenvalues.front() >= 2.0);
}

TEST_CASE("flat interface: ground state is w' times the radial mode") {
  const auto& p = cubic_profile();
  const double alpha = 0.1, RY = 3.0, R = RY / alpha;
  const Surface P = plane(RY, 8, 1);
  const ScalarField3 u = [&p](const Vec3& x) { return p.w_at(x[2]); };
  MeridianGrid g;
  g.n_s = 121;
  const auto T = build_tube(u, p, P, alpha, R, g);
  const auto op = assemble_linearized(T, 0);
  CHECK(op.symmetry_defect <= 1e-10);
  const auto sp = solve_spectrum(op, 2);
  CHECK(sp.negative_count == 0);
  CHECK(sp.eigenvalues.front() >= 0);
  CHECK(sp.orthogonality <= 1e-10);

  // The plane chart parameter is r in surface units; shooting runs in x units.
  std::vector<double> g_ref, r_x;
  for (double s : T.s) r_x.push_back(s / alpha);
  const double lam = radial_shooting(alpha, R, &g_ref, r_x);
  CHECK(sp.eigenvalues.front() == doctest::Approx(lam).epsilon(0.02));

  const auto D = decompose_eigenfunction(T, p, op.extend(sp.vectors.col(0)));
  CHECK(D.perp_ratio <= 1e-2);
  CHECK(D.max_projection <= 1e-12);
  double kmax = 0, gmax = 0;
  for (int i = 0; i < T.ns; ++i) {
    kmax = std::max(kmax, std::abs(D.k[i]));
    gmax = std::max(gmax, std::abs(g_ref[i]));
  }
  const double sgn = D.k[0] * g_ref[0] > 0 ? 1.0 : -1.0;
  double dev = 0;
  for (int i = 0; i < T.ns; ++i) dev = std::max(dev, std::abs(sgn * D.k[i] / kmax - g_ref[i] / gmax));
  CHECK(dev <= 0.02);
}

TEST_CASE("radial shooting oracle") {
  // Without the weight the Dirichlet disk eigenvalue is (j_{0,1} / R)^2.
  const double j01 = 2.404825557695773;
  CHECK(radial_shooting(1e-9, 10.0) == doctest::Approx(j01 * j01 / 100).epsilon(1e-6));
}

TEST_CASE("decomposition of w' along the interface") {
  const auto& p = cubic_profile();
  const Surface P = plane(3.0, 8, 1);
  const double shift = 0.37;
  const ScalarField3 u = [&](const Vec3& x) { return p.w_at(x[2] - shift); };
  MeridianGrid g;
  g.n_s = 41;
  const auto T = build_tube(u, p, P, 0.1, 30.0, g);
  CHECK(T.h[0] == doctest::Approx(shift).epsilon(1e-8));
  std::vector<double> phi(T.x.size(), 0.0);
  for (int i = 0; i < T.ns; ++i)
    for (int j = T.j_lo[i]; j <= T.j_hi[i]; ++j) phi[T.index(i, j)] = p.eval(T.t[j] - T.h[i]).w1;
  const auto D = decompose_eigenfunction(T, p, phi);
  for (double k : D.k) CHECK(k == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(D.perp_ratio <= 1e-12);
  CHECK(D.decay_rate == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));
}

TEST_CASE("negative direction on the catenoid") {
  const auto& p = cubic_profile();
  const auto& S = meridian_catenoid();
  const double alpha = 0.1;
  const CatenoidField F(alpha);
  const auto u = F.field();
  MeridianGrid g1, g2;
  g1.n_s = 121;
  g2.n_s = 161;
  g2.dt = 0.08;
  const auto rep = morse_index(u, p, S, alpha, {6 / alpha, 8 / alpha}, {g1, g2});
  CHECK(rep.m_u == 1);
  CHECK(rep.stabilized);
  CHECK(rep.monotone_in_R);
  for (const auto& row : rep.rows) {
    CHECK(row.mode_counts[0] == 1);
    CHECK(row.mode_counts[1] == 0);
  }
  const auto W = weighted_index(S, {4.0, 6.0, 8.0});
  const double mu1 = W.eigenvalues.back().front();
  REQUIRE(mu1 < 0);
  CHECK(-rep.mu_hat == doctest::Approx(mu1).epsilon(0.2));

  const auto T = build_tube(u, p, S, alpha, 8 / alpha, g1);
  const auto op = assemble_linearized(T, 0);
  const auto sp = solve_spectrum(op, 2);
  CHECK(sp.negative_count == 1);
  const auto D = decompose_eigenfunction(T, p, op.extend(sp.vectors.col(0)));
  CHECK(D.perp_ratio <= 0.05);
  CHECK(D.max_projection <= 1e-12);
  CHECK(D.decay_rate >= 0.9 * std::sqrt(2.0));
  CHECK(D.outside_ratio <= 1e-2);

  // Axisymmetric u: the rotation field vanishes.
  CHECK(kernel_fields(u, T).z4_max <= 1e-10);
}

TEST_CASE("3-D quadratic form of k w' against the Jacobi form") {
  const auto& p = cubic_profile();
  const auto& S = meridian_catenoid();
  const double RY = 6.0;
  // k: the negative Dirichlet Jacobi mode at RY.
  const auto J = assemble_jacobi(S, RY, 0);
  const auto n = static_cast<Eigen::Index>(J.size());
  const auto ep = generalized_dense(Eigen::MatrixXd(J.A), Eigen::MatrixXd(J.mass.cwiseProduct(J.weight).asDiagonal()));
  REQUIRE(ep.values.front() < 0);
  const auto k = J.extend(ep.vectors.col(0).head(n));

  MeridianGrid g;
  g.n_s = 161;
  std::vector<double> al = {0.2, 0.1, 0.05}, disc;
  for (double alpha : al) {
    const CatenoidField F(alpha);
    const auto T = build_tube(F.field(), p, S, alpha, RY / alpha, g);
    const auto op = assemble_linearized(T, 0);
    const auto Q = quadratic_form_compare(op, p, k);
    CHECK(Q.Q3 < 0);
    CHECK(Q.Q_surface < 0);
    if (alpha == 0.1) CHECK(Q.discrepancy <= 0.15);
    disc.push_back(Q.discrepancy);

    if (alpha == 0.1) {
      const auto Z = quadratic_form_compare(op, p, std::vector<double>(k.size(), 0.0));
      CHECK(Z.Q3 == 0.0);
      CHECK(Z.Q_surface == 0.0);
    }
  }
  CHECK(fit_loglog(al, disc).slope >= 0.7);
}

TEST_CASE("tube set-up errors") {
  const auto& p = cubic_profile();
  const ScalarField3 one = [](const Vec3&) { return 1.0; };
  const Surface P = plane(2.0, 8, 1);
  CHECK_THROWS_AS(build_tube(one, p, P, 0.1, 30.0), Error);  // beyond the meshed radius
  std::vector<EndData> e(3);
  e[0].a = -1;
  e[0].sign = -1;
  e[1].a = 0.5;
  e[2].a = 0.5;
  e[2].b = 3;
  e[2].sign = -1;
  CoreSpec core;
  core.n_theta = 1;
  CHECK_THROWS_AS(build_tube(one, p, from_end_data(e, core), 0.1, 10.0), Error);  // several charts
  CHECK_THROWS_AS(assemble_linearized(build_tube(one, p, P, 0.1, 15.0), -1), Error);
}
