#include <doctest.h>

#include <cmath>
#include <numbers>

#include "acs/ansatz.hpp"
#include "acs/errors.hpp"
#include "acs/identities.hpp"
#include "acs/jacobi.hpp"

using namespace acs;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

const Profile& cubic_profile() {
  static const Profile p = solve_heteroclinic(cubic_nonlinearity(), 20.0, 2001);
  return p;
}

const Surface& meridian_catenoid() {
  static const Surface S = catenoid(20.0, 201, 1);
  return S;
}

// Ansatz on the catenoid displaced by h0; keeps chart and ansatz alive.
struct Built {
  FermiChart C;
  Ansatz A;
  GlobalField W;
};

std::unique_ptr<Built> build(const Surface& S, double alpha, const std::vector<double>& h0) {
  auto b = std::make_unique<Built>();
  b->C = build_chart(S, cubic_profile(), alpha, h0, std::vector<double>(S.num_nodes(), 0.0));
  b->A = build_ansatz(b->C, cubic_profile());
  b->W = build_global(b->A);
  return b;
}

ScalarField3 field(const Built& b) {
  return [&b](const Vec3& x) { return b.W(x); };
}

}  // namespace

TEST_CASE("flux of J applied to the log growth field") {
  const auto& S = meridian_catenoid();
  const std::vector<double> R = {4, 6, 8, 12, 16};
  const auto broken = end_flux_jacobi(S, {0.0, 1.0}, R);
  CHECK(broken.limit == doctest::Approx(kTwoPi).epsilon(0.05));
  // Values approach the limit from below, like log R / R^2.
  for (std::size_t i = 1; i < R.size(); ++i) CHECK(broken.values[i] > broken.values[i - 1]);
  CHECK(std::abs(end_flux_jacobi(S, {-1.0, 1.0}, R).limit) <= 0.05 * kTwoPi);
  CHECK(end_flux_jacobi(S, {1.0, 1.0}, R).limit == doctest::Approx(2 * kTwoPi).epsilon(0.05));

  // z1, z2 integrate to zero over full turns on a two-dimensional mesh.
  const Surface S2 = catenoid(16.0, 121, 16);
  for (int i : {1, 2}) {
    const auto F = end_flux_jacobi(S2, {0.0, 1.0}, {6, 10}, i);
    for (double v : F.values) CHECK(std::abs(v) <= 1e-10);
  }
  CHECK_THROWS_AS(end_flux_jacobi(S, {0.0, 1.0}, {30}), Error);
}

TEST_CASE("balancing and end normals") {
  const auto B = balancing(catenoid(60.0, 241, 1), {-1.0, 1.0});
  CHECK(B.sum_a == 0.0);
  CHECK(B.sum_beta == 0.0);
  REQUIRE(B.normal_defect.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(B.r_used[k] == doctest::Approx(50).epsilon(0.05));
    // Exact normal: horizontal part -1/r, vertical part +-sqrt(1 - 1/r^2).
    const double r = B.r_used[k];
    CHECK(B.normal_defect[k] == doctest::Approx(1 - std::sqrt(1 - 1 / (r * r))).epsilon(1e-6));
    CHECK(B.normal_defect[k] <= 1e-3);
  }
  EndData lo, hi;
  lo.a = -1;
  hi.a = 2;
  hi.b = 1;
  hi.sign = -1;
  CHECK_THROWS_AS(from_end_data({lo, hi}, CoreSpec{}), Error);
}

TEST_CASE("probe set-up") {
  const auto& S = meridian_catenoid();
  const auto& p = cubic_profile();
  CHECK_THROWS_AS(make_probe(S, p, 0.1, 19.0), Error);
  try {
    make_probe(S, p, 0.1, 19.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProbeTooSmall);
  }
  const auto P = make_probe(S, p, 0.1, 40.0);
  CHECK(std::exp(-std::sqrt(2.0) * P.rho) == doctest::Approx(1 / (40.0 * 40.0)));
  CHECK(P.heights[1] == doctest::Approx(std::log(8.0) / 0.1));
  CHECK(P.heights[0] == doctest::Approx(-P.heights[1]));
}

TEST_CASE("Pohozaev fluxes of a flat interface vanish") {
  const auto& p = cubic_profile();
  const Surface P = plane(20.0, 40, 1);
  const ScalarField3 u = [&](const Vec3& x) { return p.w_at(x[2]); };
  const auto probe = make_probe(P, p, 0.1, 40.0, 8);
  for (int i = 1; i <= 4; ++i) CHECK(std::abs(pohozaev(u, p, i, probe).flux) <= 1e-9);
}

TEST_CASE("Pohozaev flux in the vertical direction") {
  const auto& p = cubic_profile();
  const auto& S = meridian_catenoid();
  const double alpha = 0.1;
  const std::vector<double> R = {20, 40, 80, 160};

  // Balanced: each end carries -2 pi c* (a_k / alpha + beta_k) up to sign,
  // and the two cancel.
  const auto bal = build(S, alpha, log_jacobi_field(S, {-1.0, 1.0}).h0);
  const auto r = pohozaev(field(*bal), p, 3, make_probe(S, p, alpha, 160.0));
  const double per_end = kTwoPi * p.c_star * (1 / alpha + 1);
  CHECK(r.per_end[0] == doctest::Approx(per_end).epsilon(2e-3));
  CHECK(r.per_end[1] == doctest::Approx(-per_end).epsilon(2e-3));
  CHECK(std::abs(r.flux) <= 1e-8 * per_end);

  // Broken: beta = (0, 1) on the raw log field.
  const auto brk = build(S, alpha, log_growth_field(S, {0.0, 1.0}));
  const auto F = pohozaev_sweep(field(*brk), p, S, alpha, 3, R);
  CHECK(F.values.back() / p.c_star == doctest::Approx(-kTwoPi).epsilon(0.1));
  CHECK(F.limit / p.c_star == doctest::Approx(-kTwoPi).epsilon(0.1));
  for (std::size_t i = 1; i < R.size(); ++i) CHECK(F.values[i] < F.values[i - 1]);

  // Rotations: u is axisymmetric, so Z4 = 0 and the i = 1, 2 fluxes cancel
  // over the turn.
  for (int i : {1, 2, 4}) {
    const auto q = pohozaev(field(*bal), p, i, make_probe(S, p, alpha, 40.0, 8));
    CHECK(std::abs(q.flux) <= 1e-7 * per_end);  // difference noise of the per-line terms
  }
}

TEST_CASE("balanced three-end data: flux decays in R") {
  const auto& p = cubic_profile();
  std::vector<EndData> e(3);
  e[0].a = -1;
  e[0].b = -2;
  e[0].sign = -1;
  e[1].a = 0.5;
  e[2].a = 0.5;
  e[2].b = 3;
  e[2].sign = -1;
  CoreSpec core;
  core.n_theta = 1;
  const Surface S = from_end_data(e, core);
  const auto b = build(S, 0.1, std::vector<double>(S.num_nodes(), 0.0));
  const auto F = pohozaev_sweep(field(*b), p, S, 0.1, 3, {20, 40, 80, 160});
  CHECK(F.decay >= 0.7);
  // Sum of the cubes of the end slopes sets the leading remainder.
  CHECK(F.values.back() < 0);
}
