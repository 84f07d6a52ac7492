#include <doctest.h>

#include <chrono>
#include <cmath>

#include "acs/errors.hpp"
#include "acs/profile.hpp"

using namespace acs;

namespace {

// Independent oracle: composite Simpson of sech^4(t/sqrt2)/2 on a very fine
// grid; the integrand is analytic, the closed form is 2 sqrt2 / 3.
double cstar_oracle() {
  const int N = 400000;
  const double a = -40, b = 40, h = (b - a) / N;
  double s = 0;
  for (int i = 0; i <= N; ++i) {
    const double t = a + i * h;
    const double c = 1.0 / std::cosh(t / std::sqrt(2.0));
    const double v = 0.5 * c * c * c * c;
    s += (i == 0 || i == N ? 1 : (i % 2 ? 4 : 2)) * v;
  }
  return s * h / 3;
}

const Profile& cubic_profile() {
  static const Profile p = solve_heteroclinic(cubic_nonlinearity(), 20.0, 2001);
  return p;
}

}  // namespace

TEST_CASE("cubic heteroclinic matches tanh(t/sqrt2)") {
  const Profile& p = cubic_profile();
  double err = 0;
  for (int i = 0; i < p.n; ++i) err = std::max(err, std::abs(p.w[i] - std::tanh(p.t[i] / std::sqrt(2.0))));
  CHECK(err <= 1e-8);
  CHECK(std::abs(p.w[(p.n - 1) / 2]) == 0.0);
  CHECK(std::abs(p.w1[(p.n - 1) / 2] - 1.0 / std::sqrt(2.0)) <= 1e-8);
  CHECK(std::abs(p.centering) <= 1e-8);
  for (int i = 0; i < p.n; ++i) REQUIRE(p.w1[i] > 0);
  CHECK(std::abs(p.w.back() - 1) <= 2 * std::exp(-p.sigma_plus * p.T));
  CHECK(std::abs(p.w.front() + 1) <= 2 * std::exp(-p.sigma_minus * p.T));
}

TEST_CASE("profile constants for the cubic") {
  const Profile& p = cubic_profile();
  const ProfileConstants c = profile_constants(p);
  CHECK(std::abs(c.sigma_plus - std::sqrt(2.0)) <= 1e-9);
  CHECK(std::abs(c.sigma_minus - std::sqrt(2.0)) <= 1e-9);
  const double oracle = cstar_oracle();
  CHECK(std::abs(oracle - 2 * std::sqrt(2.0) / 3) <= 1e-12);
  CHECK(std::abs(c.c_star - oracle) <= 1e-6);
  CHECK(c.spectral_gap > 0);
  // Poschl-Teller: the first excited level of -d^2 - f'(tanh(t/sqrt2)) is 3/2.
  CHECK(std::abs(c.spectral_gap - 1.5) <= 1e-3);
  const Profile p2 = solve_heteroclinic(cubic_nonlinearity(), 20.0, 4001);
  CHECK(std::abs(spectral_gap(p2) - c.spectral_gap) <= 1e-4);
}

TEST_CASE("correctors satisfy their ODEs and the moment identities") {
  const Profile& p = cubic_profile();
  const ProfileResiduals r = profile_residuals(p);
  CHECK(r.w <= 1e-8);
  CHECK(r.psi0 <= 1e-8);
  CHECK(r.psi1 <= 1e-8);
  CHECK(std::abs(p.psi0[(p.n - 1) / 2]) <= 1e-14);
  CHECK(p.psi1[(p.n - 1) / 2] == 0.0);
  for (int i = 0; i < p.n; ++i) CHECK(p.psi1[i] == doctest::Approx(-p.psi1[p.n - 1 - i]).epsilon(1e-12));
  const MomentIdentities m = moment_identities(p);
  CHECK(std::abs(m.psi0_lhs - m.psi0_rhs) <= 1e-6);
  CHECK(std::abs(m.psi1_lhs - m.psi1_rhs) <= 1e-6);
  CHECK(p.psi0_decay_plus >= 0.9 * p.sigma_plus);
  CHECK(p.psi0_decay_minus >= 0.9 * p.sigma_minus);
}

TEST_CASE("double-integral corrector agrees with the bordered BVP") {
  const Profile& p = cubic_profile();
  const auto bvp = corrector_psi0_bvp(p);
  double err = 0;
  for (int i = 0; i < p.n; ++i) err = std::max(err, std::abs(bvp[i] - p.psi0[i]));
  CHECK(err <= 1e-6);
}

TEST_CASE("residuals converge under refinement") {
  // Fourth-order corrected-trapezoid quadrature inside psi0: the raw formula
  // error (measured against the fine-grid BVP) drops by ~16 per halving.
  const Profile a = solve_heteroclinic(cubic_nonlinearity(), 20.0, 401, {1});
  const Profile b = solve_heteroclinic(cubic_nonlinearity(), 20.0, 801, {1});
  const Profile ref = solve_heteroclinic(cubic_nonlinearity(), 20.0, 3201);
  auto err = [&](const Profile& q) {
    double e = 0;
    for (int i = 0; i < q.n; ++i) {
      e = std::max(e, std::abs(q.psi0[i] - ref.eval(q.t[i]).psi0));
    }
    return e;
  };
  const double ea = err(a), eb = err(b);
  CHECK(ea / eb >= 8.0);
}

TEST_CASE("identities hold for non-cubic nonlinearities") {
  for (const auto& spec : {sine_nonlinearity(), asymmetric_nonlinearity(0.3)}) {
    CAPTURE(spec.name);
    const Profile p = solve_heteroclinic(spec, 24.0, 2401);
    CHECK(std::abs(p.centering) <= 1e-8);
    const ProfileResiduals r = profile_residuals(p);
    CHECK(r.w <= 1e-8);
    CHECK(r.psi0 <= 1e-8);
    CHECK(r.psi1 <= 1e-8);
    const MomentIdentities m = moment_identities(p);
    CHECK(std::abs(m.psi0_lhs - m.psi0_rhs) <= 1e-6);
    CHECK(std::abs(m.psi1_lhs - m.psi1_rhs) <= 1e-6);
    CHECK(profile_constants(p).spectral_gap > 0);
    if (spec.analytic_profile) {
      double err = 0;
      for (int i = 0; i < p.n; ++i) err = std::max(err, std::abs(p.w[i] - spec.analytic_profile(p.t[i])));
      CHECK(err <= 1e-8);
    }
  }
  const Profile q = solve_heteroclinic(asymmetric_nonlinearity(0.3), 24.0, 2401);
  CHECK(std::abs(q.sigma_plus - std::sqrt(2.0) * 1.3) <= 1e-9);
  CHECK(std::abs(q.sigma_minus - std::sqrt(2.0) * 0.7) <= 1e-9);
  CHECK(q.center_value != 0.0);
}

TEST_CASE("invalid specifications are rejected") {
  NonlinearitySpec bad = cubic_nonlinearity();
  bad.W = [](double u) { return -0.25 * (1 - u * u) * (1 - u * u); };
  CHECK_THROWS_AS(solve_heteroclinic(bad, 20, 2001), Error);
  try {
    solve_heteroclinic(bad, 20, 2001);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidSpec);
  }
  CHECK_THROWS_AS(solve_heteroclinic(cubic_nonlinearity(), 3, 2001), Error);
}

TEST_CASE("profile solve is fast") {
  const auto t0 = std::chrono::steady_clock::now();
  const Profile p = solve_heteroclinic(cubic_nonlinearity(), 20.0, 2001);
  (void)profile_constants(p);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(s < 1.0);
}
