#include "acs/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SparseLU>

#include "acs/errors.hpp"

namespace acs {

namespace {

constexpr double kPi = std::numbers::pi;

// Fine-grid state used while building a profile.
struct FineGrid {
  double h = 0;
  double T = 0;
  int i0 = 0;  // index of t = 0
  std::vector<double> t, w, w1, w2, w3;
};

double slope_of(const NonlinearitySpec& spec, double w) {
  return std::sqrt(std::max(0.0, 2.0 * spec.W(w)));
}

// Integrates w' = sqrt(2 W(w)) outward from w(0) = c. Once |w| is within
// `switch_gap` of +-1 the linear tail 1 -+ w ~ A e^{-sigma |t|} takes over,
// because sqrt(2W) loses relative accuracy there.
void integrate_profile(const NonlinearitySpec& spec, double c, double sp, double sm, FineGrid& g) {
  const int N = static_cast<int>(g.t.size());
  const double h = g.h;
  const double switch_gap = 1e-9;
  g.w.assign(N, 0.0);
  g.w[g.i0] = c;
  auto rk4 = [&](double w, double step) {
    const double k1 = slope_of(spec, w);
    const double k2 = slope_of(spec, w + 0.5 * step * k1);
    const double k3 = slope_of(spec, w + 0.5 * step * k2);
    const double k4 = slope_of(spec, w + step * k3);
    return w + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  };
  for (int i = g.i0; i + 1 < N; ++i) {
    const double gap = 1.0 - g.w[i];
    g.w[i + 1] = gap < switch_gap ? 1.0 - gap * std::exp(-sp * h) : rk4(g.w[i], h);
  }
  for (int i = g.i0; i > 0; --i) {
    const double gap = 1.0 + g.w[i];
    g.w[i - 1] = gap < switch_gap ? -1.0 + gap * std::exp(-sm * h) : rk4(g.w[i], -h);
  }
  g.w1.assign(N, 0.0);
  g.w2.assign(N, 0.0);
  g.w3.assign(N, 0.0);
  for (int i = 0; i < N; ++i) {
    const double wi = g.w[i];
    double s;
    if (1.0 - wi < switch_gap) {
      s = sp * (1.0 - wi);
    } else if (1.0 + wi < switch_gap) {
      s = sm * (1.0 + wi);
    } else {
      s = slope_of(spec, wi);
    }
    g.w1[i] = s;
    g.w2[i] = -spec.f(wi);
    g.w3[i] = -spec.f_prime(wi) * s;
  }
}

double integrate_fine(const FineGrid& g, const std::vector<double>& v, const std::vector<double>& dv) {
  return cumulative_integral(v, dv, g.h).back();
}

}  // namespace

NonlinearitySpec cubic_nonlinearity() {
  NonlinearitySpec s;
  s.name = "cubic";
  s.f = [](double u) { return (1.0 - u * u) * u; };
  s.f_prime = [](double u) { return 1.0 - 3.0 * u * u; };
  s.f_double_prime = [](double u) { return -6.0 * u; };
  s.W = [](double u) { return 0.25 * (1.0 - u * u) * (1.0 - u * u); };
  s.analytic_profile = [](double t) { return std::tanh(t / std::sqrt(2.0)); };
  return s;
}

NonlinearitySpec sine_nonlinearity() {
  NonlinearitySpec s;
  s.name = "sine";
  s.f = [](double u) { return std::sin(kPi * u) / kPi; };
  s.f_prime = [](double u) { return std::cos(kPi * u); };
  s.f_double_prime = [](double u) { return -kPi * std::sin(kPi * u); };
  s.W = [](double u) {
    const double c = std::cos(0.5 * kPi * u);
    return 2.0 * c * c / (kPi * kPi);
  };
  s.analytic_profile = [](double t) { return 4.0 / kPi * std::atan(std::exp(t)) - 1.0; };
  return s;
}

NonlinearitySpec asymmetric_nonlinearity(double eps) {
  // W = g^2/4 with g = (1-u^2)(1+eps u); f = -W' = -g g'/2.
  NonlinearitySpec s;
  s.name = "asymmetric";
  auto g = [eps](double u) { return (1.0 - u * u) * (1.0 + eps * u); };
  auto g1 = [eps](double u) { return eps - 2.0 * u - 3.0 * eps * u * u; };
  auto g2 = [eps](double u) { return -2.0 - 6.0 * eps * u; };
  const double g3 = -6.0 * eps;
  s.f = [g, g1](double u) { return -0.5 * g(u) * g1(u); };
  s.f_prime = [g, g1, g2](double u) { return -0.5 * (g1(u) * g1(u) + g(u) * g2(u)); };
  s.f_double_prime = [g, g1, g2, g3](double u) { return -0.5 * (3.0 * g1(u) * g2(u) + g(u) * g3); };
  s.W = [g](double u) { return 0.25 * g(u) * g(u); };
  return s;
}

NonlinearitySpec nonlinearity_by_name(const std::string& name) {
  if (name == "cubic") return cubic_nonlinearity();
  if (name == "sine") return sine_nonlinearity();
  if (name == "asymmetric") return asymmetric_nonlinearity(0.3);
  throw Error(ErrorCode::ConfigError, "unknown nonlinearity '" + name + "'");
}

void validate_nonlinearity(const NonlinearitySpec& spec) {
  if (!spec.f || !spec.f_prime || !spec.f_double_prime || !spec.W) {
    throw Error(ErrorCode::InvalidSpec, "nonlinearity is missing f, f', f'' or W");
  }
  for (double e : {-1.0, 1.0}) {
    if (std::abs(spec.W(e)) > 1e-12 || std::abs(spec.f(e)) > 1e-12) {
      throw Error(ErrorCode::InvalidSpec, "W(+-1) and f(+-1) must vanish", {{"at", e}});
    }
    if (!(-spec.f_prime(e) > 0)) {
      throw Error(ErrorCode::InvalidSpec, "-f'(+-1) must be positive", {{"at", e}});
    }
  }
  for (int k = 1; k < 200; ++k) {
    const double u = -1.0 + 2.0 * k / 200.0;
    if (!(spec.W(u) > 0)) {
      throw Error(ErrorCode::InvalidSpec, "W must be positive on (-1,1)", {{"u", u}});
    }
  }
}

Profile solve_heteroclinic(const NonlinearitySpec& spec, double T, int n, const ProfileOptions& opt) {
  validate_nonlinearity(spec);
  Profile p;
  p.spec = spec;
  p.sigma_plus = std::sqrt(-spec.f_prime(1.0));
  p.sigma_minus = std::sqrt(-spec.f_prime(-1.0));
  const double smin = std::min(p.sigma_plus, p.sigma_minus);
  if (n % 2 == 0) ++n;  // t = 0 must be a node
  if (T < 8.0 / smin) {
    throw Error(ErrorCode::InvalidSpec, "half-width T must be at least 8/sigma", {{"T", T}});
  }
  const double dt = 2.0 * T / (n - 1);
  if (dt > 0.25) {
    throw Error(ErrorCode::InvalidSpec, "need at least 4 nodes per unit length", {{"dt", dt}});
  }
  p.T = T;
  p.n = n;
  p.dt = dt;

  const int S = std::max(1, opt.substeps);
  const int K = static_cast<int>(std::ceil(4.0 / dt));
  FineGrid g;
  g.h = dt / S;
  const int half = ((n - 1) / 2 + K) * S;
  g.i0 = half;
  g.T = half * g.h;
  const int N = 2 * half + 1;
  g.t.resize(N);
  for (int i = 0; i < N; ++i) g.t[i] = (i - half) * g.h;

  auto w_table = [&]() {
    HermiteTable tab;
    tab.x0 = g.t.front();
    tab.h = g.h;
    tab.v = g.w;
    tab.d1 = g.w1;
    tab.d2 = g.w2;
    return tab;
  };

  // Centering: shift the center value until int t w'^2 = 0.
  double c = 0.0;
  double m = 0.0, cs = 0.0;
  int iter = 0;
  for (; iter < opt.max_centering_iter; ++iter) {
    integrate_profile(spec, c, p.sigma_plus, p.sigma_minus, g);
    std::vector<double> q(N), dq(N), e(N), de(N);
    for (int i = 0; i < N; ++i) {
      q[i] = g.t[i] * g.w1[i] * g.w1[i];
      dq[i] = g.w1[i] * g.w1[i] + 2.0 * g.t[i] * g.w1[i] * g.w2[i];
      e[i] = g.w1[i] * g.w1[i];
      de[i] = 2.0 * g.w1[i] * g.w2[i];
    }
    m = integrate_fine(g, q, dq);
    cs = integrate_fine(g, e, de);
    if (std::abs(m) <= opt.centering_tol) break;
    HermiteTable tab = w_table();
    double f0, f1, f2;
    tab.eval(m / cs, f0, f1, f2);
    c = f0;
  }
  if (std::abs(m) > opt.centering_tol) {
    throw Error(ErrorCode::NoConvergence, "heteroclinic centering did not converge",
                {{"moment", m}, {"iterations", iter}});
  }
  p.centering = m;
  p.centering_iterations = iter;
  p.center_value = c;
  p.c_star = cs;
  p.fine_T = g.T;
  p.fine_w = w_table();
  p.tail_A_plus = (1.0 - g.w.back()) * std::exp(p.sigma_plus * g.T);
  p.tail_A_minus = (1.0 + g.w.front()) * std::exp(p.sigma_minus * g.T);

  // psi0 = w' int_0^t w'^{-2}(s) int_{-inf}^s tau w'^2 dtau ds, with the
  // inner integral taken from the right for s > 0 (centering makes the two
  // forms agree).
  std::vector<double> q(N), dq(N);
  for (int i = 0; i < N; ++i) {
    q[i] = g.t[i] * g.w1[i] * g.w1[i];
    dq[i] = g.w1[i] * g.w1[i] + 2.0 * g.t[i] * g.w1[i] * g.w2[i];
  }
  std::vector<double> cum = cumulative_integral(q, dq, g.h);
  const double a = g.t.front(), b = g.t.back();
  const double tailL = g.w1.front() * g.w1.front() *
                       (a / (2 * p.sigma_minus) - 1.0 / (4 * p.sigma_minus * p.sigma_minus));
  const double tailR = g.w1.back() * g.w1.back() *
                       (b / (2 * p.sigma_plus) + 1.0 / (4 * p.sigma_plus * p.sigma_plus));
  std::vector<double> I(N);
  for (int i = 0; i < N; ++i) {
    I[i] = g.t[i] <= 0 ? tailL + cum[i] : -(cum.back() - cum[i]) - tailR;
  }
  const double tclip = T - opt.clip;
  std::vector<double> G(N, 0.0), dG(N, 0.0), J(N, 0.0);
  for (int i = 0; i < N; ++i) {
    if (std::abs(g.t[i]) > tclip + 1e-12) continue;
    const double s = g.w1[i];
    if (s < 1e-140) {
      throw Error(ErrorCode::QuadratureUnderflow, "w'^{-2} overflows inside the clip boundary",
                  {{"t", g.t[i]}});
    }
    G[i] = I[i] / (s * s);
    dG[i] = g.t[i] - 2.0 * I[i] * g.w2[i] / (s * s * s);
  }
  const int nclip = static_cast<int>(std::llround(tclip / g.h));
  for (int i = g.i0 + 1; i <= g.i0 + nclip; ++i) {
    J[i] = J[i - 1] + 0.5 * g.h * (G[i - 1] + G[i]) - g.h * g.h / 12.0 * (dG[i] - dG[i - 1]);
  }
  for (int i = g.i0 - 1; i >= g.i0 - nclip; --i) {
    J[i] = J[i + 1] - (0.5 * g.h * (G[i] + G[i + 1]) - g.h * g.h / 12.0 * (dG[i + 1] - dG[i]));
  }
  std::vector<double> ps(N, 0.0), ps1(N, 0.0), ps2(N, 0.0);
  for (int i = g.i0 - nclip; i <= g.i0 + nclip; ++i) {
    ps[i] = g.w1[i] * J[i];
    ps1[i] = g.w2[i] * J[i] + I[i] / g.w1[i];
    ps2[i] = g.t[i] * g.w1[i] - spec.f_prime(g.w[i]) * ps[i];
  }
  // Exponential extension beyond the clip, fitted on the last unit window.
  auto fit_tail = [&](int sign) {
    std::vector<double> x, y;
    const int iw = static_cast<int>(std::llround(1.0 / g.h));
    for (int k = 0; k <= iw; ++k) {
      const int i = g.i0 + sign * (nclip - k);
      x.push_back(std::abs(g.t[i]));
      y.push_back(std::log(std::abs(ps[i]) + 1e-300));
    }
    return -fit_line(x, y).slope;
  };
  p.psi0_decay_plus = fit_tail(+1);
  p.psi0_decay_minus = fit_tail(-1);
  const int ip = g.i0 + nclip, im = g.i0 - nclip;
  for (int i = ip + 1; i < N; ++i) {
    const double lam = p.psi0_decay_plus;
    ps[i] = ps[ip] * std::exp(-lam * (g.t[i] - g.t[ip]));
    ps1[i] = -lam * ps[i];
    ps2[i] = lam * lam * ps[i];
  }
  for (int i = im - 1; i >= 0; --i) {
    const double lam = p.psi0_decay_minus;
    ps[i] = ps[im] * std::exp(-lam * (g.t[im] - g.t[i]));
    ps1[i] = lam * ps[i];
    ps2[i] = lam * lam * ps[i];
  }
  p.psi0_C_plus = ps.back();
  p.psi0_C_minus = ps.front();
  p.fine_psi0.x0 = g.t.front();
  p.fine_psi0.h = g.h;
  p.fine_psi0.v = ps;
  p.fine_psi0.d1 = ps1;
  p.fine_psi0.d2 = ps2;

  // Output grid samples.
  p.t.resize(n);
  p.w.resize(n);
  p.w1.resize(n);
  p.w2.resize(n);
  p.psi0.resize(n);
  p.psi1.resize(n);
  for (int j = 0; j < n; ++j) {
    const int i = (K + j) * S;
    p.t[j] = -T + j * dt;
    p.w[j] = g.w[i];
    p.w1[j] = g.w1[i];
    p.w2[j] = g.w2[i];
    p.psi0[j] = ps[i];
    p.psi1[j] = 0.5 * p.t[j] * g.w1[i];
  }
  return p;
}

ProfileSample Profile::eval(double tt) const {
  ProfileSample s{};
  const double lo = fine_w.x0, hi = fine_w.x_max();
  if (tt >= lo && tt <= hi) {
    fine_w.eval(tt, s.w, s.w1, s.w2);
    fine_psi0.eval(tt, s.psi0, s.psi0_1, s.psi0_2);
  } else if (tt > hi) {
    const double e = tail_A_plus * std::exp(-sigma_plus * tt);
    s.w = 1.0 - e;
    s.w1 = sigma_plus * e;
    s.w2 = -sigma_plus * sigma_plus * e;
    const double lam = psi0_decay_plus;
    s.psi0 = psi0_C_plus * std::exp(-lam * (tt - hi));
    s.psi0_1 = -lam * s.psi0;
    s.psi0_2 = lam * lam * s.psi0;
  } else {
    const double e = tail_A_minus * std::exp(sigma_minus * tt);
    s.w = -1.0 + e;
    s.w1 = sigma_minus * e;
    s.w2 = sigma_minus * sigma_minus * e;
    const double lam = psi0_decay_minus;
    s.psi0 = psi0_C_minus * std::exp(-lam * (lo - tt));
    s.psi0_1 = lam * s.psi0;
    s.psi0_2 = lam * lam * s.psi0;
  }
  s.w3 = -spec.f_prime(s.w) * s.w1;
  s.psi1 = 0.5 * tt * s.w1;
  s.psi1_1 = 0.5 * (s.w1 + tt * s.w2);
  s.psi1_2 = 0.5 * (2.0 * s.w2 + tt * s.w3);
  return s;
}

double Profile::w_at(double tt) const {
  if (tt >= fine_w.x0 && tt <= fine_w.x_max()) {
    double f0, f1, f2;
    fine_w.eval(tt, f0, f1, f2);
    return f0;
  }
  return eval(tt).w;
}

nlohmann::json Profile::header() const {
  return {{"nonlinearity", spec.name},
          {"sigma_plus", sigma_plus},
          {"sigma_minus", sigma_minus},
          {"c_star", c_star},
          {"T", T},
          {"n", n},
          {"dt", dt},
          {"centering", centering},
          {"w0", center_value},
          {"ode_tol", 1e-8},
          {"quad_tol", 1e-8}};
}

std::vector<double> corrector_psi0(const Profile& p) { return p.psi0; }

std::vector<double> corrector_psi1(const Profile& p) { return p.psi1; }

std::vector<double> corrector_psi0_bvp(const Profile& p) {
  const int n = p.n;
  const int m = n - 2;  // interior unknowns 1..n-2
  const double h2 = p.dt * p.dt;
  std::vector<Eigen::Triplet<double>> trip;
  Vec rhs = Vec::Zero(m + 1);
  for (int k = 0; k < m; ++k) {
    const int i = k + 1;
    auto add = [&](int j, double v) {
      if (j >= 1 && j <= n - 2) trip.emplace_back(k, j - 1, v);
    };
    if (i >= 2 && i <= n - 3) {
      add(i - 2, -1.0 / (12 * h2));
      add(i - 1, 16.0 / (12 * h2));
      add(i, -30.0 / (12 * h2) + p.fp(p.w[i]));
      add(i + 1, 16.0 / (12 * h2));
      add(i + 2, -1.0 / (12 * h2));
    } else {
      add(i - 1, 1.0 / h2);
      add(i, -2.0 / h2 + p.fp(p.w[i]));
      add(i + 1, 1.0 / h2);
    }
    trip.emplace_back(k, m, p.w1[i]);
    rhs[k] = p.t[i] * p.w1[i];
  }
  const int i0 = (n - 1) / 2;
  trip.emplace_back(m, i0 - 1, 1.0);
  SpMat A(m + 1, m + 1);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  Eigen::SparseLU<SpMat> lu(A);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "bordered corrector system is singular");
  }
  Vec x = lu.solve(rhs);
  std::vector<double> out(n, 0.0);
  for (int k = 0; k < m; ++k) out[k + 1] = x[k];
  return out;
}

double spectral_gap(const Profile& p) {
  const int n = p.n;
  const int m = n - 2;
  const double h2 = p.dt * p.dt;
  std::vector<Eigen::Triplet<double>> trip;
  SpMat A(m, m);
  for (int k = 0; k < m; ++k) {
    const int i = k + 1;
    trip.emplace_back(k, k, 2.0 / h2 - p.fp(p.w[i]));
    if (k > 0) trip.emplace_back(k, k - 1, -1.0 / h2);
    if (k + 1 < m) trip.emplace_back(k, k + 1, -1.0 / h2);
  }
  A.setFromTriplets(trip.begin(), trip.end());
  Vec c(m);
  for (int k = 0; k < m; ++k) c[k] = p.w1[k + 1];
  std::vector<Eigen::Triplet<double>> tb(trip);
  for (int k = 0; k < m; ++k) {
    tb.emplace_back(k, m, c[k]);
    tb.emplace_back(m, k, c[k]);
  }
  SpMat B(m + 1, m + 1);
  B.setFromTriplets(tb.begin(), tb.end());
  B.makeCompressed();
  Eigen::SparseLU<SpMat> lu(B);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "bordered spectral-gap system is singular");
  }
  Vec x(m);
  for (int k = 0; k < m; ++k) x[k] = std::cos(0.01 * k) + (k % 7) * 0.01;
  x -= c * (c.dot(x) / c.dot(c));
  x.normalize();
  double lam = x.dot(A * x), prev = 0;
  for (int it = 0; it < 2000; ++it) {
    Vec r = Vec::Zero(m + 1);
    r.head(m) = x;
    Vec y = lu.solve(r).head(m);
    x = y.normalized();
    prev = lam;
    lam = x.dot(A * x);
    if (std::abs(lam - prev) < 1e-14 * std::max(1.0, std::abs(lam))) break;
  }
  return lam;
}

ProfileConstants profile_constants(const Profile& p) {
  return {p.sigma_plus, p.sigma_minus, p.c_star, spectral_gap(p)};
}

ProfileResiduals profile_residuals(const Profile& p) {
  ProfileResiduals r;
  const auto dw = second_derivative_o6(p.w, p.dt);
  const auto d0 = second_derivative_o6(p.psi0, p.dt);
  const auto d1 = second_derivative_o6(p.psi1, p.dt);
  for (int i = 3; i + 3 < p.n; ++i) {
    const double fp = p.fp(p.w[i]);
    r.w = std::max(r.w, std::abs(dw[i] + p.f(p.w[i])));
    r.psi0 = std::max(r.psi0, std::abs(d0[i] + fp * p.psi0[i] - p.t[i] * p.w1[i]));
    r.psi1 = std::max(r.psi1, std::abs(d1[i] + fp * p.psi1[i] - p.w2[i]));
  }
  return r;
}

double profile_integral(const Profile& p,
                        const std::function<double(double, const ProfileSample&)>& g) {
  // Composite Simpson on the fine grid.
  const double h = p.fine_w.h;
  const std::size_t N = p.fine_w.size();
  const std::size_t last = (N - 1) % 2 == 0 ? N - 1 : N - 2;
  double s = 0;
  for (std::size_t i = 0; i <= last; ++i) {
    const double t = p.fine_w.x0 + h * static_cast<double>(i);
    ProfileSample q{};
    q.w = p.fine_w.v[i];
    q.w1 = p.fine_w.d1[i];
    q.w2 = p.fine_w.d2[i];
    q.w3 = -p.fp(q.w) * q.w1;
    q.psi0 = p.fine_psi0.v[i];
    q.psi0_1 = p.fine_psi0.d1[i];
    q.psi0_2 = p.fine_psi0.d2[i];
    q.psi1 = 0.5 * t * q.w1;
    q.psi1_1 = 0.5 * (q.w1 + t * q.w2);
    q.psi1_2 = 0.5 * (2 * q.w2 + t * q.w3);
    const double wgt = (i == 0 || i == last) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    s += wgt * g(t, q);
  }
  return s * h / 3.0;
}

MomentIdentities moment_identities(const Profile& p) {
  MomentIdentities m{};
  m.psi0_lhs = profile_integral(p, [&](double, const ProfileSample& q) {
    return p.fpp(q.w) * q.w1 * q.w1 * q.psi0;
  });
  m.psi0_rhs = 0.5 * p.c_star;
  m.psi1_lhs = profile_integral(p, [&](double, const ProfileSample& q) {
    return p.fpp(q.w) * q.w1 * q.w1 * q.psi1;
  });
  m.psi1_rhs = profile_integral(p, [&](double, const ProfileSample& q) { return q.w3 * q.w1; });
  return m;
}

}  // namespace acs
