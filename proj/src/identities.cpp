#include "acs/identities.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "acs/errors.hpp"
#include "acs/jacobi.hpp"

namespace acs {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

// End index of a node: catenoid halves by the sign of s, graph ends by chart.
std::size_t end_of(const Surface& S, std::size_t k) {
  int c, i, j;
  S.locate(k, c, i, j);
  if (S.charts[c]->kind() == "catenoid") return S.mesh[c].u(i) < 0 ? 0 : 1;
  return static_cast<std::size_t>(c);
}

// Zero of z -> u(R, theta, z) nearest to z_est within the margin.
double find_interface(const std::function<double(double)>& line, double z_est, double margin) {
  const double step = 0.25;
  for (double d = 0; d <= margin; d += step) {
    for (double sgn : {1.0, -1.0}) {
      const double a = z_est + sgn * d, b = a + sgn * step;
      double fa = line(a), fb = line(b);
      if (fa == 0) return a;
      if ((fa < 0) == (fb < 0)) continue;
      double lo = std::min(a, b), hi = std::max(a, b);
      double flo = lo == a ? fa : fb;
      for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
        const double m = 0.5 * (lo + hi), fm = line(m);
        if ((fm < 0) == (flo < 0)) {
          lo = m;
          flo = fm;
        } else {
          hi = m;
        }
      }
      return 0.5 * (lo + hi);
    }
  }
  throw Error(ErrorCode::NoConvergence, "no interface crossing on the probe line",
              {{"z_estimate", z_est}, {"margin", margin}});
}

}  // namespace

CylinderProbe make_probe(const Surface& S, const Profile& p, double alpha, double R, int n_theta) {
  if (!(alpha > 0) || R < 2 / alpha) {
    throw Error(ErrorCode::ProbeTooSmall, "probe radius must be at least 2/alpha", {{"R", R}, {"alpha", alpha}});
  }
  if (S.ends.empty()) throw Error(ErrorCode::InvalidSpec, "surface has no ends");
  CylinderProbe P;
  P.R = R;
  const double sigma = std::min(p.sigma_plus, p.sigma_minus);
  P.rho = 2 * std::log(R) / sigma;
  P.margin = 3 * P.rho;
  P.n_theta = std::max(1, n_theta);
  P.tail_rate = 2 * sigma;
  for (const auto& e : S.ends) P.heights.push_back((e.a * std::log(alpha * R) + e.b) / alpha);
  return P;
}

PohozaevResult pohozaev(const ScalarField3& u, const Profile& p, int direction, const CylinderProbe& probe) {
  if (direction < 1 || direction > 4) throw Error(ErrorCode::InvalidSpec, "direction must be 1..4");
  if (!(probe.R > 0) || probe.heights.empty()) throw Error(ErrorCode::InvalidSpec, "probe is not set up");
  PohozaevResult out;
  out.direction = direction;
  out.R = probe.R;
  const std::size_t m = probe.heights.size();
  out.per_end.assign(m, 0.0);
  const double R = probe.R, hs = probe.fd_step;
  const double wtheta = kTwoPi * R / probe.n_theta;

  for (int it = 0; it < probe.n_theta; ++it) {
    const double th = kTwoPi * it / probe.n_theta;
    const double c = std::cos(th), s = std::sin(th);
    const Vec3 rhat(c, s, 0);
    auto at = [&](double z) { return Vec3(R * c, R * s, z); };
    auto integrand = [&](double z) {
      const Vec3 x = at(z);
      Vec3 g;
      for (int d = 0; d < 3; ++d) {
        Vec3 e = Vec3::Zero();
        e[d] = hs;
        g[d] = (u(x + e) - u(x - e)) / (2 * hs);
      }
      const double ur = g.dot(rhat);
      switch (direction) {
        case 3: return ur * g[2];
        case 4: return ur * (-x[1] * g[0] + x[0] * g[1]);
        default: {
          const double F = -p.spec.W(u(x)) - 0.5 * g.squaredNorm();
          return ur * g[direction - 1] + F * (direction == 1 ? c : s);
        }
      }
    };
    std::function<double(double)> line = [&](double z) { return u(at(z)); };

    std::vector<double> z0(m);
    for (std::size_t k = 0; k < m; ++k) z0[k] = find_interface(line, probe.heights[k], probe.margin);
    if (it == 0) out.centers = z0;

    std::vector<std::size_t> order(m);
    for (std::size_t k = 0; k < m; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z0[a] < z0[b]; });
    for (std::size_t q = 0; q < m; ++q) {
      const std::size_t k = order[q];
      double lo = z0[k] - probe.rho, hi = z0[k] + probe.rho;
      bool tail_lo = true, tail_hi = true;
      // Neighbouring windows meet halfway; only outer edges get a tail.
      if (q > 0 && z0[order[q - 1]] + probe.rho > lo) {
        lo = 0.5 * (z0[order[q - 1]] + z0[k]);
        tail_lo = false;
      }
      if (q + 1 < m && z0[order[q + 1]] - probe.rho < hi) {
        hi = 0.5 * (z0[order[q + 1]] + z0[k]);
        tail_hi = false;
      }
      int n = static_cast<int>(std::ceil((hi - lo) / probe.dz));
      n += n % 2;
      const double h = (hi - lo) / n;
      double sum = 0, g_lo = 0, g_hi = 0;
      for (int i = 0; i <= n; ++i) {
        const double g = integrand(lo + h * i);
        sum += g * (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2));
        if (i == 0) g_lo = g;
        if (i == n) g_hi = g;
      }
      double val = sum * h / 3;
      double tails = 0;
      if (tail_lo) tails += g_lo / probe.tail_rate;
      if (tail_hi) tails += g_hi / probe.tail_rate;
      out.per_end[k] += wtheta * (val + tails);
      out.tails += wtheta * tails;
    }
  }
  for (double v : out.per_end) out.flux += v;
  return out;
}

nlohmann::json FluxSweep::to_json() const {
  return {{"R", R}, {"values", values}, {"limit", limit}, {"slope", slope}, {"decay", decay}};
}

FluxSweep make_sweep(const std::vector<double>& R, const std::vector<double>& values,
                     const std::function<double(double)>& shape) {
  if (R.size() != values.size() || R.size() < 2) throw Error(ErrorCode::InvalidSpec, "sweep needs >= 2 radii");
  FluxSweep F;
  F.R = R;
  F.values = values;
  std::vector<double> absv(R.size());
  for (std::size_t i = 0; i < R.size(); ++i) absv[i] = std::max(std::abs(values[i]), 1e-300);
  std::vector<std::size_t> idx(R.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return R[a] > R[b]; });
  const double x0 = shape(R[idx[0]]), x1 = shape(R[idx[1]]);
  F.slope = (values[idx[0]] - values[idx[1]]) / (x0 - x1);
  F.limit = values[idx[0]] - F.slope * x0;
  F.decay = -fit_loglog(R, absv).slope;
  return F;
}

FluxSweep pohozaev_sweep(const ScalarField3& u, const Profile& p, const Surface& S, double alpha, int direction,
                         const std::vector<double>& R_list, int n_theta) {
  std::vector<double> v;
  for (double R : R_list) v.push_back(pohozaev(u, p, direction, make_probe(S, p, alpha, R, n_theta)).flux);
  return make_sweep(R_list, v);
}

FluxSweep end_flux_jacobi(const Surface& S, const std::vector<double>& beta, const std::vector<double>& R_list,
                          int which) {
  if (which < 1 || which > 4) throw Error(ErrorCode::InvalidSpec, "normal field index must be 1..4");
  for (double R : R_list) {
    if (!(R > 0) || R > S.R_max) {
      throw Error(ErrorCode::InvalidSpec, "flux radius outside the meshed surface", {{"R", R}, {"R_max", S.R_max}});
    }
  }
  const auto p = log_growth_field(S, beta);
  const auto Jp = jacobi_apply(S, p);
  const auto nf = normal_and_fields(S);
  const std::vector<double>* z[4] = {&nf.z1, &nf.z2, &nf.z3, &nf.z4};
  // A meridian mesh stores one node per ring: the theta integral is in the
  // mass, and z1, z2 integrate to zero over a full turn.
  std::vector<double> v;
  for (double R : R_list) {
    const bool zero_mean = S.axisymmetric && S.mesh[0].nv == 1 && which <= 2;
    v.push_back(zero_mean ? 0.0 : surface_integral(S, Jp, *z[which - 1], R));
  }
  return make_sweep(R_list, v, [](double R) { return std::log(R) / (R * R); });
}

nlohmann::json BalancingReport::to_json() const {
  return {{"sum_a", sum_a}, {"sum_beta", sum_beta}, {"r_check", r_check}, {"normal_defect", normal_defect},
          {"r_used", r_used}};
}

BalancingReport balancing(const Surface& S, const std::vector<double>& beta, double r_check) {
  BalancingReport B;
  B.r_check = r_check;
  for (const auto& e : S.ends) B.sum_a += e.a;
  for (double b : beta) B.sum_beta += b;
  const std::size_t m = S.ends.size();
  std::vector<std::size_t> best(m, S.num_nodes());
  for (std::size_t k = 0; k < S.num_nodes(); ++k) {
    const std::size_t e = end_of(S, k);
    if (e >= m) continue;
    if (best[e] == S.num_nodes() ||
        std::abs(S.node[k].radius - r_check) < std::abs(S.node[best[e]].radius - r_check)) {
      best[e] = k;
    }
  }
  for (std::size_t e = 0; e < m; ++e) {
    if (best[e] == S.num_nodes()) {
      B.normal_defect.push_back(std::nan(""));
      B.r_used.push_back(0);
      continue;
    }
    const auto& G = S.node[best[e]];
    const double r = G.radius;
    const Vec3 rhat = Vec3(G.Y[0], G.Y[1], 0) / r;
    const Vec3 approx = S.ends[e].sign * (Vec3::UnitZ() - S.ends[e].a * rhat / r);
    B.normal_defect.push_back((G.nu - approx).norm());
    B.r_used.push_back(r);
  }
  return B;
}

}  // namespace acs
