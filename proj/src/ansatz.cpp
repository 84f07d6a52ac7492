#include "acs/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "acs/errors.hpp"
#include "acs/numerics.hpp"

namespace acs {

nlohmann::json BetaReport::to_json() const {
  nlohmann::json j = {{"ok", ok}, {"required_gap", required_gap}, {"checks", nlohmann::json::array()}};
  for (const auto& c : checks) {
    j["checks"].push_back(
        {{"constraint", c.constraint}, {"ok", c.ok}, {"value", c.value}, {"required", c.required}, {"margin", c.margin}});
  }
  return j;
}

BetaReport validate_beta(const std::vector<EndData>& ends, const std::vector<double>& beta, const Profile& p,
                         double sum_tol) {
  BetaReport r;
  r.required_gap = gamma_log(p);
  if (beta.size() != ends.size()) {
    r.ok = false;
    r.checks.push_back({"count", false, static_cast<double>(beta.size()), static_cast<double>(ends.size()),
                        -std::abs(static_cast<double>(beta.size()) - static_cast<double>(ends.size()))});
    return r;
  }
  double sum = 0;
  for (double b : beta) sum += b;
  BetaCheck bal{"sum_beta_zero", std::abs(sum) <= sum_tol, sum, 0.0, -std::abs(sum)};
  r.checks.push_back(bal);
  for (std::size_t k = 0; k + 1 < ends.size(); ++k) {
    if (ends[k].a != ends[k + 1].a) continue;
    const double gap = beta[k + 1] - beta[k];
    r.checks.push_back({"gap_" + std::to_string(k) + "_" + std::to_string(k + 1), gap > r.required_gap, gap,
                        r.required_gap, gap - r.required_gap});
  }
  for (const auto& c : r.checks) r.ok = r.ok && c.ok;
  return r;
}

GridField build_u0(const FermiChart& C, const Profile& p) {
  GridField u(&C, C.surface->num_nodes(), C.nt);
  std::vector<double> w(C.nt);
  for (int j = 0; j < C.nt; ++j) w[j] = p.w_at(C.t(j));
  for (std::size_t k = 0; k < u.nodes; ++k)
    for (int j = 0; j < C.nt; ++j) u.at(k, j) = w[j];
  return u;
}

std::vector<double> gradient_squared(const Surface& S, const std::vector<double>& f) {
  const auto d = surface_derivatives(S, f);
  std::vector<double> out(S.num_nodes());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Mat2& gi = S.node[k].ginv;
    out[k] = gi(0, 0) * d.fu[k] * d.fu[k] + 2 * gi(0, 1) * d.fu[k] * d.fv[k] + gi(1, 1) * d.fv[k] * d.fv[k];
  }
  return out;
}

namespace {

void fill_u1(const FermiChart& C, const Profile& p, const std::vector<double>& A2, const std::vector<double>& g2,
             GridField& u) {
  const double a2 = C.alpha * C.alpha;
  std::vector<ProfileSample> ps(C.nt);
  for (int j = 0; j < C.nt; ++j) ps[j] = p.eval(C.t(j));
  for (std::size_t k = 0; k < u.nodes; ++k) {
    for (int j = 0; j < C.nt; ++j) {
      u.at(k, j) = ps[j].w + a2 * (A2[k] * ps[j].psi0 - g2[k] * ps[j].psi1);
    }
  }
}

std::vector<double> nodal_A2(const Surface& S) {
  std::vector<double> a(S.num_nodes());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = S.node[k].A2;
  return a;
}

}  // namespace

GridField build_u1(const FermiChart& C, const Profile& p) {
  GridField u(&C, C.surface->num_nodes(), C.nt);
  fill_u1(C, p, nodal_A2(*C.surface), gradient_squared(*C.surface, C.h0), u);
  return u;
}

Ansatz build_ansatz(const FermiChart& C, const Profile& p, const std::vector<double>& beta) {
  Ansatz A;
  A.chart = &C;
  A.profile = &p;
  A.beta = beta;
  A.A2 = nodal_A2(*C.surface);
  A.grad_h0_sq = gradient_squared(*C.surface, C.h0);
  A.u0 = build_u0(C, p);
  A.u1 = GridField(&C, C.surface->num_nodes(), C.nt);
  fill_u1(C, p, A.A2, A.grad_h0_sq, A.u1);
  for (std::size_t i = 0; i < A.u1.values.size(); ++i) {
    A.phi1_max = std::max(A.phi1_max, std::abs(A.u1.values[i] - A.u0.values[i]));
  }
  A.phi1_constant = A.phi1_max / (C.alpha * C.alpha);
  A.u1.validate("u1");
  return A;
}

GlobalField build_global(const Ansatz& A, const GridField* phi) {
  if (phi && (phi->nodes != A.u1.nodes || phi->nt != A.u1.nt)) {
    throw Error(ErrorCode::InvalidSpec, "correction field does not match the tube grid");
  }
  GlobalField W;
  W.ansatz = &A;
  W.phi = phi;
  return W;
}

double GlobalField::side(const Vec3& x) const {
  const FermiChart& C = *ansatz->chart;
  const Surface& S = *C.surface;
  const double al = C.alpha;
  if (S.charts.size() == 1 && S.charts[0]->kind() == "catenoid") {
    // Inside the catenoid is the side the neck normal points to.
    const double inside = S.charts[0]->geometry(0.0, 0.0).nu[0] < 0 ? 1.0 : -1.0;
    const double rho = std::hypot(x[0], x[1]) * al;
    const double arg = std::min(al * std::abs(x[2]), 700.0);
    return rho < std::cosh(arg) ? inside : -inside;
  }
  // Stacked graph ends: the side is read off the nearest end below.
  const double r = std::hypot(x[0], x[1]) * al, th = std::atan2(x[1], x[0]);
  if (r > S.R_max) {
    throw Error(ErrorCode::PointOutsideCharts, "side of the surface undecidable outside the meshed radius",
                {{"r", r}, {"R_max", S.R_max}});
  }
  double best = -std::numeric_limits<double>::infinity();
  double lowest = std::numeric_limits<double>::infinity();
  int kb = -1, kl = -1;
  for (std::size_t k = 0; k < S.charts.size(); ++k) {
    const auto* g = dynamic_cast<const GraphChart*>(S.charts[k].get());
    if (!g) throw Error(ErrorCode::PointOutsideCharts, "no side rule for this chart type");
    const double hk = g->height(r, th) / al;
    if (hk <= x[2] && hk > best) {
      best = hk;
      kb = static_cast<int>(k);
    }
    if (hk < lowest) {
      lowest = hk;
      kl = static_cast<int>(k);
    }
  }
  if (kb >= 0) return S.charts[kb]->orientation > 0 ? 1.0 : -1.0;
  return S.charts[kl]->orientation > 0 ? -1.0 : 1.0;
}

double GlobalField::tube_value(const SurfacePoint& P, double t) const {
  const FermiChart& C = *ansatz->chart;
  const Profile& p = *ansatz->profile;
  const auto s = p.eval(t);
  const double g2 = C.interpolate(ansatz->grad_h0_sq, P.chart, P.u, P.v);
  double u = s.w + C.alpha * C.alpha * (P.geom.A2 * s.psi0 - g2 * s.psi1);
  if (phi && std::abs(t) < C.L) {
    const double zeta = cutoff_eta(std::abs(t + P.h1) - C.delta / C.alpha - 2);
    if (zeta > 0) {
      const double pj = (t + C.L) / C.dt;
      const int j0 = std::clamp(static_cast<int>(std::floor(pj)), 1, C.nt - 3);
      const double x = pj - j0;
      const double wt[4] = {-x * (x - 1) * (x - 2) / 6, (x + 1) * (x - 1) * (x - 2) / 2,
                            -(x + 1) * x * (x - 2) / 2, (x + 1) * x * (x - 1) / 6};
      double v = 0;
      for (int a = 0; a < 4; ++a) {
        const int j = j0 - 1 + a;
        v += wt[a] * C.interpolate([&](std::size_t k) { return phi->at(k, j); }, P.chart, P.u, P.v);
      }
      u += zeta * v;
    }
  }
  return u;
}

GlobalField::Sample GlobalField::sample(const Vec3& x) const {
  const FermiChart& C = *ansatz->chart;
  Sample out;
  SurfacePoint P;
  try {
    P = C.project(x);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::PointOutsideCharts) throw;
    out.side = side(x);
    out.value = out.side;
    return out;
  }
  out.in_chart = true;
  out.t = P.z - P.h;
  out.side = P.z >= 0 ? 1.0 : -1.0;
  const double rho_eff = C.interpolate(C.rho_eff, P.chart, P.u, P.v);
  out.eta_delta = cutoff_eta(std::abs(out.t + P.h1) - rho_eff - 3);
  out.value = out.side;
  if (out.eta_delta > 0) out.value = out.eta_delta * tube_value(P, out.t) + (1 - out.eta_delta) * out.side;
  return out;
}

nlohmann::json TransitionReport::to_json() const {
  return {{"samples", samples}, {"max_E", max_E}, {"constant", constant}};
}

TransitionReport transition_error(const GlobalField& W, int node_stride) {
  const FermiChart& C = *W.ansatz->chart;
  const Profile& p = *W.ansatz->profile;
  const Surface& S = *C.surface;
  const double sigma = std::min(p.sigma_plus, p.sigma_minus);
  const double hs = 0.05;
  TransitionReport rep;
  for (std::size_t k = 0; k < S.num_nodes(); k += static_cast<std::size_t>(std::max(1, node_stride))) {
    if (S.boundary[k]) continue;
    for (double sgn : {-1.0, 1.0}) {
      for (double off : {3.25, 3.5, 3.75}) {
        const double t = sgn * (C.rho_eff[k] + off) - C.h1[k];
        const Vec3 x = C.point(k, t);
        double lap = 0;
        try {
          const double u0 = W(x);
          for (int d = 0; d < 3; ++d) {
            Vec3 e = Vec3::Zero();
            e[d] = hs;
            lap += (-W(x + 2 * e) + 16 * W(x + e) - 30 * u0 + 16 * W(x - e) - W(x - 2 * e)) / (12 * hs * hs);
          }
          const double E = std::abs(lap + p.f(u0));
          const double r = S.node[k].radius;
          rep.max_E = std::max(rep.max_E, E);
          rep.constant = std::max(rep.constant, E * std::pow(1 + r, 4) * std::exp(sigma * C.delta / C.alpha));
          ++rep.samples;
        } catch (const Error&) {
          continue;
        }
      }
    }
  }
  return rep;
}

std::vector<double> zero_level_offset(const Ansatz& A) {
  const FermiChart& C = *A.chart;
  std::vector<double> out(A.u1.nodes, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < A.u1.nodes; ++k) {
    for (int j = 0; j + 1 < C.nt; ++j) {
      const double a = A.u1.at(k, j), b = A.u1.at(k, j + 1);
      if (a <= 0 && b > 0) {
        const double t = C.t(j) + C.dt * a / (a - b);
        out[k] = t + C.h[k];
        break;
      }
    }
  }
  return out;
}

}  // namespace acs
