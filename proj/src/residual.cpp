#include "acs/residual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "acs/errors.hpp"
#include "acs/jacobi.hpp"
#include "acs/numerics.hpp"

namespace acs {

namespace {

ProfileFn profile_fn(const Profile& p, int which) {
  return [&p, which](double t, double& f, double& f1, double& f2) {
    const auto s = p.eval(t);
    if (which == 0) {
      f = s.w, f1 = s.w1, f2 = s.w2;
    } else if (which == 1) {
      f = s.psi0, f1 = s.psi0_1, f2 = s.psi0_2;
    } else {
      f = s.psi1, f1 = s.psi1_1, f2 = s.psi1_2;
    }
  };
}

void add_nonlinearity(const Profile& p, const GridField& u, GridField& S) {
  for (std::size_t i = 0; i < u.values.size(); ++i) S.values[i] += p.f(u.values[i]);
}

double overlap(double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); }

double resolved_limit(const Surface& S, double R_limit) { return R_limit > 0 ? R_limit : 0.5 * S.R_max; }

}  // namespace

GridField evaluate_S(const FermiChart& C, const Profile& p, const GridField& u, Exec exec) {
  if (u.nt < 5) throw Error(ErrorCode::StencilOutOfBounds, "tube grid too short for the t stencil", {{"nt", u.nt}});
  GridField S = apply_laplacian(C, u, exec);
  add_nonlinearity(p, u, S);
  return S;
}

GridField residual_u0(const Ansatz& A, Exec exec) {
  const FermiChart& C = *A.chart;
  GridField S = apply_separated(C, std::vector<double>(C.surface->num_nodes(), 1.0), profile_fn(*A.profile, 0), exec);
  add_nonlinearity(*A.profile, A.u0, S);
  return S;
}

GridField residual_u1(const Ansatz& A, Exec exec) {
  const FermiChart& C = *A.chart;
  const std::size_t N = C.surface->num_nodes();
  const double a2 = C.alpha * C.alpha;
  std::vector<double> k0(N), k1(N);
  for (std::size_t k = 0; k < N; ++k) {
    k0[k] = a2 * A.A2[k];
    k1[k] = -a2 * A.grad_h0_sq[k];
  }
  GridField S = apply_separated(C, std::vector<double>(N, 1.0), profile_fn(*A.profile, 0), exec);
  const GridField P0 = apply_separated(C, k0, profile_fn(*A.profile, 1), exec);
  const GridField P1 = apply_separated(C, k1, profile_fn(*A.profile, 2), exec);
  for (std::size_t i = 0; i < S.values.size(); ++i) S.values[i] += P0.values[i] + P1.values[i];
  add_nonlinearity(*A.profile, A.u1, S);
  return S;
}

double evaluate_S_cartesian(const std::function<double(const Vec3&)>& u, const Profile& p, const Vec3& x,
                            double step) {
  try {
    const double u0 = u(x);
    double lap = 0;
    for (int d = 0; d < 3; ++d) {
      Vec3 e = Vec3::Zero();
      e[d] = step;
      lap += (-u(x + 2 * e) + 16 * u(x + e) - 30 * u0 + 16 * u(x - e) - u(x - 2 * e)) / (12 * step * step);
    }
    return lap + p.f(u0);
  } catch (const Error& e) {
    throw Error(ErrorCode::StencilOutOfBounds, std::string("Cartesian stencil leaves the evaluator's domain: ") + e.what(),
                {{"x", {x[0], x[1], x[2]}}, {"step", step}});
  }
}

std::vector<double> t_projection(const GridField& g, const std::vector<double>& q, double decay) {
  const FermiChart& C = *g.chart;
  std::vector<double> out(g.nodes, 0.0);
  const int n = g.nt;
  for (std::size_t k = 0; k < g.nodes; ++k) {
    double s = 0;
    for (int j = 0; j < n; ++j) {
      const double v = g.at(k, j) * q[j];
      s += (j == 0 || j == n - 1) ? 0.5 * v : v;
    }
    s *= C.dt;
    if (decay > 0) s += (g.at(k, 0) * q[0] + g.at(k, n - 1) * q[n - 1]) / decay;
    out[k] = s;
  }
  return out;
}

namespace {

double w1_tail_rate(const Profile& p) { return 2 * std::min(p.sigma_plus, p.sigma_minus); }

std::vector<double> w1_column(const FermiChart& C, const Profile& p) {
  std::vector<double> q(C.nt);
  for (int j = 0; j < C.nt; ++j) q[j] = p.eval(C.t(j)).w1;
  return q;
}

}  // namespace

double w1_norm_squared(const FermiChart& C, const Profile& p) {
  const auto q = w1_column(C, p);
  GridField one(&C, 1, C.nt);
  for (int j = 0; j < C.nt; ++j) one.at(0, j) = q[j];
  return t_projection(one, q, w1_tail_rate(p))[0];
}

std::vector<double> project_pi(const GridField& S, const Profile& p) {
  return t_projection(S, w1_column(*S.chart, p), w1_tail_rate(p));
}

std::vector<double> project_c(const GridField& g, const Profile& p) {
  auto c = project_pi(g, p);
  const double I = w1_norm_squared(*g.chart, p);
  for (double& x : c) x = -x / I;
  return c;
}

nlohmann::json WeightedNormSpec::to_json() const {
  static const char* names[] = {"tube", "tube_sup", "surface", "star"};
  return {{"p", p},           {"mu", mu},           {"sigma", sigma}, {"flavor", names[static_cast<int>(flavor)]},
          {"R_limit", R_limit}, {"focal_limit", focal_limit}};
}

double weighted_norm(const GridField& f, const WeightedNormSpec& spec) {
  const FermiChart& C = *f.chart;
  const Surface& S = *C.surface;
  const bool sup = spec.flavor == NormFlavor::TubeSup;
  if (spec.flavor != NormFlavor::Tube && !sup) {
    throw Error(ErrorCode::InvalidSpec, "weighted_norm expects a tube flavor");
  }
  if (!sup && !(spec.p >= 1)) throw Error(ErrorCode::InvalidSpec, "p must be at least 1", {{"p", spec.p}});
  const double Rl = resolved_limit(S, spec.R_limit);
  const double al = C.alpha;
  const int nt = f.nt;

  // t-reduction: integral (or max) over |t' - t| <= 1 per node and row.
  std::vector<std::pair<int, double>> kern;
  const int m = static_cast<int>(std::ceil(1.0 / C.dt)) + 1;
  for (int o = -m; o <= m; ++o) {
    const double w = overlap(o * C.dt - C.dt / 2, o * C.dt + C.dt / 2, -1.0, 1.0);
    if (w > 0) kern.emplace_back(o, w);
  }
  auto inside = [&](std::size_t k, int j) {
    return spec.focal_limit <= 0 || al * std::abs(C.t(j) + C.h[k]) * C.kappa[k] <= spec.focal_limit;
  };
  std::vector<double> T(f.values.size(), 0.0);
  for (std::size_t k = 0; k < f.nodes; ++k) {
    for (int j = 0; j < nt; ++j) {
      double acc = 0;
      for (const auto& [o, w] : kern) {
        const int jj = j + o;
        if (jj < 0 || jj >= nt || !inside(k, jj)) continue;
        const double a = std::abs(f.at(k, jj));
        if (sup) {
          acc = std::max(acc, a);
        } else {
          const double edge = (jj == 0 || jj == nt - 1) ? 0.5 : 1.0;
          acc += std::pow(a, spec.p) * std::min(w, edge * C.dt);
        }
      }
      T[k * nt + j] = acc;
    }
  }

  double result = 0;
  for (std::size_t c = 0; c < S.mesh.size(); ++c) {
    const ChartMesh& M = S.mesh[c];
    // Arclength positions along u (x-units) for each v column.
    std::vector<double> su(static_cast<std::size_t>(M.nu) * M.nv), pos(su.size());
    for (int i = 0; i < M.nu; ++i)
      for (int j = 0; j < M.nv; ++j) {
        const auto& G = S.node[S.index(static_cast<int>(c), i, j)];
        su[static_cast<std::size_t>(i) * M.nv + j] = std::sqrt(G.g(0, 0)) * M.du / al;
      }
    for (int j = 0; j < M.nv; ++j) {
      pos[j] = 0;
      for (int i = 1; i < M.nu; ++i) {
        const std::size_t a = static_cast<std::size_t>(i - 1) * M.nv + j, b = static_cast<std::size_t>(i) * M.nv + j;
        pos[b] = pos[a] + 0.5 * (su[a] + su[b]);
      }
    }
    for (int i = 0; i < M.nu; ++i) {
      for (int j = 0; j < M.nv; ++j) {
        const std::size_t k = S.index(static_cast<int>(c), i, j);
        if (S.boundary[k] || S.node[k].radius > Rl) continue;
        const auto& G = S.node[k];
        const double p0 = pos[static_cast<std::size_t>(i) * M.nv + j];
        // Box members (node, volume weight in the surface directions).
        std::vector<std::pair<std::size_t, double>> box;
        const double sv = std::sqrt(G.g(1, 1)) * (M.nv > 1 ? M.dv : 2 * std::numbers::pi) / al;
        std::vector<std::pair<int, double>> vs;
        if (M.nv == 1) {
          vs.emplace_back(0, std::min(2.0, sv));
        } else {
          const int mv = std::min(M.nv / 2, static_cast<int>(std::ceil(1.0 / sv)) + 1);
          for (int o = -mv; o <= mv; ++o) {
            const double w = overlap(o * sv - sv / 2, o * sv + sv / 2, -1.0, 1.0);
            if (w > 0) vs.emplace_back(o, w);
          }
        }
        for (int ii = i; ii >= 0; --ii) {
          const std::size_t a = static_cast<std::size_t>(ii) * M.nv + j;
          const double wu = overlap(pos[a] - su[a] / 2, pos[a] + su[a] / 2, p0 - 1, p0 + 1);
          if (wu <= 0) break;
          for (const auto& [o, wv] : vs) box.emplace_back(S.index(static_cast<int>(c), ii, ((j + o) % M.nv + M.nv) % M.nv), wu * wv);
        }
        for (int ii = i + 1; ii < M.nu; ++ii) {
          const std::size_t a = static_cast<std::size_t>(ii) * M.nv + j;
          const double wu = overlap(pos[a] - su[a] / 2, pos[a] + su[a] / 2, p0 - 1, p0 + 1);
          if (wu <= 0) break;
          for (const auto& [o, wv] : vs) box.emplace_back(S.index(static_cast<int>(c), ii, ((j + o) % M.nv + M.nv) % M.nv), wu * wv);
        }
        const double rw = std::pow(1 + G.radius, spec.mu);
        for (int jt = 0; jt < nt; ++jt) {
          if (!inside(k, jt)) continue;
          double acc = 0;
          for (const auto& [kk, w] : box) {
            const double v = T[kk * nt + jt];
            acc = sup ? std::max(acc, v) : acc + v * w;
          }
          const double local = sup ? acc : std::pow(acc, 1.0 / spec.p);
          result = std::max(result, rw * std::exp(spec.sigma * std::abs(C.t(jt))) * local);
        }
      }
    }
  }
  return result;
}

double surface_norm(const Surface& S, const std::vector<double>& f, double p, double beta, double R_limit) {
  const double Rl = resolved_limit(S, R_limit);
  double acc = 0;
  for (std::size_t k = 0; k < S.num_nodes(); ++k) {
    if (S.boundary[k] || S.node[k].radius > Rl) continue;
    acc += std::pow((1 + std::pow(S.node[k].radius, beta)) * std::abs(f[k]), p) * S.mass[k];
  }
  return std::pow(acc, 1.0 / p);
}

double surface_sup(const Surface& S, const std::vector<double>& f, double mu, double R_limit) {
  const double Rl = resolved_limit(S, R_limit);
  double m = 0;
  for (std::size_t k = 0; k < S.num_nodes(); ++k) {
    if (S.boundary[k] || S.node[k].radius > Rl) continue;
    m = std::max(m, std::pow(1 + S.node[k].radius, mu) * std::abs(f[k]));
  }
  return m;
}

double star_norm(const Surface& S, const std::vector<double>& h, double p, double R_limit) {
  const double Rl = resolved_limit(S, R_limit);
  const auto d = surface_derivatives(S, h);
  double sup = 0, grad = 0;
  std::vector<double> hess(S.num_nodes(), 0.0);
  for (std::size_t k = 0; k < S.num_nodes(); ++k) {
    if (S.boundary[k] || S.node[k].radius > Rl) continue;
    const auto& G = S.node[k];
    sup = std::max(sup, std::abs(h[k]));
    const Eigen::Vector2d Dh(d.fu[k], d.fv[k]);
    grad = std::max(grad, (1 + G.radius * G.radius) * std::sqrt(std::max(0.0, Dh.dot(G.ginv * Dh))));
    Mat2 Hh;
    Hh << d.fuu[k], d.fuv[k], d.fuv[k], d.fvv[k];
    const Mat2 m = G.ginv * Hh;
    hess[k] = std::sqrt(std::max(0.0, (m * m.transpose()).trace()));
  }
  return sup + grad + surface_norm(S, hess, p, 4 - 4 / p, Rl);
}

nlohmann::json ScalingReport::to_json() const {
  nlohmann::json j = {{"spec", spec.to_json()},
                      {"slope_S1", slope_S1},
                      {"slope_Pi0", slope_Pi0},
                      {"slope_S0", slope_S0},
                      {"rows", nlohmann::json::array()}};
  for (const auto& r : rows) {
    j["rows"].push_back({{"alpha", r.alpha},
                         {"tube_half_width", r.L},
                         {"norm_S1", r.norm_S1},
                         {"norm_Pi0", r.norm_Pi0},
                         {"norm_S0", r.norm_S0},
                         {"phi1_max", r.phi1_max}});
  }
  return j;
}

ScalingReport residual_scaling(const Surface& S, const Profile& p, const std::vector<double>& alphas,
                               const std::vector<double>& beta, const WeightedNormSpec& spec,
                               const std::vector<double>& h1_in, Exec exec) {
  if (alphas.size() < 2) throw Error(ErrorCode::InvalidSpec, "scaling fit needs at least two alpha values");
  const double smax = std::min(p.sigma_plus, p.sigma_minus);
  if (!(spec.sigma > 0 && spec.sigma < smax)) {
    throw Error(ErrorCode::InvalidSpec, "sigma must lie in (0, min sigma)", {{"sigma", spec.sigma}, {"limit", smax}});
  }
  const std::size_t N = S.num_nodes();
  const std::vector<double> h0 = log_jacobi_field(S, beta).h0;
  const std::vector<double> h1 = h1_in.empty() ? std::vector<double>(N, 0.0) : h1_in;
  const auto lap_h1 = laplace_beltrami_apply(S, h1, exec);
  ScalingReport rep;
  rep.spec = spec;
  std::vector<double> xs, s1, pi0, s0;
  for (double al : alphas) {
    const FermiChart C = build_chart(S, p, al, h0, h1, {}, exec);
    const Ansatz A = build_ansatz(C, p, beta);
    GridField S1 = residual_u1(A, exec);
    for (std::size_t k = 0; k < N; ++k)
      for (int j = 0; j < C.nt; ++j) S1.at(k, j) += al * al * lap_h1[k] * p.eval(C.t(j)).w1;
    const GridField S0 = residual_u0(A, exec);
    const auto Pi = project_pi(S0, p);
    ScalingRow row;
    row.alpha = al;
    row.L = C.L;
    row.norm_S1 = weighted_norm(S1, spec);
    row.norm_S0 = weighted_norm(S0, spec);
    row.norm_Pi0 = surface_sup(S, Pi, spec.mu, spec.R_limit);
    row.phi1_max = A.phi1_max;
    rep.rows.push_back(row);
    xs.push_back(al);
    s1.push_back(row.norm_S1);
    pi0.push_back(row.norm_Pi0);
    s0.push_back(row.norm_S0);
  }
  rep.slope_S1 = fit_loglog(xs, s1).slope;
  rep.slope_Pi0 = fit_loglog(xs, pi0).slope;
  rep.slope_S0 = fit_loglog(xs, s0).slope;
  return rep;
}

}  // namespace acs
