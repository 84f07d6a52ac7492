#include "acs/reduction.hpp"

#include <algorithm>
#include <cmath>

#include "acs/errors.hpp"
#include "acs/residual.hpp"

namespace acs {

namespace {

double sup_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Fourth-order second difference on rows 1..n with phi = 0 on rows 0 and
// n + 1 and the odd reflection phi_{-1} = -phi_1 beyond them; the reflection
// keeps the matrix symmetric.
Eigen::MatrixXd second_difference(int n, double dt) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  const double s = 1.0 / (12 * dt * dt);
  for (int i = 0; i < n; ++i) {
    D(i, i) = -30 * s;
    if (i + 1 < n) D(i, i + 1) = D(i + 1, i) = 16 * s;
    if (i + 2 < n) D(i, i + 2) = D(i + 2, i) = -s;
  }
  D(0, 0) += s;
  D(n - 1, n - 1) += s;
  return D;
}

}  // namespace

ProjectedLinearSolver::ProjectedLinearSolver(const FermiChart& C, const Profile& p) : C_(&C), p_(&p) {
  const Surface& S = *C.surface;
  n_ = C.nt - 2;
  if (n_ < 4) throw Error(ErrorCode::StencilOutOfBounds, "tube grid too short for the projected solve", {{"nt", C.nt}});
  w1_.resize(C.nt);
  fpw_.resize(C.nt);
  for (int j = 0; j < C.nt; ++j) {
    const auto s = p.eval(C.t(j));
    w1_[j] = s.w1;
    fpw_[j] = p.fp(s.w);
  }

  Eigen::MatrixXd T = second_difference(n_, C.dt);
  for (int i = 0; i < n_; ++i) T(i, i) += fpw_[i + 1];

  // Householder reflector mapping e_1 to w'/|w'|; its other columns span the
  // constraint space.
  Eigen::VectorXd v(n_);
  for (int i = 0; i < n_; ++i) v[i] = w1_[i + 1];
  v.normalize();
  Eigen::VectorXd u = v;
  u[0] -= 1;
  Eigen::MatrixXd Hh = Eigen::MatrixXd::Identity(n_, n_);
  if (u.norm() > 1e-14) {
    u.normalize();
    Hh -= 2 * u * u.transpose();
  }
  const Eigen::MatrixXd Q = Hh.rightCols(n_ - 1);
  const Eigen::MatrixXd B = Q.transpose() * T * Q;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (B + B.transpose()));
  if (es.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "constrained t-operator eigensolve failed");
  E_ = Q * es.eigenvectors();
  lambda_.assign(es.eigenvalues().data(), es.eigenvalues().data() + n_ - 1);
  if (!(lambda_.back() < 0)) {
    throw Error(ErrorCode::SingularSystem, "constrained t-operator is not negative definite",
                {{"largest_eigenvalue", lambda_.back()}});
  }

  const std::size_t N = S.num_nodes();
  dof_.assign(N, -1);
  for (std::size_t k = 0; k < N; ++k) {
    if (S.boundary[k]) continue;
    dof_[k] = static_cast<long>(nodes_.size());
    nodes_.push_back(k);
  }
  const auto m = static_cast<Eigen::Index>(nodes_.size());
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index c = 0; c < S.stiffness.outerSize(); ++c) {
    for (SpMat::InnerIterator it(S.stiffness, c); it; ++it) {
      const long a = dof_[static_cast<std::size_t>(it.row())], b = dof_[static_cast<std::size_t>(it.col())];
      if (a >= 0 && b >= 0) trip.emplace_back(a, b, it.value());
    }
  }
  K_.resize(m, m);
  K_.setFromTriplets(trip.begin(), trip.end());
  M_.resize(m);
  for (Eigen::Index a = 0; a < m; ++a) M_[a] = S.mass[static_cast<Eigen::Index>(nodes_[static_cast<std::size_t>(a)])];

  // Mode k: (alpha^2 K - lambda_k M) a = -M g_k, positive definite.
  const double a2 = C.alpha * C.alpha;
  lu_.resize(lambda_.size());
  SpMat Mm(m, m);
  {
    std::vector<Eigen::Triplet<double>> d;
    for (Eigen::Index a = 0; a < m; ++a) d.emplace_back(a, a, M_[a]);
    Mm.setFromTriplets(d.begin(), d.end());
  }
  for (std::size_t k = 0; k < lambda_.size(); ++k) {
    SpMat A = a2 * K_ - lambda_[k] * Mm;
    A.makeCompressed();
    auto f = std::make_shared<Eigen::SparseLU<SpMat>>();
    f->analyzePattern(A);
    f->factorize(A);
    if (f->info() != Eigen::Success) {
      throw Error(ErrorCode::SingularSystem, "surface factorization failed for a t-mode",
                  {{"mode", k}, {"lambda", lambda_[k]}});
    }
    lu_[k] = std::move(f);
  }
}

GridField ProjectedLinearSolver::apply(const GridField& phi) const {
  const FermiChart& C = *C_;
  const Surface& S = *C.surface;
  const std::size_t N = S.num_nodes();
  GridField out(&C, N, C.nt);
  const double s = 1.0 / (12 * C.dt * C.dt), a2 = C.alpha * C.alpha;
  auto val = [&](std::size_t k, int j) {
    if (j == -1) return -phi.at(k, 1);
    if (j == C.nt) return -phi.at(k, C.nt - 2);
    if (j == 0 || j == C.nt - 1) return 0.0;
    return phi.at(k, j);
  };
  std::vector<double> slice(N);
  for (int j = 1; j <= n_; ++j) {
    for (std::size_t k = 0; k < N; ++k) slice[k] = S.boundary[k] ? 0.0 : phi.at(k, j);
    const auto Lf = laplace_beltrami_apply(S, slice);
    for (std::size_t k = 0; k < N; ++k) {
      if (S.boundary[k]) continue;
      const double d2 = s * (-val(k, j - 2) + 16 * val(k, j - 1) - 30 * val(k, j) + 16 * val(k, j + 1) - val(k, j + 2));
      out.at(k, j) = d2 + fpw_[j] * val(k, j) + a2 * Lf[k];
    }
  }
  return out;
}

ProjectedLinearSolver::Result ProjectedLinearSolver::solve(const GridField& g) const {
  const FermiChart& C = *C_;
  const Surface& S = *C.surface;
  const std::size_t N = S.num_nodes();
  const auto m = static_cast<Eigen::Index>(nodes_.size());
  if (g.nodes != N || g.nt != C.nt) throw Error(ErrorCode::InvalidSpec, "right-hand side not on the solver's grid");
  g.validate("projected linear solve");

  Eigen::MatrixXd G(n_, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (int i = 0; i < n_; ++i) G(i, a) = g.at(nodes_[static_cast<std::size_t>(a)], i + 1);
  const Eigen::MatrixXd Gm = E_.transpose() * G;  // modes x nodes
  Eigen::MatrixXd Am(Gm.rows(), m);
  for (Eigen::Index k = 0; k < Gm.rows(); ++k) {
    const Vec rhs = -M_.cwiseProduct(Gm.row(k).transpose());
    Am.row(k) = lu_[static_cast<std::size_t>(k)]->solve(rhs).transpose();
  }
  const Eigen::MatrixXd Phi = E_ * Am;

  Result r;
  r.phi = GridField(&C, N, C.nt);
  for (Eigen::Index a = 0; a < m; ++a)
    for (int i = 0; i < n_; ++i) r.phi.at(nodes_[static_cast<std::size_t>(a)], i + 1) = Phi(i, a);

  // c from the discrete equation itself: L0 phi - g is a multiple of w' row-wise.
  const GridField Lphi = apply(r.phi);
  double ww = 0;
  for (int j = 1; j <= n_; ++j) ww += w1_[j] * w1_[j];
  r.c.assign(N, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    if (S.boundary[k]) continue;
    double num = 0, orth = 0;
    for (int j = 1; j <= n_; ++j) {
      num += (Lphi.at(k, j) - g.at(k, j)) * w1_[j];
      orth += r.phi.at(k, j) * w1_[j];
    }
    r.c[k] = num / ww;
    r.orthogonality = std::max(r.orthogonality, std::abs(orth) * C.dt);
  }
  return r;
}

GridField nonlinear_remainder(const Ansatz& A, const GridField& phi) {
  const Profile& p = *A.profile;
  GridField out = phi;
  for (std::size_t i = 0; i < phi.values.size(); ++i) {
    const double u = A.u1.values[i], v = phi.values[i];
    out.values[i] = p.f(u + v) - p.f(u) - p.fp(u) * v;
  }
  return out;
}

GridField coupling_terms(const Ansatz& A, const ProjectedLinearSolver& L, const GridField& phi, Exec exec) {
  const FermiChart& C = *A.chart;
  const Profile& p = *A.profile;
  GridField out = apply_laplacian(C, phi, exec);
  const GridField L0 = L.apply(phi);
  const auto& fp_w = L.fp_w();
  for (std::size_t k = 0; k < out.nodes; ++k) {
    for (int j = 0; j < out.nt; ++j) {
      const double fpw = fp_w[j];
      // Rows outside the solve carry the plain potential part.
      const double model = (j == 0 || j == out.nt - 1) ? 0.0 : L0.at(k, j) - fpw * phi.at(k, j);
      const double z4 = cutoffs(C, k, C.t(j), 4).zeta;
      out.at(k, j) = z4 * (out.at(k, j) - model) + (p.fp(A.u1.at(k, j)) - fpw) * phi.at(k, j);
    }
  }
  return out;
}

GSplit compute_G(const Ansatz& A, const GridField& phi, const ProjectedLinearSolver& L, Exec exec) {
  const FermiChart& C = *A.chart;
  const Surface& S = *C.surface;
  const Profile& p = *A.profile;
  const double a2 = C.alpha * C.alpha, I = w1_norm_squared(C, p);
  const GridField S1 = evaluate_S(C, p, A.u1, exec);
  GridField R = coupling_terms(A, L, phi, exec);
  const GridField Nphi = nonlinear_remainder(A, phi);
  for (std::size_t i = 0; i < R.values.size(); ++i) R.values[i] += Nphi.values[i];
  const auto pi1 = project_pi(S1, p), pi2 = project_pi(R, p);
  const auto Jh = jacobi_apply(S, C.h1, exec);
  GSplit out;
  const std::size_t N = S.num_nodes();
  out.G.resize(N);
  out.G1.resize(N);
  out.G2.resize(N);
  out.c.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    out.c[k] = (pi1[k] + pi2[k]) / I;
    out.G1[k] = Jh[k] + pi1[k] / (a2 * I);
    out.G2[k] = pi2[k] / (a2 * I);
    out.G[k] = out.G1[k] + out.G2[k];
  }
  return out;
}

InnerResult solve_phi(const Ansatz& A, const ProjectedLinearSolver& L, const GridField* start, double tol,
                      int max_iter, Exec exec) {
  const FermiChart& C = *A.chart;
  const Profile& p = *A.profile;
  const GridField S1 = evaluate_S(C, p, A.u1, exec);
  const std::size_t n = S1.values.size();
  InnerResult r;
  r.phi = start ? *start : GridField(&C, S1.nodes, S1.nt);
  r.phi.chart = &C;
  auto as_field = [&](const Vec& x) {
    GridField f(&C, S1.nodes, S1.nt);
    for (std::size_t i = 0; i < n; ++i) f.values[i] = x[static_cast<Eigen::Index>(i)];
    return f;
  };
  auto as_vec = [&](const GridField& f) { return Eigen::Map<const Vec>(f.values.data(), static_cast<Eigen::Index>(n)); };
  // Linear part by GMRES on phi + L0^{-1} P (B + (f'(u1) - f'(w))) phi, which
  // stays well conditioned where the coupling is not small (far tube rows
  // near focal points); the cubic remainder N is iterated outside.
  const std::function<Vec(const Vec&)> op = [&](const Vec& x) {
    const GridField f = as_field(x);
    return Vec(x + as_vec(L.solve(coupling_terms(A, L, f, exec)).phi));
  };
  for (r.iterations = 1; r.iterations <= max_iter; ++r.iterations) {
    GridField rhs = nonlinear_remainder(A, r.phi);
    for (std::size_t i = 0; i < n; ++i) rhs.values[i] = -(S1.values[i] + rhs.values[i]);
    const Vec b = as_vec(L.solve(rhs).phi);
    // Solve for the update so that the Krylov tolerance is relative to the
    // size of the step, not of phi.
    const Vec x0 = as_vec(r.phi);
    const Vec r0 = b - op(x0);
    const double target = 1e-13 * b.norm(), r0n = r0.norm();
    Vec x = x0;
    if (r0n > target) {
      const auto kr = gmres_solve(op, r0, Vec::Zero(r0.size()), std::min(0.1, target / r0n), 400);
      r.krylov_iterations += kr.iterations;
      x += kr.x;
    }
    // Recover c(y) from the projected equation with the coupling on the right.
    const GridField phi = as_field(x);
    GridField g = coupling_terms(A, L, phi, exec);
    for (std::size_t i = 0; i < n; ++i) g.values[i] = rhs.values[i] - g.values[i];
    auto sol = L.solve(g);
    double change = 0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(sol.phi.values[i] - r.phi.values[i]));
    r.phi = std::move(sol.phi);
    r.c = std::move(sol.c);
    r.orthogonality = sol.orthogonality;
    r.last_change = change;
    if (change < tol) return r;
  }
  throw Error(ErrorCode::NoConvergence, "projected corrector iteration did not converge",
              {{"iterations", max_iter}, {"last_change", r.last_change}, {"alpha", C.alpha}});
}

nlohmann::json ReductionState::to_json() const {
  nlohmann::json j = {{"alpha", alpha},
                      {"iterations", iterations},
                      {"converged", converged},
                      {"K", K},
                      {"absorption", absorption},
                      {"orthogonality", orthogonality},
                      {"contraction", contraction},
                      {"multipliers", std::vector<double>(multipliers.data(), multipliers.data() + multipliers.size())},
                      {"h1_sup", sup_abs(h1)},
                      {"history", nlohmann::json::array()}};
  for (const auto& h : history) {
    j["history"].push_back({{"k", h.k},
                            {"h1_star", h.h1_star},
                            {"dh1_star", h.dh1_star},
                            {"c_norm", h.c_norm},
                            {"contraction", h.contraction},
                            {"phi_sup", h.phi_sup},
                            {"inner_iterations", h.inner_iterations}});
  }
  return j;
}

ReductionState fixed_point(const Surface& S, const Profile& p, double alpha, const std::vector<double>& beta,
                           const ReductionOptions& opt) {
  const std::size_t N = S.num_nodes();
  ReductionState st;
  st.alpha = alpha;
  st.h0 = log_jacobi_field(S, beta).h0;
  st.h1.assign(N, 0.0);
  const JacobiOperator op = assemble_jacobi(S, S.R_max);
  const JacobiBasis basis = make_basis(op);
  st.zhat = basis.zhat;

  // The half-width is frozen at its h1 = 0 value so that every iterate
  // lives on the same grid.
  FermiOptions fo = opt.fermi;
  const auto base = std::make_shared<FermiChart>(build_chart(S, p, alpha, st.h0, st.h1, fo, opt.exec));
  fo.L_fixed = base->L;
  const ProjectedLinearSolver L(*base, p);
  auto chart = base;

  GridField phi;
  bool have_phi = false;
  double prev = 0;
  int bad = 0;
  for (int k = 1; k <= opt.max_iter; ++k) {
    if (k > 1) chart = std::make_shared<FermiChart>(build_chart(S, p, alpha, st.h0, st.h1, fo, opt.exec));
    auto ans = std::make_shared<Ansatz>(build_ansatz(*chart, p, beta));
    auto inner = solve_phi(*ans, L, have_phi ? &phi : nullptr, opt.inner_tol, opt.inner_max_iter, opt.exec);
    phi = std::move(inner.phi);
    have_phi = true;
    const auto G = compute_G(*ans, phi, L, opt.exec);
    const auto sol = solve_projected(op, G.G, basis);
    std::vector<double> d(N);
    for (std::size_t i = 0; i < N; ++i) d[i] = sol.h[i] - st.h1[i];
    IterationRecord rec;
    rec.k = k;
    rec.dh1_star = star_norm(S, d, opt.p, S.R_max);
    rec.h1_star = star_norm(S, sol.h, opt.p, S.R_max);
    rec.c_norm = surface_sup(S, G.c, 0, S.R_max / 2);
    rec.contraction = k > 1 && prev > 0 ? rec.dh1_star / prev : 0;
    rec.phi_sup = sup_abs(phi.values);
    rec.inner_iterations = inner.iterations;
    st.history.push_back(rec);
    st.h1 = sol.h;
    st.multipliers = sol.c;
    st.iterations = k;
    if (k > 1) {
      st.contraction = rec.contraction;
      bad = rec.contraction >= 1 ? bad + 1 : 0;
      if (bad >= 3) {
        throw Error(ErrorCode::NoContraction, "successive differences did not shrink for three iterations",
                    {{"alpha", alpha}, {"iteration", k}, {"ratio", rec.contraction}});
      }
    }
    prev = rec.dh1_star;
    if (rec.dh1_star < opt.tol) {
      st.converged = true;
      break;
    }
  }

  // Final state on the chart of the last iterate.
  chart = std::make_shared<FermiChart>(build_chart(S, p, alpha, st.h0, st.h1, fo, opt.exec));
  auto ans = std::make_shared<Ansatz>(build_ansatz(*chart, p, beta));
  auto inner = solve_phi(*ans, L, &phi, opt.inner_tol, opt.inner_max_iter, opt.exec);
  const auto G = compute_G(*ans, inner.phi, L, opt.exec);
  st.phi = std::move(inner.phi);
  st.phi.chart = chart.get();
  st.c = G.c;
  st.orthogonality = inner.orthogonality;
  st.K = star_norm(S, st.h1, opt.p, S.R_max) / alpha;
  const double a2 = alpha * alpha;
  for (std::size_t u = 0; u < op.nodes.size(); ++u) {
    const std::size_t k = op.nodes[u];
    if (S.node[k].radius > S.R_max / 2) continue;
    double s = st.c[k];
    for (int i = 0; i < basis.J; ++i) s += a2 * st.multipliers[i] * op.weight[static_cast<Eigen::Index>(u)] * basis.zhat[i][k];
    st.absorption = std::max(st.absorption, std::abs(s));
  }
  st.chart = chart;
  st.ansatz = ans;
  return st;
}

nlohmann::json AssembledSolution::to_json() const {
  return {{"residual_max", residual_max}, {"outer_bound", outer_bound}, {"ctilde", ctilde}};
}

AssembledSolution assemble_solution(const ReductionState& st, Exec exec) {
  if (!st.chart || !st.ansatz) throw Error(ErrorCode::InvalidSpec, "reduction state carries no chart");
  const FermiChart& C = *st.chart;
  const Surface& S = *C.surface;
  const Profile& p = *st.ansatz->profile;
  const std::size_t N = S.num_nodes();
  const GridField eta = cutoff_field(C, 2, true), zeta = cutoff_field(C, 2, false);
  AssembledSolution out;
  out.u = GridField(&C, N, C.nt);
  const auto& u1 = st.ansatz->u1;
  for (std::size_t i = 0; i < out.u.values.size(); ++i) {
    const double side = u1.values[i] > 0 ? 1.0 : -1.0;
    out.u.values[i] = eta.values[i] * u1.values[i] + (1 - eta.values[i]) * side + zeta.values[i] * st.phi.values[i];
  }
  const GridField Su = evaluate_S(C, p, out.u, exec);
  const double I = w1_norm_squared(C, p);
  const auto pi = project_pi(Su, p);
  const JacobiOperator op = assemble_jacobi(S, S.R_max);
  const int J = static_cast<int>(st.zhat.size());
  out.ctilde.assign(J, 0.0);
  for (int i = 0; i < J; ++i)
    for (std::size_t u = 0; u < op.nodes.size(); ++u) {
      const std::size_t k = op.nodes[u];
      out.ctilde[i] += op.mass[static_cast<Eigen::Index>(u)] * pi[k] / I * st.zhat[i][k];
    }
  out.residual = Su;
  for (std::size_t k = 0; k < N; ++k) {
    double q = 0;
    for (int i = 0; i < J; ++i) q += out.ctilde[i] * decay_weight(S.node[k].radius) * st.zhat[i][k];
    for (int j = 0; j < C.nt; ++j) out.residual.at(k, j) -= q * p.eval(C.t(j)).w1 * zeta.at(k, j);
  }
  const double focal = 0.3;
  for (std::size_t k = 0; k < N; ++k) {
    if (S.boundary[k] || S.node[k].radius > S.R_max / 2) continue;
    for (int j = 2; j < C.nt - 2; ++j) {
      if (C.alpha * std::abs(C.t(j) + C.h[k]) * C.kappa[k] > focal) continue;
      out.residual_max = std::max(out.residual_max, std::abs(out.residual.at(k, j)));
    }
  }
  const double sigma = std::min(p.sigma_plus, p.sigma_minus);
  out.outer_bound = std::exp(-sigma * C.delta / C.alpha);
  return out;
}

}  // namespace acs
