#include "acs/jacobi.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseLU>

#include "acs/errors.hpp"

namespace acs {

double decay_weight(double r) {
  const double r2 = r * r;
  return 1.0 / (1.0 + r2 * r2);
}

Vec JacobiOperator::restrict_field(const std::vector<double>& f) const {
  Vec x(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t a = 0; a < nodes.size(); ++a) x[static_cast<Eigen::Index>(a)] = f[nodes[a]];
  return x;
}

std::vector<double> JacobiOperator::extend(const Vec& x) const {
  std::vector<double> f(surface->num_nodes(), 0.0);
  for (std::size_t a = 0; a < nodes.size(); ++a) f[nodes[a]] = x[static_cast<Eigen::Index>(a)];
  return f;
}

JacobiOperator assemble_jacobi(const Surface& S, double R, int mode, bool natural) {
  if (!(R > 0) || R > S.R_max * (1 + 1e-12)) {
    throw Error(ErrorCode::InvalidSpec, "truncation radius must lie in (0, R_max]", {{"R", R}, {"R_max", S.R_max}});
  }
  if (mode != 0) {
    for (const auto& m : S.mesh) {
      if (m.nv != 1 || !S.axisymmetric) {
        throw Error(ErrorCode::InvalidSpec, "Fourier modes need an axisymmetric n_theta = 1 mesh");
      }
    }
  }
  JacobiOperator op;
  op.surface = &S;
  op.R = R;
  op.mode = mode;
  const std::size_t N = S.num_nodes();
  op.dof.assign(N, -1);
  const bool full = R >= S.R_max * (1 - 1e-12);
  for (std::size_t k = 0; k < N; ++k) {
    const bool outside = full ? (S.boundary[k] && !natural) : S.node[k].radius >= R;
    if (!outside) {
      op.dof[k] = static_cast<long>(op.nodes.size());
      op.nodes.push_back(k);
    }
  }
  const auto n = static_cast<Eigen::Index>(op.nodes.size());
  op.mass.resize(n);
  op.weight.resize(n);
  op.A2.resize(n);
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index a = 0; a < n; ++a) {
    const std::size_t k = op.nodes[static_cast<std::size_t>(a)];
    const auto& G = S.node[k];
    op.mass[a] = S.mass[static_cast<Eigen::Index>(k)];
    op.weight[a] = decay_weight(G.radius);
    op.A2[a] = G.A2;
    for (SpMat::InnerIterator it(S.stiffness, static_cast<Eigen::Index>(k)); it; ++it) {
      const long b = op.dof[static_cast<std::size_t>(it.row())];
      if (b >= 0) trip.emplace_back(b, a, it.value());
    }
    double diag = -G.A2 * op.mass[a];
    if (mode != 0) {
      int c, i, j;
      S.locate(k, c, i, j);
      const auto& m = S.mesh[c];
      double w = m.du * m.dv;
      if (S.boundary[k]) w *= 0.5;
      diag += mode * mode * G.sqrtg * G.ginv(1, 1) * w;
    }
    trip.emplace_back(a, a, diag);
  }
  op.A.resize(n, n);
  op.A.setFromTriplets(trip.begin(), trip.end());
  op.A.makeCompressed();
  return op;
}

std::vector<double> jacobi_apply(const Surface& S, const std::vector<double>& f, Exec exec) {
  auto out = laplace_beltrami_apply(S, f, exec);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += S.node[k].A2 * f[k];
  return out;
}

JacobiBasis make_basis(const JacobiOperator& op) {
  const Surface& S = *op.surface;
  JacobiBasis B;
  const auto F = normal_and_fields(S);
  B.z = {F.z1, F.z2, F.z3, F.z4};
  bool mode0_only = true;
  for (const auto& m : S.mesh) mode0_only = mode0_only && m.nv == 1;
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t u = 0; u < op.nodes.size(); ++u) {
      const std::size_t k = op.nodes[u];
      s += op.mass[static_cast<Eigen::Index>(u)] * op.weight[static_cast<Eigen::Index>(u)] * a[k] * b[k];
    }
    return s;
  };
  double ref = 0;
  for (const auto& z : B.z) ref = std::max(ref, std::sqrt(dot(z, z)));
  for (int i = 0; i < 4; ++i) {
    if (mode0_only && i < 2) continue;
    std::vector<double> v = B.z[i];
    const double n0 = std::sqrt(dot(v, v));
    if (n0 <= 1e-10 * ref) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& e : B.zhat) {
        const double c = dot(v, e);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] -= c * e[k];
      }
    }
    const double n1 = std::sqrt(dot(v, v));
    if (n1 < 1e-8 * n0) continue;
    for (double& x : v) x /= n1;
    B.zhat.push_back(std::move(v));
    B.source.push_back(i);
  }
  B.J = static_cast<int>(B.zhat.size());
  B.gram.resize(B.J, B.J);
  for (int i = 0; i < B.J; ++i)
    for (int j = 0; j < B.J; ++j) B.gram(i, j) = dot(B.zhat[i], B.zhat[j]);
  return B;
}

ProjectedSolution solve_projected(const JacobiOperator& op, const std::vector<double>& f,
                                  const JacobiBasis& basis) {
  const auto n = static_cast<Eigen::Index>(op.size());
  const int J = basis.J;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(op.A.nonZeros() + 2 * n * J));
  for (Eigen::Index c = 0; c < op.A.outerSize(); ++c)
    for (SpMat::InnerIterator it(op.A, c); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  Eigen::MatrixXd Bm(n, J);
  for (int j = 0; j < J; ++j) {
    const Vec z = op.restrict_field(basis.zhat[j]);
    Bm.col(j) = op.mass.cwiseProduct(op.weight).cwiseProduct(z);
    for (Eigen::Index a = 0; a < n; ++a) {
      if (Bm(a, j) == 0) continue;
      trip.emplace_back(a, n + j, Bm(a, j));
      trip.emplace_back(n + j, a, Bm(a, j));
    }
  }
  SpMat Kt(n + J, n + J);
  Kt.setFromTriplets(trip.begin(), trip.end());
  Kt.makeCompressed();
  const Vec fr = op.restrict_field(f);
  Vec rhs = Vec::Zero(n + J);
  rhs.head(n) = -op.mass.cwiseProduct(fr);
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(Kt);
  lu.factorize(Kt);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "projected Jacobi saddle system is singular", {{"unknowns", n + J}});
  }
  const Vec x = lu.solve(rhs);
  const double res = (Kt * x - rhs).norm(), scale = rhs.norm() + 1e-300;
  if (!x.allFinite() || res > 1e-8 * scale + 1e-14) {
    throw Error(ErrorCode::SingularSystem, "projected Jacobi solve lost accuracy",
                {{"relative_residual", res / scale}});
  }
  ProjectedSolution out;
  out.h = op.extend(x.head(n));
  out.c = x.tail(J);
  for (int i = 0; i < J; ++i) {
    const Vec z = op.restrict_field(basis.zhat[i]);
    double lhs = op.mass.cwiseProduct(fr).dot(z);
    for (int j = 0; j < J; ++j) lhs += out.c[j] * basis.gram(i, j);
    out.consistency = std::max(out.consistency, std::abs(lhs));
    out.orthogonality = std::max(out.orthogonality, std::abs(Bm.col(i).dot(x.head(n))));
  }
  return out;
}

std::vector<double> log_growth_field(const Surface& S, const std::vector<double>& beta, double R0) {
  if (beta.size() != S.ends.size()) {
    throw Error(ErrorCode::InvalidSpec, "beta needs one entry per end",
                {{"ends", S.ends.size()}, {"beta", beta.size()}});
  }
  std::vector<double> p(S.num_nodes(), 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    int c, i, j;
    S.locate(k, c, i, j);
    std::size_t end = static_cast<std::size_t>(c);
    if (S.charts[c]->kind() == "catenoid") end = S.mesh[c].u(i) < 0 ? 0 : 1;
    const double r = S.node[k].radius;
    if (r <= 0) continue;
    const double chi = 1.0 - cutoff_eta(2.0 * r / R0);
    p[k] = S.ends[end].sign * beta[end] * std::log(r) * chi;
  }
  return p;
}

LogJacobiField log_jacobi_field(const Surface& S, const std::vector<double>& beta, double R0) {
  double sum = 0, mag = 0;
  for (double b : beta) {
    sum += b;
    mag += std::abs(b);
  }
  if (std::abs(sum) > 1e-12 * std::max(1.0, mag)) {
    throw Error(ErrorCode::UnbalancedBeta, "beta must sum to zero", {{"sum", sum}});
  }
  LogJacobiField L;
  L.p = log_growth_field(S, beta, R0);
  L.Jp = jacobi_apply(S, L.p);
  const JacobiOperator op = assemble_jacobi(S, S.R_max, 0, true);
  const JacobiBasis basis = make_basis(op);
  std::vector<double> f(L.Jp.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = -L.Jp[k];
  const auto sol = solve_projected(op, f, basis);
  L.h = sol.h;
  L.c = sol.c;
  L.h0.resize(L.p.size());
  for (std::size_t k = 0; k < L.p.size(); ++k) L.h0[k] = L.p[k] + L.h[k];
  const auto Jh0 = jacobi_apply(S, L.h0);
  for (std::size_t k = 0; k < Jh0.size(); ++k) {
    if (S.node[k].radius < 0.5 * S.R_max) L.residual = std::max(L.residual, std::abs(Jh0[k]));
  }
  return L;
}

double surface_integral(const Surface& S, const std::vector<double>& f, const std::vector<double>& g, double R) {
  double s = 0;
  for (std::size_t k = 0; k < S.num_nodes(); ++k) {
    const double r = S.node[k].radius;
    if (r > R) continue;
    s += S.mass[static_cast<Eigen::Index>(k)] * f[k] * g[k];
  }
  return s;
}

namespace {

// Generalized eigenvalues of A x = lambda diag(w) x, smallest first.
std::vector<double> smallest_eigenvalues(const JacobiOperator& op, int nev) {
  const Vec w = op.mass.cwiseProduct(op.weight);
  const auto n = static_cast<Eigen::Index>(op.size());
  if (n <= 800) {
    const Eigen::MatrixXd K = Eigen::MatrixXd(op.A);
    const Eigen::MatrixXd M = w.asDiagonal();
    const auto ep = generalized_dense(K, M);
    return std::vector<double>(ep.values.begin(), ep.values.begin() + std::min<Eigen::Index>(nev, n));
  }
  // Shift below the computable lower bound -max(|A|^2/p).
  double gamma = 0;
  for (Eigen::Index a = 0; a < n; ++a) gamma = std::max(gamma, op.A2[a] / op.weight[a]);
  SpMat M(n, n);
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index a = 0; a < n; ++a) t.emplace_back(a, a, w[a]);
  M.setFromTriplets(t.begin(), t.end());
  const auto ep = generalized_smallest(op.A, M, nev, -1.01 * gamma - 1e-3);
  return ep.values;
}

}  // namespace

WeightedIndex weighted_index(const Surface& S, const std::vector<double>& R_list, int nev) {
  if (R_list.size() < 3 || !std::is_sorted(R_list.begin(), R_list.end())) {
    throw Error(ErrorCode::InvalidSpec, "R sweep needs at least 3 increasing values");
  }
  bool modes = S.axisymmetric;
  for (const auto& m : S.mesh) modes = modes && m.nv == 1;
  WeightedIndex W;
  W.R = R_list;
  for (double R : R_list) {
    int count = 0;
    std::vector<double> ev;
    std::vector<int> per_mode;
    if (modes) {
      for (int n = 0;; ++n) {
        const auto op = assemble_jacobi(S, R, n);
        const int neg = negative_inertia(op.A);
        per_mode.push_back(neg);
        const auto vals = smallest_eigenvalues(op, nev);
        for (double v : vals) {
          ev.push_back(v);
          if (n > 0) ev.push_back(v);
        }
        count += n == 0 ? neg : 2 * neg;
        if (n > 0 && neg == 0) break;
        if (n > 64) throw Error(ErrorCode::NoConvergence, "Fourier mode count did not terminate");
      }
    } else {
      const auto op = assemble_jacobi(S, R, 0);
      count = negative_inertia(op.A);
      ev = smallest_eigenvalues(op, nev);
    }
    std::sort(ev.begin(), ev.end());
    if (static_cast<int>(ev.size()) > nev) ev.resize(static_cast<std::size_t>(nev));
    W.counts.push_back(count);
    W.eigenvalues.push_back(ev);
    W.mode_counts.push_back(per_mode);
  }
  for (std::size_t i = 1; i < W.eigenvalues.size(); ++i) {
    const auto& a = W.eigenvalues[i - 1];
    const auto& b = W.eigenvalues[i];
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
      if (b[k] > a[k] + 1e-9 * (1 + std::abs(a[k]))) W.monotone = false;
    }
  }
  W.i_M = W.counts.back();
  W.stabilized = W.counts.size() >= 2 && W.counts[W.counts.size() - 1] == W.counts[W.counts.size() - 2];
  return W;
}

}  // namespace acs
