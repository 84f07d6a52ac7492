#include "acs/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "acs/errors.hpp"
#include "acs/jacobi.hpp"

namespace acs {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

double weight_at(double alpha, double r) {
  const double q = alpha * r;
  return 1.0 / (1.0 + q * q * q * q);
}

// Radius and meridian scale factor of Y(s)/alpha + t nu(s).
void meridian_point(const Chart& chart, double s, double t, double alpha, double& r, double& a, double& z) {
  const PointGeometry G = chart.geometry(s, 0.0);
  r = G.Y[0] / alpha + t * G.nu[0];
  z = G.Y[2] / alpha + t * G.nu[2];
  a = std::sqrt(G.g(0, 0)) * (1.0 / alpha - t * G.S(0, 0));
}

}  // namespace

MeridianTube build_tube(const ScalarField3& u, const Profile& p, const Surface& S, double alpha, double R,
                        const MeridianGrid& grid, Exec exec) {
  if (S.charts.size() != 1 || !S.axisymmetric) {
    throw Error(ErrorCode::InvalidSpec, "meridian tube needs a single-chart axisymmetric surface",
                {{"surface", S.name}});
  }
  const Chart& chart = *S.charts[0];
  const bool catenoid = chart.kind() == "catenoid";
  if (!catenoid && chart.kind() != "graph") throw Error(ErrorCode::InvalidSpec, "unsupported chart kind");
  if (!(alpha > 0) || !(R > 0) || alpha * R > S.R_max * (1 + 1e-12)) {
    throw Error(ErrorCode::InvalidSpec, "cut radius must lie inside the meshed surface",
                {{"alpha", alpha}, {"R", R}, {"R_max", S.R_max}});
  }
  if (grid.n_s < 5 || !(grid.dt > 0) || !(grid.T > grid.dt)) throw Error(ErrorCode::InvalidSpec, "bad meridian grid");

  MeridianTube T;
  T.surface = &S;
  T.alpha = alpha;
  T.R = R;
  T.ns = grid.n_s;
  T.axis = !catenoid;
  T.s.resize(T.ns);
  if (catenoid) {
    const double sR = std::acosh(std::max(1.0, alpha * R));
    T.du = 2 * sR / (T.ns - 1);
    for (int i = 0; i < T.ns; ++i) T.s[i] = -sR + T.du * i;
  } else {
    T.du = alpha * R / (T.ns - 0.5);
    for (int i = 0; i < T.ns; ++i) T.s[i] = (i + 0.5) * T.du;
  }
  // Interface offset and window per line. The window is |t - h| <= grid.T,
  // clipped to 0.8 of the focal distance.
  T.dt = grid.dt;
  T.T = grid.T;
  T.h.assign(T.ns, 0.0);
  std::vector<double> lo(T.ns), hi(T.ns);
  const double reach = grid.T + 40;
  for (int i = 0; i < T.ns; ++i) {
    const double k = std::abs(chart.geometry(T.s[i], 0.0).S(0, 0));
    const double F = k > 0 ? std::min(reach, 0.8 / (alpha * k)) : reach;
    auto at = [&](double t) {
      double r, a, z;
      meridian_point(chart, T.s[i], t, alpha, r, a, z);
      return u(Vec3(r, 0, z));
    };
    // Nearest sign change to t = 0, then bisection.
    const double step = 0.25;
    double u0 = at(0.0);
    bool found = false;
    for (double d = 0; d + step <= F && !found; d += step) {
      for (double sgn : {1.0, -1.0}) {
        double a = sgn * d, b = sgn * (d + step);
        double fa = d == 0 ? u0 : at(a), fb = at(b);
        if ((fa < 0) == (fb < 0)) continue;
        for (int it = 0; it < 50; ++it) {
          const double m = 0.5 * (a + b), fm = at(m);
          if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        T.h[i] = 0.5 * (a + b);
        found = true;
        break;
      }
    }
    lo[i] = std::max(-F, T.h[i] - grid.T);
    hi[i] = std::min(F, T.h[i] + grid.T);
    if (hi[i] - lo[i] < 8 * grid.dt) throw Error(ErrorCode::NotInjective, "tube too thin for the normal grid", {{"s", T.s[i]}});
  }
  const int j_min = static_cast<int>(std::ceil(*std::min_element(lo.begin(), lo.end()) / grid.dt - 1e-9));
  const int j_max = static_cast<int>(std::floor(*std::max_element(hi.begin(), hi.end()) / grid.dt + 1e-9));
  T.nt = j_max - j_min + 1;
  T.t.resize(T.nt);
  for (int j = 0; j < T.nt; ++j) T.t[j] = (j_min + j) * grid.dt;
  T.j_lo.resize(T.ns);
  T.j_hi.resize(T.ns);
  for (int i = 0; i < T.ns; ++i) {
    T.j_lo[i] = static_cast<int>(std::ceil(lo[i] / grid.dt - 1e-9)) - j_min;
    T.j_hi[i] = static_cast<int>(std::floor(hi[i] / grid.dt + 1e-9)) - j_min;
  }

  const std::size_t N = static_cast<std::size_t>(T.ns) * T.nt;
  T.r.assign(N, 0.0);
  T.a.assign(N, 0.0);
  T.x.assign(N, Vec3::Zero());
  T.u.resize(N);
  T.fpu.resize(N);
  T.r_half.assign(static_cast<std::size_t>(T.ns - 1) * T.nt, 0.0);
  T.a_half.assign(T.r_half.size(), 1.0);
  T.r_thalf.assign(static_cast<std::size_t>(T.ns) * (T.nt - 1), 0.0);
  T.a_thalf.assign(T.r_thalf.size(), 1.0);
  auto check = [&](double r, double a, double s, double t) {
    if (!(r > 0) || !(a > 0)) {
      throw Error(ErrorCode::NotInjective, "meridian tube reaches the axis or a focal point", {{"s", s}, {"t", t}});
    }
  };
  double z;
  for (int i = 0; i < T.ns; ++i) {
    for (int j = 0; j < T.nt; ++j) {
      const std::size_t n = T.index(i, j);
      const bool in = T.in_window(i, j);
      if (in) {
        meridian_point(chart, T.s[i], T.t[j], alpha, T.r[n], T.a[n], z);
        check(T.r[n], T.a[n], T.s[i], T.t[j]);
        T.x[n] = Vec3(T.r[n], 0, z);
      }
      if (i + 1 < T.ns && (in || T.in_window(i + 1, j))) {
        meridian_point(chart, T.s[i] + 0.5 * T.du, T.t[j], alpha, T.r_half[n], T.a_half[n], z);
        check(T.r_half[n], T.a_half[n], T.s[i] + 0.5 * T.du, T.t[j]);
      }
      if (j + 1 < T.nt && in && j < T.j_hi[i]) {
        const std::size_t m = static_cast<std::size_t>(i) * (T.nt - 1) + j;
        meridian_point(chart, T.s[i], T.t[j] + 0.5 * T.dt, alpha, T.r_thalf[m], T.a_thalf[m], z);
      }
    }
  }
  const long NN = static_cast<long>(N);
#pragma omp parallel for schedule(dynamic, 64) if (exec == Exec::Parallel)
  for (long n = 0; n < NN; ++n) {
    const int i = static_cast<int>(n / T.nt), j = static_cast<int>(n % T.nt);
    if (T.in_window(i, j)) T.u[n] = u(T.x[n]);
  }
  for (int i = 0; i < T.ns; ++i) {
    for (int j = 0; j < T.j_lo[i]; ++j) T.u[T.index(i, j)] = T.u[T.index(i, T.j_lo[i])];
    for (int j = T.j_hi[i] + 1; j < T.nt; ++j) T.u[T.index(i, j)] = T.u[T.index(i, T.j_hi[i])];
  }
  for (std::size_t n = 0; n < N; ++n) T.fpu[n] = p.fp(T.u[n]);
  return T;
}

Vec LinearizedOperator::restrict_field(const std::vector<double>& f) const {
  Vec x(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t q = 0; q < nodes.size(); ++q) x[static_cast<Eigen::Index>(q)] = f[nodes[q]];
  return x;
}

std::vector<double> LinearizedOperator::extend(const Vec& x) const {
  std::vector<double> f(dof.size(), 0.0);
  for (std::size_t q = 0; q < nodes.size(); ++q) f[nodes[q]] = x[static_cast<Eigen::Index>(q)];
  return f;
}

LinearizedOperator assemble_linearized(const MeridianTube& T, int mode, bool natural_outer) {
  if (mode < 0) throw Error(ErrorCode::InvalidSpec, "Fourier mode must be >= 0");
  LinearizedOperator op;
  op.tube = &T;
  op.mode = mode;
  op.natural_outer = natural_outer;
  const std::size_t N = static_cast<std::size_t>(T.ns) * T.nt;
  auto cut = [&](int i) { return i == T.ns - 1 || (!T.axis && i == 0); };
  op.dof.assign(N, -1);
  for (int i = 0; i < T.ns; ++i) {
    if (cut(i) && !natural_outer) continue;
    for (int j = T.j_lo[i] + 1; j < T.j_hi[i]; ++j) {
      op.dof[T.index(i, j)] = static_cast<long>(op.nodes.size());
      op.nodes.push_back(T.index(i, j));
    }
  }
  const auto n = static_cast<Eigen::Index>(op.nodes.size());
  auto width = [&](int i) { return cut(i) ? 0.5 : 1.0; };
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 9);
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  // Adds c (d . phi)^2 to the form, d supported on the given nodes; nodes
  // without an unknown carry phi = 0.
  auto add_square = [&](const std::size_t* node, const double* d, int len, double c) {
    for (int x = 0; x < len; ++x) {
      const long a = op.dof[node[x]];
      if (a < 0) continue;
      for (int y = 0; y < len; ++y) {
        const long b = op.dof[node[y]];
        if (b >= 0) trip.emplace_back(a, b, c * d[x] * d[y]);
      }
    }
  };
  // Meridian direction: second-order differences (u varies on the 1/alpha scale).
  const double d2[2] = {-1.0, 1.0};
  for (int i = 0; i + 1 < T.ns; ++i) {
    for (int j = 0; j < T.nt; ++j) {
      const std::size_t h = T.index(i, j);
      if (op.dof[h] < 0 && op.dof[T.index(i + 1, j)] < 0) continue;
      const std::size_t nd[2] = {T.index(i, j), T.index(i + 1, j)};
      add_square(nd, d2, 2, T.r_half[h] / T.a_half[h] * T.dt / T.du);
    }
  }
  // Normal direction: fourth-order staggered differences
  // (phi_{j-1} - 27 phi_j + 27 phi_{j+1} - phi_{j+2}) / (24 dt) at t_{j+1/2},
  // with zero extension past the Dirichlet rows. The profile varies on the
  // unit scale here, and a second-order form leaves an O(dt^2) energy density
  // that the weight amplifies by (alpha R)^4 near the cut.
  const double d4[4] = {1.0, -27.0, 27.0, -1.0};
  for (int i = 0; i < T.ns; ++i) {
    for (int j = T.j_lo[i]; j < T.j_hi[i]; ++j) {
      const std::size_t h = static_cast<std::size_t>(i) * (T.nt - 1) + j;
      std::size_t nd[4];
      double dd[4];
      int len = 0;
      for (int q = 0; q < 4; ++q) {
        const int jj = j - 1 + q;
        if (jj < 0 || jj >= T.nt) continue;
        nd[len] = T.index(i, jj);
        dd[len++] = d4[q];
      }
      add_square(nd, dd, len, T.a_thalf[h] * T.r_thalf[h] * width(i) * T.du / (576 * T.dt));
    }
  }
  op.weight.resize(n);
  op.volume.resize(n);
  Vec mass(n);
  op.weight_lo = 1e300;
  op.weight_hi = 0;
  const double m2 = static_cast<double>(mode) * mode;
  for (Eigen::Index q = 0; q < n; ++q) {
    const std::size_t node = op.nodes[q];
    const int i = static_cast<int>(node / T.nt);
    const double r = T.r[node], a = T.a[node];
    const double cell = width(i) * T.du * T.dt;
    diag[q] += (m2 * a / r - T.fpu[node] * a * r) * cell;
    op.weight[q] = weight_at(T.alpha, r);
    op.volume[q] = a * r * cell;
    mass[q] = op.weight[q] * op.volume[q];
    const double q4 = std::pow(T.alpha * r, 4);
    op.weight_lo = std::min(op.weight_lo, op.weight[q] * (1 + q4));
    op.weight_hi = std::max(op.weight_hi, op.weight[q] * (1 + q4));
  }
  for (Eigen::Index q = 0; q < n; ++q) trip.emplace_back(q, q, diag[q]);
  op.K.resize(n, n);
  op.K.setFromTriplets(trip.begin(), trip.end());
  op.M.resize(n, n);
  std::vector<Eigen::Triplet<double>> mt;
  for (Eigen::Index q = 0; q < n; ++q) mt.emplace_back(q, q, mass[q]);
  op.M.setFromTriplets(mt.begin(), mt.end());
  const SpMat Kt = op.K.transpose();
  op.symmetry_defect = (op.K - Kt).norm() / std::max(1e-300, op.K.norm());
  return op;
}

nlohmann::json SpectralResult::to_json() const {
  return {{"alpha", alpha}, {"R", R}, {"mode", mode}, {"n_s", n_s}, {"n_t", n_t}, {"eigenvalues", eigenvalues},
          {"scaled", scaled}, {"negative_count", negative_count}, {"orthogonality", orthogonality}};
}

SpectralResult solve_spectrum(const LinearizedOperator& op, int nev) {
  const MeridianTube& T = *op.tube;
  SpectralResult out;
  out.alpha = T.alpha;
  out.R = T.R;
  out.mode = op.mode;
  out.n_s = T.ns;
  out.n_t = T.nt;
  out.negative_count = negative_inertia(op.K);
  // Shift below the spectrum, close to its bottom.
  double shift = -T.alpha * T.alpha;
  for (int it = 0; it < 40 && negative_inertia(SpMat(op.K - shift * op.M)) > 0; ++it) shift *= 2;
  const auto E = generalized_smallest(op.K, op.M, std::min<int>(nev, static_cast<int>(op.size())), shift);
  out.eigenvalues = E.values;
  out.vectors = E.vectors;
  for (double l : E.values) out.scaled.push_back(l / (T.alpha * T.alpha));
  const Eigen::MatrixXd G = E.vectors.transpose() * (op.M * E.vectors);
  out.orthogonality = (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
  return out;
}

nlohmann::json MorseReport::to_json() const {
  nlohmann::json rj = nlohmann::json::array();
  for (const auto& r : rows) {
    rj.push_back({{"R", r.R}, {"grid", r.grid}, {"mode_counts", r.mode_counts}, {"count", r.count},
                  {"lambda_min", r.lambda_min}, {"eigenvalues", r.eigenvalues}});
  }
  return {{"alpha", alpha}, {"rows", rj}, {"m_u", m_u}, {"stabilized", stabilized}, {"monotone_in_R", monotone_in_R},
          {"lambda_min", lambda_min}, {"mu_hat", mu_hat}};
}

MorseReport morse_index(const ScalarField3& u, const Profile& p, const Surface& S, double alpha,
                        const std::vector<double>& R_list, const std::vector<MeridianGrid>& grids, int max_mode,
                        Exec exec) {
  if (R_list.empty() || grids.empty()) throw Error(ErrorCode::InvalidSpec, "morse sweep needs radii and grids");
  MorseReport rep;
  rep.alpha = alpha;
  for (std::size_t g = 0; g < grids.size(); ++g) {
    int prev = -1;
    for (double R : R_list) {
      const MeridianTube T = build_tube(u, p, S, alpha, R, grids[g], exec);
      MorseRow row;
      row.R = R;
      row.grid = static_cast<int>(g);
      row.mode_counts.assign(static_cast<std::size_t>(max_mode) + 1, 0);
      // Fourier modes are independent solves.
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
      for (int m = 0; m <= max_mode; ++m) {
        const auto op = assemble_linearized(T, m);
        row.mode_counts[static_cast<std::size_t>(m)] = negative_inertia(op.K);
        if (m == 0) {
          const auto sp = solve_spectrum(op, 3);
          row.eigenvalues = sp.eigenvalues;
          row.lambda_min = sp.eigenvalues.front();
        }
      }
      for (int m = 0; m <= max_mode; ++m) row.count += (m == 0 ? 1 : 2) * row.mode_counts[static_cast<std::size_t>(m)];
      if (row.count < prev) rep.monotone_in_R = false;
      prev = row.count;
      rep.rows.push_back(row);
    }
  }
  rep.stabilized = std::all_of(rep.rows.begin(), rep.rows.end(),
                               [&](const MorseRow& r) { return r.count == rep.rows.front().count; });
  rep.m_u = rep.stabilized ? rep.rows.front().count : -1;
  rep.lambda_min = rep.rows.back().lambda_min;
  rep.mu_hat = -rep.lambda_min / (alpha * alpha);
  return rep;
}

KernelFields kernel_fields(const ScalarField3& u, const MeridianTube& T, double fd_step) {
  KernelFields K;
  const std::size_t N = T.x.size();
  K.z3.assign(N, 0.0);
  K.z1.assign(N, 0.0);
  const double h = fd_step;
  const Vec3 e1 = Vec3::UnitX() * h, e3 = Vec3::UnitZ() * h;
  for (std::size_t n = 0; n < N; ++n) {
    if (!T.in_window(static_cast<int>(n / T.nt), static_cast<int>(n % T.nt))) continue;
    const Vec3& x = T.x[n];
    K.z3[n] = (u(x + e3) - u(x - e3)) / (2 * h);
    K.z1[n] = (u(x + e1) - u(x - e1)) / (2 * h);
  }
  // Z4 = d/dtheta u(rot_theta x), by differences in the angle so that both
  // samples sit at the same distance from the axis.
  auto rot = [](const Vec3& x, double th) {
    return Vec3(x[0] * std::cos(th) - x[1] * std::sin(th), x[0] * std::sin(th) + x[1] * std::cos(th), x[2]);
  };
  for (std::size_t n = 0; n < N; n += 5) {
    if (!T.in_window(static_cast<int>(n / T.nt), static_cast<int>(n % T.nt))) continue;
    const Vec3 x = rot(T.x[n], 0.7);
    K.z4_max = std::max(K.z4_max, std::abs(u(rot(x, h)) - u(rot(x, -h))) / (2 * h));
  }
  return K;
}

double rayleigh_quotient(const LinearizedOperator& op, const std::vector<double>& f) {
  const Vec x = op.restrict_field(f);
  const double den = x.dot(op.M * x);
  if (!(den > 0)) throw Error(ErrorCode::SingularSystem, "zero field in Rayleigh quotient");
  return x.dot(op.K * x) / den;
}

double calibration_floor(const Profile& p, double alpha, double R, const MeridianGrid& grid) {
  const Surface P = plane(alpha * R, 8, 1);
  const ScalarField3 u = [&p](const Vec3& x) { return p.w_at(x[2]); };
  const MeridianTube T = build_tube(u, p, P, alpha, R, grid);
  const auto op = assemble_linearized(T, 0, true);
  return std::abs(rayleigh_quotient(op, kernel_fields(u, T).z3));
}

nlohmann::json KernelReport::to_json() const {
  return {{"alpha", alpha}, {"R", R}, {"floor", floor}, {"kernel_tol", kernel_tol}, {"rq_z3", rq_z3},
          {"rq_z1", rq_z1}, {"rq_z2", rq_z1}, {"z4_max", z4_max}, {"mode0", mode0}, {"mode1", mode1},
          {"near_kernel_dim", near_kernel_dim}, {"angle_deg", angle_deg}, {"pass", pass},
          {"at_floor", at_floor}};
}

KernelReport kernel_check(const ScalarField3& u, const Profile& p, const Surface& S, double alpha, double R,
                          const MeridianGrid& grid, Exec exec) {
  KernelReport rep;
  rep.alpha = alpha;
  rep.R = R;
  rep.floor = calibration_floor(p, alpha, R, grid);
  rep.kernel_tol = 10 * rep.floor;
  const MeridianTube T = build_tube(u, p, S, alpha, R, grid, exec);
  const auto K = kernel_fields(u, T);
  rep.z4_max = K.z4_max;
  double worst = 0;
  int n0 = 0, n1 = 0;
  for (int m : {0, 1}) {
    const auto op = assemble_linearized(T, m, true);
    const auto& z = m == 0 ? K.z3 : K.z1;
    (m == 0 ? rep.rq_z3 : rep.rq_z1) = rayleigh_quotient(op, z);
    const auto sp = solve_spectrum(op, m == 0 ? 4 : 3);
    (m == 0 ? rep.mode0 : rep.mode1) = sp.eigenvalues;
    std::vector<Eigen::Index> near;
    for (std::size_t c = 0; c < sp.eigenvalues.size(); ++c) {
      if (std::abs(sp.eigenvalues[c]) < rep.kernel_tol) near.push_back(static_cast<Eigen::Index>(c));
    }
    (m == 0 ? n0 : n1) = static_cast<int>(near.size());
    if (near.size() != 1) {
      worst = std::numbers::pi / 2;
      continue;
    }
    Eigen::MatrixXd A = sp.vectors.col(near[0]);
    Eigen::MatrixXd B = op.restrict_field(z);
    worst = std::max(worst, principal_angle(A, B, op.M.diagonal()));
  }
  rep.near_kernel_dim = n0 + 2 * n1;
  rep.angle_deg = worst * 180 / std::numbers::pi;
  rep.pass = std::abs(rep.rq_z3) <= rep.kernel_tol && std::abs(rep.rq_z1) <= rep.kernel_tol && rep.z4_max <= 1e-10 &&
             rep.near_kernel_dim == 3 && rep.angle_deg <= 5;
  rep.at_floor = std::abs(rep.rq_z3) <= rep.floor && std::abs(rep.rq_z1) <= rep.floor;
  return rep;
}

Decomposition decompose_eigenfunction(const MeridianTube& T, const Profile& p, const std::vector<double>& phi) {
  if (phi.size() != T.x.size()) throw Error(ErrorCode::InvalidSpec, "field does not match the tube");
  Decomposition D;
  D.k.assign(T.ns, 0.0);
  D.phi_perp = phi;
  double num = 0, den = 0, amax = 0;
  const std::vector<double>& h = T.h;
  for (int i = 0; i < T.ns; ++i) {
    double pw = 0, ww = 0;
    for (int j = T.j_lo[i]; j <= T.j_hi[i]; ++j) {
      const double w1 = p.eval(T.t[j] - h[i]).w1;
      pw += phi[T.index(i, j)] * w1;
      ww += w1 * w1;
    }
    D.k[i] = pw / ww;
    double proj = 0;
    for (int j = T.j_lo[i]; j <= T.j_hi[i]; ++j) {
      const std::size_t n = T.index(i, j);
      const double w1 = p.eval(T.t[j] - h[i]).w1;
      D.phi_perp[n] -= D.k[i] * w1;
      proj += D.phi_perp[n] * w1 * T.dt;
      const double wt = weight_at(T.alpha, T.r[n]) * T.a[n] * T.r[n];
      num += wt * D.phi_perp[n] * D.phi_perp[n];
      den += wt * phi[n] * phi[n];
      amax = std::max(amax, std::abs(phi[n]));
    }
    D.max_projection = std::max(D.max_projection, std::abs(proj));
  }
  D.perp_ratio = den > 0 ? std::sqrt(num / den) : 0;

  // Decay in t - h on lines carrying at least a tenth of the peak.
  double rate = 1e300, outside = 0;
  for (int i = 0; i < T.ns; ++i) {
    double lmax = 0;
    for (int j = T.j_lo[i]; j <= T.j_hi[i]; ++j) {
      lmax = std::max(lmax, std::abs(phi[T.index(i, j)]));
      if (std::abs(T.t[j] - h[i]) > T.T - 2) outside = std::max(outside, std::abs(phi[T.index(i, j)]));
    }
    if (lmax < 0.1 * amax) continue;
    for (double side : {-1.0, 1.0}) {
      std::vector<double> x, y;
      // From d = 3, where w' = sech^2 has reached 97% of its asymptotic rate,
      // to 1.5 short of the window edge on this side.
      const double edge = side > 0 ? T.t[T.j_hi[i]] - h[i] : h[i] - T.t[T.j_lo[i]];
      for (int j = T.j_lo[i]; j <= T.j_hi[i]; ++j) {
        const double d = side * (T.t[j] - h[i]);
        const double v = std::abs(phi[T.index(i, j)]);
        if (d >= 3 && d <= edge - 1.5 && v > 0) {
          x.push_back(d);
          y.push_back(std::log(v));
        }
      }
      if (x.size() < 5) continue;
      rate = std::min(rate, -fit_line(x, y).slope);
    }
  }
  D.decay_rate = rate < 1e300 ? rate : 0;
  D.outside_ratio = amax > 0 ? outside / amax : 0;
  return D;
}

nlohmann::json QuadraticFormReport::to_json() const {
  return {{"Q3", Q3}, {"Q_surface", Q_surface}, {"ratio", ratio}, {"discrepancy", discrepancy}};
}

QuadraticFormReport quadratic_form_compare(const LinearizedOperator& op, const Profile& p,
                                           const std::vector<double>& k) {
  const MeridianTube& T = *op.tube;
  const Surface& S = *T.surface;
  if (k.size() != S.num_nodes() || S.mesh[0].nv != 1) {
    throw Error(ErrorCode::InvalidSpec, "k must be a nodal field on a meridian mesh");
  }
  const ChartMesh& cm = S.mesh[0];
  auto k_at = [&](double s) {
    const double x = (s - cm.u0) / cm.du;
    const int i0 = std::clamp(static_cast<int>(std::floor(x)), 0, cm.nu - 2);
    const double f = x - i0;
    return (1 - f) * k[S.index(0, i0, 0)] + f * k[S.index(0, i0 + 1, 0)];
  };
  std::vector<double> v(T.x.size(), 0.0);
  for (int i = 0; i < T.ns; ++i) {
    const double ki = k_at(T.s[i]);
    for (int j = T.j_lo[i]; j <= T.j_hi[i]; ++j) v[T.index(i, j)] = ki * p.eval(T.t[j] - T.h[i]).w1;
  }
  QuadraticFormReport Q;
  const Vec x = op.restrict_field(v);
  Q.Q3 = kTwoPi * x.dot(op.K * x);
  const JacobiOperator J = assemble_jacobi(S, T.alpha * T.R, 0);
  const Vec y = J.restrict_field(k);
  Q.Q_surface = y.dot(J.A * y);
  Q.ratio = Q.Q3 / Q.Q_surface;
  Q.discrepancy = std::abs(Q.ratio - p.c_star) / p.c_star;
  return Q;
}

}  // namespace acs
