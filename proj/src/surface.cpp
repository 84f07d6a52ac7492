#include "acs/surface.hpp"

#include <cmath>
#include <numbers>

#include "acs/errors.hpp"

namespace acs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Mat2 sym(double a, double b, double c) {
  Mat2 m;
  m << a, b, b, c;
  return m;
}

}  // namespace

PointGeometry geometry_from_jet(const ChartJet& J, int orientation) {
  PointGeometry G;
  G.Y = J.Y;
  G.Yu = J.Yu;
  G.Yv = J.Yv;
  G.g = sym(J.Yu.dot(J.Yu), J.Yu.dot(J.Yv), J.Yv.dot(J.Yv));
  const Vec3 n = J.Yu.cross(J.Yv);
  G.sqrtg = n.norm();
  G.nu = orientation * n / G.sqrtg;
  G.ginv = G.g.inverse();
  G.L = sym(J.Yuu.dot(G.nu), J.Yuv.dot(G.nu), J.Yvv.dot(G.nu));
  G.S = G.ginv * G.L;
  G.H = G.S.trace();
  G.K = G.S.determinant();
  G.A2 = (G.S * G.S).trace();
  // d(nu)/d(u_k) = -S^m_k Y_m
  const Vec3* Yd[2] = {&J.Yu, &J.Yv};
  for (int k = 0; k < 2; ++k) G.dnu[k] = -(G.S(0, k) * J.Yu + G.S(1, k) * J.Yv);
  // Second and third derivative tables: Y_ab and Y_abk.
  const Vec3 Y2[2][2] = {{J.Yuu, J.Yuv}, {J.Yuv, J.Yvv}};
  const Vec3 Y3u[2][2] = {{J.Yuuu, J.Yuuv}, {J.Yuuv, J.Yuvv}};
  const Vec3 Y3v[2][2] = {{J.Yuuv, J.Yuvv}, {J.Yuvv, J.Yvvv}};
  for (int k = 0; k < 2; ++k) {
    Mat2 dg, dL;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        dg(a, b) = Y2[a][k].dot(*Yd[b]) + Yd[a]->dot(Y2[b][k]);
        const Vec3& Yabk = k == 0 ? Y3u[a][b] : Y3v[a][b];
        dL(a, b) = Yabk.dot(G.nu) + Y2[a][b].dot(G.dnu[k]);
      }
    }
    G.dg[k] = dg;
    G.dL[k] = dL;
  }
  // b^j = (1/sqrt g) d_i (sqrt g g^{ij})
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  for (int i = 0; i < 2; ++i) {
    const Mat2 gid = G.ginv * G.dg[i];
    const Mat2 d = 0.5 * gid.trace() * G.ginv - gid * G.ginv;
    b += d.row(i).transpose();
  }
  G.b0 = b;
  G.radius = std::hypot(J.Y[0], J.Y[1]);
  return G;
}

ChartJet CatenoidChart::jet(double s, double th) const {
  const double ch = std::cosh(s), sh = std::sinh(s), c = std::cos(th), sn = std::sin(th);
  ChartJet J;
  J.Y = Vec3(ch * c, ch * sn, s);
  J.Yu = Vec3(sh * c, sh * sn, 1.0);
  J.Yv = Vec3(-ch * sn, ch * c, 0.0);
  J.Yuu = Vec3(ch * c, ch * sn, 0.0);
  J.Yuv = Vec3(-sh * sn, sh * c, 0.0);
  J.Yvv = Vec3(-ch * c, -ch * sn, 0.0);
  J.Yuuu = Vec3(sh * c, sh * sn, 0.0);
  J.Yuuv = Vec3(-ch * sn, ch * c, 0.0);
  J.Yuvv = Vec3(-sh * c, -sh * sn, 0.0);
  J.Yvvv = Vec3(ch * sn, -ch * c, 0.0);
  return J;
}

double GraphChart::height(double r, double th) const {
  const double e2 = cap * cap, q = r * r + e2;
  return a * 0.5 * std::log(q) + b + (b1 * std::cos(th) + b2 * std::sin(th)) * r / q;
}

ChartJet GraphChart::jet(double r, double th) const {
  const double e2 = cap * cap, q = r * r + e2;
  const double c = std::cos(th), sn = std::sin(th);
  // Radial factors: A = a log(q)/2 + b, B = r/q.
  const double B = r / q;
  const double B1 = (e2 - r * r) / (q * q);
  const double B2 = (2 * r * r * r - 6 * r * e2) / (q * q * q);
  const double B3 = (-6 * r * r * r * r + 36 * r * r * e2 - 6 * e2 * e2) / (q * q * q * q);
  const double A = a * 0.5 * std::log(q) + b;
  const double A1 = a * B, A2 = a * B1, A3 = a * B2;
  const double D = b1 * c + b2 * sn, Dt = -b1 * sn + b2 * c;
  const double F = A + B * D;
  const double Fr = A1 + B1 * D, Ft = B * Dt;
  const double Frr = A2 + B2 * D, Frt = B1 * Dt, Ftt = -B * D;
  const double Frrr = A3 + B3 * D, Frrt = B2 * Dt, Frtt = -B1 * D, Fttt = -B * Dt;
  ChartJet J;
  J.Y = Vec3(r * c, r * sn, F);
  J.Yu = Vec3(c, sn, Fr);
  J.Yv = Vec3(-r * sn, r * c, Ft);
  J.Yuu = Vec3(0, 0, Frr);
  J.Yuv = Vec3(-sn, c, Frt);
  J.Yvv = Vec3(-r * c, -r * sn, Ftt);
  J.Yuuu = Vec3(0, 0, Frrr);
  J.Yuuv = Vec3(0, 0, Frrt);
  J.Yuvv = Vec3(-c, -sn, Frtt);
  J.Yvvv = Vec3(r * sn, -r * c, Fttt);
  return J;
}

void Surface::locate(std::size_t k, int& c, int& i, int& j) const {
  c = static_cast<int>(mesh.size()) - 1;
  while (c > 0 && mesh[c].offset > k) --c;
  const std::size_t local = k - mesh[c].offset;
  i = static_cast<int>(local / mesh[c].nv);
  j = static_cast<int>(local % mesh[c].nv);
}

namespace {

void assemble_surface(Surface& S) {
  std::size_t total = 0;
  for (auto& m : S.mesh) {
    m.offset = total;
    total += static_cast<std::size_t>(m.nu) * m.nv;
  }
  S.node.resize(total);
  S.boundary.assign(total, 0);
  S.mass.resize(static_cast<Eigen::Index>(total));
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t c = 0; c < S.charts.size(); ++c) {
    const Chart& ch = *S.charts[c];
    const ChartMesh& m = S.mesh[c];
    for (int i = 0; i < m.nu; ++i) {
      for (int j = 0; j < m.nv; ++j) {
        const std::size_t k = S.index(static_cast<int>(c), i, j);
        S.node[k] = ch.geometry(m.u(i), m.v(j));
        S.mass[static_cast<Eigen::Index>(k)] = S.node[k].sqrtg * m.du * m.dv;
        if (i == m.nu - 1 || (i == 0 && !m.pole_left)) {
          S.boundary[k] = 1;
          S.mass[static_cast<Eigen::Index>(k)] *= 0.5;
        }
      }
    }
    auto link = [&](std::size_t a, std::size_t b, double w) {
      trip.emplace_back(a, a, w);
      trip.emplace_back(b, b, w);
      trip.emplace_back(a, b, -w);
      trip.emplace_back(b, a, -w);
    };
    bool orthogonal = true;
    for (int i = 0; i < m.nu && orthogonal; ++i) {
      for (int j = 0; j < m.nv; ++j) {
        const auto& G = S.node[S.index(static_cast<int>(c), i, j)];
        if (std::abs(G.g(0, 1)) > 1e-14 * G.g.norm()) {
          orthogonal = false;
          break;
        }
      }
    }
    for (int i = 0; i + 1 < m.nu; ++i) {
      for (int j = 0; j < m.nv; ++j) {
        const PointGeometry G = ch.geometry(m.u(i) + 0.5 * m.du, m.v(j));
        const double cuu = G.sqrtg * G.ginv(0, 0);
        link(S.index(static_cast<int>(c), i, j), S.index(static_cast<int>(c), i + 1, j), cuu * m.dv / m.du);
      }
    }
    if (m.nv > 1) {
      for (int i = 0; i < m.nu; ++i) {
        for (int j = 0; j < m.nv; ++j) {
          const PointGeometry G = ch.geometry(m.u(i), m.v(j) + 0.5 * m.dv);
          const double cvv = G.sqrtg * G.ginv(1, 1);
          link(S.index(static_cast<int>(c), i, j), S.index(static_cast<int>(c), i, (j + 1) % m.nv),
               cvv * m.du / m.dv);
        }
      }
    }
    if (!orthogonal && m.nv > 1) {
      for (int i = 0; i + 1 < m.nu; ++i) {
        for (int j = 0; j < m.nv; ++j) {
          const PointGeometry G = ch.geometry(m.u(i) + 0.5 * m.du, m.v(j) + 0.5 * m.dv);
          const double cuv = G.sqrtg * G.ginv(0, 1);
          const int j1 = (j + 1) % m.nv;
          const std::size_t n00 = S.index(static_cast<int>(c), i, j), n10 = S.index(static_cast<int>(c), i + 1, j);
          const std::size_t n01 = S.index(static_cast<int>(c), i, j1), n11 = S.index(static_cast<int>(c), i + 1, j1);
          const std::size_t ids[4] = {n00, n10, n01, n11};
          const double Du[4] = {-0.5 / m.du, 0.5 / m.du, -0.5 / m.du, 0.5 / m.du};
          const double Dv[4] = {-0.5 / m.dv, -0.5 / m.dv, 0.5 / m.dv, 0.5 / m.dv};
          const double w = cuv * m.du * m.dv;
          for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
              trip.emplace_back(ids[a], ids[b], w * (Du[a] * Dv[b] + Dv[a] * Du[b]));
            }
          }
        }
      }
    }
  }
  S.stiffness.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  S.stiffness.setFromTriplets(trip.begin(), trip.end());
  S.stiffness.makeCompressed();
}

}  // namespace

Surface catenoid(double R_max, int n_s, int n_theta) {
  if (!(R_max > 1.0) || n_s < 5 || n_theta < 1 || (n_theta > 1 && n_theta % 2)) {
    throw Error(ErrorCode::InvalidSpec, "catenoid needs R_max > 1, n_s >= 5, n_theta even or 1",
                {{"R_max", R_max}, {"n_s", n_s}, {"n_theta", n_theta}});
  }
  Surface S;
  S.name = "catenoid";
  S.R_max = R_max;
  S.axisymmetric = true;
  S.asymptotic_model = false;
  S.charts.push_back(std::make_shared<CatenoidChart>());
  const double sR = std::acosh(R_max);
  ChartMesh m;
  m.nu = n_s;
  m.nv = n_theta;
  m.u0 = -sR;
  m.du = 2 * sR / (n_s - 1);
  m.dv = kTwoPi / n_theta;
  S.mesh.push_back(m);
  EndData lower, upper;
  lower.a = -1;
  lower.b = -std::log(2.0);
  lower.sign = -1;
  upper.a = 1;
  upper.b = std::log(2.0);
  upper.sign = 1;
  S.ends = {lower, upper};
  assemble_surface(S);
  return S;
}

Surface from_end_data(const std::vector<EndData>& ends, const CoreSpec& core) {
  if (ends.empty()) throw Error(ErrorCode::InvalidSpec, "no ends given");
  double suma = 0;
  for (std::size_t k = 0; k < ends.size(); ++k) {
    suma += ends[k].a;
    if (k > 0 && ends[k].a < ends[k - 1].a) {
      throw Error(ErrorCode::InvalidSpec, "ends must be sorted by a_k", {{"k", k}});
    }
  }
  if (std::abs(suma) > 1e-12) {
    throw Error(ErrorCode::InvalidSpec, "log coefficients must sum to zero", {{"sum_a", suma}});
  }
  if (core.n_theta > 1 && core.n_theta % 2) {
    throw Error(ErrorCode::InvalidSpec, "n_theta must be even or 1");
  }
  Surface S;
  S.name = "end_data";
  S.R_max = core.R_max;
  bool flat = ends.size() == 1;
  bool axis = true;
  for (const auto& e : ends) {
    auto ch = std::make_shared<GraphChart>();
    ch->a = e.a;
    ch->b = e.b;
    ch->b1 = e.b1;
    ch->b2 = e.b2;
    ch->cap = core.cap;
    ch->orientation = e.sign;
    if (e.a != 0 || e.b1 != 0 || e.b2 != 0) flat = false;
    if (e.b1 != 0 || e.b2 != 0) axis = false;
    S.charts.push_back(ch);
    ChartMesh m;
    m.nu = core.n_r;
    m.nv = core.n_theta;
    m.du = core.R_max / (core.n_r - 0.5);
    m.u0 = 0.5 * m.du;
    m.pole_left = true;
    m.dv = kTwoPi / core.n_theta;
    S.mesh.push_back(m);
  }
  // Consecutive graphs must stay strictly ordered outside R0.
  for (std::size_t k = 0; k + 1 < ends.size(); ++k) {
    const auto& lo = static_cast<const GraphChart&>(*S.charts[k]);
    const auto& hi = static_cast<const GraphChart&>(*S.charts[k + 1]);
    const double R0 = std::max(ends[k].R0, ends[k + 1].R0);
    for (int ir = 0; ir <= 200; ++ir) {
      const double r = R0 * std::pow(core.R_max / R0, ir / 200.0);
      for (int it = 0; it < 64; ++it) {
        const double th = kTwoPi * it / 64;
        if (!(hi.height(r, th) > lo.height(r, th))) {
          throw Error(ErrorCode::EndsIntersect, "end graphs cross outside R0",
                      {{"ends", {k, k + 1}}, {"r", r}, {"theta", th}});
        }
      }
    }
  }
  S.ends = ends;
  S.axisymmetric = axis;
  S.asymptotic_model = !flat;
  if (flat) S.name = "plane";
  assemble_surface(S);
  return S;
}

Surface plane(double R_max, int n_r, int n_theta) {
  CoreSpec core;
  core.R_max = R_max;
  core.n_r = n_r;
  core.n_theta = n_theta;
  return from_end_data({EndData{}}, core);
}

std::vector<double> laplace_beltrami_apply(const Surface& S, const std::vector<double>& f, Exec exec) {
  const std::size_t N = S.num_nodes();
  std::vector<double> out(N, 0.0);
  const SpMat& K = S.stiffness;
  auto row = [&](std::size_t k) {
    if (S.boundary[k]) return;
    double acc = 0;
    // Column-major storage of a symmetric matrix: column k equals row k.
    for (SpMat::InnerIterator it(K, static_cast<Eigen::Index>(k)); it; ++it) acc += it.value() * f[it.row()];
    out[k] = -acc / S.mass[static_cast<Eigen::Index>(k)];
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(N); ++k) row(static_cast<std::size_t>(k));
  } else {
    for (std::size_t k = 0; k < N; ++k) row(k);
  }
  for (std::size_t c = 0; c < S.mesh.size(); ++c) {
    const ChartMesh& m = S.mesh[c];
    for (int j = 0; j < m.nv; ++j) {
      const int i1 = m.nu - 1;
      out[S.index(c, i1, j)] = 2 * out[S.index(c, i1 - 1, j)] - out[S.index(c, i1 - 2, j)];
      if (!m.pole_left) out[S.index(c, 0, j)] = 2 * out[S.index(c, 1, j)] - out[S.index(c, 2, j)];
    }
  }
  return out;
}

SurfaceDerivatives surface_derivatives(const Surface& S, const std::vector<double>& f) {
  const std::size_t N = S.num_nodes();
  SurfaceDerivatives d;
  d.fu.assign(N, 0);
  d.fv.assign(N, 0);
  d.fuu.assign(N, 0);
  d.fuv.assign(N, 0);
  d.fvv.assign(N, 0);
  for (std::size_t c = 0; c < S.mesh.size(); ++c) {
    const ChartMesh& m = S.mesh[c];
    auto at = [&](int i, int j) {
      j = ((j % m.nv) + m.nv) % m.nv;
      if (i < 0) {
        // Reflection through the polar axis.
        return f[S.index(c, -1 - i, (j + m.nv / 2) % m.nv)];
      }
      return f[S.index(c, i, j)];
    };
    const double hu = m.du, hv = m.dv;
    for (int i = 0; i < m.nu; ++i) {
      for (int j = 0; j < m.nv; ++j) {
        const std::size_t k = S.index(c, i, j);
        auto du_at = [&](int jj) {
          if (i > 0 && i < m.nu - 1) return (at(i + 1, jj) - at(i - 1, jj)) / (2 * hu);
          if (i == 0 && m.pole_left) return (at(1, jj) - at(-1, jj)) / (2 * hu);
          if (i == 0) return (-3 * at(0, jj) + 4 * at(1, jj) - at(2, jj)) / (2 * hu);
          return (3 * at(i, jj) - 4 * at(i - 1, jj) + at(i - 2, jj)) / (2 * hu);
        };
        d.fu[k] = du_at(j);
        if (i > 0 && i < m.nu - 1) {
          d.fuu[k] = (at(i + 1, j) - 2 * at(i, j) + at(i - 1, j)) / (hu * hu);
        } else if (i == 0 && m.pole_left) {
          d.fuu[k] = (at(1, j) - 2 * at(0, j) + at(-1, j)) / (hu * hu);
        } else if (i == 0) {
          d.fuu[k] = (2 * at(0, j) - 5 * at(1, j) + 4 * at(2, j) - at(3, j)) / (hu * hu);
        } else {
          d.fuu[k] = (2 * at(i, j) - 5 * at(i - 1, j) + 4 * at(i - 2, j) - at(i - 3, j)) / (hu * hu);
        }
        if (m.nv > 1) {
          d.fv[k] = (at(i, j + 1) - at(i, j - 1)) / (2 * hv);
          d.fvv[k] = (at(i, j + 1) - 2 * at(i, j) + at(i, j - 1)) / (hv * hv);
          d.fuv[k] = (du_at(j + 1) - du_at(j - 1)) / (2 * hv);
        }
      }
    }
  }
  return d;
}

NormalFields normal_and_fields(const Surface& S) {
  NormalFields F;
  const std::size_t N = S.num_nodes();
  F.nu.resize(N);
  F.z1.resize(N);
  F.z2.resize(N);
  F.z3.resize(N);
  F.z4.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    const auto& G = S.node[k];
    F.nu[k] = G.nu;
    F.z1[k] = G.nu[0];
    F.z2[k] = G.nu[1];
    F.z3[k] = G.nu[2];
    F.z4[k] = -G.Y[1] * G.nu[0] + G.Y[0] * G.nu[1];
  }
  return F;
}

double laplace_beltrami_symmetry_defect(const Surface& S) {
  const std::size_t N = S.num_nodes();
  std::vector<double> a(N), b(N);
  for (std::size_t k = 0; k < N; ++k) {
    const double x = static_cast<double>(k);
    a[k] = S.boundary[k] ? 0.0 : std::sin(0.7 * x) + 0.3 * std::cos(1.3 * x);
    b[k] = S.boundary[k] ? 0.0 : std::cos(0.4 * x + 0.2);
  }
  const auto La = laplace_beltrami_apply(S, a), Lb = laplace_beltrami_apply(S, b);
  double ab = 0, ba = 0, scale = 0;
  for (std::size_t k = 0; k < N; ++k) {
    if (S.boundary[k]) continue;
    const double m = S.mass[static_cast<Eigen::Index>(k)];
    ab += m * La[k] * b[k];
    ba += m * a[k] * Lb[k];
    scale += m * std::abs(La[k] * b[k]);
  }
  return std::abs(ab - ba) / scale;
}

nlohmann::json Surface::describe() const {
  nlohmann::json j;
  j["name"] = name;
  j["R_max"] = R_max;
  j["axisymmetric"] = axisymmetric;
  j["asymptotic_model"] = asymptotic_model;
  j["nodes"] = num_nodes();
  for (std::size_t c = 0; c < charts.size(); ++c) {
    const auto& m = mesh[c];
    j["charts"].push_back({{"kind", charts[c]->kind()},
                           {"orientation", charts[c]->orientation},
                           {"nu", m.nu},
                           {"nv", m.nv},
                           {"u0", m.u0},
                           {"du", m.du},
                           {"pole_left", m.pole_left}});
  }
  for (const auto& e : ends) {
    j["ends"].push_back({{"a", e.a}, {"b", e.b}, {"b1", e.b1}, {"b2", e.b2}, {"sign", e.sign}, {"R0", e.R0}});
  }
  return j;
}

}  // namespace acs
