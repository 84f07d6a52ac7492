#include "acs/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Core>

#include "acs/errors.hpp"

namespace acs::io {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot write file", {{"path", path}});
  return f;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_point_data(std::ofstream& f, std::size_t n, const std::vector<NamedField>& fields) {
  if (fields.empty()) return;
  f << "POINT_DATA " << n << "\n";
  for (const auto& [name, v] : fields) {
    if (!v || v->size() != n) throw Error(ErrorCode::InvalidSpec, "field size does not match the points", {{"field", name}});
    f << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double x : *v) f << num(x) << "\n";
  }
}

}  // namespace

void Table::add(std::vector<double> row) {
  if (row.size() != columns.size()) throw Error(ErrorCode::InvalidSpec, "row width does not match the columns");
  rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c] == name) return c;
  throw Error(ErrorCode::InvalidSpec, "no such column", {{"column", name}});
}

void write_csv(const std::string& path, const Table& table) {
  auto f = open_out(path);
  for (std::size_t c = 0; c < table.columns.size(); ++c) f << (c ? "," : "") << table.columns[c];
  f << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) f << (c ? "," : "") << num(row[c]);
    f << "\n";
  }
}

Table read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot read file", {{"path", path}});
  Table t;
  std::string line, cell;
  if (!std::getline(f, line)) return t;
  std::stringstream head(line);
  while (std::getline(head, cell, ',')) t.columns.push_back(cell);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    t.add(std::move(row));
  }
  return t;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  auto f = open_out(path);
  f << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot read file", {{"path", path}});
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, "malformed JSON", {{"path", path}, {"what", e.what()}});
  }
}

std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json versions() {
  return {{"acs", "0.1.0"},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__},
          {"cxx", static_cast<long>(__cplusplus)}};
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j = {{"command", command},   {"config", config},       {"config_hash", config_hash(config)},
                      {"versions", versions()}, {"status", status}, {"artifacts", artifacts}};
  if (!error.is_null()) j["error"] = error;
  return j;
}

Table profile_table(const Profile& p) {
  Table t;
  t.columns = {"t", "w", "w1", "w2", "psi0", "psi1"};
  for (std::size_t i = 0; i < p.t.size(); ++i) t.add({p.t[i], p.w[i], p.w1[i], p.w2[i], p.psi0[i], p.psi1[i]});
  return t;
}

void write_vtk_surface(const std::string& path, const Surface& S, const std::vector<NamedField>& fields) {
  auto f = open_out(path);
  f << "# vtk DataFile Version 3.0\n" << S.name << "\nASCII\nDATASET POLYDATA\n";
  f << "POINTS " << S.num_nodes() << " double\n";
  for (const auto& G : S.node) f << num(G.Y[0]) << " " << num(G.Y[1]) << " " << num(G.Y[2]) << "\n";
  std::vector<std::array<std::size_t, 4>> quads;
  std::vector<std::array<std::size_t, 2>> lines;
  for (std::size_t c = 0; c < S.mesh.size(); ++c) {
    const auto& m = S.mesh[c];
    for (int i = 0; i + 1 < m.nu; ++i) {
      if (m.nv == 1) {
        lines.push_back({S.index(static_cast<int>(c), i, 0), S.index(static_cast<int>(c), i + 1, 0)});
        continue;
      }
      for (int j = 0; j < m.nv; ++j) {
        const int jn = (j + 1) % m.nv;
        const int cc = static_cast<int>(c);
        quads.push_back({S.index(cc, i, j), S.index(cc, i + 1, j), S.index(cc, i + 1, jn), S.index(cc, i, jn)});
      }
    }
  }
  if (!quads.empty()) {
    f << "POLYGONS " << quads.size() << " " << 5 * quads.size() << "\n";
    for (const auto& q : quads) f << "4 " << q[0] << " " << q[1] << " " << q[2] << " " << q[3] << "\n";
  }
  if (!lines.empty()) {
    f << "LINES " << lines.size() << " " << 3 * lines.size() << "\n";
    for (const auto& l : lines) f << "2 " << l[0] << " " << l[1] << "\n";
  }
  write_point_data(f, S.num_nodes(), fields);
}

void write_vtk_structured(const std::string& path, int ni, int nj, const std::vector<Vec3>& points,
                          const std::vector<NamedField>& fields) {
  if (ni < 1 || nj < 1 || points.size() != static_cast<std::size_t>(ni) * nj) {
    throw Error(ErrorCode::InvalidSpec, "structured grid size mismatch");
  }
  auto f = open_out(path);
  f << "# vtk DataFile Version 3.0\nstructured field\nASCII\nDATASET STRUCTURED_GRID\n";
  f << "DIMENSIONS " << ni << " " << nj << " 1\nPOINTS " << points.size() << " double\n";
  for (const auto& x : points) f << num(x[0]) << " " << num(x[1]) << " " << num(x[2]) << "\n";
  write_point_data(f, points.size(), fields);
}

Polyline level_set_slice(const std::function<double(const Vec3&)>& u, double x_lo, double x_hi, double z_lo,
                         double z_hi, int nx, int nz, double level) {
  if (nx < 2 || nz < 2 || !(x_hi > x_lo) || !(z_hi > z_lo)) throw Error(ErrorCode::InvalidSpec, "bad slice box");
  const double hx = (x_hi - x_lo) / (nx - 1), hz = (z_hi - z_lo) / (nz - 1);
  std::vector<double> v(static_cast<std::size_t>(nx) * nz);
  auto id = [nx](int i, int k) { return static_cast<std::size_t>(k) * nx + i; };
  for (int k = 0; k < nz; ++k)
    for (int i = 0; i < nx; ++i) v[id(i, k)] = u(Vec3(x_lo + hx * i, 0, z_lo + hz * k)) - level;
  auto pos = [&](int i, int k) { return Vec3(x_lo + hx * i, 0, z_lo + hz * k); };
  Polyline P;
  // Corners 0..3 counter-clockwise from (i, k); edge e joins corner e and e+1.
  for (int k = 0; k + 1 < nz; ++k) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int ci[4] = {i, i + 1, i + 1, i}, ck[4] = {k, k, k + 1, k + 1};
      double c[4];
      int mask = 0;
      for (int q = 0; q < 4; ++q) {
        c[q] = v[id(ci[q], ck[q])];
        if (c[q] > 0) mask |= 1 << q;
      }
      if (mask == 0 || mask == 15) continue;
      std::vector<int> cut;
      for (int e = 0; e < 4; ++e)
        if (((mask >> e) & 1) != ((mask >> ((e + 1) % 4)) & 1)) cut.push_back(e);
      auto point = [&](int e) {
        const int a = e, b = (e + 1) % 4;
        const double s = c[a] / (c[a] - c[b]);
        return Vec3(pos(ci[a], ck[a]) + s * (pos(ci[b], ck[b]) - pos(ci[a], ck[a])));
      };
      auto segment = [&](int e0, int e1) {
        const int n = static_cast<int>(P.points.size());
        P.points.push_back(point(e0));
        P.points.push_back(point(e1));
        P.segments.push_back({n, n + 1});
      };
      if (cut.size() == 2) {
        segment(cut[0], cut[1]);
      } else {
        // Saddle: connect around the corners that agree with the cell mean.
        const bool mean_pos = c[0] + c[1] + c[2] + c[3] > 0;
        const bool c0_pos = c[0] > 0;
        if (mean_pos == c0_pos) {
          segment(0, 1);
          segment(2, 3);
        } else {
          segment(3, 0);
          segment(1, 2);
        }
      }
    }
  }
  return P;
}

void write_vtk_lines(const std::string& path, const Polyline& P) {
  auto f = open_out(path);
  f << "# vtk DataFile Version 3.0\nlevel set\nASCII\nDATASET POLYDATA\n";
  f << "POINTS " << P.points.size() << " double\n";
  for (const auto& x : P.points) f << num(x[0]) << " " << num(x[1]) << " " << num(x[2]) << "\n";
  f << "LINES " << P.segments.size() << " " << 3 * P.segments.size() << "\n";
  for (const auto& s : P.segments) f << "2 " << s[0] << " " << s[1] << "\n";
}

}  // namespace acs::io
