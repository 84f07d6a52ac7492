#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "acs/profile.hpp"
#include "acs/surface.hpp"

namespace acs::io {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  void add(std::vector<double> row);
  std::size_t column(const std::string& name) const;  // throws InvalidSpec if absent
};

// Numbers are written with %.17g, so a round trip is exact.
void write_csv(const std::string& path, const Table& table);
Table read_csv(const std::string& path);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

// FNV-1a 64 of the compact JSON dump (keys are sorted by nlohmann::json).
std::string config_hash(const nlohmann::json& config);

// Library, Eigen and compiler versions.
nlohmann::json versions();

struct Manifest {
  std::string command;
  nlohmann::json config;
  std::string status = "running";
  std::vector<std::string> artifacts;  // file names relative to the run directory
  nlohmann::json error;
  nlohmann::json to_json() const;
};

// Columns t, w, w1, w2, psi0, psi1 on the profile grid.
Table profile_table(const Profile& p);

using NamedField = std::pair<std::string, const std::vector<double>*>;

// VTK legacy ASCII polydata of the surface nodes: quads on 2-D chart meshes,
// polylines on meridian meshes. Point fields must have one value per node.
void write_vtk_surface(const std::string& path, const Surface& S, const std::vector<NamedField>& fields = {});

// VTK legacy ASCII structured grid of ni x nj points (i fastest).
void write_vtk_structured(const std::string& path, int ni, int nj, const std::vector<Vec3>& points,
                          const std::vector<NamedField>& fields = {});

struct Polyline {
  std::vector<Vec3> points;
  std::vector<std::array<int, 2>> segments;
};

// Marching squares for {u = level} on the slice x2 = 0, x1 in [x_lo, x_hi],
// x3 in [z_lo, z_hi], on an nx x nz node grid. Segment end points are linear
// interpolants on the cell edges; saddle cells are split by the cell mean.
Polyline level_set_slice(const std::function<double(const Vec3&)>& u, double x_lo, double x_hi, double z_lo,
                         double z_hi, int nx, int nz, double level = 0.0);
void write_vtk_lines(const std::string& path, const Polyline& lines);

}  // namespace acs::io
