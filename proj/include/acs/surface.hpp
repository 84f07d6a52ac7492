#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "acs/numerics.hpp"

namespace acs {

using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

// Embedding Y(u, v) and its partial derivatives up to third order.
struct ChartJet {
  Vec3 Y, Yu, Yv;
  Vec3 Yuu, Yuv, Yvv;
  Vec3 Yuuu, Yuuv, Yuvv, Yvvv;
};

// Differential geometry of a chart at one parameter point. Index 0 is u,
// index 1 is v. Curvature quantities use the oriented normal nu and the
// shape operator S = g^{-1} L, so that d(nu) = -S dY.
struct PointGeometry {
  Vec3 Y, Yu, Yv, nu;
  Mat2 g, ginv, L, S;
  std::array<Mat2, 2> dg, dL;  // derivatives along u and v
  std::array<Vec3, 2> dnu;
  double sqrtg = 0, H = 0, K = 0, A2 = 0;
  Eigen::Vector2d b0;  // first-order coefficients of the Laplace-Beltrami operator
  double radius = 0;   // horizontal distance |y'|
};

PointGeometry geometry_from_jet(const ChartJet& jet, int orientation);

class Chart {
 public:
  virtual ~Chart() = default;
  virtual ChartJet jet(double u, double v) const = 0;
  virtual std::string kind() const = 0;
  PointGeometry geometry(double u, double v) const { return geometry_from_jet(jet(u, v), orientation); }
  int orientation = 1;
};

// Unit catenoid (cosh s cos th, cosh s sin th, s) in isothermal coordinates.
// Its computed normal is (-cos th, -sin th, sinh s)/cosh s.
class CatenoidChart : public Chart {
 public:
  ChartJet jet(double s, double th) const override;
  std::string kind() const override { return "catenoid"; }
};

// Graph y3 = a L(r) + b + (b1 cos th + b2 sin th) B(r) over polar
// coordinates, where L(r) = log(r^2 + e^2)/2 and B(r) = r/(r^2 + e^2) are the
// core-capped versions of log r and 1/r (e = cap radius).
class GraphChart : public Chart {
 public:
  double a = 0, b = 0, b1 = 0, b2 = 0, cap = 1.0;
  ChartJet jet(double r, double th) const override;
  std::string kind() const override { return "graph"; }
  double height(double r, double th) const;
};

struct EndData {
  double a = 0;        // log coefficient
  double b = 0;        // constant term
  double b1 = 0, b2 = 0;  // dipole coefficients
  int sign = 1;        // orientation of nu on this end
  double R0 = 2.0;     // inner radius of validity
};

// Structured node set of one chart: u_i = u0 + i du (i < nu),
// v_j = j dv (periodic, nv nodes over 2 pi).
struct ChartMesh {
  int nu = 0, nv = 1;
  double u0 = 0, du = 1, dv = 0;
  bool pole_left = false;  // u = 0 is a polar axis (staggered nodes, zero flux)
  std::size_t offset = 0;  // first global node index
  double u(int i) const { return u0 + du * i; }
  double v(int j) const { return dv * j; }
};

struct CoreSpec {
  double R_max = 20.0;
  int n_r = 200;
  int n_theta = 32;
  double cap = 1.0;  // capping radius used for log r and 1/r in the core
};

class Surface {
 public:
  std::string name;
  std::vector<std::shared_ptr<const Chart>> charts;
  std::vector<ChartMesh> mesh;
  std::vector<EndData> ends;
  bool axisymmetric = false;
  bool asymptotic_model = false;
  double R_max = 0;

  // Node caches (global node order: chart, then i, then j).
  std::vector<PointGeometry> node;
  std::vector<char> boundary;  // Dirichlet ring nodes
  SpMat stiffness;             // symmetric Dirichlet-energy matrix on all nodes
  Vec mass;                    // lumped area weights sqrt(g) du dv

  std::size_t num_nodes() const { return node.size(); }
  std::size_t index(int c, int i, int j) const {
    return mesh[c].offset + static_cast<std::size_t>(i) * mesh[c].nv + static_cast<std::size_t>(j);
  }
  // Chart and (i, j) of a global node.
  void locate(std::size_t k, int& c, int& i, int& j) const;
  double area() const { return mass.sum(); }

  nlohmann::json describe() const;
};

Surface catenoid(double R_max, int n_s, int n_theta);
Surface from_end_data(const std::vector<EndData>& ends, const CoreSpec& core);
Surface plane(double R_max, int n_r, int n_theta);

// Discrete Laplace-Beltrami operator -M^{-1} K applied to a nodal field.
// Interior nodes get the divergence-form value; Dirichlet ring nodes get a
// linear extrapolation from the interior.
std::vector<double> laplace_beltrami_apply(const Surface& S, const std::vector<double>& f,
                                           Exec exec = Exec::Serial);

// Central-difference derivatives of a nodal field in chart parameters.
struct SurfaceDerivatives {
  std::vector<double> fu, fv, fuu, fuv, fvv;
};
SurfaceDerivatives surface_derivatives(const Surface& S, const std::vector<double>& f);

struct NormalFields {
  std::vector<Vec3> nu;
  std::vector<double> z1, z2, z3, z4;
};
NormalFields normal_and_fields(const Surface& S);

// Maximum discrete-inner-product asymmetry of the Laplace-Beltrami operator
// over random test fields (relative).
double laplace_beltrami_symmetry_defect(const Surface& S);

}  // namespace acs
