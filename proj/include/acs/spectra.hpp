#pragma once

#include <functional>
#include <vector>

#include <json.hpp>

#include "acs/numerics.hpp"
#include "acs/profile.hpp"
#include "acs/surface.hpp"

namespace acs {

using ScalarField3 = std::function<double(const Vec3&)>;

// Structured grid on the meridian tube {X = Y(s)/alpha + t nu(s), |t| <= T}
// of an axisymmetric surface, cut at the cylinder radius R.
struct MeridianGrid {
  int n_s = 241;     // nodes along the meridian parameter
  double dt = 0.1;   // normal spacing (x units)
  double T = 8.0;    // half-width about the interface; clipped to 0.8 / (alpha |k|) per line
};

// Geometry and samples of u on the tube, shared by all Fourier modes. The
// t grid is common to all lines; line i uses the window j_lo[i]..j_hi[i]
// around its interface offset h[i], with Dirichlet nodes at both ends.
// Outside the window u is continued by its value at the nearer end.
struct MeridianTube {
  const Surface* surface = nullptr;
  double alpha = 0, R = 0, T = 0, du = 0, dt = 0;
  int ns = 0, nt = 0;
  bool axis = false;               // the parameter starts on the symmetry axis (plane)
  std::vector<double> s;           // chart parameter of the nodes
  std::vector<double> t;
  std::vector<double> h;           // zero of u on each line (0 when u has none)
  std::vector<int> j_lo, j_hi;
  // Node-major arrays (index i * nt + j).
  std::vector<double> u, fpu;      // u and f'(u)
  std::vector<double> r, a;        // radius and meridian scale factor at nodes
  std::vector<double> r_half, a_half;  // at (s_{i+1/2}, t_j), size (ns - 1) * nt
  std::vector<double> r_thalf, a_thalf;  // at (s_i, t_{j+1/2}), size ns * (nt - 1)
  std::vector<Vec3> x;             // Cartesian node positions (theta = 0)
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * nt + static_cast<std::size_t>(j); }
  bool in_window(int i, int j) const { return j >= j_lo[i] && j <= j_hi[i]; }
};

// Samples u on the tube. Supports the single-chart axisymmetric surfaces
// (catenoid, plane). Throws NotInjective when the tube meets a focal point.
MeridianTube build_tube(const ScalarField3& u, const Profile& p, const Surface& S, double alpha, double R,
                        const MeridianGrid& grid = {}, Exec exec = Exec::Serial);

// Fourier mode m of -Delta - f'(u) with the weight p = 1/(1 + (alpha r)^4):
//   K phi = lambda M phi.
// Dirichlet on |t| = T; on the cut at radius R either Dirichlet or the
// natural (zero-flux) condition. The 2 pi of the angle is left out of K and M.
struct LinearizedOperator {
  const MeridianTube* tube = nullptr;
  int mode = 0;
  bool natural_outer = false;
  std::vector<long> dof;            // node -> unknown, -1 on Dirichlet nodes
  std::vector<std::size_t> nodes;   // unknown -> node
  SpMat K, M;
  Vec weight;                       // p at the unknowns
  Vec volume;                       // a r du dt at the unknowns
  double weight_lo = 1, weight_hi = 1;  // p (1 + (alpha r)^4) range
  double symmetry_defect = 0;

  std::size_t size() const { return nodes.size(); }
  Vec restrict_field(const std::vector<double>& f) const;
  std::vector<double> extend(const Vec& x) const;
};

LinearizedOperator assemble_linearized(const MeridianTube& tube, int mode, bool natural_outer = false);

struct SpectralResult {
  double alpha = 0, R = 0;
  int mode = 0;
  int n_s = 0, n_t = 0;
  std::vector<double> eigenvalues;  // ascending
  std::vector<double> scaled;       // lambda / alpha^2
  int negative_count = 0;           // inertia of K
  Eigen::MatrixXd vectors;          // M-orthonormal columns
  double orthogonality = 0;         // max |V^T M V - I|
  nlohmann::json to_json() const;
};

// Smallest nev eigenpairs; the shift is lowered until no eigenvalue lies
// below it.
SpectralResult solve_spectrum(const LinearizedOperator& op, int nev);

struct MorseRow {
  double R = 0;
  int grid = 0;
  std::vector<int> mode_counts;  // per Fourier mode
  int count = 0;                 // modes m >= 1 counted twice (cos, sin)
  double lambda_min = 0;
  std::vector<double> eigenvalues;  // mode 0, ascending
};

struct MorseReport {
  double alpha = 0;
  std::vector<MorseRow> rows;
  int m_u = -1;                  // agreed count, -1 when the runs disagree
  bool stabilized = false;
  bool monotone_in_R = true;
  double lambda_min = 0;         // from the finest grid at the largest R
  double mu_hat = 0;             // -lambda_min / alpha^2
  nlohmann::json to_json() const;
};

// Negative counts over all (R, grid) pairs and Fourier modes 0..max_mode.
MorseReport morse_index(const ScalarField3& u, const Profile& p, const Surface& S, double alpha,
                        const std::vector<double>& R_list, const std::vector<MeridianGrid>& grids, int max_mode = 2,
                        Exec exec = Exec::Serial);

// Z_i on the tube by central differences of u (fd step 1e-3): Z3 = d_3 u in
// mode 0, and the common mode-1 profile of Z1 = cos(theta) u_r, Z2 = sin(theta) u_r.
struct KernelFields {
  std::vector<double> z3, z1;
  double z4_max = 0;  // max |-x2 d1 u + x1 d2 u| over nodes rotated off the meridian plane
};
KernelFields kernel_fields(const ScalarField3& u, const MeridianTube& tube, double fd_step = 1e-3);

// Rayleigh quotient x^T K x / x^T M x of a nodal field.
double rayleigh_quotient(const LinearizedOperator& op, const std::vector<double>& f);

// Discretization floor: Rayleigh quotient of w'(x3) for the flat interface
// u = w(x3) on the same tube parameters (natural outer condition).
double calibration_floor(const Profile& p, double alpha, double R, const MeridianGrid& grid);

struct KernelReport {
  double alpha = 0, R = 0;
  double floor = 0, kernel_tol = 0;  // kernel_tol = 10 floor
  double rq_z3 = 0, rq_z1 = 0;       // Rayleigh quotients (Z2 equals Z1)
  double z4_max = 0;
  std::vector<double> mode0, mode1;  // smallest eigenvalues, natural outer condition
  int near_kernel_dim = 0;           // mode 0 count + 2 x mode 1 count
  double angle_deg = 90;             // largest principal angle to span{Z_i}
  bool pass = false;                 // |rq| <= kernel_tol, z4 <= 1e-10, dim 3, angle <= 5 deg
  bool at_floor = false;             // |rq_z1|, |rq_z3| <= floor
  nlohmann::json to_json() const;
};

// Kernel structure with a zero-flux cut at R: the Z_i are kernel elements up
// to discretization and the exponentially small tube truncation.
KernelReport kernel_check(const ScalarField3& u, const Profile& p, const Surface& S, double alpha, double R,
                          const MeridianGrid& grid = {}, Exec exec = Exec::Serial);

// phi = k(s) w'(t - h(s)) + phi_perp with int phi_perp w'(t - h) dt = 0 on
// every meridian line; h is the zero of u on the line.
struct Decomposition {
  std::vector<double> k;         // per meridian node
  std::vector<double> phi_perp;  // tube nodes
  double perp_ratio = 0;         // ||phi_perp||_M / ||phi||_M
  double max_projection = 0;     // max_i |int phi_perp w'(t - h) dt|
  double decay_rate = 0;         // fitted rate of max_s |phi| in |t - h|, smaller side
  double outside_ratio = 0;      // max |phi| beyond |t - h| > T - 2 over max |phi|
};
Decomposition decompose_eigenfunction(const MeridianTube& tube, const Profile& p, const std::vector<double>& phi);

struct QuadraticFormReport {
  double Q3 = 0;         // 2 pi v^T K v, v = k w'(t - h) on the tube (Dirichlet operator)
  double Q_surface = 0;  // Jacobi form int |grad k|^2 - |A|^2 k^2 on M
  double ratio = 0;      // Q3 / Q_surface, expected c_star
  double discrepancy = 0;  // |ratio - c_star| / c_star
  nlohmann::json to_json() const;
};

// k is a nodal field on the meridian surface mesh (interpolated in s) and must
// vanish near the cut.
QuadraticFormReport quadratic_form_compare(const LinearizedOperator& op, const Profile& p, const std::vector<double>& k);

}  // namespace acs
