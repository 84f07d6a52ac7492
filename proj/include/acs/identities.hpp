#pragma once

#include <functional>
#include <vector>

#include <json.hpp>

#include "acs/profile.hpp"
#include "acs/surface.hpp"

namespace acs {

using ScalarField3 = std::function<double(const Vec3&)>;

// Side of the infinite cylinder {x1^2 + x2^2 = R^2}. The axial integral is
// taken per end over [z_k - rho, z_k + rho] around the interface height z_k
// found on the line at radius R, and the exponential tails beyond the window
// are added in closed form.
struct CylinderProbe {
  double R = 0;
  double rho = 0;                 // gamma log R with exp(-sigma rho) = R^-2
  double margin = 0;              // search range for z_k around the end estimate
  double dz = 0.05;
  int n_theta = 1;                // 1: u is axisymmetric, the theta integral is 2 pi times one line
  double fd_step = 1e-3;          // central differences for grad u
  std::vector<double> heights;    // end heights a_k log(alpha R)/alpha + b_k/alpha
  double tail_rate = 0;           // decay rate of the integrand beyond the window
};

// Throws ProbeTooSmall when R < 2/alpha.
CylinderProbe make_probe(const Surface& S, const Profile& p, double alpha, double R, int n_theta = 1);

struct PohozaevResult {
  int direction = 3;
  double R = 0;
  double flux = 0;
  std::vector<double> per_end;  // window contributions, tails included
  std::vector<double> centers;  // interface heights z_k (first line)
  double tails = 0;             // part of the flux from the tail completion
};

// Boundary term of int_{C_R} (Delta u + f(u)) Z_i dx for Z_i = d_i u
// (i = 1, 2, 3) and Z_4 = -x2 d1 u + x1 d2 u:
//   i = 3: int u_r u_3,  i = 1, 2: int u_r u_i + (F(u) - |grad u|^2/2) x_i/R,
//   i = 4: int u_r u_theta, with F = -W so that F(+-1) = 0.
PohozaevResult pohozaev(const ScalarField3& u, const Profile& p, int direction, const CylinderProbe& probe);

struct FluxSweep {
  std::vector<double> R, values;
  double limit = 0;        // intercept of values against shape(R)
  double slope = 0;        // coefficient of shape(R)
  double decay = 0;        // -d log|values| / d log R
  nlohmann::json to_json() const;
};

// Linear fit values ~ limit + slope * shape(R) over the two largest radii,
// and the log-log decay exponent of |values| over all of them.
FluxSweep make_sweep(const std::vector<double>& R, const std::vector<double>& values,
                     const std::function<double(double)>& shape = [](double R) { return 1 / R; });

// pohozaev() over a list of probe radii.
FluxSweep pohozaev_sweep(const ScalarField3& u, const Profile& p, const Surface& S, double alpha, int direction,
                         const std::vector<double>& R_list, int n_theta = 1);

// int_{M cap C_R} J(p) z_i dV for the raw log growth field p of beta, over
// the given radii (unscaled surface units); z_i is the i-th normal field
// (1..4). The remainder of the flux is p d_n z on the cut, of size log R / R^2,
// and the limit is extrapolated in that variable.
FluxSweep end_flux_jacobi(const Surface& S, const std::vector<double>& beta, const std::vector<double>& R_list,
                          int which = 3);

struct BalancingReport {
  double sum_a = 0;
  double sum_beta = 0;
  double r_check = 0;
  std::vector<double> normal_defect;  // per end, |nu - sign_k (e3 - a_k rhat/r)| at r ~ r_check
  std::vector<double> r_used;         // node radius used per end
  nlohmann::json to_json() const;
};

// Per-end normal check on the nodes nearest to r_check. sign_k is the limit
// of nu_3 on end k, so nu ~ sign_k (e3 - a_k rhat / r).
BalancingReport balancing(const Surface& S, const std::vector<double>& beta = {}, double r_check = 50.0);

}  // namespace acs
