#pragma once

#include <vector>

#include "acs/numerics.hpp"
#include "acs/surface.hpp"

namespace acs {

// Weight 1/(1 + r^4) with r the horizontal distance to the axis.
double decay_weight(double r);

// Discrete -J = K - |A|^2 M restricted to the nodes with r < R that are not
// on the Dirichlet ring. Fields passed in and out use global node numbering.
struct JacobiOperator {
  const Surface* surface = nullptr;
  double R = 0;
  int mode = 0;                      // angular Fourier mode (n_theta = 1 meshes)
  std::vector<long> dof;             // global node -> unknown, -1 on the ring
  std::vector<std::size_t> nodes;    // unknown -> global node
  SpMat A;                           // symmetric, interior unknowns
  Vec mass, weight, A2;              // per unknown

  std::size_t size() const { return nodes.size(); }
  Vec restrict_field(const std::vector<double>& f) const;
  std::vector<double> extend(const Vec& x) const;  // zero on the ring
};

// natural = true keeps the ring nodes as unknowns with zero-flux conditions.
JacobiOperator assemble_jacobi(const Surface& S, double R, int mode = 0, bool natural = false);

// J f = Delta_M f + |A|^2 f at every node (ring values extrapolated).
std::vector<double> jacobi_apply(const Surface& S, const std::vector<double>& f, Exec exec = Exec::Serial);

struct JacobiBasis {
  std::vector<std::vector<double>> z;     // z1..z4
  std::vector<std::vector<double>> zhat;  // q-orthonormal combinations
  std::vector<int> source;                // which z each zhat started from (0-based)
  int J = 0;
  Eigen::MatrixXd gram;                   // integral of q zhat_i zhat_j
};

// Gram-Schmidt of z1..z4 (in that order) under the weight q dV on the
// operator's unknowns. Fields whose norm is below 1e-10 of the largest, or
// that lose all but 1e-8 of their norm to projection, are dropped. On n_theta = 1 meshes only the angle-independent
// fields z3, z4 are representable and z1, z2 are skipped.
JacobiBasis make_basis(const JacobiOperator& op);

struct ProjectedSolution {
  std::vector<double> h;    // global nodal field
  Eigen::VectorXd c;        // multipliers, one per zhat
  double consistency = 0;   // max_i |int f zhat_i + sum_j c_j int q zhat_i zhat_j|
  double orthogonality = 0; // max_i |int q zhat_i h|
};

// Solves J h = f + sum_i c_i q zhat_i with int q zhat_i h = 0 as a symmetric
// saddle-point system.
ProjectedSolution solve_projected(const JacobiOperator& op, const std::vector<double>& f,
                                  const JacobiBasis& basis);

// sign_k beta_k log r on end k, switched off smoothly for r < R0/2, where
// sign_k = (-1)^k is the end's normal orientation.
std::vector<double> log_growth_field(const Surface& S, const std::vector<double>& beta, double R0 = 2.0);

// The bounded correction h is solved with zero-flux conditions on the outer
// ring (a Dirichlet ring would pin h to zero there and bend the log slope).
struct LogJacobiField {
  std::vector<double> p, h, h0;
  std::vector<double> Jp;   // J(p)
  double residual = 0;      // max |J h0| over nodes with r < R/2
  Eigen::VectorXd c;
};

LogJacobiField log_jacobi_field(const Surface& S, const std::vector<double>& beta, double R0 = 2.0);

// Quadrature of f g dV over nodes with r < R (ring nodes at half weight).
double surface_integral(const Surface& S, const std::vector<double>& f, const std::vector<double>& g, double R);

struct WeightedIndex {
  std::vector<double> R;
  std::vector<int> counts;
  std::vector<std::vector<double>> eigenvalues;  // smallest few per R (all modes merged)
  std::vector<std::vector<int>> mode_counts;     // negatives per Fourier mode (axisymmetric meshes)
  int i_M = 0;
  bool stabilized = false;
  bool monotone = true;  // eigenvalues nonincreasing in R, index by index
};

WeightedIndex weighted_index(const Surface& S, const std::vector<double>& R_list, int nev = 4);

}  // namespace acs
