#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <json.hpp>

#include "acs/ansatz.hpp"
#include "acs/fermi.hpp"
#include "acs/grid.hpp"
#include "acs/jacobi.hpp"
#include "acs/profile.hpp"

namespace acs {

// Model operator L0 = d_tt + alpha^2 Delta_M + f'(w(t)) on the tube grid
// with phi = 0 on the tube edges and on the surface's Dirichlet ring, solved
// under int phi w' dt = 0 at every node. The constrained t-operator is
// diagonalized once; each of its modes then needs one surface solve.
class ProjectedLinearSolver {
 public:
  // Depends on the chart only through alpha, the t-grid and the surface; the
  // chart must outlive the solver.
  ProjectedLinearSolver(const FermiChart& C, const Profile& p);

  struct Result {
    GridField phi;
    std::vector<double> c;     // L0 phi = g + c w' (interior rows)
    double orthogonality = 0;  // max_y |int phi w' dt|
  };
  Result solve(const GridField& g) const;

  // L0 phi on the tube grid (second-order t differences, as in the solve).
  GridField apply(const GridField& phi) const;

  const std::vector<double>& mode_eigenvalues() const { return lambda_; }
  const std::vector<double>& w1() const { return w1_; }
  const std::vector<double>& fp_w() const { return fpw_; }

 private:
  const FermiChart* C_;
  const Profile* p_;
  int n_;                           // interior rows
  std::vector<double> w1_, fpw_;    // w'(t_j), f'(w(t_j)) on all rows
  Eigen::MatrixXd E_;               // orthonormal eigenvectors of the constrained t-operator (n x n-1)
  std::vector<double> lambda_;
  std::vector<long> dof_;           // surface node -> unknown (-1 on the ring)
  std::vector<std::size_t> nodes_;
  std::vector<std::shared_ptr<Eigen::SparseLU<SpMat>>> lu_;
  SpMat K_;
  Vec M_;
};

struct GSplit {
  std::vector<double> G, G1, G2;  // G = G1 + G2 (nodal, on the unscaled M)
  std::vector<double> c;          // c(y) of the phi-equation
};

// N(phi) = f(u1 + phi) - f(u1) - f'(u1) phi and
// B(phi) = zeta_4 (Delta_x - d_tt - alpha^2 Delta_M) phi + (f'(u1) - f'(w)) phi.
GridField nonlinear_remainder(const Ansatz& A, const GridField& phi);
GridField coupling_terms(const Ansatz& A, const ProjectedLinearSolver& L, const GridField& phi,
                         Exec exec = Exec::Serial);

// G(h1) = J(h1) + c(y)/alpha^2 where c is the w'-multiplier of the phi-equation
// built on the chart carrying h1: G1 from S(u1) (phi = 0), G2 from N and B.
GSplit compute_G(const Ansatz& A, const GridField& phi, const ProjectedLinearSolver& L, Exec exec = Exec::Serial);

struct InnerResult {
  GridField phi;
  std::vector<double> c;
  int iterations = 0;         // outer iterations on N
  int krylov_iterations = 0;  // GMRES steps on the linear part, summed
  double last_change = 0;
  double orthogonality = 0;
};

// L0 phi = -S(u1) - B(phi) - N(phi) + c w' with int phi w' dt = 0: the
// linear part is solved by preconditioned GMRES, N by fixed-point iteration.
InnerResult solve_phi(const Ansatz& A, const ProjectedLinearSolver& L, const GridField* start = nullptr,
                      double tol = 1e-12, int max_iter = 50, Exec exec = Exec::Serial);

struct ReductionOptions {
  int max_iter = 10;
  double tol = 1e-8;
  double p = 6;  // exponent in ||.||_*
  int inner_max_iter = 50;
  double inner_tol = 1e-12;
  FermiOptions fermi;
  Exec exec = Exec::Serial;
};

struct IterationRecord {
  int k = 0;
  double h1_star = 0, dh1_star = 0, c_norm = 0, contraction = 0, phi_sup = 0;
  int inner_iterations = 0;
};

struct ReductionState {
  double alpha = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> h0, h1;
  GridField phi;
  std::vector<double> c;           // final c(y)
  Eigen::VectorXd multipliers;     // c_i of the projected Jacobi solve
  std::vector<std::vector<double>> zhat;
  double K = 0;                    // ||h1||_* / alpha
  double absorption = 0;           // max |c(y) + alpha^2 sum c_i q zhat_i| (r <= R_max/2)
  double orthogonality = 0;        // max |int phi w' dt|
  double contraction = 0;          // last successive-difference ratio
  std::vector<IterationRecord> history;
  // Owned chart and ansatz of the final iterate (phi refers to the chart).
  std::shared_ptr<FermiChart> chart;
  std::shared_ptr<Ansatz> ansatz;
  nlohmann::json to_json() const;
};

// h1 <- T(G(h1)) with T the projected Jacobi solve on {r < R_max}.
// Throws NoContraction when the successive-difference ratio stays >= 1 for
// three consecutive iterations.
ReductionState fixed_point(const Surface& S, const Profile& p, double alpha, const std::vector<double>& beta,
                           const ReductionOptions& opt = {});

struct AssembledSolution {
  GridField u;               // w + zeta_2 phi on the tube grid
  GridField residual;        // S(u) - c(y) w' zeta_2 on the tube grid
  double residual_max = 0;   // over the focal-limited core, r <= R_max/2
  double outer_bound = 0;    // exp(-sigma delta / alpha), the dropped outer field's size
  std::vector<double> ctilde;   // projections of S(u) on q zhat_j w'
  nlohmann::json to_json() const;
};

AssembledSolution assemble_solution(const ReductionState& state, Exec exec = Exec::Serial);

}  // namespace acs
