#pragma once

#include <functional>

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace acs {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// Execution policy for the node-parallel kernels. Serial is the reference
// implementation; Parallel must reproduce it bit for bit.
enum class Exec { Serial, Parallel };

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
// Least-squares slope of log|y| against log x.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// Quintic smoothstep cutoff: 1 for s <= 1, 0 for s >= 2, C^2 in between.
double cutoff_eta(double s);
double cutoff_eta_d1(double s);
double cutoff_eta_d2(double s);

// Cumulative integral of g on a uniform grid with spacing h, using the
// end-corrected trapezoid rule (fourth order) with analytic derivative dg.
// out[0] = 0, out[i] = integral from x_0 to x_i.
std::vector<double> cumulative_integral(const std::vector<double>& g,
                                        const std::vector<double>& dg, double h);

// Quintic Hermite interpolation on a uniform grid carrying value, first and
// second derivative at each node.
struct HermiteTable {
  double x0 = 0.0;
  double h = 1.0;
  std::vector<double> v, d1, d2;

  std::size_t size() const { return v.size(); }
  double x_max() const { return x0 + h * static_cast<double>(v.size() - 1); }
  // Value and first two derivatives at x (x must lie inside the table).
  void eval(double x, double& f, double& f1, double& f2) const;
};

// Second derivative by the 7-point sixth-order central stencil, on nodes
// 3..n-4; the remaining entries are zero.
std::vector<double> second_derivative_o6(const std::vector<double>& f, double h);

// Number of negative eigenvalues of a symmetric sparse matrix (Sylvester
// inertia from an LDL^T factorization).
int negative_inertia(const SpMat& K);

struct EigenPairs {
  std::vector<double> values;
  Eigen::MatrixXd vectors;  // columns, M-orthonormal
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Smallest `nev` eigenpairs of K x = lambda M x (K symmetric, M symmetric
// positive definite) nearest above `shift`, by shift-invert block iteration
// with Rayleigh-Ritz.
EigenPairs generalized_smallest(const SpMat& K, const SpMat& M, int nev, double shift,
                                double tol = 1e-10, int max_iter = 300);

// Dense generalized eigenproblem for small systems (all pairs, ascending).
EigenPairs generalized_dense(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M);

// Largest principal angle (radians) between the column spans of A and B under
// the inner product <x, y> = x^T W y with W diagonal (weights as a vector).
double principal_angle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Vec& w);

struct KrylovResult {
  Vec x;
  int iterations = 0;
  double relative_residual = 0;
  bool converged = false;
};

// Matrix-free restarted GMRES (Eigen's implementation) for op(x) = b.
KrylovResult gmres_solve(const std::function<Vec(const Vec&)>& op, const Vec& b, const Vec& x0, double tol,
                         int max_iter, int restart = 60);

}  // namespace acs
