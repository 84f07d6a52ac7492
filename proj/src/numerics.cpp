#include "acs/numerics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include "acs/errors.hpp"

namespace acs {
class LinearOperator;
}

namespace Eigen::internal {
template <>
struct traits<acs::LinearOperator> : public traits<SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace acs {

// Wraps a callable as a square operator Eigen's Krylov solvers can apply.
class LinearOperator : public Eigen::EigenBase<LinearOperator> {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

  LinearOperator(const std::function<Vec(const Vec&)>& f, Eigen::Index n) : f_(&f), n_(n) {}
  Eigen::Index rows() const { return n_; }
  Eigen::Index cols() const { return n_; }
  template <typename Rhs>
  Eigen::Product<LinearOperator, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<LinearOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }
  Vec apply(const Vec& x) const { return (*f_)(x); }

 private:
  const std::function<Vec(const Vec&)>* f_;
  Eigen::Index n_;
};

}  // namespace acs

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<acs::LinearOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<acs::LinearOperator, Rhs, generic_product_impl<acs::LinearOperator, Rhs>> {
  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const acs::LinearOperator& lhs, const Rhs& rhs, const double& alpha) {
    dst.noalias() += alpha * lhs.apply(rhs);
  }
};
}  // namespace Eigen::internal

namespace acs {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  LineFit fit;
  if (n < 2 || y.size() != n) return fit;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = (sxx > 0 && syy > 0) ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) lx[i] = std::log(x[i]);
  for (std::size_t i = 0; i < y.size(); ++i) ly[i] = std::log(std::abs(y[i]));
  return fit_line(lx, ly);
}

double cutoff_eta(double s) {
  if (s <= 1.0) return 1.0;
  if (s >= 2.0) return 0.0;
  const double x = s - 1.0;
  return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

double cutoff_eta_d1(double s) {
  if (s <= 1.0 || s >= 2.0) return 0.0;
  const double x = s - 1.0;
  return -30.0 * x * x * (1.0 - x) * (1.0 - x);
}

double cutoff_eta_d2(double s) {
  if (s <= 1.0 || s >= 2.0) return 0.0;
  const double x = s - 1.0;
  return -60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
}

std::vector<double> cumulative_integral(const std::vector<double>& g,
                                        const std::vector<double>& dg, double h) {
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t i = 1; i < g.size(); ++i) {
    out[i] = out[i - 1] + 0.5 * h * (g[i - 1] + g[i]) - h * h / 12.0 * (dg[i] - dg[i - 1]);
  }
  return out;
}

void HermiteTable::eval(double x, double& f, double& f1, double& f2) const {
  const std::size_t n = v.size();
  double pos = (x - x0) / h;
  std::size_t i = pos <= 0 ? 0 : static_cast<std::size_t>(pos);
  if (i >= n - 1) i = n - 2;
  const double u = pos - static_cast<double>(i);
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
  const double H0 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
  const double H1 = u - 6 * u3 + 8 * u4 - 3 * u5;
  const double H2 = 0.5 * (u2 - 3 * u3 + 3 * u4 - u5);
  const double H5 = 10 * u3 - 15 * u4 + 6 * u5;
  const double H4 = -4 * u3 + 7 * u4 - 3 * u5;
  const double H3 = 0.5 * (u3 - 2 * u4 + u5);
  const double D0 = -30 * u2 + 60 * u3 - 30 * u4;
  const double D1 = 1 - 18 * u2 + 32 * u3 - 15 * u4;
  const double D2 = 0.5 * (2 * u - 9 * u2 + 12 * u3 - 5 * u4);
  const double D5 = -D0;
  const double D4 = -12 * u2 + 28 * u3 - 15 * u4;
  const double D3 = 0.5 * (3 * u2 - 8 * u3 + 5 * u4);
  const double S0 = -60 * u + 180 * u2 - 120 * u3;
  const double S1 = -36 * u + 96 * u2 - 60 * u3;
  const double S2 = 0.5 * (2 - 18 * u + 36 * u2 - 20 * u3);
  const double S5 = -S0;
  const double S4 = -24 * u + 84 * u2 - 60 * u3;
  const double S3 = 0.5 * (6 * u - 24 * u2 + 20 * u3);
  const double a0 = v[i], a1 = h * d1[i], a2 = h * h * d2[i];
  const double b0 = v[i + 1], b1 = h * d1[i + 1], b2 = h * h * d2[i + 1];
  f = a0 * H0 + a1 * H1 + a2 * H2 + b0 * H5 + b1 * H4 + b2 * H3;
  f1 = (a0 * D0 + a1 * D1 + a2 * D2 + b0 * D5 + b1 * D4 + b2 * D3) / h;
  f2 = (a0 * S0 + a1 * S1 + a2 * S2 + b0 * S5 + b1 * S4 + b2 * S3) / (h * h);
}

std::vector<double> second_derivative_o6(const std::vector<double>& f, double h) {
  static const double c[7] = {1.0 / 90, -3.0 / 20, 1.5, -49.0 / 18, 1.5, -3.0 / 20, 1.0 / 90};
  std::vector<double> out(f.size(), 0.0);
  if (f.size() < 7) return out;
  for (std::size_t i = 3; i + 3 < f.size(); ++i) {
    double s = 0;
    for (int k = 0; k < 7; ++k) s += c[k] * f[i + k - 3];
    out[i] = s / (h * h);
  }
  return out;
}

int negative_inertia(const SpMat& K) {
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(K);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "LDL^T factorization failed in inertia count");
  }
  const Vec d = ldlt.vectorD();
  int neg = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) {
      throw Error(ErrorCode::SingularSystem, "non-finite pivot in inertia count");
    }
    if (d[i] < 0) ++neg;
  }
  return neg;
}

EigenPairs generalized_dense(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
  EigenPairs out;
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::NoConvergence, "dense generalized eigensolver failed");
  }
  out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  out.vectors = es.eigenvectors();
  out.converged = true;
  return out;
}

EigenPairs generalized_smallest(const SpMat& K, const SpMat& M, int nev, double shift, double tol,
                                int max_iter) {
  const Eigen::Index n = K.rows();
  const int block = std::min<int>(static_cast<int>(n), nev + 6);
  SpMat A = K - shift * M;
  A.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "shift-invert factorization failed");
  }
  // Deterministic start block.
  Eigen::MatrixXd X(n, block);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < block; ++j) {
      X(i, j) = std::sin(0.37 * (i + 1) * (j + 1) + 0.11 * j) + (j == 0 ? 1.0 : 0.0);
    }
  }
  EigenPairs out;
  std::vector<double> prev;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd Y = lu.solve(M * X);
    // M-orthonormalize via Cholesky of the Gram matrix, with a QR fallback.
    Eigen::MatrixXd G = Y.transpose() * (M * Y);
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
      Y = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
      G = Y.transpose() * (M * Y);
      llt.compute(G);
    }
    Y = llt.matrixU().solve<Eigen::OnTheRight>(Y);
    Eigen::MatrixXd Kr = Y.transpose() * (K * Y);
    Eigen::MatrixXd Mr = Y.transpose() * (M * Y);
    Kr = 0.5 * (Kr + Kr.transpose());
    Mr = 0.5 * (Mr + Mr.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Kr, Mr);
    X = Y * es.eigenvectors();
    std::vector<double> vals(es.eigenvalues().data(), es.eigenvalues().data() + block);
    // Residual of the wanted pairs.
    double res = 0;
    for (int j = 0; j < nev && j < block; ++j) {
      Vec r = K * X.col(j) - vals[j] * (M * X.col(j));
      const double scale = std::max(1.0, std::abs(vals[j])) * (M * X.col(j)).norm();
      res = std::max(res, r.norm() / scale);
    }
    out.iterations = it + 1;
    out.residual = res;
    out.values.assign(vals.begin(), vals.begin() + std::min(nev, block));
    if (res < tol) {
      out.converged = true;
      break;
    }
  }
  out.vectors = X.leftCols(std::min(nev, block));
  return out;
}

double principal_angle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Vec& w) {
  const Vec sw = w.cwiseSqrt();
  Eigen::MatrixXd As = sw.asDiagonal() * A;
  Eigen::MatrixXd Bs = sw.asDiagonal() * B;
  Eigen::HouseholderQR<Eigen::MatrixXd> qa(As), qb(Bs);
  Eigen::MatrixXd Qa = qa.householderQ() * Eigen::MatrixXd::Identity(As.rows(), As.cols());
  Eigen::MatrixXd Qb = qb.householderQ() * Eigen::MatrixXd::Identity(Bs.rows(), Bs.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Qa.transpose() * Qb);
  const auto& s = svd.singularValues();
  const double smin = std::min(1.0, s[s.size() - 1]);
  return std::acos(std::max(-1.0, smin));
}

KrylovResult gmres_solve(const std::function<Vec(const Vec&)>& op, const Vec& b, const Vec& x0, double tol,
                         int max_iter, int restart) {
  const LinearOperator A(op, b.size());
  Eigen::GMRES<LinearOperator, Eigen::IdentityPreconditioner> solver;
  solver.compute(A);
  solver.setTolerance(tol);
  solver.setMaxIterations(max_iter);
  solver.set_restart(restart);
  KrylovResult r;
  r.x = solver.solveWithGuess(b, x0);
  r.iterations = static_cast<int>(solver.iterations());
  r.relative_residual = solver.error();
  r.converged = solver.info() == Eigen::Success;
  return r;
}

}  // namespace acs
