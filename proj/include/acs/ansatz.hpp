#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "acs/fermi.hpp"
#include "acs/grid.hpp"
#include "acs/profile.hpp"
#include "acs/surface.hpp"

namespace acs {

struct BetaCheck {
  std::string constraint;
  bool ok = true;
  double value = 0;
  double required = 0;
  double margin = 0;  // value - required (or -|sum| for the balance)
};

struct BetaReport {
  std::vector<BetaCheck> checks;
  double required_gap = 0;  // 4 max{1/sigma_-, 1/sigma_+}
  bool ok = true;
  nlohmann::json to_json() const;
};

// Balance sum(beta) = 0 and, for ends with equal log coefficients, the gap
// beta_{k+1} - beta_k > 4 max{1/sigma}. Ends are taken in the given order.
BetaReport validate_beta(const std::vector<EndData>& ends, const std::vector<double>& beta, const Profile& p,
                         double sum_tol = 1e-12);

// u0 = w(t) on the tube grid.
GridField build_u0(const FermiChart& C, const Profile& p);

// |grad h0|^2 = g^{ij} d_i h0 d_j h0 with the chart's central differences.
std::vector<double> gradient_squared(const Surface& S, const std::vector<double>& f);

// u1 = u0 + alpha^2 |A|^2 psi0(t) - alpha^2 |grad h0|^2 psi1(t).
GridField build_u1(const FermiChart& C, const Profile& p);

struct Ansatz {
  const FermiChart* chart = nullptr;
  const Profile* profile = nullptr;
  std::vector<double> beta;
  std::vector<double> A2, grad_h0_sq;  // nodal coefficients of phi1 (before alpha^2)
  GridField u0, u1;
  double phi1_max = 0;  // sup |u1 - u0|
  double phi1_constant = 0;  // sup |u1 - u0| / alpha^2
};

Ansatz build_ansatz(const FermiChart& C, const Profile& p, const std::vector<double>& beta = {});

// The global interpolant eta_delta u1 + (1 - eta_delta) H, optionally plus a
// tube correction zeta_2 phi. Immutable; queries are thread-safe.
class GlobalField {
 public:
  const Ansatz* ansatz = nullptr;
  const GridField* phi = nullptr;

  struct Sample {
    double value = 0;
    double side = 0;      // H(x)
    double eta_delta = 0;
    double t = 0;         // normal coordinate (valid when in_chart)
    bool in_chart = false;
  };

  double operator()(const Vec3& x) const { return sample(x).value; }
  Sample sample(const Vec3& x) const;
  // u1 (plus zeta_2 phi when attached) at a projected point and normal coordinate.
  double tube_value(const SurfacePoint& P, double t) const;
  // +1 on S_+, -1 on S_-. Throws PointOutsideCharts when undecidable.
  double side(const Vec3& x) const;
};

GlobalField build_global(const Ansatz& A, const GridField* phi = nullptr);

// Error of the interpolant in the transition band: E = Delta w + f(w) at
// sample points with 0 < eta_delta < 1 (3-D fourth-order stencil), compared
// with exp(-sigma delta/alpha) (1 + r)^{-4}.
struct TransitionReport {
  int samples = 0;
  double max_E = 0;
  double constant = 0;  // max |E| (1 + r)^4 exp(sigma delta / alpha)
  nlohmann::json to_json() const;
};
TransitionReport transition_error(const GlobalField& W, int node_stride = 8);

// Signed offset of the zero level set of u1 from M_alpha along nu, per node
// (the level set sits near t = 0, i.e. at distance h from M_alpha).
std::vector<double> zero_level_offset(const Ansatz& A);

}  // namespace acs
