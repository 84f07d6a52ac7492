#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "acs/ansatz.hpp"
#include "acs/fermi.hpp"
#include "acs/grid.hpp"
#include "acs/profile.hpp"

namespace acs {

// S(u) = Delta u + f(u) of a tube field through the Fermi representation
// (surface differences per t-slice, fourth-order differences in t).
GridField evaluate_S(const FermiChart& C, const Profile& p, const GridField& u, Exec exec = Exec::Serial);

// S(u0) and S(u1) of the ansatz with analytic t-derivatives of w, psi0, psi1.
GridField residual_u0(const Ansatz& A, Exec exec = Exec::Serial);
GridField residual_u1(const Ansatz& A, Exec exec = Exec::Serial);

// S(u)(x) with a fourth-order 3-D Cartesian stencil of spacing step. Any
// failure of the evaluator on a stencil point is reported as StencilOutOfBounds.
double evaluate_S_cartesian(const std::function<double(const Vec3&)>& u, const Profile& p, const Vec3& x,
                            double step = 0.05);

// Trapezoidal t-quadrature of g(y, t) q(t) over the tube. Beyond the tube
// edges the integrand is continued as edge value times exp(-decay |t - edge|)
// (decay <= 0: no tail), which keeps the quadrature linear in g.
std::vector<double> t_projection(const GridField& g, const std::vector<double>& q, double decay);

// Pi(y) = int S(y, t) w'(t) dt; the tails are continued at rate 2 min sigma,
// the decay of fields proportional to w' times w'.
std::vector<double> project_pi(const GridField& S, const Profile& p);
// c(y) = -int g w' dt / int w'^2 dt, with the same quadrature in both integrals.
std::vector<double> project_c(const GridField& g, const Profile& p);
// The discrete int w'^2 dt on the chart's t-grid.
double w1_norm_squared(const FermiChart& C, const Profile& p);

enum class NormFlavor { Tube, TubeSup, Surface, Star };

struct WeightedNormSpec {
  double p = 6;        // integrability exponent (ignored by TubeSup)
  double mu = 4;       // power of (1 + r) (r the unscaled horizontal radius)
  double sigma = 0.7;  // t-decay rate, must lie in (0, min sigma_+-)
  NormFlavor flavor = NormFlavor::Tube;
  double R_limit = 0;  // only nodes with r <= R_limit; 0 means R_max / 2
  // Tube flavors: only points with alpha |t + h| kappa(y) <= focal_limit, the
  // part of the tube where the normal segment stays well inside the focal
  // distance (0 disables the restriction).
  double focal_limit = 0.3;
  nlohmann::json to_json() const;
};

// sup over tube nodes of (1 + r)^mu e^{sigma |t|} ||f||_{L^p(B)} where B is
// the metric box of half-width 1 around the node (x-units); with TubeSup the
// local L^p norm is replaced by the local maximum. Box members outside the
// focal restriction count as zero.
double weighted_norm(const GridField& f, const WeightedNormSpec& spec);

// ||(1 + r^beta) f||_{L^p(M)} over nodes with r <= R_limit.
double surface_norm(const Surface& S, const std::vector<double>& f, double p, double beta, double R_limit = 0);
// Weighted sup (1 + r)^mu |f| over nodes with r <= R_limit.
double surface_sup(const Surface& S, const std::vector<double>& f, double mu, double R_limit = 0);
// ||h||_* = ||h||_inf + ||(1 + r^2) Dh||_inf + ||D^2 h||_{p, 4 - 4/p}.
double star_norm(const Surface& S, const std::vector<double>& h, double p = 6, double R_limit = 0);

struct ScalingRow {
  double alpha = 0, L = 0;
  double norm_S1 = 0;    // ||S(u1) + alpha^2 Delta_M h1 w'||_{p,mu,sigma}
  double norm_Pi0 = 0;   // weighted sup of Pi(S(u0))
  double norm_S0 = 0;    // ||S(u0)||_{p,mu,sigma} (order alpha^2, for contrast)
  double phi1_max = 0;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  double slope_S1 = 0, slope_Pi0 = 0, slope_S0 = 0;
  WeightedNormSpec spec;
  nlohmann::json to_json() const;
};

// Builds chart and ansatz for each alpha on S with h0 = log Jacobi field of
// beta and h1 = 0 (or the supplied h1), and fits log-log slopes.
ScalingReport residual_scaling(const Surface& S, const Profile& p, const std::vector<double>& alphas,
                               const std::vector<double>& beta, const WeightedNormSpec& spec = {},
                               const std::vector<double>& h1 = {}, Exec exec = Exec::Serial);

}  // namespace acs
