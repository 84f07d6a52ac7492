#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "acs/numerics.hpp"

namespace acs {

// Balanced bistable nonlinearity f = -W' with analytic derivatives.
struct NonlinearitySpec {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> f_prime;
  std::function<double(double)> f_double_prime;
  std::function<double(double)> W;
  // Closed-form heteroclinic, if known (empty otherwise).
  std::function<double(double)> analytic_profile;
};

NonlinearitySpec cubic_nonlinearity();
// f(u) = sin(pi u)/pi, profile (4/pi) atan(e^t) - 1.
NonlinearitySpec sine_nonlinearity();
// W = (1-u^2)^2 (1+eps u)^2 / 4: balanced but not odd, sigma_+ != sigma_-.
NonlinearitySpec asymmetric_nonlinearity(double eps);
NonlinearitySpec nonlinearity_by_name(const std::string& name);

// Throws InvalidSpec when the bistability checks fail.
void validate_nonlinearity(const NonlinearitySpec& spec);

struct ProfileSample {
  double w, w1, w2, w3;
  double psi0, psi0_1, psi0_2;
  double psi1, psi1_1, psi1_2;
};

struct ProfileOptions {
  int substeps = 8;             // fine-grid refinement of the output spacing
  double centering_tol = 1e-13; // target for |int t w'^2|
  int max_centering_iter = 60;
  double clip = 2.0;            // psi0 formula used on |t| <= T - clip
};

class Profile {
 public:
  NonlinearitySpec spec;
  double T = 0.0;
  int n = 0;
  double dt = 0.0;
  std::vector<double> t, w, w1, w2, psi0, psi1;
  double sigma_plus = 0.0, sigma_minus = 0.0;
  double c_star = 0.0;
  double centering = 0.0;  // int t w'^2 dt after centering
  double center_value = 0.0;  // w(0)
  int centering_iterations = 0;
  double psi0_decay_plus = 0.0, psi0_decay_minus = 0.0;  // fitted tail rates

  // Profile quantities at arbitrary t (quintic Hermite on the fine grid,
  // exponential tails outside it).
  ProfileSample eval(double t) const;
  double w_at(double t) const;
  double f(double u) const { return spec.f(u); }
  double fp(double u) const { return spec.f_prime(u); }
  double fpp(double u) const { return spec.f_double_prime(u); }

  // Internal fine tables (exposed read-only for quadrature oracles).
  HermiteTable fine_w, fine_psi0;
  double tail_A_plus = 0.0, tail_A_minus = 0.0;  // 1 - w ~ A e^{-sigma t}
  double psi0_C_plus = 0.0, psi0_C_minus = 0.0;  // psi0 ~ C e^{-lambda |t|}
  double fine_T = 0.0;

  nlohmann::json header() const;
};

Profile solve_heteroclinic(const NonlinearitySpec& spec, double T, int n,
                           const ProfileOptions& opt = {});

// psi0 sampled on the profile grid (explicit double-integral formula).
std::vector<double> corrector_psi0(const Profile& p);
// Independent cross-check: fourth-order finite differences for the bordered
// boundary value problem psi'' + f'(w) psi = t w', psi(0) = 0.
std::vector<double> corrector_psi0_bvp(const Profile& p);
std::vector<double> corrector_psi1(const Profile& p);

struct ProfileConstants {
  double sigma_plus, sigma_minus, c_star, spectral_gap;
};
ProfileConstants profile_constants(const Profile& p);

// Smallest eigenvalue of -d^2/dt^2 - f'(w) on functions orthogonal to w'
// (Dirichlet at +-T), second-order differences on the profile grid.
double spectral_gap(const Profile& p);

struct ProfileResiduals {
  double w = 0, psi0 = 0, psi1 = 0;  // max interior ODE residuals
};
// ODE residuals measured with sixth-order differences on the output grid.
ProfileResiduals profile_residuals(const Profile& p);

// Moment identities: int f''(w) w'^2 psi0 vs c_star/2 and
// int f''(w) w'^2 psi1 vs int w''' w'.
struct MomentIdentities {
  double psi0_lhs, psi0_rhs, psi1_lhs, psi1_rhs;
};
MomentIdentities moment_identities(const Profile& p);

// Quadrature of int g(t) dt over the fine grid of the profile, g given as a
// function of the sample at t.
double profile_integral(const Profile& p, const std::function<double(double, const ProfileSample&)>& g);

}  // namespace acs
