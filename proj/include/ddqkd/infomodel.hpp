#pragma once

// Secure-key capacity per postselected coincidence,
//
//   dI = beta I(A;B) - (1 - F) I_R - F chi(A;E)
//
// with a Gaussian time-frequency model for the two information terms.
//
// Mutual information.  Arrival times (t_A, t_B) are jointly Gaussian with
// marginal spread sigma_coh and conditional spread
// sigma~^2 = sigma_cor^2 (1 + zeta_t) + 2 sigma_J^2, giving
// I = 1/2 log2(1 + sigma_coh^2 / sigma~^2).
//
// Holevo bound.  Time and frequency are treated as conjugate quadratures of
// one mode per party, in shot-noise units.  The source is a two-mode
// entangled Gaussian state with quadrature variance V = d, whose Schmidt
// number equals d and whose conditional variance is 1/V, matching
// sigma_cor^2 / sigma_coh^2 = 1/d^2 after scaling.  Eve's collective attack
// adds Gaussian noise N_t = zeta_t / V and N_w = zeta_w / V to Bob's time
// and frequency quadratures, so the conditional variances become
// (1 + zeta)/V.  With Eve holding the purification of rho_AB and Alice
// measuring arrival time,
//
//   chi = S(AB) - S(B | t_A),
//
// each entropy obtained from symplectic eigenvalues through g((nu - 1)/2).
// Detector jitter is not attributed to Eve and does not enter chi.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "ddqkd/error.hpp"
#include "ddqkd/physmodel.hpp"

namespace ddqkd::info {

struct InfoModelParams {
  double sigma_cor = 30e-12;
  double sigma_coh = 240e-12;
  double sigma_jitter = 20e-12;
  int dimension = 8;
  double recon_eff = 0.9;
  double i_r = 3.0;

  static InfoModelParams from(const ExperimentParams& p) {
    const DerivedParams d = derive(p);
    return {p.sigma_cor, d.sigma_coh, p.sigma_jitter, p.dimension, p.recon_eff, d.i_r};
  }
};

/// Excess noise equivalent to broadening the correlation time by
/// delta_sigma: ((sigma_cor + delta_sigma) / sigma_cor)^2 - 1.
inline double zeta_from_broadening(double delta_sigma, double sigma_cor) {
  if (!(sigma_cor > 0.0) || !(delta_sigma >= 0.0))
    throw DomainError("zeta_from_broadening: need sigma_cor > 0 and delta_sigma >= 0");
  const double r = (sigma_cor + delta_sigma) / sigma_cor;
  return r * r - 1.0;
}

/// Von Neumann entropy of a thermal mode with mean photon number x.
inline double g_entropy(double x) {
  if (x <= 0.0)
    return 0.0;
  return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

/// Entropy contribution of a symplectic eigenvalue nu >= 1 (shot-noise units).
inline double symplectic_entropy(double nu) { return g_entropy(0.5 * (nu - 1.0)); }

inline void require_noise(double zeta, const char* what) {
  if (!(zeta >= 0.0))
    throw DomainError(std::string(what) + " must be nonnegative");
}

inline double mutual_info_ab(const InfoModelParams& m, double zeta_t) {
  require_noise(zeta_t, "zeta_t");
  if (std::isinf(zeta_t))
    return 0.0;
  const double spread =
      m.sigma_cor * m.sigma_cor * (1.0 + zeta_t) + 2.0 * m.sigma_jitter * m.sigma_jitter;
  return 0.5 * std::log2(1.0 + m.sigma_coh * m.sigma_coh / spread);
}

/// Symplectic eigenvalues of the attacked two-mode covariance matrix.
/// Blocks: A = V I, B = diag(V + N_t, V + N_w), C = diag(c, -c), c^2 = V^2 - 1.
inline std::array<double, 2> joint_symplectic_eigenvalues(double v, double zeta_t, double zeta_w) {
  const double nt = zeta_t / v;
  const double nw = zeta_w / v;
  const double c2 = v * v - 1.0;
  const double delta = v * v + (v + nt) * (v + nw) - 2.0 * c2;
  const double det = (1.0 + zeta_t) * (1.0 + zeta_w);
  const double disc = std::sqrt(std::max(0.0, delta * delta - 4.0 * det));
  return {std::sqrt(0.5 * (delta + disc)), std::sqrt(std::max(1.0, 0.5 * (delta - disc)))};
}

/// Symplectic eigenvalue of Bob's mode after Alice's time measurement.
inline double conditional_symplectic_eigenvalue(double v, double zeta_t, double zeta_w) {
  return std::sqrt((1.0 / v + zeta_t / v) * (v + zeta_w / v));
}

inline double holevo_upper_bound(const InfoModelParams& m, double zeta_t, double zeta_w) {
  require_noise(zeta_t, "zeta_t");
  require_noise(zeta_w, "zeta_w");
  if (std::isinf(zeta_t) || std::isinf(zeta_w))
    return std::numeric_limits<double>::infinity();
  const double v = static_cast<double>(m.dimension);
  const auto nu = joint_symplectic_eigenvalues(v, zeta_t, zeta_w);
  const double s_ab = symplectic_entropy(nu[0]) + symplectic_entropy(nu[1]);
  const double s_b_given_a = symplectic_entropy(conditional_symplectic_eigenvalue(v, zeta_t, zeta_w));
  return std::max(0.0, s_ab - s_b_given_a);
}

struct KeyCapacityResult {
  double delta_i = 0.0;
  double mutual_info = 0.0;
  double holevo_ub = 0.0;
  double f_used = 0.0;
  // beta I(A;B), -(1 - F) I_R, -F chi; they sum to delta_i.
  std::array<double, 3> terms{};
};

/// Evaluates the key-capacity bound.  I(A;B) is taken at the zeta_t upper
/// bound.  Negative results mean no key and are returned unclamped.
inline KeyCapacityResult secure_key_capacity(double f_lb, double zeta_t_ub, double zeta_w_ub,
                                             const InfoModelParams& m) {
  if (!(f_lb >= 0.0 && f_lb <= 1.0))
    throw DomainError("f_lb must lie in [0,1]");
  KeyCapacityResult r;
  r.f_used = f_lb;
  r.mutual_info = mutual_info_ab(m, zeta_t_ub);
  r.holevo_ub = holevo_upper_bound(m, zeta_t_ub, zeta_w_ub);
  r.terms[0] = m.recon_eff * r.mutual_info;
  r.terms[1] = -(1.0 - f_lb) * m.i_r;
  // With F = 0 no single-pair event carries key, whatever chi is.
  r.terms[2] = f_lb == 0.0 ? 0.0 : -f_lb * r.holevo_ub;
  r.delta_i = r.terms[0] + r.terms[1] + r.terms[2];
  return r;
}

/// Capacity from estimator output.  Excess noise is physically nonnegative,
/// so upper bounds that fall below zero under finite statistics are raised
/// to zero before evaluation.
inline KeyCapacityResult capacity_from_bounds(double f_lb, double zeta_t_ub, double zeta_w_ub,
                                              const InfoModelParams& m) {
  return secure_key_capacity(f_lb, std::max(0.0, zeta_t_ub), std::max(0.0, zeta_w_ub), m);
}

} // namespace ddqkd::info
