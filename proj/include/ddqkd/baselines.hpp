#pragma once

// Reference estimators for protocol comparisons.
//
// The source-intensity decoy estimators keep Alice's attenuator at eta1 and
// vary the pair intensity instead.  With yields Y_n = alpha_n(eta1) beta_n
// and gains Q_v = sum_n e^-v v^n/n! Y_n, the usual decoy inequalities bound
// the single-pair yield Y_1.  Alice's detector is outside Eve's reach, so
// the vacuum yield obeys p_d^2 <= Y_0 = p_d beta_0 <= p_d.
//
// The excess-noise bounds mirror the detector-decoy ones with intensity
// differences in place of attenuator differences:
//
//   1 + zeta <= (Omega_mu Q_mu e^mu - Omega_nu1 Q_nu1 e^nu1) / ((mu - nu1) Y_1)
//   1 + zeta <= Omega_v / F_v,   F_v >= v e^-v Y_1 / Q_v   for each non-vacuum v.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "ddqkd/bounds.hpp"
#include "ddqkd/error.hpp"
#include "ddqkd/infomodel.hpp"
#include "ddqkd/observables.hpp"
#include "ddqkd/physmodel.hpp"

namespace ddqkd::baselines {

struct DecoyIntensities {
  double mu_signal = 0.1;
  double nu1 = 0.05;
  double nu2 = 0.0;

  std::array<double, 3> as_array() const { return {mu_signal, nu1, nu2}; }

  void validate_two_decoy() const {
    if (nu1 == nu2)
      throw DegenerateSettingsError("decoy intensities nu1 and nu2 coincide");
    if (!(nu2 >= 0.0 && nu2 < nu1 && nu1 < mu_signal))
      throw DomainError("two-decoy intensities require 0 <= nu2 < nu1 < mu");
    if (!(nu1 + nu2 < mu_signal))
      throw DomainError("two-decoy intensities require nu1 + nu2 < mu");
  }

  void validate_one_decoy() const {
    if (nu1 == mu_signal)
      throw DegenerateSettingsError("decoy intensity equals the signal intensity");
    if (!(nu1 > 0.0 && nu1 < mu_signal))
      throw DomainError("one-decoy intensity requires 0 < nu1 < mu");
  }
};

namespace detail {

/// F and zeta bounds shared by the decoy estimators once Y_1 is bounded.
inline BoundEstimates finish_decoy_bounds(double y1_raw, const DecoyObservables& obs,
                                          const std::array<double, 3>& intensity,
                                          std::size_t n_settings, const ExperimentParams& p,
                                          Estimator estimator) {
  const ClickModel m = ClickModel::from(p);
  const double alpha1 = m.alpha(1, p.eta1);
  BoundEstimates out;
  out.estimator = estimator;
  out.beta0_lb = m.p_dark;
  out.observables_out_of_order = !(obs.gain[0] >= obs.gain[1]);
  const double y1 = std::max(0.0, y1_raw);

  const bounds::Clamped b1 = bounds::clamp_unit(alpha1 > 0.0 ? y1_raw / alpha1 : 0.0);
  out.beta1_raw = b1.raw;
  out.beta1_lb = b1.value;
  out.beta1_clamped = b1.clamped;

  if (!(obs.gain[0] > 0.0))
    throw NumericalGuardError("no postselected frames at the signal intensity");
  const double mu = intensity[0];
  const bounds::Clamped f = bounds::clamp_unit(mu * std::exp(-mu) * y1 / obs.gain[0]);
  out.f_raw = f.raw;
  out.f_lb = f.value;
  out.f_clamped = f.clamped;

  if (!(y1 > 0.0) || !(out.f_lb > 0.0)) {
    out.zeta_guard_tripped = true;
    return out;
  }
  auto bound = [&](const std::array<double, 3>& omega) {
    double best = bounds::kInfinity;
    const double nu1 = intensity[1];
    const double diff_num =
        omega[0] * obs.gain[0] * std::exp(mu) - omega[1] * obs.gain[1] * std::exp(nu1);
    if (diff_num > 0.0)
      best = std::min(best, diff_num / ((mu - nu1) * y1));
    best = std::min(best, omega[0] / out.f_lb);
    for (std::size_t i = 1; i < n_settings; ++i) {
      const double v = intensity[i];
      if (v > 0.0 && obs.gain[i] > 0.0)
        best = std::min(best, omega[i] * obs.gain[i] / (v * std::exp(-v) * y1));
    }
    return best - 1.0;
  };
  out.zeta_t_ub = bound(obs.omega_t);
  out.zeta_w_ub = bound(obs.omega_w);
  return out;
}

} // namespace detail

/// Signal + two decoys.  Y_0 is bounded below by the larger of the decoy
/// estimate and the dark-count floor p_d^2.
inline BoundEstimates two_decoy_bounds(const DecoyObservables& obs, const DecoyIntensities& in,
                                       const ExperimentParams& p) {
  in.validate_two_decoy();
  p.validate();
  const double mu = in.mu_signal, nu1 = in.nu1, nu2 = in.nu2;
  const double q_mu = obs.gain[0], q1 = obs.gain[1], q2 = obs.gain[2];
  const double p_dark = derive(p).p_dark;
  const double y0_lb = std::max((nu1 * q2 * std::exp(nu2) - nu2 * q1 * std::exp(nu1)) / (nu1 - nu2),
                                p_dark * p_dark);
  const double den = mu * nu1 - mu * nu2 - nu1 * nu1 + nu2 * nu2;
  if (!(den > 0.0))
    throw NumericalGuardError("two-decoy denominator is not positive");
  const double y1 = mu / den *
                    (q1 * std::exp(nu1) - q2 * std::exp(nu2) -
                     (nu1 * nu1 - nu2 * nu2) / (mu * mu) * (q_mu * std::exp(mu) - y0_lb));
  return detail::finish_decoy_bounds(y1, obs, in.as_array(), 3, p, Estimator::two_decoy);
}

/// Signal + one decoy, no vacuum.  Y_0 enters with a negative weight and is
/// bounded above by p_d.
inline BoundEstimates one_decoy_bounds(const DecoyObservables& obs, const DecoyIntensities& in,
                                       const ExperimentParams& p) {
  in.validate_one_decoy();
  p.validate();
  const double mu = in.mu_signal, nu = in.nu1;
  const double q_mu = obs.gain[0], q_nu = obs.gain[1];
  const double y0_ub = derive(p).p_dark;
  const double y1 = mu / (mu * nu - nu * nu) *
                    (q_nu * std::exp(nu) - q_mu * std::exp(mu) * nu * nu / (mu * mu) -
                     (mu * mu - nu * nu) / (mu * mu) * y0_ub);
  return detail::finish_decoy_bounds(y1, obs, in.as_array(), 2, p, Estimator::one_decoy);
}

/// Exact quantities computed with full knowledge of beta_n.
struct ExactQuantities {
  double f_eta1 = 0.0;
  double f_eta2 = 0.0;
  double p_eta1 = 0.0;
  double p_eta2 = 0.0;
  double beta1 = 0.0;
};

inline ExactQuantities infinite_decoy_oracle(const ExperimentParams& p, BetaView beta = {}) {
  p.validate();
  validate_beta_sequence(beta);
  const ClickModel m = ClickModel::from(p);
  ExactQuantities q;
  q.beta1 = m.beta(1, beta);
  q.p_eta1 = postselection_probability(m, p.mu, p.eta1, beta);
  q.p_eta2 = postselection_probability(m, p.mu, p.eta2, beta);
  const double p1 = poisson_pn(p.mu, 1);
  q.f_eta1 = q.p_eta1 > 0.0 ? p1 * m.alpha(1, p.eta1) * q.beta1 / q.p_eta1 : 0.0;
  q.f_eta2 = q.p_eta2 > 0.0 ? p1 * m.alpha(1, p.eta2) * q.beta1 / q.p_eta2 : 0.0;
  return q;
}

/// Maximizes a unimodal function on [lo, hi] by golden-section search and
/// returns the abscissa of the best evaluated point.
inline double golden_section_maximize(const std::function<double(double)>& f, double lo,
                                      double hi, double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double best_x = fc >= fd ? c : d;
  double best_f = std::max(fc, fd);
  for (double x : {lo, hi}) {
    const double fx = f(x);
    if (fx > best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  return best_x;
}

inline constexpr double kDefaultOneDecoyNu = 0.05;
// Search range for the weak decoy, as fractions of the signal intensity.
inline constexpr double kNu1SearchLow = 0.01;
inline constexpr double kNu1SearchHigh = 0.95;

struct DecoyEvaluation {
  DecoyIntensities intensities;
  BoundEstimates bounds;
  info::KeyCapacityResult capacity;
};

inline DecoyEvaluation evaluate_two_decoy(const ExperimentParams& p, const NoiseModel& noise,
                                          const DecoyIntensities& in, BetaView beta = {}) {
  const DecoyObservables obs = expected_decoy_observables(p, in.as_array(), noise, beta);
  DecoyEvaluation e{in, two_decoy_bounds(obs, in, p), {}};
  e.capacity = info::capacity_from_bounds(e.bounds.f_lb, e.bounds.zeta_t_ub, e.bounds.zeta_w_ub,
                                          info::InfoModelParams::from(p));
  return e;
}

inline DecoyEvaluation evaluate_one_decoy(const ExperimentParams& p, const NoiseModel& noise,
                                          const DecoyIntensities& in, BetaView beta = {}) {
  const DecoyObservables obs = expected_decoy_observables(p, in.as_array(), noise, beta);
  DecoyEvaluation e{in, one_decoy_bounds(obs, in, p), {}};
  e.capacity = info::capacity_from_bounds(e.bounds.f_lb, e.bounds.zeta_t_ub, e.bounds.zeta_w_ub,
                                          info::InfoModelParams::from(p));
  return e;
}

/// Two-decoy evaluation with nu1 chosen to maximize the key capacity on
/// [0.01 mu, 0.95 mu - nu2], nu2 fixed (vacuum by default).
inline DecoyEvaluation optimize_two_decoy(const ExperimentParams& p, const NoiseModel& noise,
                                          double nu2 = 0.0, BetaView beta = {}) {
  const double lo = std::max(kNu1SearchLow * p.mu, nu2 + kNu1SearchLow * p.mu);
  const double hi = kNu1SearchHigh * p.mu - nu2;
  if (!(hi > lo))
    throw DomainError("no admissible nu1 for the given nu2");
  auto objective = [&](double nu1) {
    return evaluate_two_decoy(p, noise, {p.mu, nu1, nu2}, beta).capacity.delta_i;
  };
  const double nu1 = golden_section_maximize(objective, lo, hi, 1e-6 * p.mu);
  return evaluate_two_decoy(p, noise, {p.mu, nu1, nu2}, beta);
}

} // namespace ddqkd::baselines
