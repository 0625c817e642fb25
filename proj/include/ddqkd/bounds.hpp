#pragma once

// Detector-decoy estimation chain.
//
// Alice switches her attenuator between eta1 > eta2 while the source
// intensity mu stays fixed.  Writing A_i = alpha_2(eta_i), the combination
//
//   e^mu P(eta1)/A_1 - e^mu P(eta2)/A_2 = sum_n (mu^n/n!) beta_n c_n
//   c_n = alpha_n(eta1)/A_1 - alpha_n(eta2)/A_2
//
// has c_2 = 0 identically and c_n <= 0 for n >= 3, because
// alpha_n(eta1)/alpha_n(eta2) is nonincreasing in n.  Dropping those terms
// and using beta_0 >= p_d yields a lower bound on beta_1 that holds for any
// Bob-side channel.  The single-pair fraction and the excess-noise bounds
// follow from it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddqkd/error.hpp"
#include "ddqkd/observables.hpp"
#include "ddqkd/parallel.hpp"
#include "ddqkd/physmodel.hpp"
#include "ddqkd/rng.hpp"

namespace ddqkd {

/// Algebraic form of the beta_1 bound.  `rederived` subtracts the (negative)
/// vacuum coefficient times p_d and is the tight bound; `paper_literal`
/// adds it, which is looser but still valid.
enum class BoundVariant { rederived, paper_literal };

enum class Estimator { detector_decoy, one_decoy, two_decoy, infinite_decoy };

inline std::string_view to_string(BoundVariant v) {
  return v == BoundVariant::rederived ? "rederived" : "paper-literal";
}

inline std::string_view to_string(Estimator e) {
  switch (e) {
  case Estimator::detector_decoy: return "detector-decoy";
  case Estimator::one_decoy: return "one-decoy";
  case Estimator::two_decoy: return "two-decoy";
  case Estimator::infinite_decoy: return "infinite";
  }
  return "unknown";
}

struct BoundEstimates {
  double beta1_lb = 0.0;
  double beta0_lb = 0.0;
  double f_lb = 0.0;
  double zeta_t_ub = std::numeric_limits<double>::infinity();
  double zeta_w_ub = std::numeric_limits<double>::infinity();
  BoundVariant variant = BoundVariant::rederived;
  Estimator estimator = Estimator::detector_decoy;

  // Unclamped values and the events that altered them.
  double beta1_raw = 0.0;
  double f_raw = 0.0;
  bool beta1_clamped = false;
  bool f_clamped = false;
  bool zeta_guard_tripped = false;      // bounds too loose for a finite zeta
  bool observables_out_of_order = false; // P(eta1) < P(eta2) was observed
};

namespace bounds {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Clamped {
  double raw = 0.0;
  double value = 0.0;
  bool clamped = false;
};

inline Clamped clamp_unit(double raw) {
  const double v = std::clamp(raw, 0.0, 1.0);
  return {raw, v, v != raw};
}

/// Coefficients of the beta_0 / beta_1 terms of the two-setting combination.
struct Beta1Coefficients {
  double a1 = 0.0; // alpha_2(eta1)
  double a2 = 0.0; // alpha_2(eta2)
  double c0 = 0.0; // p_d/A_1 - p_d/A_2, negative
  double c1 = 0.0; // mu [alpha_1(eta1)/A_1 - alpha_1(eta2)/A_2], positive
};

inline void require_distinct_settings(const ExperimentParams& p) {
  if (p.eta1 == p.eta2)
    throw DegenerateSettingsError("attenuator settings eta1 and eta2 coincide");
  p.validate();
}

inline Beta1Coefficients beta1_coefficients(const ExperimentParams& p) {
  require_distinct_settings(p);
  const ClickModel m = ClickModel::from(p);
  Beta1Coefficients k;
  k.a1 = m.alpha(2, p.eta1);
  k.a2 = m.alpha(2, p.eta2);
  if (!(k.a2 > 0.0))
    throw DegenerateSettingsError("eta2 setting can never click (eta2 * eta_alice = 0 and p_d = 0)");
  k.c0 = m.p_dark / k.a1 - m.p_dark / k.a2;
  k.c1 = p.mu * (m.alpha(1, p.eta1) / k.a1 - m.alpha(1, p.eta2) / k.a2);
  if (!(k.c1 > 0.0))
    throw NumericalGuardError("single-pair coefficient is not positive");
  return k;
}

/// Weight of beta_n in e^mu [P(eta1)/A_1 - P(eta2)/A_2].
inline double decomposition_coefficient(const ExperimentParams& p, std::size_t n) {
  const Beta1Coefficients k = beta1_coefficients(p);
  const ClickModel m = ClickModel::from(p);
  const double weight = std::exp(p.mu) * poisson_pn(p.mu, n);
  return weight * (m.alpha(n, p.eta1) / k.a1 - m.alpha(n, p.eta2) / k.a2);
}

/// True when every n >= 3 pair term carries a nonpositive weight, which the
/// beta_1 bound relies on when it drops those terms.  This follows from
/// c1 > 0 (enforced by beta1_coefficients) but fails for some settings with
/// p_d comparable to eta2 * eta_alice, where c1 <= 0 is rejected anyway.
inline bool ratio_condition_holds(const ExperimentParams& p) {
  const ClickModel m = ClickModel::from(p);
  const double a1 = m.alpha(2, p.eta1), a2 = m.alpha(2, p.eta2);
  const std::size_t cap = std::max<std::size_t>(series_term_cap(p.mu), 200);
  for (std::size_t n = 3; n < cap; ++n)
    if (m.alpha(n, p.eta1) / a1 - m.alpha(n, p.eta2) / a2 > 0.0)
      return false;
  return true;
}

inline Clamped beta1_lower_bound_raw(const ChannelObservables& obs, const ExperimentParams& p,
                                     BoundVariant variant = BoundVariant::rederived) {
  obs.validate();
  const Beta1Coefficients k = beta1_coefficients(p);
  const double beta0_lb = derive(p).p_dark;
  const double lhs = std::exp(p.mu) * (obs.p_eta1 / k.a1 - obs.p_eta2 / k.a2);
  const double vacuum = k.c0 * beta0_lb;
  const double raw = variant == BoundVariant::rederived ? (lhs - vacuum) / k.c1
                                                        : (lhs + vacuum) / k.c1;
  return clamp_unit(raw);
}

inline double beta1_lower_bound(const ChannelObservables& obs, const ExperimentParams& p,
                                BoundVariant variant = BoundVariant::rederived) {
  return beta1_lower_bound_raw(obs, p, variant).value;
}

/// F >= alpha_1(eta1) beta1_lb mu e^-mu / P(eta1), from an already clamped beta1_lb.
inline Clamped single_fraction_from_beta1(double beta1_lb, const ChannelObservables& obs,
                                          const ExperimentParams& p) {
  if (!(obs.p_eta1 > 0.0))
    throw NumericalGuardError("no postselected frames at eta1");
  const double alpha1 = ClickModel::from(p).alpha(1, p.eta1);
  return clamp_unit(alpha1 * beta1_lb * poisson_pn(p.mu, 1) / obs.p_eta1);
}

inline double f_lower_bound(const ChannelObservables& obs, const ExperimentParams& p,
                            BoundVariant variant = BoundVariant::rederived) {
  return single_fraction_from_beta1(beta1_lower_bound(obs, p, variant), obs, p).value;
}

struct ZetaBounds {
  double zeta_t = kInfinity;
  double zeta_w = kInfinity;
};

/// Upper bounds on zeta_t, zeta_w: the smallest of the difference bound and
/// the two per-setting ratio bounds, minus one.  Valid for any delta_omega >= 0.
inline ZetaBounds zeta_upper_bounds(const ChannelObservables& obs, const ExperimentParams& p,
                                    double beta1_lb, double f_lb) {
  if (!(beta1_lb > 0.0) || !(f_lb > 0.0))
    throw NumericalGuardError("beta1 or F lower bound is zero; excess noise cannot be bounded");
  require_distinct_settings(p);
  obs.validate();
  if (!(obs.p_eta1 > 0.0))
    throw NumericalGuardError("no postselected frames at eta1");
  const ClickModel m = ClickModel::from(p);
  const double alpha1_eta1 = m.alpha(1, p.eta1);
  const double alpha1_eta2 = m.alpha(1, p.eta2);
  const double diff_den =
      (p.eta1 - p.eta2) * p.eta_alice * (1.0 - m.p_dark) * p.mu * beta1_lb;

  auto bound = [&](double omega1, double omega2) {
    double best = kInfinity;
    // A nonpositive numerator cannot come from a physical channel, so the
    // difference bound is only taken when it is positive.
    const double diff_num = (omega1 * obs.p_eta1 - omega2 * obs.p_eta2) * std::exp(p.mu);
    if (diff_num > 0.0 && diff_den > 0.0)
      best = std::min(best, diff_num / diff_den);
    best = std::min(best, omega1 / f_lb);
    if (alpha1_eta2 > 0.0)
      best = std::min(best, alpha1_eta1 * obs.p_eta2 * omega2 / (alpha1_eta2 * obs.p_eta1 * f_lb));
    return best - 1.0;
  };
  return {bound(obs.omega_t_eta1, obs.omega_t_eta2), bound(obs.omega_w_eta1, obs.omega_w_eta2)};
}

/// Full chain: beta_1, beta_0, F and zeta bounds with clamping recorded.  A
/// zero beta_1 or F bound leaves the zeta bounds at +inf and sets the guard
/// flag instead of throwing.
inline BoundEstimates estimate(const ChannelObservables& obs, const ExperimentParams& p,
                               BoundVariant variant = BoundVariant::rederived) {
  BoundEstimates out;
  out.variant = variant;
  out.estimator = Estimator::detector_decoy;
  out.observables_out_of_order = !obs.ordered();
  const Clamped b1 = beta1_lower_bound_raw(obs, p, variant);
  out.beta1_raw = b1.raw;
  out.beta1_lb = b1.value;
  out.beta1_clamped = b1.clamped;
  out.beta0_lb = derive(p).p_dark;
  const Clamped f = single_fraction_from_beta1(b1.value, obs, p);
  out.f_raw = f.raw;
  out.f_lb = f.value;
  out.f_clamped = f.clamped;
  if (out.beta1_lb > 0.0 && out.f_lb > 0.0) {
    const ZetaBounds z = zeta_upper_bounds(obs, p, out.beta1_lb, out.f_lb);
    out.zeta_t_ub = z.zeta_t;
    out.zeta_w_ub = z.zeta_w;
  } else {
    out.zeta_guard_tripped = true;
  }
  return out;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double sd = 0.0; // standard deviation of the resampled values

  double width() const { return hi - lo; }
};

struct UncertainBounds {
  BoundEstimates point;
  Interval beta1_lb;
  Interval f_lb;
  Interval zeta_t_ub;
  Interval zeta_w_ub;
  std::size_t n_resamples = 0;
  std::size_t guard_trips = 0;
};

inline Interval summarize(std::vector<double> values, double coverage = 0.95) {
  Interval out;
  if (values.empty())
    return out;
  std::sort(values.begin(), values.end());
  const double tail = 0.5 * (1.0 - coverage);
  const double last = static_cast<double>(values.size() - 1);
  out.lo = values[static_cast<std::size_t>(std::floor(tail * last))];
  out.hi = values[static_cast<std::size_t>(std::ceil((1.0 - tail) * last))];
  double mean = 0.0;
  for (double v : values)
    mean += v;
  mean /= static_cast<double>(values.size());
  if (!std::isfinite(mean)) {
    out.sd = kInfinity;
    return out;
  }
  double ss = 0.0;
  for (double v : values)
    ss += (v - mean) * (v - mean);
  out.sd = values.size() > 1 ? std::sqrt(ss / (last)) : 0.0;
  return out;
}

/// Gaussian resampling of the observables with their standard errors.
/// Resample i draws from its own counter-based stream, so the result is a
/// function of (obs, params, n_resamples, seed) only.
inline UncertainBounds propagate_uncertainty(const ChannelObservables& obs,
                                             const ExperimentParams& p,
                                             std::size_t n_resamples, std::uint64_t seed,
                                             BoundVariant variant = BoundVariant::rederived,
                                             std::size_t threads = 1) {
  if (!obs.se)
    throw UnsupportedInputError("propagate_uncertainty requires standard errors on every observable");
  if (n_resamples < 100)
    throw DomainError("propagate_uncertainty needs at least 100 resamples");

  UncertainBounds out;
  out.point = estimate(obs, p, variant);
  out.n_resamples = n_resamples;

  std::vector<double> b1(n_resamples), f(n_resamples), zt(n_resamples), zw(n_resamples);
  std::vector<char> tripped(n_resamples, 0);
  const ObservableErrors& se = *obs.se;
  parallel_for(n_resamples, threads, [&](std::size_t i) {
    rng::Stream stream(seed, i);
    auto prob = [&](double x, double s) { return std::clamp(x + s * stream.normal(), 0.0, 1.0); };
    auto mult = [&](double x, double s) { return std::max(0.0, x + s * stream.normal()); };
    ChannelObservables r;
    r.p_eta1 = prob(obs.p_eta1, se.p_eta1);
    r.p_eta2 = prob(obs.p_eta2, se.p_eta2);
    r.omega_t_eta1 = mult(obs.omega_t_eta1, se.omega_t_eta1);
    r.omega_t_eta2 = mult(obs.omega_t_eta2, se.omega_t_eta2);
    r.omega_w_eta1 = mult(obs.omega_w_eta1, se.omega_w_eta1);
    r.omega_w_eta2 = mult(obs.omega_w_eta2, se.omega_w_eta2);
    try {
      const BoundEstimates e = estimate(r, p, variant);
      b1[i] = e.beta1_lb;
      f[i] = e.f_lb;
      zt[i] = e.zeta_t_ub;
      zw[i] = e.zeta_w_ub;
      tripped[i] = e.zeta_guard_tripped;
    } catch (const NumericalGuardError&) {
      b1[i] = 0.0;
      f[i] = 0.0;
      zt[i] = zw[i] = kInfinity;
      tripped[i] = 1;
    }
  });
  out.guard_trips = static_cast<std::size_t>(std::count(tripped.begin(), tripped.end(), 1));
  out.beta1_lb = summarize(std::move(b1));
  out.f_lb = summarize(std::move(f));
  out.zeta_t_ub = summarize(std::move(zt));
  out.zeta_w_ub = summarize(std::move(zw));
  return out;
}

} // namespace bounds
} // namespace ddqkd
