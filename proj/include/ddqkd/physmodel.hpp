#pragma once

// Click and postselection model of an honest time-energy entanglement link.
//
// A weakly pumped SPDC source emits n pairs per frame with Poisson
// statistics.  Alice keeps one photon of each pair and detects it behind a
// variable attenuator of transmittance eta; Bob detects the other after the
// fiber.  Each side has one threshold detector with a per-frame dark-count
// probability p_d, so
//
//   alpha_n(eta) = 1 - (1 - eta * eta_alice)^n (1 - p_d)
//   beta_n       = 1 - (1 - eta_bob * eta_T)^n (1 - p_d)
//
// and a frame is postselected when both sides click.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ddqkd/error.hpp"

namespace ddqkd {

/// Physical and protocol constants of one experiment.
/// Defaults are the SNSPD-based operating point: 0.2 dB/km fiber, 20 ps
/// jitter, 1000 counts/s dark rate, 93 % detectors, 30 ps correlation time.
struct ExperimentParams {
  double mu = 0.1;            // mean pair number per frame
  double eta_alice = 0.93;    // Alice detector efficiency
  double eta_bob = 0.93;      // Bob detector efficiency
  double eta1 = 1.0;          // attenuator setting used for the key
  double eta2 = 0.5;          // weaker attenuator setting
  double alpha_loss = 0.2;    // dB/km
  double distance_km = 0.0;
  int dimension = 8;          // alphabet size d
  double sigma_cor = 30e-12;  // s
  double sigma_jitter = 20e-12; // s
  double dark_rate = 1000.0;  // counts/s
  double recon_eff = 0.9;

  void validate() const {
    auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!(mu >= 0.0) || !std::isfinite(mu))
      throw DomainError("mu must be nonnegative and finite");
    if (!in_unit(eta_alice) || !in_unit(eta_bob))
      throw DomainError("detector efficiencies must lie in [0,1]");
    if (!(eta2 >= 0.0 && eta2 < eta1 && eta1 <= 1.0))
      throw DomainError("attenuator settings require 0 <= eta2 < eta1 <= 1");
    if (!(alpha_loss >= 0.0) || !(distance_km >= 0.0))
      throw DomainError("loss and distance must be nonnegative");
    if (dimension < 2)
      throw DomainError("dimension must be at least 2");
    if (!(sigma_cor > 0.0) || !(sigma_jitter >= 0.0))
      throw DomainError("sigma_cor must be positive and sigma_jitter nonnegative");
    if (!(dark_rate >= 0.0))
      throw DomainError("dark_rate must be nonnegative");
    if (!(recon_eff > 0.0 && recon_eff <= 1.0))
      throw DomainError("recon_eff must lie in (0,1]");
  }
};

/// Fiber transmittance 10^(-alpha L / 10).
inline double channel_transmittance(double alpha_loss_db_per_km, double distance_km) {
  if (!(alpha_loss_db_per_km >= 0.0) || !(distance_km >= 0.0))
    throw DomainError("channel_transmittance: negative loss or distance");
  return std::pow(10.0, -alpha_loss_db_per_km * distance_km / 10.0);
}

/// Measurement frame T_f = 2 sqrt(ln 2) sigma_coh.
inline double frame_duration(double sigma_coh) {
  return 2.0 * std::sqrt(std::numbers::ln2) * sigma_coh;
}

struct DerivedParams {
  double sigma_coh = 0.0;      // d * sigma_cor
  double frame_duration = 0.0; // T_f
  double p_dark = 0.0;         // R_dc * T_f
  double eta_channel = 1.0;    // eta_T
  double i_r = 0.0;            // log2 d bits
};

inline DerivedParams derive(const ExperimentParams& p) {
  DerivedParams d;
  d.sigma_coh = static_cast<double>(p.dimension) * p.sigma_cor;
  d.frame_duration = frame_duration(d.sigma_coh);
  d.p_dark = p.dark_rate * d.frame_duration;
  if (!(d.p_dark < 1.0))
    throw DomainError("dark-count probability per frame must be below 1");
  d.eta_channel = channel_transmittance(p.alpha_loss, p.distance_km);
  d.i_r = std::log2(static_cast<double>(p.dimension));
  return d;
}

/// Poisson probability mu^n e^-mu / n!, evaluated in log space.
inline double poisson_pn(double mu, std::size_t n) {
  if (!(mu >= 0.0))
    throw DomainError("poisson_pn: mu must be nonnegative");
  if (mu == 0.0)
    return n == 0 ? 1.0 : 0.0;
  const double nn = static_cast<double>(n);
  return std::exp(nn * std::log(mu) - mu - std::lgamma(nn + 1.0));
}

namespace detail {
inline void require_probability(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0))
    throw DomainError(std::string(what) + " must lie in [0,1]");
}

// 1 - (1-x)^n (1-p_d) in log space, so small x and p_d keep full precision.
inline double one_minus_no_click(std::size_t n, double x, double p_dark) {
  const double log_miss = (n == 0 ? 0.0 : static_cast<double>(n) * std::log1p(-x)) + std::log1p(-p_dark);
  return -std::expm1(log_miss);
}
} // namespace detail

/// Probability that Alice registers at least one click given n pairs.
inline double alpha_click(std::size_t n, double eta, double eta_alice, double p_dark) {
  detail::require_probability(eta, "eta");
  detail::require_probability(eta_alice, "eta_alice");
  detail::require_probability(p_dark, "p_dark");
  return detail::one_minus_no_click(n, eta * eta_alice, p_dark);
}

/// Honest-channel probability that Bob registers at least one click.
inline double beta_click(std::size_t n, double eta_bob, double eta_channel, double p_dark) {
  detail::require_probability(eta_bob, "eta_bob");
  detail::require_probability(eta_channel, "eta_channel");
  detail::require_probability(p_dark, "p_dark");
  return detail::one_minus_no_click(n, eta_bob * eta_channel, p_dark);
}

/// Per-n Bob click probabilities.  Entry n is beta_n; photon numbers past
/// the end reuse the last entry.  An empty view means "honest channel".
using BetaView = std::span<const double>;

inline void validate_beta_sequence(BetaView beta) {
  for (double b : beta)
    if (!(b >= 0.0 && b <= 1.0))
      throw DomainError("beta sequence entries must lie in [0,1]");
}

/// Both detectors' click model with the derived constants resolved.
struct ClickModel {
  double eta_alice = 0.0;
  double eta_bob = 0.0;
  double eta_channel = 1.0;
  double p_dark = 0.0;

  static ClickModel from(const ExperimentParams& p) {
    const DerivedParams d = derive(p);
    return {p.eta_alice, p.eta_bob, d.eta_channel, d.p_dark};
  }

  double alpha(std::size_t n, double eta) const { return alpha_click(n, eta, eta_alice, p_dark); }

  double beta(std::size_t n, BetaView tampered = {}) const {
    if (tampered.empty())
      return beta_click(n, eta_bob, eta_channel, p_dark);
    return tampered[std::min(n, tampered.size() - 1)];
  }
};

/// Hard cap on the number of series terms, 10 ceil(mu) + 50.
inline std::size_t series_term_cap(double mu) {
  return 10 * static_cast<std::size_t>(std::ceil(mu)) + 50;
}

/// Upper bound on the Poisson mass beyond photon number n, given p_{n+1}.
/// Consecutive ratios p_{k+1}/p_k = mu/(k+1) are at most mu/(n+2) for k > n,
/// so the tail is dominated by a geometric series once n + 2 > mu.
inline double poisson_tail_bound(double mu, std::size_t n, double p_next) {
  const double r = mu / static_cast<double>(n + 2);
  if (r >= 1.0)
    return 1.0;
  return p_next / (1.0 - r);
}

inline constexpr double kSeriesTailTolerance = 1e-15;

/// sum_n Poisson(n; intensity) alpha_n(eta) beta_n over exactly n_terms terms.
inline double postselection_series(const ClickModel& m, double intensity, double eta,
                                   BetaView beta, std::size_t n_terms) {
  validate_beta_sequence(beta);
  double sum = 0.0;
  for (std::size_t n = 0; n < n_terms; ++n) {
    const double pn = poisson_pn(intensity, n);
    if (pn == 0.0 && static_cast<double>(n) > intensity)
      break;
    sum += pn * m.alpha(n, eta) * m.beta(n, beta);
  }
  return sum;
}

/// Number of terms after which the neglected Poisson mass is below 1e-15,
/// capped at series_term_cap(intensity).
inline std::size_t series_terms_needed(double intensity) {
  const std::size_t cap = series_term_cap(intensity);
  for (std::size_t n = 0; n < cap; ++n) {
    if (poisson_tail_bound(intensity, n, poisson_pn(intensity, n + 1)) < kSeriesTailTolerance)
      return n + 1;
  }
  return cap;
}

/// Postselection probability P(eta) at an arbitrary source intensity.  Every
/// term is at most the Poisson weight, so the truncation error is below the
/// neglected Poisson mass.
inline double postselection_probability(const ClickModel& m, double intensity, double eta,
                                        BetaView beta = {}) {
  if (!(intensity >= 0.0))
    throw DomainError("source intensity must be nonnegative");
  detail::require_probability(eta, "eta");
  return postselection_series(m, intensity, eta, beta, series_terms_needed(intensity));
}

/// P_mu^(eta) for the experiment's own source intensity.
inline double postselection_probability(const ExperimentParams& p, double eta,
                                        BetaView beta = {}) {
  return postselection_probability(ClickModel::from(p), p.mu, eta, beta);
}

/// Honest beta_n table for n = 0..length-1.
inline std::vector<double> honest_beta_table(const ClickModel& m, std::size_t length) {
  std::vector<double> out(length);
  for (std::size_t n = 0; n < length; ++n)
    out[n] = m.beta(n);
  return out;
}

} // namespace ddqkd
