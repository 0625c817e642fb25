#pragma once

// Aggregate observables consumed by the estimators, and their exact
// expectations under a known channel.
//
// Each postselected frame carries an excess-noise multiplier: frames that
// originated from a single pair broaden the time (frequency) correlation by
// (1 + zeta_t) ((1 + zeta_w)); all other postselected frames contribute a
// constant delta_omega.  The averaged multiplier of a setting is therefore
//
//   Omega = F (1 + zeta) + delta_omega (1 - F)
//
// with F the single-pair fraction of that setting's postselections.

#include <array>
#include <cmath>
#include <optional>

#include "ddqkd/error.hpp"
#include "ddqkd/physmodel.hpp"

namespace ddqkd {

struct NoiseModel {
  double zeta_t = 0.0;
  double zeta_w = 0.0;
  double delta_omega_t = 1.0;
  double delta_omega_w = 1.0;

  /// Multiphoton frames as noisy as single-pair frames (delta_omega = 1 + zeta).
  static NoiseModel matched(double zeta_t, double zeta_w) {
    return {zeta_t, zeta_w, 1.0 + zeta_t, 1.0 + zeta_w};
  }

  void validate() const {
    if (!(zeta_t >= 0.0) || !(zeta_w >= 0.0))
      throw DomainError("excess-noise factors must be nonnegative");
    if (!(delta_omega_t >= 0.0) || !(delta_omega_w >= 0.0))
      throw DomainError("delta_omega must be nonnegative");
  }
};

inline double expected_multiplier(double single_fraction, double zeta, double delta_omega) {
  return single_fraction * (1.0 + zeta) + delta_omega * (1.0 - single_fraction);
}

/// Standard errors of the detector-decoy observables.
struct ObservableErrors {
  double p_eta1 = 0.0;
  double p_eta2 = 0.0;
  double omega_t_eta1 = 0.0;
  double omega_t_eta2 = 0.0;
  double omega_w_eta1 = 0.0;
  double omega_w_eta2 = 0.0;
};

/// Measured quantities of the two attenuator settings.
struct ChannelObservables {
  double p_eta1 = 0.0;
  double p_eta2 = 0.0;
  double omega_t_eta1 = 0.0;
  double omega_t_eta2 = 0.0;
  double omega_w_eta1 = 0.0;
  double omega_w_eta2 = 0.0;
  std::optional<ObservableErrors> se;

  /// P(eta1) >= P(eta2) holds in expectation; finite statistics may break it.
  bool ordered() const { return p_eta1 >= p_eta2; }

  void validate() const {
    auto prob = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!prob(p_eta1) || !prob(p_eta2))
      throw DomainError("postselection probabilities must lie in [0,1]");
    for (double o : {omega_t_eta1, omega_t_eta2, omega_w_eta1, omega_w_eta2})
      if (!(o >= 0.0) || !std::isfinite(o))
        throw DomainError("excess-noise multipliers must be finite and nonnegative");
  }
};

/// Measured quantities of a source-intensity decoy run (signal, nu1, nu2),
/// all at Alice's key attenuator setting.  The one-decoy estimator reads the
/// first two slots only.
struct DecoyObservables {
  std::array<double, 3> gain{};    // P at mu, nu1, nu2
  std::array<double, 3> omega_t{};
  std::array<double, 3> omega_w{};
};

/// Exact statistics of one (intensity, attenuator) setting.
struct SettingExpectation {
  double postselection = 0.0;
  double single_fraction = 0.0;
  double omega_t = 0.0;
  double omega_w = 0.0;
};

inline SettingExpectation expected_setting(const ClickModel& m, double intensity, double eta,
                                           BetaView beta, const NoiseModel& noise) {
  SettingExpectation s;
  s.postselection = postselection_probability(m, intensity, eta, beta);
  const double single = poisson_pn(intensity, 1) * m.alpha(1, eta) * m.beta(1, beta);
  s.single_fraction = s.postselection > 0.0 ? single / s.postselection : 0.0;
  s.omega_t = expected_multiplier(s.single_fraction, noise.zeta_t, noise.delta_omega_t);
  s.omega_w = expected_multiplier(s.single_fraction, noise.zeta_w, noise.delta_omega_w);
  return s;
}

/// Noise-free-statistics observables of the detector-decoy run.
inline ChannelObservables expected_channel_observables(const ExperimentParams& p,
                                                       const NoiseModel& noise,
                                                       BetaView beta = {}) {
  const ClickModel m = ClickModel::from(p);
  const SettingExpectation s1 = expected_setting(m, p.mu, p.eta1, beta, noise);
  const SettingExpectation s2 = expected_setting(m, p.mu, p.eta2, beta, noise);
  ChannelObservables o;
  o.p_eta1 = s1.postselection;
  o.p_eta2 = s2.postselection;
  o.omega_t_eta1 = s1.omega_t;
  o.omega_t_eta2 = s2.omega_t;
  o.omega_w_eta1 = s1.omega_w;
  o.omega_w_eta2 = s2.omega_w;
  return o;
}

/// Noise-free-statistics observables of a decoy run at intensities {mu, nu1, nu2}.
inline DecoyObservables expected_decoy_observables(const ExperimentParams& p,
                                                   const std::array<double, 3>& intensities,
                                                   const NoiseModel& noise,
                                                   BetaView beta = {}) {
  const ClickModel m = ClickModel::from(p);
  DecoyObservables o;
  for (std::size_t i = 0; i < 3; ++i) {
    const SettingExpectation s = expected_setting(m, intensities[i], p.eta1, beta, noise);
    o.gain[i] = s.postselection;
    o.omega_t[i] = s.omega_t;
    o.omega_w[i] = s.omega_w;
  }
  return o;
}

} // namespace ddqkd
