#pragma once

// Frame-level Monte Carlo of the detector-decoy protocol with hidden truth.
//
// Every frame: draw the pair number n ~ Poisson(intensity) and a setting
// (intensity, attenuator); Alice clicks with probability alpha_n(eta), Bob
// with beta_n (honest or tampered by Eve); bases match with probability
// sift_prob and the matched basis is time or frequency with equal odds.
// Postselected frames carry an excess-noise multiplier (1 + zeta) if n = 1,
// else delta_omega, accumulated in the basis the frame was measured in.
//
// Frames are processed in fixed-size chunks.  Chunk k draws from the
// counter-based stream (seed, k), and tallies are integers merged by
// addition, so results are bit-identical for any thread count.  Each frame
// consumes the same six uniforms whatever happens, so Alice's outcomes do
// not depend on Bob's channel.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddqkd/baselines.hpp"
#include "ddqkd/error.hpp"
#include "ddqkd/observables.hpp"
#include "ddqkd/parallel.hpp"
#include "ddqkd/physmodel.hpp"
#include "ddqkd/rng.hpp"

namespace ddqkd::sim {

/// One (source intensity, attenuator) configuration, chosen per frame with
/// probability proportional to `weight`.
struct FrameSetting {
  double intensity = 0.1;
  double attenuator = 1.0;
  double weight = 1.0;
};

struct SimScenario {
  ExperimentParams params;
  std::vector<double> tamper_beta;   // empty: honest channel
  double true_zeta_t = 0.0;
  double true_zeta_w = 0.0;
  std::optional<double> delta_omega_t; // default 1 + true_zeta_t
  std::optional<double> delta_omega_w; // default 1 + true_zeta_w
  double sift_prob = 0.5;
  std::uint64_t n_frames = 1'000'000;
  std::uint64_t seed = 1;
  std::vector<FrameSetting> settings; // empty: {(mu, eta1), (mu, eta2)} equally likely

  NoiseModel noise() const {
    return {true_zeta_t, true_zeta_w, delta_omega_t.value_or(1.0 + true_zeta_t),
            delta_omega_w.value_or(1.0 + true_zeta_w)};
  }

  std::vector<FrameSetting> resolved_settings() const {
    if (!settings.empty())
      return settings;
    return {{params.mu, params.eta1, 1.0}, {params.mu, params.eta2, 1.0}};
  }

  void validate() const {
    params.validate();
    noise().validate();
    if (n_frames == 0)
      throw DomainError("n_frames must be positive");
    if (!(sift_prob > 0.0 && sift_prob <= 1.0))
      throw DomainError("sift_prob must lie in (0,1]");
    const double p_dark = derive(params).p_dark;
    for (double b : tamper_beta)
      if (!(b >= p_dark && b <= 1.0))
        throw DomainError("tampered beta_n must lie in [p_d, 1]");
    const auto s = resolved_settings();
    double total = 0.0;
    for (const FrameSetting& f : s) {
      if (!(f.intensity >= 0.0) || !(f.attenuator >= 0.0 && f.attenuator <= 1.0) || !(f.weight > 0.0))
        throw DomainError("invalid frame setting");
      total += f.weight;
    }
    if (!(total > 0.0))
      throw DomainError("frame settings need positive total weight");
  }
};

inline constexpr std::size_t kTallyPhotonBins = 16; // last bin collects n >= 15

/// Integer counts of one setting.
struct SettingTally {
  std::uint64_t frames = 0;
  std::uint64_t postselected = 0;   // both clicked and bases matched
  std::uint64_t time_frames = 0;    // postselected in the time basis
  std::uint64_t time_single = 0;    //   ... of which n = 1
  std::uint64_t freq_frames = 0;
  std::uint64_t freq_single = 0;
  std::array<std::uint64_t, kTallyPhotonBins> frames_by_n{};
  std::array<std::uint64_t, kTallyPhotonBins> alice_clicks_by_n{};

  SettingTally& operator+=(const SettingTally& o) {
    frames += o.frames;
    postselected += o.postselected;
    time_frames += o.time_frames;
    time_single += o.time_single;
    freq_frames += o.freq_frames;
    freq_single += o.freq_single;
    for (std::size_t i = 0; i < kTallyPhotonBins; ++i) {
      frames_by_n[i] += o.frames_by_n[i];
      alice_clicks_by_n[i] += o.alice_clicks_by_n[i];
    }
    return *this;
  }

  bool operator==(const SettingTally&) const = default;
};

/// Estimate with its standard error.
struct Measured {
  double value = 0.0;
  double se = 0.0;
};

/// Hidden ground truth, computed analytically from the scenario.
struct SimTruth {
  std::vector<double> beta;                    // beta_n actually applied
  std::vector<SettingExpectation> per_setting; // sift-corrected P, F, Omega
  double zeta_t = 0.0;
  double zeta_w = 0.0;
  double beta1 = 0.0;
  double f_key = 0.0; // single-pair fraction of the first (key) setting
};

struct SimResult {
  std::vector<FrameSetting> settings;
  std::vector<SettingTally> tallies;
  SimTruth truth;
  double sift_prob = 0.5;
  NoiseModel noise;

  /// Postselection probability per frame, sift-corrected.
  Measured postselection(std::size_t i) const {
    const SettingTally& t = tallies.at(i);
    if (t.frames == 0)
      throw NumericalGuardError("setting received no frames");
    const double n = static_cast<double>(t.frames);
    const double raw = static_cast<double>(t.postselected) / n;
    return {raw / sift_prob, std::sqrt(raw * (1.0 - raw) / n) / sift_prob};
  }

  /// Raw postselected-and-sifted rate, before dividing by sift_prob.
  double raw_postselection_rate(std::size_t i) const {
    const SettingTally& t = tallies.at(i);
    return t.frames == 0 ? 0.0 : static_cast<double>(t.postselected) / static_cast<double>(t.frames);
  }

  Measured omega_t(std::size_t i) const {
    const SettingTally& t = tallies.at(i);
    return multiplier(t.time_frames, t.time_single, noise.zeta_t, noise.delta_omega_t);
  }

  Measured omega_w(std::size_t i) const {
    const SettingTally& t = tallies.at(i);
    return multiplier(t.freq_frames, t.freq_single, noise.zeta_w, noise.delta_omega_w);
  }

  /// Observables of the two attenuator settings (settings 0 and 1).
  ChannelObservables channel_observables() const {
    if (tallies.size() < 2)
      throw UnsupportedInputError("scenario does not have two attenuator settings");
    ChannelObservables o;
    ObservableErrors se;
    const Measured p1 = postselection(0), p2 = postselection(1);
    const Measured t1 = omega_t(0), t2 = omega_t(1), w1 = omega_w(0), w2 = omega_w(1);
    o.p_eta1 = p1.value;
    o.p_eta2 = p2.value;
    o.omega_t_eta1 = t1.value;
    o.omega_t_eta2 = t2.value;
    o.omega_w_eta1 = w1.value;
    o.omega_w_eta2 = w2.value;
    se.p_eta1 = p1.se;
    se.p_eta2 = p2.se;
    se.omega_t_eta1 = t1.se;
    se.omega_t_eta2 = t2.se;
    se.omega_w_eta1 = w1.se;
    se.omega_w_eta2 = w2.se;
    o.se = se;
    return o;
  }

  /// Observables of a signal/decoy run (settings 0, 1 and optionally 2).
  /// The decoy bounds never use the multipliers of a vacuum setting, which
  /// may see no postselections at all; those are left at zero.
  DecoyObservables decoy_observables() const {
    DecoyObservables o;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, tallies.size()); ++i) {
      o.gain[i] = postselection(i).value;
      if (vacuum_without_counts(i))
        continue;
      o.omega_t[i] = omega_t(i).value;
      o.omega_w[i] = omega_w(i).value;
    }
    return o;
  }

  bool vacuum_without_counts(std::size_t i) const {
    const SettingTally& t = tallies.at(i);
    return settings.at(i).intensity == 0.0 && (t.time_frames == 0 || t.freq_frames == 0);
  }

private:
  static Measured multiplier(std::uint64_t frames, std::uint64_t single, double zeta,
                             double delta_omega) {
    if (frames == 0)
      throw NumericalGuardError("no postselected frames in a basis; multiplier undefined");
    const double n = static_cast<double>(frames);
    const double q = static_cast<double>(single) / n;
    const double hi = 1.0 + zeta;
    return {q * hi + (1.0 - q) * delta_omega, std::abs(hi - delta_omega) * std::sqrt(q * (1.0 - q) / n)};
  }
};

inline constexpr std::uint64_t kChunkFrames = 1u << 16;

/// beta_n table applied by the simulator: the tampered sequence, or the
/// honest one, padded to cover the photon-number cap of every setting.
inline std::vector<double> applied_beta(const SimScenario& s) {
  const ClickModel m = ClickModel::from(s.params);
  if (!s.tamper_beta.empty())
    return s.tamper_beta;
  double max_intensity = s.params.mu;
  for (const FrameSetting& f : s.resolved_settings())
    max_intensity = std::max(max_intensity, f.intensity);
  return honest_beta_table(m, series_term_cap(max_intensity) + 1);
}

inline SimTruth compute_truth(const SimScenario& s) {
  SimTruth t;
  const ClickModel m = ClickModel::from(s.params);
  t.beta = applied_beta(s);
  t.zeta_t = s.true_zeta_t;
  t.zeta_w = s.true_zeta_w;
  t.beta1 = m.beta(1, t.beta);
  const NoiseModel noise = s.noise();
  for (const FrameSetting& f : s.resolved_settings())
    t.per_setting.push_back(expected_setting(m, f.intensity, f.attenuator, t.beta, noise));
  t.f_key = t.per_setting.front().single_fraction;
  return t;
}

namespace detail {

/// Inverse-CDF sampler for a Poisson law truncated at `cap` (the last value
/// absorbs the remaining mass).
class PoissonTable {
public:
  PoissonTable(double intensity, std::size_t cap) {
    double acc = 0.0;
    cdf_.reserve(cap + 1);
    for (std::size_t n = 0; n <= cap; ++n) {
      acc += poisson_pn(intensity, n);
      cdf_.push_back(acc);
    }
  }

  std::size_t sample(double u) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return it == cdf_.end() ? cdf_.size() - 1 : static_cast<std::size_t>(it - cdf_.begin());
  }

private:
  std::vector<double> cdf_;
};

} // namespace detail

/// Runs the scenario on `threads` workers (DDQKD_THREADS by default).
inline SimResult run_scenario(const SimScenario& s, std::size_t threads = default_thread_count()) {
  s.validate();
  const ClickModel m = ClickModel::from(s.params);
  const std::vector<FrameSetting> settings = s.resolved_settings();
  const std::vector<double> beta = applied_beta(s);

  std::vector<double> setting_cdf;
  double total = 0.0;
  for (const FrameSetting& f : settings)
    total += f.weight;
  double acc = 0.0;
  for (const FrameSetting& f : settings) {
    acc += f.weight / total;
    setting_cdf.push_back(acc);
  }

  std::vector<detail::PoissonTable> photon_tables;
  std::vector<std::vector<double>> alpha_tables;
  for (const FrameSetting& f : settings) {
    const std::size_t cap = series_term_cap(f.intensity);
    photon_tables.emplace_back(f.intensity, cap);
    std::vector<double> a(cap + 1);
    for (std::size_t n = 0; n <= cap; ++n)
      a[n] = m.alpha(n, f.attenuator);
    alpha_tables.push_back(std::move(a));
  }

  const std::uint64_t n_chunks = (s.n_frames + kChunkFrames - 1) / kChunkFrames;
  std::vector<std::vector<SettingTally>> chunk_tallies(n_chunks,
                                                       std::vector<SettingTally>(settings.size()));

  parallel_for(n_chunks, threads, [&](std::size_t k) {
    rng::Stream stream(s.seed, k);
    std::vector<SettingTally>& tally = chunk_tallies[k];
    const std::uint64_t begin = k * kChunkFrames;
    const std::uint64_t end = std::min<std::uint64_t>(s.n_frames, begin + kChunkFrames);
    for (std::uint64_t frame = begin; frame < end; ++frame) {
      const double u_setting = stream.uniform();
      const double u_photons = stream.uniform();
      const double u_alice = stream.uniform();
      const double u_bob = stream.uniform();
      const double u_sift = stream.uniform();
      const double u_basis = stream.uniform();

      const std::size_t si = std::min<std::size_t>(
          static_cast<std::size_t>(std::upper_bound(setting_cdf.begin(), setting_cdf.end(), u_setting) -
                                   setting_cdf.begin()),
          settings.size() - 1);
      SettingTally& t = tally[si];
      const std::size_t n = photon_tables[si].sample(u_photons);
      const std::size_t bin = std::min(n, kTallyPhotonBins - 1);
      ++t.frames;
      ++t.frames_by_n[bin];

      const bool alice = u_alice < alpha_tables[si][n];
      const bool bob = u_bob < beta[std::min(n, beta.size() - 1)];
      if (alice)
        ++t.alice_clicks_by_n[bin];
      if (!(alice && bob && u_sift < s.sift_prob))
        continue;
      ++t.postselected;
      if (u_basis < 0.5) {
        ++t.time_frames;
        t.time_single += n == 1;
      } else {
        ++t.freq_frames;
        t.freq_single += n == 1;
      }
    }
  });

  SimResult r;
  r.settings = settings;
  r.tallies.assign(settings.size(), SettingTally{});
  for (const auto& chunk : chunk_tallies)
    for (std::size_t i = 0; i < settings.size(); ++i)
      r.tallies[i] += chunk[i];
  r.truth = compute_truth(s);
  r.sift_prob = s.sift_prob;
  r.noise = s.noise();
  return r;
}

/// Settings of a source-intensity decoy run at Alice's key attenuator.
inline std::vector<FrameSetting> decoy_settings(const ExperimentParams& p,
                                                const baselines::DecoyIntensities& in,
                                                bool include_nu2) {
  std::vector<FrameSetting> s{{in.mu_signal, p.eta1, 1.0}, {in.nu1, p.eta1, 1.0}};
  if (include_nu2)
    s.push_back({in.nu2, p.eta1, 1.0});
  return s;
}

// ---------------------------------------------------------------------------
// Canned channel attacks.  Each returns beta_n for n = 0..cap with
// beta_0 = p_d and every entry in [p_d, 1].

enum class AttackId { pns_suppress_single, uniform_loss, boost_multiphoton };

inline std::string_view to_string(AttackId a) {
  switch (a) {
  case AttackId::pns_suppress_single: return "pns-suppress-single";
  case AttackId::uniform_loss: return "uniform-loss";
  case AttackId::boost_multiphoton: return "boost-multiphoton";
  }
  return "unknown";
}

inline AttackId parse_attack(std::string_view name) {
  for (AttackId a : {AttackId::pns_suppress_single, AttackId::uniform_loss, AttackId::boost_multiphoton})
    if (name == to_string(a))
      return a;
  throw DomainError("unknown attack id: " + std::string(name));
}

inline constexpr std::array<AttackId, 3> kAllAttacks{
    AttackId::pns_suppress_single, AttackId::uniform_loss, AttackId::boost_multiphoton};

/// pns-suppress-single: beta_1 moves to the dark floor and beta_{n>=2} to
///   their lossless values (Eve keeps one photon, forwards the rest ideally).
/// uniform-loss: every beta_{n>=1} moves toward the dark floor by (1 - s).
/// boost-multiphoton: beta_{n>=2} moves toward 1, beta_1 untouched.
inline std::vector<double> attack_library(AttackId id, double strength, const ExperimentParams& p) {
  if (!(strength >= 0.0 && strength <= 1.0))
    throw DomainError("attack strength must lie in [0,1]");
  const ClickModel m = ClickModel::from(p);
  ClickModel lossless = m;
  lossless.eta_channel = 1.0;
  const std::size_t len = std::max<std::size_t>(series_term_cap(p.mu) + 1, 64);
  const double floor = m.p_dark;
  std::vector<double> out(len);
  out[0] = floor;
  for (std::size_t n = 1; n < len; ++n) {
    const double honest = m.beta(n);
    double b = honest;
    switch (id) {
    case AttackId::pns_suppress_single:
      b = n == 1 ? honest + strength * (floor - honest)
                 : honest + strength * (lossless.beta(n) - honest);
      break;
    case AttackId::uniform_loss:
      b = floor + (1.0 - strength) * (honest - floor);
      break;
    case AttackId::boost_multiphoton:
      b = n == 1 ? honest : honest + strength * (1.0 - honest);
      break;
    }
    out[n] = std::clamp(b, floor, 1.0);
  }
  return out;
}

inline std::vector<double> attack_library(std::string_view name, double strength,
                                          const ExperimentParams& p) {
  return attack_library(parse_attack(name), strength, p);
}

} // namespace ddqkd::sim
