#pragma once

// Parameter sweeps, simulator validation campaigns and their text outputs.
//
// Sweep CSV schema (one header line, then one row per grid point per
// protocol, grid-major, protocols in configured order):
//
//   axis_value,protocol,f_lb,zeta_t_ub,zeta_w_ub,delta_i,mutual_info,holevo_ub
//
// Numbers use printf "%.12g"; unbounded values print as "inf".

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ddqkd/baselines.hpp"
#include "ddqkd/bounds.hpp"
#include "ddqkd/config.hpp"
#include "ddqkd/infomodel.hpp"
#include "ddqkd/observables.hpp"
#include "ddqkd/parallel.hpp"
#include "ddqkd/physmodel.hpp"
#include "ddqkd/simulator.hpp"

namespace ddqkd::cli {

inline std::string format_number(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline ExperimentParams apply_axis(ExperimentParams p, SweepAxis axis, double value) {
  switch (axis) {
  case SweepAxis::distance: p.distance_km = value; break;
  case SweepAxis::dimension: {
    const double r = std::round(value);
    if (r != value)
      throw UsageError("dimension grid values must be integers");
    p.dimension = static_cast<int>(r);
    break;
  }
  case SweepAxis::efficiency: p.eta_alice = p.eta_bob = value; break;
  case SweepAxis::mu: p.mu = value; break;
  }
  return p;
}

struct SweepRow {
  double axis_value = 0.0;
  Estimator protocol = Estimator::detector_decoy;
  BoundEstimates bounds;
  info::KeyCapacityResult capacity;
};

/// Bounds and key capacity of one protocol from noise-free observables.
inline SweepRow evaluate_protocol(const ExperimentParams& p, const RunConfig& cfg, Estimator protocol) {
  const NoiseModel noise = cfg.noise();
  const info::InfoModelParams model = info::InfoModelParams::from(p);
  SweepRow row;
  row.protocol = protocol;
  switch (protocol) {
  case Estimator::detector_decoy:
    row.bounds = bounds::estimate(expected_channel_observables(p, noise), p, cfg.variant);
    break;
  case Estimator::one_decoy:
    row.bounds = baselines::evaluate_one_decoy(p, noise, {p.mu, cfg.one_decoy_nu, 0.0}).bounds;
    break;
  case Estimator::two_decoy:
    row.bounds = cfg.two_decoy_nu1
                     ? baselines::evaluate_two_decoy(p, noise, {p.mu, *cfg.two_decoy_nu1, cfg.two_decoy_nu2}).bounds
                     : baselines::optimize_two_decoy(p, noise, cfg.two_decoy_nu2).bounds;
    break;
  case Estimator::infinite_decoy: {
    const baselines::ExactQuantities exact = baselines::infinite_decoy_oracle(p);
    row.bounds.estimator = Estimator::infinite_decoy;
    row.bounds.beta1_lb = row.bounds.beta1_raw = exact.beta1;
    row.bounds.beta0_lb = derive(p).p_dark;
    row.bounds.f_lb = row.bounds.f_raw = exact.f_eta1;
    row.bounds.zeta_t_ub = noise.zeta_t;
    row.bounds.zeta_w_ub = noise.zeta_w;
    break;
  }
  }
  row.capacity = info::capacity_from_bounds(row.bounds.f_lb, row.bounds.zeta_t_ub,
                                            row.bounds.zeta_w_ub, model);
  return row;
}

inline std::vector<SweepRow> sweep(const RunConfig& cfg, std::size_t threads = default_thread_count()) {
  cfg.validate();
  const std::size_t n_protocols = cfg.protocols.size();
  std::vector<SweepRow> rows(cfg.grid.size() * n_protocols);
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const double x = cfg.grid[i / n_protocols];
    const ExperimentParams p = apply_axis(cfg.params, cfg.axis, x);
    rows[i] = evaluate_protocol(p, cfg, cfg.protocols[i % n_protocols]);
    rows[i].axis_value = x;
  });
  return rows;
}

inline constexpr std::string_view kSweepCsvHeader =
    "axis_value,protocol,f_lb,zeta_t_ub,zeta_w_ub,delta_i,mutual_info,holevo_ub";

inline void write_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepCsvHeader << '\n';
  for (const SweepRow& r : rows) {
    out << format_number(r.axis_value) << ',' << to_string(r.protocol) << ','
        << format_number(r.bounds.f_lb) << ',' << format_number(r.bounds.zeta_t_ub) << ','
        << format_number(r.bounds.zeta_w_ub) << ',' << format_number(r.capacity.delta_i) << ','
        << format_number(r.capacity.mutual_info) << ',' << format_number(r.capacity.holevo_ub)
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Validation against the simulator

struct ValidationLine {
  std::string name;
  bool upper = false; // upper bound (estimate must not fall below truth)
  double estimate = 0.0;
  double truth = 0.0;
  double se = 0.0;
  double margin = 0.0; // signed distance to the violating side, in standard errors
  bool pass = false;
};

/// Simulated statistics of one frame setting.
struct ObservedSetting {
  sim::FrameSetting setting;
  std::uint64_t frames = 0;
  std::uint64_t postselected = 0;
  sim::Measured p, omega_t, omega_w;
};

inline std::vector<ObservedSetting> observed_settings(const sim::SimResult& r) {
  std::vector<ObservedSetting> out;
  const sim::Measured none{std::numeric_limits<double>::quiet_NaN(), 0.0};
  for (std::size_t i = 0; i < r.settings.size(); ++i) {
    const bool empty = r.vacuum_without_counts(i);
    out.push_back({r.settings[i], r.tallies[i].frames, r.tallies[i].postselected, r.postselection(i),
                   empty ? none : r.omega_t(i), empty ? none : r.omega_w(i)});
  }
  return out;
}

struct ValidationReport {
  std::string scenario;
  std::vector<ObservedSetting> observed;
  Estimator estimator = Estimator::detector_decoy;
  std::uint64_t n_frames = 0;
  std::uint64_t seed = 0;
  std::vector<ValidationLine> lines;
  double delta_i_bounds = 0.0;
  double delta_i_truth = 0.0;
  double threshold = 5.0;

  bool all_pass() const {
    for (const ValidationLine& l : lines)
      if (!l.pass)
        return false;
    return true;
  }
};

inline ValidationLine judge(std::string name, bool upper, double estimate, double truth, double se,
                            double threshold) {
  ValidationLine l{std::move(name), upper, estimate, truth, se, 0.0, false};
  const double slack = upper ? estimate - truth : truth - estimate;
  if (std::isinf(estimate) && upper && estimate > 0) {
    l.margin = bounds::kInfinity;
  } else if (se > 0.0 && std::isfinite(se)) {
    l.margin = slack / se;
  } else if (std::isinf(se)) {
    l.margin = 0.0;
  } else {
    l.margin = slack >= 0.0 ? bounds::kInfinity : -bounds::kInfinity;
  }
  l.pass = l.margin >= -threshold;
  return l;
}

inline sim::SimScenario scenario_from(const RunConfig& cfg) {
  sim::SimScenario s;
  s.params = cfg.params;
  const NoiseModel noise = cfg.noise();
  s.true_zeta_t = noise.zeta_t;
  s.true_zeta_w = noise.zeta_w;
  s.delta_omega_t = noise.delta_omega_t;
  s.delta_omega_w = noise.delta_omega_w;
  s.sift_prob = cfg.sift_prob;
  s.n_frames = cfg.n_frames;
  s.seed = cfg.seed;
  if (cfg.attack != "none")
    s.tamper_beta = sim::attack_library(cfg.attack, cfg.strength, cfg.params);
  return s;
}

namespace detail {

/// Standard deviations of decoy-estimator outputs under Gaussian resampling
/// of the simulated gains and multipliers.
inline std::array<double, 4> decoy_resampled_sd(const sim::SimResult& r, std::size_t n_settings,
                                                const std::function<BoundEstimates(const DecoyObservables&)>& est,
                                                std::size_t n_resamples, std::uint64_t seed,
                                                std::size_t threads) {
  const DecoyObservables base = r.decoy_observables();
  std::array<std::vector<double>, 4> samples;
  for (auto& s : samples)
    s.resize(n_resamples);
  parallel_for(n_resamples, threads, [&](std::size_t i) {
    rng::Stream stream(seed, i);
    DecoyObservables o = base;
    for (std::size_t k = 0; k < n_settings; ++k) {
      o.gain[k] = std::clamp(o.gain[k] + r.postselection(k).se * stream.normal(), 0.0, 1.0);
      const double zt = stream.normal(), zw = stream.normal();
      if (r.vacuum_without_counts(k))
        continue;
      o.omega_t[k] = std::max(0.0, o.omega_t[k] + r.omega_t(k).se * zt);
      o.omega_w[k] = std::max(0.0, o.omega_w[k] + r.omega_w(k).se * zw);
    }
    BoundEstimates e;
    try {
      e = est(o);
    } catch (const NumericalGuardError&) {
      e.zeta_guard_tripped = true;
    }
    samples[0][i] = e.beta1_lb;
    samples[1][i] = e.f_lb;
    samples[2][i] = e.zeta_t_ub;
    samples[3][i] = e.zeta_w_ub;
  });
  std::array<double, 4> sd{};
  for (std::size_t k = 0; k < 4; ++k)
    sd[k] = bounds::summarize(std::move(samples[k])).sd;
  return sd;
}

} // namespace detail

inline constexpr std::uint64_t kResampleSeedSalt = 0x5eed5a17ULL;

/// Simulates the configured scenario, runs the selected estimator on the
/// simulated observables and checks every bound against the hidden truth.
inline ValidationReport validate(const RunConfig& cfg, std::size_t threads = default_thread_count()) {
  cfg.validate();
  sim::SimScenario s = scenario_from(cfg);
  const ExperimentParams& p = cfg.params;

  ValidationReport rep;
  rep.estimator = cfg.estimator;
  rep.n_frames = cfg.n_frames;
  rep.seed = cfg.seed;
  rep.threshold = cfg.sigma_threshold;
  rep.scenario = cfg.attack == "none" ? "honest"
                                      : cfg.attack + " strength " + format_number(cfg.strength);

  BoundEstimates est;
  std::array<double, 4> sd{};
  const std::uint64_t resample_seed = cfg.seed ^ kResampleSeedSalt;

  switch (cfg.estimator) {
  case Estimator::detector_decoy: {
    const sim::SimResult r = sim::run_scenario(s, threads);
    rep.observed = observed_settings(r);
    const bounds::UncertainBounds ub = bounds::propagate_uncertainty(
        r.channel_observables(), p, cfg.resamples, resample_seed, cfg.variant, threads);
    est = ub.point;
    sd = {ub.beta1_lb.sd, ub.f_lb.sd, ub.zeta_t_ub.sd, ub.zeta_w_ub.sd};
    rep.lines.push_back(judge("beta1_lb", false, est.beta1_lb, r.truth.beta1, sd[0], rep.threshold));
    rep.lines.push_back(judge("f_lb", false, est.f_lb, r.truth.f_key, sd[1], rep.threshold));
    rep.lines.push_back(judge("zeta_t_ub", true, est.zeta_t_ub, r.truth.zeta_t, sd[2], rep.threshold));
    rep.lines.push_back(judge("zeta_w_ub", true, est.zeta_w_ub, r.truth.zeta_w, sd[3], rep.threshold));
    rep.delta_i_truth = info::secure_key_capacity(r.truth.f_key, r.truth.zeta_t, r.truth.zeta_w,
                                                  info::InfoModelParams::from(p)).delta_i;
    break;
  }
  case Estimator::one_decoy:
  case Estimator::two_decoy: {
    const bool two = cfg.estimator == Estimator::two_decoy;
    baselines::DecoyIntensities in{p.mu, cfg.one_decoy_nu, 0.0};
    if (two) {
      in.nu2 = cfg.two_decoy_nu2;
      in.nu1 = cfg.two_decoy_nu1 ? *cfg.two_decoy_nu1
                                 : baselines::optimize_two_decoy(p, cfg.noise(), in.nu2).intensities.nu1;
    }
    s.settings = sim::decoy_settings(p, in, two);
    const sim::SimResult r = sim::run_scenario(s, threads);
    rep.observed = observed_settings(r);
    std::function<BoundEstimates(const DecoyObservables&)> fn = [&](const DecoyObservables& o) {
      return two ? baselines::two_decoy_bounds(o, in, p) : baselines::one_decoy_bounds(o, in, p);
    };
    est = fn(r.decoy_observables());
    sd = detail::decoy_resampled_sd(r, two ? 3 : 2, fn, cfg.resamples, resample_seed, threads);
    rep.lines.push_back(judge("beta1_lb", false, est.beta1_lb, r.truth.beta1, sd[0], rep.threshold));
    rep.lines.push_back(judge("f_lb", false, est.f_lb, r.truth.f_key, sd[1], rep.threshold));
    rep.lines.push_back(judge("zeta_t_ub", true, est.zeta_t_ub, r.truth.zeta_t, sd[2], rep.threshold));
    rep.lines.push_back(judge("zeta_w_ub", true, est.zeta_w_ub, r.truth.zeta_w, sd[3], rep.threshold));
    rep.delta_i_truth = info::secure_key_capacity(r.truth.f_key, r.truth.zeta_t, r.truth.zeta_w,
                                                  info::InfoModelParams::from(p)).delta_i;
    break;
  }
  case Estimator::infinite_decoy:
    throw UsageError("the infinite-decoy oracle has no estimator to validate");
  }
  rep.delta_i_bounds = info::capacity_from_bounds(est.f_lb, est.zeta_t_ub, est.zeta_w_ub,
                                                  info::InfoModelParams::from(p)).delta_i;
  return rep;
}

inline void write_observed_csv(std::ostream& out, const std::vector<ObservedSetting>& obs) {
  out << "intensity,attenuator,frames,postselected,p,se_p,omega_t,se_omega_t,omega_w,se_omega_w\n";
  for (const ObservedSetting& o : obs) {
    out << format_number(o.setting.intensity) << ',' << format_number(o.setting.attenuator) << ','
        << o.frames << ',' << o.postselected << ',' << format_number(o.p.value) << ','
        << format_number(o.p.se) << ',' << format_number(o.omega_t.value) << ','
        << format_number(o.omega_t.se) << ',' << format_number(o.omega_w.value) << ','
        << format_number(o.omega_w.se) << '\n';
  }
}

inline void write_report(std::ostream& out, const ValidationReport& rep) {
  out << "scenario: " << rep.scenario << '\n'
      << "estimator: " << to_string(rep.estimator) << '\n'
      << "frames: " << rep.n_frames << '\n'
      << "seed: " << rep.seed << '\n'
      << "threshold_sigma: " << format_number(rep.threshold) << '\n';
  write_observed_csv(out, rep.observed);
  out << "bound,kind,estimate,truth,se,margin_sigma,status\n";
  for (const ValidationLine& l : rep.lines) {
    out << l.name << ',' << (l.upper ? "upper" : "lower") << ',' << format_number(l.estimate) << ','
        << format_number(l.truth) << ',' << format_number(l.se) << ',' << format_number(l.margin)
        << ',' << (l.pass ? "PASS" : "FAIL") << '\n';
  }
  out << "delta_i_bounds: " << format_number(rep.delta_i_bounds) << '\n'
      << "delta_i_truth: " << format_number(rep.delta_i_truth) << '\n'
      << "result: " << (rep.all_pass() ? "PASS" : "FAIL") << '\n';
}

// ---------------------------------------------------------------------------
// One-shot bounds from observables

inline constexpr std::array<std::string_view, 6> kObservableKeys{
    "p_eta1", "p_eta2", "omega_t_eta1", "omega_t_eta2", "omega_w_eta1", "omega_w_eta2"};

/// Splits an input of observables plus optional parameter overrides.
/// Standard errors (se_<key>) must be given for all six observables or none.
inline ChannelObservables observables_from(KeyValues& kv) {
  std::array<double, 6> v{};
  std::array<double, 6> se{};
  std::size_t n_se = 0;
  for (std::size_t i = 0; i < kObservableKeys.size(); ++i) {
    const auto it = kv.find(kObservableKeys[i]);
    if (it == kv.end())
      throw UsageError("missing observable '" + std::string(kObservableKeys[i]) + "'");
    v[i] = parse_double(it->first, it->second);
    kv.erase(it);
    const std::string se_key = "se_" + std::string(kObservableKeys[i]);
    if (const auto s = kv.find(se_key); s != kv.end()) {
      se[i] = parse_double(s->first, s->second);
      ++n_se;
      kv.erase(s);
    }
  }
  if (n_se != 0 && n_se != kObservableKeys.size())
    throw UsageError("standard errors must be given for all six observables or none");
  ChannelObservables o{v[0], v[1], v[2], v[3], v[4], v[5], std::nullopt};
  if (n_se != 0)
    o.se = ObservableErrors{se[0], se[1], se[2], se[3], se[4], se[5]};
  return o;
}

} // namespace ddqkd::cli
