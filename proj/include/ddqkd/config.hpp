#pragma once

// Key-value run configuration shared by the `sweep`, `validate` and `bounds`
// subcommands.
//
//   # comment
//   key = value
//
// One assignment per line; blank lines and text after '#' are ignored; keys
// may appear once.  Unknown keys are rejected.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ddqkd/bounds.hpp"
#include "ddqkd/error.hpp"
#include "ddqkd/infomodel.hpp"
#include "ddqkd/observables.hpp"
#include "ddqkd/physmodel.hpp"

namespace ddqkd::cli {

using KeyValues = std::map<std::string, std::string, std::less<>>;

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos)
      view = view.substr(0, hash);
    view = trim(view);
    if (view.empty())
      continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw UsageError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key(trim(view.substr(0, eq)));
    const std::string value(trim(view.substr(eq + 1)));
    if (key.empty())
      throw UsageError("line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw UsageError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return kv;
}

inline KeyValues parse_key_values(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_key_values(in);
}

inline double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
    throw UsageError("key '" + std::string(key) + "': not a finite number: '" + std::string(text) + "'");
  return v;
}

template <typename Int>
Int parse_integer(std::string_view key, std::string_view text) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw UsageError("key '" + std::string(key) + "': not an integer: '" + std::string(text) + "'");
  return v;
}

inline std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    if (!item.empty())
      out.emplace_back(item);
    if (comma == std::string_view::npos)
      break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

/// "start:stop:step" (inclusive of stop) or a comma-separated list.  The grid
/// must be nonempty and strictly increasing.
inline std::vector<double> parse_grid(std::string_view text) {
  std::vector<double> grid;
  text = trim(text);
  if (text.find(':') != std::string_view::npos) {
    std::vector<double> parts;
    std::string_view rest = text;
    for (int i = 0; i < 3; ++i) {
      const auto colon = rest.find(':');
      parts.push_back(parse_double("grid", trim(rest.substr(0, colon))));
      if (colon == std::string_view::npos) {
        rest = {};
        break;
      }
      rest.remove_prefix(colon + 1);
    }
    if (parts.size() != 3 || !rest.empty())
      throw UsageError("grid range must be start:stop:step");
    const double start = parts[0], stop = parts[1], step = parts[2];
    if (!(step > 0.0) || !(stop >= start))
      throw UsageError("grid range needs step > 0 and stop >= start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i)
      grid.push_back(start + static_cast<double>(i) * step);
  } else {
    for (const std::string& item : split_list(text))
      grid.push_back(parse_double("grid", item));
  }
  if (grid.empty())
    throw UsageError("grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw UsageError("grid must be strictly increasing");
  return grid;
}

enum class SweepAxis { distance, dimension, efficiency, mu };

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
  case SweepAxis::distance: return "distance";
  case SweepAxis::dimension: return "dimension";
  case SweepAxis::efficiency: return "efficiency";
  case SweepAxis::mu: return "mu";
  }
  return "unknown";
}

inline SweepAxis parse_axis(std::string_view s) {
  for (SweepAxis a : {SweepAxis::distance, SweepAxis::dimension, SweepAxis::efficiency, SweepAxis::mu})
    if (s == to_string(a))
      return a;
  throw UsageError("unknown sweep axis: " + std::string(s));
}

inline Estimator parse_estimator(std::string_view s) {
  for (Estimator e : {Estimator::detector_decoy, Estimator::one_decoy, Estimator::two_decoy,
                      Estimator::infinite_decoy})
    if (s == to_string(e))
      return e;
  throw UsageError("unknown protocol: " + std::string(s));
}

inline BoundVariant parse_variant(std::string_view s) {
  if (s == "rederived")
    return BoundVariant::rederived;
  if (s == "paper-literal")
    return BoundVariant::paper_literal;
  throw UsageError("unknown variant: " + std::string(s));
}

struct RunConfig {
  ExperimentParams params;

  // Excess-noise model used to synthesize observables.
  double delta_sigma = 10e-12;
  std::optional<double> true_zeta;   // overrides delta_sigma
  std::optional<double> delta_omega; // default 1 + zeta

  // sweep
  SweepAxis axis = SweepAxis::distance;
  std::vector<double> grid{0.0};
  std::vector<Estimator> protocols{Estimator::detector_decoy, Estimator::one_decoy,
                                   Estimator::two_decoy};
  BoundVariant variant = BoundVariant::rederived;
  double one_decoy_nu = 0.05;
  std::optional<double> two_decoy_nu1; // empty: optimized per grid point
  double two_decoy_nu2 = 0.0;
  std::string output;

  // validate
  std::string attack = "none";
  double strength = 0.0;
  std::uint64_t n_frames = 1'000'000;
  std::uint64_t seed = 1;
  double sift_prob = 0.5;
  Estimator estimator = Estimator::detector_decoy;
  std::size_t resamples = 400;
  double sigma_threshold = 5.0;

  double zeta() const {
    return true_zeta.value_or(info::zeta_from_broadening(delta_sigma, params.sigma_cor));
  }

  NoiseModel noise() const {
    const double z = zeta();
    const double d = delta_omega.value_or(1.0 + z);
    return {z, z, d, d};
  }

  void validate() const {
    params.validate();
    noise().validate();
    if (grid.empty())
      throw UsageError("grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i] > grid[i - 1]))
        throw UsageError("grid must be strictly increasing");
    if (protocols.empty())
      throw UsageError("at least one protocol must be selected");
    if (n_frames == 0)
      throw UsageError("n_frames must be positive");
    if (!(sigma_threshold > 0.0))
      throw UsageError("sigma_threshold must be positive");
  }
};

/// Applies the entries of `kv` on top of `cfg`.  Unknown keys are errors.
inline void apply_config(RunConfig& cfg, const KeyValues& kv) {
  ExperimentParams& p = cfg.params;
  // eta_det sets both efficiencies; the specific keys may then override.
  if (auto it = kv.find("eta_det"); it != kv.end())
    p.eta_alice = p.eta_bob = parse_double(it->first, it->second);
  for (const auto& [key, value] : kv) {
    const auto d = [&] { return parse_double(key, value); };
    if (key == "eta_det") continue;
    else if (key == "mu") p.mu = d();
    else if (key == "eta_alice") p.eta_alice = d();
    else if (key == "eta_bob") p.eta_bob = d();
    else if (key == "eta1") p.eta1 = d();
    else if (key == "eta2") p.eta2 = d();
    else if (key == "alpha_loss") p.alpha_loss = d();
    else if (key == "distance_km") p.distance_km = d();
    else if (key == "dimension") p.dimension = parse_integer<int>(key, value);
    else if (key == "sigma_cor") p.sigma_cor = d();
    else if (key == "sigma_jitter") p.sigma_jitter = d();
    else if (key == "dark_rate") p.dark_rate = d();
    else if (key == "recon_eff") p.recon_eff = d();
    else if (key == "delta_sigma") cfg.delta_sigma = d();
    else if (key == "true_zeta") cfg.true_zeta = d();
    else if (key == "delta_omega") cfg.delta_omega = d();
    else if (key == "axis") cfg.axis = parse_axis(value);
    else if (key == "grid") cfg.grid = parse_grid(value);
    else if (key == "protocols") {
      cfg.protocols.clear();
      for (const std::string& s : split_list(value))
        cfg.protocols.push_back(parse_estimator(s));
      if (cfg.protocols.empty())
        throw UsageError("protocols list is empty");
    }
    else if (key == "variant") cfg.variant = parse_variant(value);
    else if (key == "one_decoy_nu") cfg.one_decoy_nu = d();
    else if (key == "two_decoy_nu1") {
      if (value == "optimize") cfg.two_decoy_nu1.reset();
      else cfg.two_decoy_nu1 = d();
    }
    else if (key == "two_decoy_nu2") cfg.two_decoy_nu2 = d();
    else if (key == "output") cfg.output = value;
    else if (key == "attack") cfg.attack = value;
    else if (key == "strength") cfg.strength = d();
    else if (key == "n_frames") cfg.n_frames = parse_integer<std::uint64_t>(key, value);
    else if (key == "seed") cfg.seed = parse_integer<std::uint64_t>(key, value);
    else if (key == "sift_prob") cfg.sift_prob = d();
    else if (key == "estimator") cfg.estimator = parse_estimator(value);
    else if (key == "resamples") cfg.resamples = parse_integer<std::size_t>(key, value);
    else if (key == "sigma_threshold") cfg.sigma_threshold = d();
    else throw UsageError("unknown configuration key: " + key);
  }
}

// ---------------------------------------------------------------------------
// Presets

struct Preset {
  std::string_view name;
  std::string_view description;
  std::string_view text;
};

inline constexpr std::string_view kBaseProfile = R"(# SNSPD operating point
mu = 0.1
eta_det = 0.93
eta1 = 1
eta2 = 0.5
alpha_loss = 0.2
dimension = 8
sigma_cor = 30e-12
sigma_jitter = 20e-12
dark_rate = 1000
recon_eff = 0.9
delta_sigma = 10e-12
axis = distance
grid = 0:200:10
variant = rederived
)";

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> list{
      {"fig2a", "key capacity vs distance, d=8, 93% detectors",
       "dimension = 8\nprotocols = detector-decoy,one-decoy,two-decoy\n"},
      {"fig2b", "key capacity vs distance, d=32, 93% detectors",
       "dimension = 32\nprotocols = detector-decoy,one-decoy,two-decoy\n"},
      {"fig3", "F and key capacity vs distance, d=8, 4.5% detectors",
       "dimension = 8\neta_det = 0.045\nprotocols = detector-decoy,two-decoy\n"},
  };
  return list;
}

inline const Preset& find_preset(std::string_view name) {
  for (const Preset& p : presets())
    if (p.name == name)
      return p;
  throw UsageError("unknown preset: " + std::string(name));
}

/// Full key-value text of a preset: the base profile with the preset's
/// entries substituted.
inline std::string preset_text(std::string_view name) {
  const Preset& preset = find_preset(name);
  KeyValues base = parse_key_values(kBaseProfile);
  for (const auto& [k, v] : parse_key_values(preset.text))
    base[k] = v;
  std::string out = "# preset " + std::string(name) + ": " + std::string(preset.description) + "\n";
  for (const auto& [k, v] : base)
    out += k + " = " + v + "\n";
  return out;
}

inline RunConfig preset_config(std::string_view name) {
  RunConfig cfg;
  apply_config(cfg, parse_key_values(preset_text(name)));
  return cfg;
}

} // namespace ddqkd::cli
