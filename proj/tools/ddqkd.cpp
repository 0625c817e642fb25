// ddqkd: sweeps, simulator validation and one-shot bounds for detector-decoy
// HD-QKD.  Exit status: 0 ok, 1 usage, 2 validation failure, 3 numerical guard.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ddqkd/bounds.hpp"
#include "ddqkd/config.hpp"
#include "ddqkd/error.hpp"
#include "ddqkd/infomodel.hpp"
#include "ddqkd/parallel.hpp"
#include "ddqkd/sweep.hpp"

namespace {

using namespace ddqkd;
using namespace ddqkd::cli;

enum Exit { kOk = 0, kUsage = 1, kValidationFail = 2, kGuard = 3 };

struct Common {
  std::string config_path;
  std::string preset;
  std::vector<std::string> sets;
  std::string output;
  std::size_t threads = 0;
};

void add_common(CLI::App* sub, Common& c, bool with_output) {
  sub->add_option("-c,--config", c.config_path, "key = value configuration file");
  sub->add_option("-p,--preset", c.preset, "start from a named preset");
  sub->add_option("-s,--set", c.sets, "override one key (key=value); repeatable");
  if (with_output)
    sub->add_option("-o,--output", c.output, "output file (default: stdout, or 'output' key)");
  sub->add_option("-j,--threads", c.threads,
                  std::string("worker threads (default: $") + kThreadsEnvVar + " or hardware)");
}

KeyValues read_file(const std::string& path) {
  if (path == "-")
    return parse_key_values(std::cin);
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot open " + path);
  return parse_key_values(in);
}

// Layers: preset, config file, `extra` (parameters given with observables),
// then --set overrides.
RunConfig build_config(const Common& c, const KeyValues& extra = {}) {
  RunConfig cfg = c.preset.empty() ? RunConfig{} : preset_config(c.preset);
  if (!c.config_path.empty())
    apply_config(cfg, read_file(c.config_path));
  apply_config(cfg, extra);
  for (const std::string& s : c.sets) {
    if (s.find('=') == std::string::npos)
      throw UsageError("--set expects key=value, got '" + s + "'");
    apply_config(cfg, parse_key_values(s));
  }
  if (!c.output.empty())
    cfg.output = c.output;
  return cfg;
}

std::size_t threads_of(const Common& c) { return c.threads > 0 ? c.threads : default_thread_count(); }

// Writes through `fn` to cfg.output, or stdout when empty.
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out)
    throw UsageError("cannot write " + path);
  fn(out);
}

int run_sweep(const Common& c) {
  const RunConfig cfg = build_config(c);
  const std::vector<SweepRow> rows = sweep(cfg, threads_of(c));
  emit(cfg.output, [&](std::ostream& out) { write_csv(out, rows); });
  return kOk;
}

int run_validate(const Common& c) {
  const RunConfig cfg = build_config(c);
  const ValidationReport rep = validate(cfg, threads_of(c));
  emit(cfg.output, [&](std::ostream& out) { write_report(out, rep); });
  return rep.all_pass() ? kOk : kValidationFail;
}

struct BoundsArgs {
  std::string input = "-";
  std::size_t resamples = 0;
  std::uint64_t seed = 1;
};

int run_bounds(const Common& c, const BoundsArgs& b) {
  KeyValues kv = read_file(b.input);
  const ChannelObservables obs = observables_from(kv);
  const RunConfig cfg = build_config(c, kv); // what is left of kv are parameters
  const ExperimentParams& p = cfg.params;
  p.validate();
  obs.validate();

  BoundEstimates est = bounds::estimate(obs, p, cfg.variant);
  std::optional<bounds::UncertainBounds> ub;
  if (b.resamples > 0)
    ub = bounds::propagate_uncertainty(obs, p, b.resamples, b.seed, cfg.variant, threads_of(c));
  const info::KeyCapacityResult cap = info::capacity_from_bounds(
      est.f_lb, est.zeta_t_ub, est.zeta_w_ub, info::InfoModelParams::from(p));

  emit(cfg.output, [&](std::ostream& out) {
    out << "variant: " << to_string(est.variant) << '\n'
        << "beta1_lb: " << format_number(est.beta1_lb) << '\n'
        << "beta0_lb: " << format_number(est.beta0_lb) << '\n'
        << "f_lb: " << format_number(est.f_lb) << '\n'
        << "zeta_t_ub: " << format_number(est.zeta_t_ub) << '\n'
        << "zeta_w_ub: " << format_number(est.zeta_w_ub) << '\n'
        << "delta_i: " << format_number(cap.delta_i) << '\n'
        << "mutual_info: " << format_number(cap.mutual_info) << '\n'
        << "holevo_ub: " << format_number(cap.holevo_ub) << '\n'
        << "beta1_clamped: " << est.beta1_clamped << '\n'
        << "f_clamped: " << est.f_clamped << '\n'
        << "observables_out_of_order: " << est.observables_out_of_order << '\n'
        << "zeta_guard_tripped: " << est.zeta_guard_tripped << '\n';
    if (ub) {
      const auto line = [&](const char* name, const bounds::Interval& i) {
        out << name << "_ci95: " << format_number(i.lo) << ' ' << format_number(i.hi)
            << " sd " << format_number(i.sd) << '\n';
      };
      line("beta1_lb", ub->beta1_lb);
      line("f_lb", ub->f_lb);
      line("zeta_t_ub", ub->zeta_t_ub);
      line("zeta_w_ub", ub->zeta_w_ub);
      out << "resamples: " << ub->n_resamples << '\n' << "resample_guard_trips: " << ub->guard_trips << '\n';
    }
  });
  return est.zeta_guard_tripped ? kGuard : kOk;
}

int run_presets_list() {
  for (const Preset& p : presets())
    std::cout << p.name << "  " << p.description << '\n';
  return kOk;
}

int run_presets_show(const std::string& name) {
  std::cout << preset_text(name);
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detector-decoy HD-QKD bounds, sweeps and simulator validation"};
  app.require_subcommand(1);

  Common sweep_opts, validate_opts, bounds_opts;
  BoundsArgs bounds_args;
  std::string show_name;

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "key capacity of each protocol along one axis (CSV)");
  add_common(sweep_cmd, sweep_opts, true);
  CLI::App* validate_cmd = app.add_subcommand("validate", "simulate a scenario and check the bounds at n sigma");
  add_common(validate_cmd, validate_opts, true);
  CLI::App* bounds_cmd = app.add_subcommand("bounds", "bounds from observables (key = value, file or stdin)");
  add_common(bounds_cmd, bounds_opts, true);
  bounds_cmd->add_option("input", bounds_args.input, "observables file, '-' for stdin");
  bounds_cmd->add_option("-r,--resamples", bounds_args.resamples, "resamples for confidence intervals");
  bounds_cmd->add_option("--seed", bounds_args.seed, "resampling seed");
  CLI::App* presets_cmd = app.add_subcommand("presets", "list or print the shipped configurations");
  presets_cmd->require_subcommand(1);
  CLI::App* list_cmd = presets_cmd->add_subcommand("list", "list preset names");
  CLI::App* show_cmd = presets_cmd->add_subcommand("show", "print a preset as a config file");
  show_cmd->add_option("name", show_name)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*sweep_cmd)
      return run_sweep(sweep_opts);
    if (*validate_cmd)
      return run_validate(validate_opts);
    if (*bounds_cmd)
      return run_bounds(bounds_opts, bounds_args);
    if (*list_cmd)
      return run_presets_list();
    if (*show_cmd)
      return run_presets_show(show_name);
  } catch (const NumericalGuardError& e) {
    std::cerr << "numerical guard: " << e.what() << '\n';
    return kGuard;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
