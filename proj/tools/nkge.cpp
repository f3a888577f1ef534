// Command-line front end: every flag becomes a dotted-key override on top of
// the optional YAML config, so flags always win.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nkge/cli.hpp"

namespace {

struct FlagSet {
  std::string config;
  std::string preset;
  std::string eps, tau, kappa, n, T, t_eval, scheme;
  std::string taus, n_list, eps_list, levels, kappa0, eps0, snapshots, sample_every;
  std::string ref_n, ref_tau, ref_scheme, ref_tolerance;
  bool verify = false;
  std::string out, prefix, max_steps, max_seconds, jobs;
  bool fused = false;
  std::vector<std::string> sets;
};

void add_flags(CLI::App& app, FlagSet& f) {
  app.add_option("-c,--config", f.config, "YAML config file");
  app.add_option("--preset", f.preset, "problem preset (longtime-1d-p2, longtime-2d-p1, osc-1d-p1)");
  app.add_option("--eps", f.eps, "nonlinearity strength epsilon in (0,1]");
  app.add_option("--tau", f.tau, "time step");
  app.add_option("--kappa", f.kappa, "rescaled step for oscillatory problems");
  app.add_option("--N", f.n, "grid points per axis, e.g. 64 or 32,32");
  app.add_option("--T", f.T, "time horizon scale; runs end at T / eps^(2p)");
  app.add_option("--t-eval", f.t_eval, "evaluation time for convergence studies");
  app.add_option("--scheme", f.scheme, "lie1, strang2 or yoshida4");
  app.add_option("--taus", f.taus, "comma separated time steps");
  app.add_option("--N-list", f.n_list, "comma separated resolutions");
  app.add_option("--eps-list", f.eps_list, "comma separated epsilons");
  app.add_option("--levels", f.levels, "table size");
  app.add_option("--kappa0", f.kappa0, "largest rescaled step");
  app.add_option("--eps0", f.eps0, "largest epsilon");
  app.add_option("--snapshots", f.snapshots, "diagnostic rows written by solve");
  app.add_option("--sample-every", f.sample_every, "steps between error samples (longtime)");
  app.add_option("--ref-N", f.ref_n, "reference resolution");
  app.add_option("--ref-tau", f.ref_tau, "reference time step");
  app.add_option("--ref-scheme", f.ref_scheme, "reference scheme");
  app.add_flag("--verify-reference", f.verify, "check the reference against a finer one");
  app.add_option("--ref-tolerance", f.ref_tolerance, "relative tolerance for --verify-reference");
  app.add_option("-o,--out", f.out, "output directory");
  app.add_option("--prefix", f.prefix, "output file prefix");
  app.add_option("--max-steps", f.max_steps, "step budget per run");
  app.add_option("--max-seconds", f.max_seconds, "wall-time budget per run (0 = none)");
  app.add_option("-j,--jobs", f.jobs, "worker threads");
  app.add_flag("--fused", f.fused, "merge adjacent Strang half steps");
  app.add_option("--set", f.sets, "raw override key=value (dotted keys)");
}

nkge::cli::Overrides overrides_of(const FlagSet& f) {
  nkge::cli::Overrides o;
  auto put = [&](const char* key, const std::string& value) {
    if (!value.empty()) o[key] = value;
  };
  put("preset", f.preset);
  put("eps", f.eps);
  put("tau", f.tau);
  put("kappa", f.kappa);
  put("N", f.n);
  put("T", f.T);
  put("t_eval", f.t_eval);
  put("scheme", f.scheme);
  put("taus", f.taus);
  put("N_list", f.n_list);
  put("eps_list", f.eps_list);
  put("levels", f.levels);
  put("kappa0", f.kappa0);
  put("eps0", f.eps0);
  put("snapshots", f.snapshots);
  put("sample_every", f.sample_every);
  put("reference.N", f.ref_n);
  put("reference.tau", f.ref_tau);
  put("reference.scheme", f.ref_scheme);
  put("reference.tolerance", f.ref_tolerance);
  if (f.verify) o["reference.verify"] = "true";
  put("output.dir", f.out);
  put("output.prefix", f.prefix);
  put("budget.max_steps", f.max_steps);
  put("budget.max_seconds", f.max_seconds);
  put("jobs", f.jobs);
  if (f.fused) o["fused"] = "true";
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw nkge::cli::ConfigError("--set expects key=value, got '" + s + "'", 0);
    o[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Splitting integrators for the nonlinear Klein-Gordon equation"};
  app.require_subcommand(1);
  FlagSet flags;
  std::optional<nkge::cli::Subcommand> chosen;
  const std::pair<const char*, const char*> commands[] = {
      {"solve", "integrate one problem and write diagnostics"},
      {"temporal", "error against time step"},
      {"spatial", "error against resolution"},
      {"longtime", "error growth over long times for several epsilons"},
      {"table1", "error table over epsilon and rescaled step"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_flags(*sub, flags);
    sub->callback([&chosen, name = std::string(name)] { chosen = nkge::cli::parse_subcommand(name); });
  }
  CLI11_PARSE(app, argc, argv);

  try {
    const auto overrides = overrides_of(flags);
    const nkge::cli::RunConfig config =
        flags.config.empty() ? nkge::cli::parse_config(*chosen, "", overrides)
                             : nkge::cli::parse_config_file(*chosen, flags.config, overrides);
    return nkge::cli::run(config, std::cout, std::cerr);
  } catch (const nkge::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const nkge::ValidationError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 1;
  } catch (const nkge::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
