// Command line front end for the convergence-constrained power allocation
// experiments.
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ccpa/xprt.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool need_config) {
  auto* c = cmd->add_option("--config", args.config, "experiment config file (JSON)");
  if (need_config) c->required();
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("--method", args.method, "override the config method");
  cmd->add_option("--threads", args.threads, "worker threads for sweeps");
}

int dispatch(const std::string& name, const CommonArgs& args) {
  try {
    if (name == "fit-j") {
      ccpa::run_fit_j(args.out);
      return 0;
    }
    ccpa::ExperimentConfig cfg = ccpa::load_config(args.config);
    if (args.method) {
      cfg.method = *args.method;
      if (cfg.method != "scavc" && cfg.method != "scagp" && cfg.method != "oes" &&
          cfg.method != "zf" && cfg.method != "ep")
        throw ccpa::ConfigError("unknown method: " + cfg.method);
    }
    if (args.threads) cfg.threads = *args.threads;
    const std::uint64_t seed = args.seed.value_or(cfg.sys.seed);
    if (name == "optimize") ccpa::run_optimize(cfg, seed, args.out);
    else if (name == "exit-surface") ccpa::run_exit_surface(cfg, seed, args.out);
    else if (name == "trajectory") ccpa::run_trajectory(cfg, seed, args.out);
    else if (name == "papr") ccpa::run_papr(cfg, seed, args.out);
    else if (name == "sweep") ccpa::run_sweep(cfg, seed, args.out);
    else if (name == "decoder-exit") ccpa::run_decoder_exit(cfg, seed, args.out);
    return 0;
  } catch (const ccpa::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 3;
  } catch (const ccpa::InfeasibleProblem& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 2;
  } catch (const ccpa::InfeasibleTarget& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 2;
  } catch (const ccpa::SolverFailure& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convergence-constrained multiuser power allocation"};
  app.require_subcommand(1);

  const char* names[] = {"optimize",   "exit-surface", "trajectory", "papr",
                         "sweep",      "fit-j",        "decoder-exit"};
  const char* descs[] = {
      "solve for a minimum-power allocation and report constraint slacks",
      "emit predicted equalizer transfer points against the requirement",
      "chain-simulate the turbo receiver at an allocation",
      "peak-to-average power ratio CCDF of the transmit signal",
      "required SNR across an epsilon / MI-target / BEP-target axis",
      "fit the variance-to-MI curve parameters and emit them",
      "measure the decoder transfer curve"};
  CommonArgs args[7];
  for (int i = 0; i < 7; ++i)
    add_common(app.add_subcommand(names[i], descs[i]), args[i], std::string(names[i]) != "fit-j");

  CLI11_PARSE(app, argc, argv);
  for (int i = 0; i < 7; ++i)
    if (app.get_subcommand(names[i])->parsed()) return dispatch(names[i], args[i]);
  return 1;
}
