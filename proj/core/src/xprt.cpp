#include "ccpa/xprt.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <json.hpp>

#include "ccpa/csv.hpp"
#include "ccpa/receiver.hpp"

namespace ccpa {

namespace {

using nlohmann::json;

template <typename T>
T field(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

SamplingMode parse_mode(const std::string& s) {
  if (s == "diagonal") return SamplingMode::diagonal;
  if (s == "worst-case" || s == "worst_case") return SamplingMode::worst_case;
  throw ConfigError("config field 'mode' must be 'diagonal' or 'worst-case'");
}

bool known_method(const std::string& m) {
  return m == "scavc" || m == "scagp" || m == "oes" || m == "zf" || m == "ep";
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.sys.users = field(j, "users", cfg.sys.users);
  cfg.sys.rx_antennas = field(j, "rx_antennas", cfg.sys.rx_antennas);
  cfg.sys.bins = field(j, "bins", cfg.sys.bins);
  cfg.sys.bits_per_symbol = field(j, "bits_per_symbol", cfg.sys.bits_per_symbol);
  cfg.sys.taps = field(j, "taps", cfg.sys.taps);
  cfg.sys.code_rate = field(j, "code_rate", cfg.sys.code_rate);
  cfg.sys.noise_var = field(j, "noise_var", cfg.sys.noise_var);
  cfg.sys.seed = field<std::uint64_t>(j, "seed", cfg.sys.seed);
  try {
    cfg.sys.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config system parameters: ") + e.what());
  }

  UserTarget common;
  common.dec_target = field(j, "dec_target", 0.7);
  common.eq_target = field(j, "eq_target", 0.9);
  common.eps = field(j, "eps", 0.1);
  if (j.contains("targets")) {
    if (!j.at("targets").is_array()) throw ConfigError("config field 'targets' must be an array");
    for (const auto& t : j.at("targets")) {
      UserTarget ut;
      ut.dec_target = field(t, "dec_target", common.dec_target);
      ut.eq_target = field(t, "eq_target", common.eq_target);
      ut.eps = field(t, "eps", common.eps);
      cfg.targets.push_back(ut);
    }
  } else {
    cfg.targets.assign(static_cast<std::size_t>(cfg.sys.users), common);
  }
  if (cfg.targets.size() == 1) cfg.targets.assign(static_cast<std::size_t>(cfg.sys.users), cfg.targets[0]);
  if (static_cast<int>(cfg.targets.size()) != cfg.sys.users)
    throw ConfigError("config field 'targets' must have one entry per user");
  for (const auto& t : cfg.targets) {
    if (!(t.dec_target > 0.0 && t.dec_target <= 1.0))
      throw ConfigError("config field 'dec_target' must be in (0,1]");
    if (!(t.eq_target >= 0.0 && t.eq_target < 1.0))
      throw ConfigError("config field 'eq_target' must be in [0,1)");
    if (!(t.eps >= 0.0 && t.eps < 1.0)) throw ConfigError("config field 'eps' must be in [0,1)");
  }

  cfg.k_points = field(j, "k_points", cfg.k_points);
  if (cfg.k_points < 1) throw ConfigError("config field 'k_points' must be >= 1");
  cfg.mode = parse_mode(field<std::string>(j, "mode", "diagonal"));
  cfg.method = field<std::string>(j, "method", cfg.method);
  if (!known_method(cfg.method))
    throw ConfigError("config field 'method' must be one of scavc, scagp, oes, zf, ep");

  cfg.channel_csv = field<std::string>(j, "channel_csv", "");
  cfg.decoder_curve_csv = field<std::string>(j, "decoder_curve_csv", "");
  cfg.curve_points = field(j, "curve_points", cfg.curve_points);
  cfg.curve_blocks = field(j, "curve_blocks", cfg.curve_blocks);
  cfg.curve_block_bits = field(j, "curve_block_bits", cfg.curve_block_bits);
  cfg.decoder_iters = field(j, "decoder_iters", cfg.decoder_iters);
  if (cfg.curve_points < 4 || cfg.curve_blocks < 1 || cfg.curve_block_bits < 3 ||
      cfg.curve_block_bits % 3 != 0 || cfg.decoder_iters < 1)
    throw ConfigError("config decoder-curve parameters out of range");

  cfg.turbo_iters = field(j, "turbo_iters", cfg.turbo_iters);
  cfg.trajectory_blocks = field(j, "trajectory_blocks", cfg.trajectory_blocks);
  cfg.trajectory_frames = field(j, "trajectory_frames", cfg.trajectory_frames);
  cfg.allocation_csv = field<std::string>(j, "allocation_csv", "");
  cfg.papr_blocks = field(j, "papr_blocks", cfg.papr_blocks);
  if (cfg.turbo_iters < 1 || cfg.trajectory_frames < 1 || cfg.papr_blocks < 1)
    throw ConfigError("config simulation parameters out of range");

  cfg.sweep_axis = field<std::string>(j, "sweep_axis", "");
  if (j.contains("sweep_values")) {
    for (const auto& v : j.at("sweep_values")) cfg.sweep_values.push_back(v.get<double>());
  }
  if (j.contains("sweep_methods")) {
    for (const auto& m : j.at("sweep_methods")) {
      std::string s = m.get<std::string>();
      if (!known_method(s)) throw ConfigError("config field 'sweep_methods' has unknown method " + s);
      cfg.sweep_methods.push_back(s);
    }
  }

  cfg.outer_tol = field(j, "outer_tol", cfg.outer_tol);
  cfg.inner_tol = field(j, "inner_tol", cfg.inner_tol);
  cfg.threads = field(j, "threads", cfg.threads);
  if (!(cfg.outer_tol > 0.0) || !(cfg.inner_tol > 0.0) || cfg.threads < 1)
    throw ConfigError("config tolerance or thread parameters out of range");
  return cfg;
}

ChannelRealization resolve_channel(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (!cfg.channel_csv.empty()) {
    ChannelRealization chan = load_channel_csv(cfg.channel_csv);
    if (chan.users != cfg.sys.users || chan.rx_antennas != cfg.sys.rx_antennas ||
        chan.bins != cfg.sys.bins)
      throw ConfigError("channel fixture dimensions do not match the config");
    return chan;
  }
  return gen_static_channel(cfg.sys, seed);
}

DecoderExitCurve resolve_decoder_curve(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (!cfg.decoder_curve_csv.empty()) return load_decoder_curve_csv(cfg.decoder_curve_csv);
  std::vector<double> grid;
  const int base = cfg.curve_points - 4;
  for (int i = 0; i < base; ++i) grid.push_back(0.95 * i / (base - 1));
  grid.insert(grid.end(), {0.98, 0.99, 0.999, 0.9999});
  return measure_decoder_exit(grid, cfg.curve_blocks, cfg.curve_block_bits, cfg.decoder_iters,
                              seed);
}

ConvergenceSpec resolve_spec(const ExperimentConfig& cfg, const DecoderExitCurve& curve) {
  return build_convergence_spec(cfg.targets, cfg.k_points, {curve},
                                modulation_from_bits(cfg.sys.bits_per_symbol), cfg.mode);
}

void save_allocation_csv(const PowerAllocation& p, double snr, const std::string& path) {
  csvio::Table t;
  t.comments = {"snr_db=" + csvio::fmt(snr), "users=" + std::to_string(p.rows()),
                "bins=" + std::to_string(p.cols())};
  t.header = {"user", "bin", "power"};
  for (Eigen::Index u = 0; u < p.rows(); ++u)
    for (Eigen::Index m = 0; m < p.cols(); ++m)
      t.rows.push_back({std::to_string(u), std::to_string(m), csvio::fmt(p(u, m))});
  csvio::write(path, t);
}

PowerAllocation load_allocation_csv(const std::string& path) {
  csvio::Table t = csvio::read(path);
  int users = 0, bins = 0;
  for (const auto& c : t.comments) {
    if (c.rfind("users=", 0) == 0) users = std::stoi(c.substr(6));
    if (c.rfind("bins=", 0) == 0) bins = std::stoi(c.substr(5));
  }
  if (users <= 0 || bins <= 0) throw std::runtime_error("allocation csv missing dimensions: " + path);
  PowerAllocation p = PowerAllocation::Zero(users, bins);
  for (const auto& row : t.rows) {
    if (row.size() != 3) throw std::runtime_error("bad allocation row in " + path);
    p(std::stoi(row[0]), std::stoi(row[1])) = std::stod(row[2]);
  }
  return p;
}

namespace {

struct MethodRun {
  PowerAllocation p;
  int outer_iters = 0;
  int inner_iters = 0;
  std::vector<double> objective_history;
};

MethodRun run_method(const std::string& method, const ExperimentConfig& cfg,
                     const ChannelRealization& chan, const ConvergenceSpec& spec) {
  MethodRun r;
  if (method == "scavc" || method == "scagp") {
    OptimizeResult res =
        alternating_optimize(cfg.sys, chan, spec,
                             method == "scavc" ? ScaMethod::scavc : ScaMethod::scagp,
                             cfg.outer_tol, cfg.inner_tol);
    r.p = res.p;
    r.outer_iters = res.outer_iters;
    for (int n : res.inner_iters) r.inner_iters += n;
    r.objective_history = res.objective_history;
  } else if (method == "oes") {
    OesResult res = oes_allocate(chan, spec, cfg.sys.noise_var);
    if (!res.feasible)
      throw InfeasibleProblem("no orthogonal assignment satisfies the constraint set");
    r.p = res.p;
  } else if (method == "zf") {
    r.p = zf_scmmse(chan, spec, cfg.sys.noise_var);
  } else if (method == "ep") {
    double level = ep_bisection(chan, spec, cfg.sys.noise_var);
    r.p = PowerAllocation::Constant(cfg.sys.users, cfg.sys.bins, level);
  } else {
    throw ConfigError("unknown method: " + method);
  }
  return r;
}

void save_slacks_csv(const PowerAllocation& p, const ChannelRealization& chan,
                     const ConvergenceSpec& spec, double noise_var, const std::string& path) {
  csvio::Table t;
  t.header = {"user", "k", "zeta", "xi", "slack"};
  for (int u = 0; u < spec.users(); ++u)
    for (int k = 0; k < spec.points(); ++k) {
      Eigen::VectorXd delta(spec.users());
      for (int l = 0; l < spec.users(); ++l) delta[l] = spec.delta_for(u, k, l);
      double zeta = mmse_sinr(p, chan, delta, noise_var, u);
      t.rows.push_back({std::to_string(u), std::to_string(k), csvio::fmt(zeta),
                        csvio::fmt(spec.xi(u, k)), csvio::fmt(zeta / spec.xi(u, k) - 1.0)});
    }
  csvio::write(path, t);
}

std::string out_path(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

PowerAllocation resolve_allocation(const ExperimentConfig& cfg, const ChannelRealization& chan,
                                   const ConvergenceSpec& spec) {
  if (!cfg.allocation_csv.empty()) {
    PowerAllocation p = load_allocation_csv(cfg.allocation_csv);
    if (p.rows() != cfg.sys.users || p.cols() != cfg.sys.bins)
      throw ConfigError("allocation fixture dimensions do not match the config");
    return p;
  }
  return run_method(cfg.method, cfg, chan, spec).p;
}

}  // namespace

void run_optimize(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir) {
  ChannelRealization chan = resolve_channel(cfg, seed);
  DecoderExitCurve curve = resolve_decoder_curve(cfg, seed);
  ConvergenceSpec spec = resolve_spec(cfg, curve);
  MethodRun run = run_method(cfg.method, cfg, chan, spec);

  save_allocation_csv(run.p, snr_db(run.p, cfg.sys), out_path(out_dir, "allocation.csv"));
  save_spec_csv(spec, out_path(out_dir, "spec.csv"));
  save_slacks_csv(run.p, chan, spec, cfg.sys.noise_var, out_path(out_dir, "slacks.csv"));

  csvio::Table diag;
  diag.comments = {"method=" + cfg.method, "outer_iters=" + std::to_string(run.outer_iters),
                   "inner_iters=" + std::to_string(run.inner_iters)};
  diag.header = {"step", "objective", "snr_db"};
  for (std::size_t i = 0; i < run.objective_history.size(); ++i) {
    SystemConfig sc = cfg.sys;
    diag.rows.push_back({std::to_string(i), csvio::fmt(run.objective_history[i]),
                         csvio::fmt(10.0 * std::log10(run.objective_history[i] /
                                                      (sc.rx_antennas * static_cast<double>(sc.bins) *
                                                       sc.noise_var)))});
  }
  csvio::write(out_path(out_dir, "diagnostics.csv"), diag);
}

void run_exit_surface(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir) {
  ChannelRealization chan = resolve_channel(cfg, seed);
  DecoderExitCurve curve = resolve_decoder_curve(cfg, seed);
  ConvergenceSpec spec = resolve_spec(cfg, curve);
  PowerAllocation p = resolve_allocation(cfg, chan, spec);

  const JParams jp = default_j_params(spec.mod);
  csvio::Table t;
  t.comments = {std::string("mode=") +
                (spec.mode == SamplingMode::diagonal ? "diagonal" : "worst-case")};
  t.header = {"user", "k", "i_dec", "required_i_eq", "predicted_i_eq"};
  for (int u = 0; u < spec.users(); ++u)
    for (int k = 0; k < spec.points(); ++k) {
      double required = j_forward(spec.sigma2(u, k), jp);
      double predicted = semi_analytic_exit(p, chan, spec, cfg.sys.noise_var, u, k);
      t.rows.push_back({std::to_string(u), std::to_string(k), csvio::fmt(spec.mi_grid(u, k)),
                        csvio::fmt(required), csvio::fmt(predicted)});
    }
  csvio::write(out_path(out_dir, "exit_surface.csv"), t);
}

void run_trajectory(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir) {
  ChannelRealization chan = resolve_channel(cfg, seed);
  DecoderExitCurve curve = resolve_decoder_curve(cfg, seed);
  ConvergenceSpec spec = resolve_spec(cfg, curve);
  PowerAllocation p = resolve_allocation(cfg, chan, spec);

  int blocks = cfg.trajectory_blocks;
  if (blocks == 0) {
    blocks = 24000 / (cfg.sys.bits_per_symbol * cfg.sys.bins);
    while (blocks > 1 &&
           (static_cast<long long>(blocks) * cfg.sys.bits_per_symbol * cfg.sys.bins) % 3 != 0)
      --blocks;
  }
  TurboOptions opt;
  opt.turbo_iters = cfg.turbo_iters;
  opt.decoder_iters = cfg.decoder_iters;
  const Modulation mod = modulation_from_bits(cfg.sys.bits_per_symbol);

  std::vector<TrajectoryRecord::Row> acc;
  for (int f = 0; f < cfg.trajectory_frames; ++f) {
    TurboResult res = turbo_equalize(cfg.sys, chan, p, mod, blocks, opt, seed + 1000003ull * f);
    if (acc.empty()) acc = res.trajectory.rows;
    else
      for (std::size_t i = 0; i < acc.size(); ++i) {
        acc[i].i_eq += res.trajectory.rows[i].i_eq;
        acc[i].i_dec += res.trajectory.rows[i].i_dec;
        acc[i].ber += res.trajectory.rows[i].ber;
      }
  }
  for (auto& r : acc) {
    r.i_eq /= cfg.trajectory_frames;
    r.i_dec /= cfg.trajectory_frames;
    r.ber /= cfg.trajectory_frames;
  }
  TrajectoryRecord avg;
  avg.rows = std::move(acc);
  save_trajectory_csv(avg, out_path(out_dir, "trajectory.csv"));
}

double papr_db(const std::vector<cplx>& time_block, double mean_power) {
  double peak = 0.0;
  for (const cplx& x : time_block) peak = std::max(peak, std::abs(x));
  return 10.0 * std::log10(peak / std::sqrt(mean_power));
}

void run_papr(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir) {
  ChannelRealization chan = resolve_channel(cfg, seed);
  DecoderExitCurve curve = resolve_decoder_curve(cfg, seed);
  ConvergenceSpec spec = resolve_spec(cfg, curve);
  PowerAllocation p = resolve_allocation(cfg, chan, spec);

  const Modulation mod = modulation_from_bits(cfg.sys.bits_per_symbol);
  const int nf = cfg.sys.bins, nq = cfg.sys.bits_per_symbol;
  csvio::Table t;
  t.header = {"user", "papr_db", "ccdf"};
  std::mt19937_64 rng(seed);
  for (int u = 0; u < cfg.sys.users; ++u) {
    const double mean_power = p.row(u).sum() / nf;
    if (mean_power <= 0.0) continue;
    std::vector<double> samples(static_cast<std::size_t>(cfg.papr_blocks));
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(nf) * nq);
    std::vector<cplx> blk(static_cast<std::size_t>(nf));
    for (int b = 0; b < cfg.papr_blocks; ++b) {
      for (auto& bit : bits) bit = static_cast<std::uint8_t>(rng() & 1);
      std::vector<cplx> syms = map_symbols(bits, mod);
      std::copy(syms.begin(), syms.end(), blk.begin());
      dft(blk, /*inverse=*/false, /*unitary=*/true);
      for (int m = 0; m < nf; ++m) blk[static_cast<std::size_t>(m)] *= std::sqrt(p(u, m));
      dft(blk, /*inverse=*/true, /*unitary=*/true);
      samples[static_cast<std::size_t>(b)] = papr_db(blk, mean_power);
    }
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    const std::size_t step = std::max<std::size_t>(1, n / 2000);
    for (std::size_t i = 0; i < n; i += step) {
      double ccdf = static_cast<double>(n - 1 - i) / static_cast<double>(n);
      t.rows.push_back({std::to_string(u), csvio::fmt(samples[i]), csvio::fmt(ccdf)});
    }
  }
  csvio::write(out_path(out_dir, "papr_ccdf.csv"), t);
}

void run_sweep(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir) {
  if (cfg.sweep_axis != "epsilon" && cfg.sweep_axis != "mi_target" && cfg.sweep_axis != "bep_target")
    throw ConfigError("config field 'sweep_axis' must be epsilon, mi_target or bep_target");
  if (cfg.sweep_values.empty()) throw ConfigError("config field 'sweep_values' is empty");
  if (cfg.sweep_axis == "bep_target" && cfg.sys.bits_per_symbol != 2)
    throw ConfigError("bep_target sweeps are defined for QPSK only");
  std::vector<std::string> methods = cfg.sweep_methods;
  if (methods.empty()) methods.push_back(cfg.method);

  ChannelRealization chan = resolve_channel(cfg, seed);
  DecoderExitCurve curve = resolve_decoder_curve(cfg, seed);

  struct Row {
    double value = 0.0;
    std::string method;
    bool feasible = false;
    double snr = 0.0;
    int outer = 0, inner = 0;
  };
  std::vector<Row> rows(cfg.sweep_values.size() * methods.size());

  auto work = [&](std::size_t idx) {
    const double v = cfg.sweep_values[idx / methods.size()];
    const std::string& method = methods[idx % methods.size()];
    Row& row = rows[idx];
    row.value = v;
    row.method = method;
    ExperimentConfig c = cfg;
    if (cfg.sweep_axis == "epsilon") {
      for (auto& t : c.targets) t.eps = v;
    } else if (cfg.sweep_axis == "mi_target") {
      for (auto& t : c.targets) t.dec_target = v;
    } else {
      for (auto& t : c.targets) {
        double lo = 0.0, hi = 0.999999;
        if (bep_from_mi(t.dec_target, hi) > v) {
          row.feasible = false;
          return;
        }
        for (int it = 0; it < 60; ++it) {
          double mid = 0.5 * (lo + hi);
          (bep_from_mi(t.dec_target, mid) <= v ? hi : lo) = mid;
        }
        t.eq_target = hi;
      }
    }
    try {
      ConvergenceSpec spec = resolve_spec(c, curve);
      MethodRun run = run_method(method, c, chan, spec);
      row.feasible = true;
      row.snr = snr_db(run.p, c.sys);
      row.outer = run.outer_iters;
      row.inner = run.inner_iters;
    } catch (const InfeasibleProblem&) {
      row.feasible = false;
    } catch (const InfeasibleTarget&) {
      row.feasible = false;
    }
  };

  if (cfg.threads <= 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (rows.size() + cfg.threads - 1) / cfg.threads;
    for (int t = 0; t < cfg.threads; ++t) {
      std::size_t lo = t * chunk, hi = std::min(rows.size(), lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi] {
        for (std::size_t i = lo; i < hi; ++i) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  csvio::Table t;
  t.comments = {"axis=" + cfg.sweep_axis};
  t.header = {"value", "method", "feasible", "snr_db", "outer_iters", "inner_iters"};
  for (const Row& r : rows)
    t.rows.push_back({csvio::fmt(r.value), r.method, r.feasible ? "1" : "0", csvio::fmt(r.snr),
                      std::to_string(r.outer), std::to_string(r.inner)});
  csvio::write(out_path(out_dir, "sweep.csv"), t);
}

void run_fit_j(const std::string& out_dir) {
  csvio::Table t;
  t.header = {"modulation", "h1", "h2", "h3", "max_residual"};
  for (Modulation mod : {Modulation::qpsk, Modulation::qam16}) {
    JFit fit = fit_j_params(mod);
    t.rows.push_back({mod == Modulation::qpsk ? "qpsk" : "qam16", csvio::fmt(fit.params.h1),
                      csvio::fmt(fit.params.h2), csvio::fmt(fit.params.h3),
                      csvio::fmt(fit.max_residual)});
  }
  csvio::write(out_path(out_dir, "j_params.csv"), t);
}

void run_decoder_exit(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir) {
  ExperimentConfig c = cfg;
  c.decoder_curve_csv.clear();  // always measure fresh
  DecoderExitCurve curve = resolve_decoder_curve(c, seed);
  save_decoder_curve_csv(curve, out_path(out_dir, "decoder_exit.csv"));
}

}  // namespace ccpa
