// Experiment drivers behind the command line tool: configuration loading,
// optimization runs, transfer surfaces, trajectories, PAPR distributions and
// parameter sweeps. All results land as CSV files in an output directory.
#pragma once

#include <string>
#include <vector>

#include "ccpa/baselines.hpp"
#include "ccpa/exitlab.hpp"
#include "ccpa/model.hpp"
#include "ccpa/optim.hpp"

namespace ccpa {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  SystemConfig sys;
  std::vector<UserTarget> targets;  // one entry replicated across users is allowed
  int k_points = 11;
  SamplingMode mode = SamplingMode::diagonal;
  std::string method = "scagp";  // scavc | scagp | oes | zf | ep

  std::string channel_csv;        // fixture path; empty = generate from seed
  std::string decoder_curve_csv;  // fixture path; empty = measure

  int curve_points = 21;
  int curve_blocks = 40;
  int curve_block_bits = 3000;
  int decoder_iters = 8;

  int turbo_iters = 10;
  int trajectory_blocks = 0;  // 0 = sized so the interleaver spans 24000 bits
  int trajectory_frames = 1;
  std::string allocation_csv;  // input for trajectory / papr

  int papr_blocks = 100000;

  std::string sweep_axis;  // epsilon | mi_target | bep_target
  std::vector<double> sweep_values;
  std::vector<std::string> sweep_methods;

  double outer_tol = 0.05;
  double inner_tol = 0.01;
  int threads = 1;
};

// Parses the JSON config; unknown or out-of-range values raise ConfigError
// naming the field.
ExperimentConfig load_config(const std::string& path);

ChannelRealization resolve_channel(const ExperimentConfig& cfg, std::uint64_t seed);
DecoderExitCurve resolve_decoder_curve(const ExperimentConfig& cfg, std::uint64_t seed);
ConvergenceSpec resolve_spec(const ExperimentConfig& cfg, const DecoderExitCurve& curve);

void save_allocation_csv(const PowerAllocation& p, double snr, const std::string& path);
PowerAllocation load_allocation_csv(const std::string& path);

// Each driver writes its CSV artifacts under out_dir and throws on failure:
// ConfigError for bad inputs, InfeasibleProblem / InfeasibleTarget when no
// allocation exists, SolverFailure from the optimizer.
void run_optimize(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir);
void run_exit_surface(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir);
void run_trajectory(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir);
void run_papr(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir);
void run_sweep(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir);
void run_fit_j(const std::string& out_dir);
void run_decoder_exit(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir);

// PAPR of one transmitted block: peak amplitude over the root mean power
// reference, 10 log10(max_n |x_n| / sqrt(mean_power)).
double papr_db(const std::vector<cplx>& time_block, double mean_power);

}  // namespace ccpa
