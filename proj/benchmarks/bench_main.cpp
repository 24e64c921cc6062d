#include <benchmark/benchmark.h>

#include "ccpa/baselines.hpp"
#include "ccpa/exitlab.hpp"
#include "ccpa/model.hpp"
#include "ccpa/optim.hpp"
#include "ccpa/receiver.hpp"

namespace {

ccpa::SystemConfig bench_config() {
  ccpa::SystemConfig cfg;
  cfg.users = 2;
  cfg.rx_antennas = 2;
  cfg.bins = 8;
  cfg.taps = 5;
  cfg.noise_var = 1.0;
  return cfg;
}

ccpa::ConvergenceSpec bench_spec(int k_points) {
  ccpa::DecoderExitCurve curve;
  for (int i = 0; i <= 20; ++i) {
    double x = i / 20.0;
    curve.grid.push_back(x);
    curve.output.push_back(0.999 * x);
  }
  std::vector<ccpa::UserTarget> targets(2, ccpa::UserTarget{0.7, 0.9, 0.1});
  return ccpa::build_convergence_spec(targets, k_points, {curve}, ccpa::Modulation::qpsk,
                                      ccpa::SamplingMode::diagonal);
}

void bm_mmse_filters(benchmark::State& state) {
  ccpa::SystemConfig cfg = bench_config();
  ccpa::ChannelRealization chan = ccpa::gen_static_channel(cfg, 7);
  ccpa::ConvergenceSpec spec = bench_spec(static_cast<int>(state.range(0)));
  ccpa::DeltaTensor dt = spec.delta_tensor();
  ccpa::PowerAllocation p = ccpa::PowerAllocation::Constant(2, 8, 4.0);
  for (auto _ : state) benchmark::DoNotOptimize(ccpa::mmse_filters(p, chan, dt, cfg.noise_var));
}
BENCHMARK(bm_mmse_filters)->Arg(5)->Arg(11);

void bm_sca_subproblem(benchmark::State& state) {
  ccpa::SystemConfig cfg = bench_config();
  ccpa::ChannelRealization chan = ccpa::gen_static_channel(cfg, 7);
  ccpa::ConvergenceSpec spec = bench_spec(5);
  ccpa::PowerAllocation p0 = ccpa::feasible_init(chan, spec, cfg.noise_var);
  ccpa::ReceiveFilters f = ccpa::mmse_filters(p0, chan, spec.delta_tensor(), cfg.noise_var);
  ccpa::FilterCoeffs coeffs = ccpa::filter_coeffs(f, chan, cfg.noise_var);
  ccpa::ScaMethod method = state.range(0) == 0 ? ccpa::ScaMethod::scavc : ccpa::ScaMethod::scagp;
  for (auto _ : state)
    benchmark::DoNotOptimize(ccpa::sca_solve(method, coeffs, spec, p0, 0.01));
}
BENCHMARK(bm_sca_subproblem)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void bm_ra_decode(benchmark::State& state) {
  ccpa::RaCode code(1000, 3);
  std::vector<std::uint8_t> info(1000);
  for (std::size_t i = 0; i < info.size(); ++i) info[i] = static_cast<std::uint8_t>((i * 7) & 1);
  std::vector<std::uint8_t> coded = code.encode(info);
  std::vector<double> apriori = ccpa::gaussian_apriori_llrs(coded, 2.0, 11);
  for (auto _ : state) benchmark::DoNotOptimize(code.decode(apriori, 8));
}
BENCHMARK(bm_ra_decode)->Unit(benchmark::kMicrosecond);

void bm_ccc_mi(benchmark::State& state) {
  ccpa::Modulation mod = state.range(0) == 0 ? ccpa::Modulation::qpsk : ccpa::Modulation::qam16;
  for (auto _ : state) benchmark::DoNotOptimize(ccpa::ccc_mi(4.0, mod));
}
BENCHMARK(bm_ccc_mi)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
