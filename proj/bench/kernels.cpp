// Serial reference vs OpenMP version of each parallel kernel.
// Run with --benchmark_counters_tabular=true; the threads counter records
// the OpenMP worker count used.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <cmath>

#include "flexstage/control.hpp"
#include "flexstage/placement.hpp"
#include "flexstage/plant.hpp"
#include "flexstage/structure_opt.hpp"

using namespace flexstage;

namespace {

const ModalModel& model() {
  static const ModalModel m = [] {
    RibbedStageOptions o;
    o.nx = o.ny = 16;
    return analyze_geometry(make_ribbed_stage(o), Material{}, 8);
  }();
  return m;
}

const PlantModel& plant() {
  static const PlantModel p = assemble_plant(model(), default_placement(model().geometry), 1);
  return p;
}

std::vector<Eigen::VectorXd> thetas(const StageGeometry& g, int n) {
  std::vector<Eigen::VectorXd> out;
  const Eigen::VectorXd span = g.thickness_max - g.thickness_min;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d u(0.1 + 0.8 * i / n, 0.9 - 0.7 * i / n);
    out.push_back(g.thickness_min + span.cwiseProduct(u));
  }
  return out;
}

std::vector<ChannelPlant> channels() {
  const DecouplingPair pair = decoupling_matrices(plant());
  std::vector<ChannelPlant> out;
  for (int k = 0; k < pair.channel_count(); ++k) out.push_back(channel_plant(plant(), pair, k));
  return out;
}

void tag(benchmark::State& state) {
  state.counters["threads"] = omp_get_max_threads();
}

template <bool Parallel>
void BM_EvaluateDesigns(benchmark::State& state) {
  RibbedStageOptions o;
  o.nx = o.ny = 12;
  const StructureProblem p{make_ribbed_stage(o), Material{},
                           to_bounds({2.0 * M_PI * 50.0, 2.0 * M_PI * 560.0, 1, 3})};
  const auto t = thetas(p.geometry, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? evaluate_designs(p, t) : evaluate_designs_serial(p, t));
  }
  tag(state);
}

template <bool Parallel>
void BM_GroupLandscape(benchmark::State& state) {
  const TransducerGroup g = default_placement(model().geometry).actuators.front();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? group_landscape(model(), g, true, 1, 4, 1.0, 25)
                                      : group_landscape_serial(model(), g, true, 1, 4, 1.0, 25));
  }
  tag(state);
}

template <bool Parallel>
void BM_PlantResponse(benchmark::State& state) {
  const Eigen::VectorXd grid = log_grid(0.1 * 2.0 * M_PI, 2000.0 * 2.0 * M_PI, 200);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? plant_response(plant(), grid)
                                      : plant_response_serial(plant(), grid));
  }
  tag(state);
}

template <bool Parallel>
void BM_TuneChannels(benchmark::State& state) {
  const auto c = channels();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? tune_channels(c) : tune_channels_serial(c));
  }
  tag(state);
}

}  // namespace

BENCHMARK(BM_EvaluateDesigns<false>)->Name("evaluate_designs/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateDesigns<true>)->Name("evaluate_designs/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GroupLandscape<false>)->Name("group_landscape/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GroupLandscape<true>)->Name("group_landscape/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PlantResponse<false>)->Name("plant_response/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PlantResponse<true>)->Name("plant_response/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TuneChannels<false>)->Name("tune_channels/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TuneChannels<true>)->Name("tune_channels/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
