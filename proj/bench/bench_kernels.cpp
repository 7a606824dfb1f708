// Serial reference vs OpenMP kernels on the workloads the solver actually runs.

#include "nhocp/checks.hpp"
#include "nhocp/models.hpp"
#include "nhocp/parallel.hpp"
#include "nhocp/solver.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace nhocp;

namespace {

const models::SleighParams kSleigh{1.0, 1.0, 0.5};

struct FlowCase {
  MechanicalModel model = models::chaplygin_sleigh(kSleigh);
  CostModel cost = quadratic_cost();
  Vec x0;
  parallel::VectorMap flow;

  FlowCase() {
    x0.resize(10);
    x0 << 0.0, 0.0, 0.2, 0.1, 1.0, 0.3, -0.2, 0.1, 0.4, -0.5;
    flow = [this](const Vec& x) {
      const ExtremalState s = ExtremalState::unpack(x, model.n, model.k);
      return Vec(integrate_extremal(model, cost, s, 1.0, 1e-3).states.back());
    };
  }
};

void BM_FlowJacobianSerial(benchmark::State& st) {
  const FlowCase c;
  for (auto _ : st) benchmark::DoNotOptimize(parallel::central_jacobian_serial(c.flow, c.x0, 1e-6));
}

void BM_FlowJacobianParallel(benchmark::State& st) {
  const FlowCase c;
  st.counters["threads"] = parallel::thread_count();
  for (auto _ : st) benchmark::DoNotOptimize(parallel::central_jacobian(c.flow, c.x0, 1e-6));
}

void shoot_planted(benchmark::State& st, bool parallel_jacobian) {
  const MechanicalModel m = models::chaplygin_sleigh(kSleigh);
  const CostModel cost = quadratic_cost();
  std::mt19937_64 rng(3);
  const checks::PlantedInstance inst = checks::planted_instance(m, cost, rng, {}, 1.0, 1e-3);
  ShootingConfig cfg;
  cfg.guess = CostateGuess::Linearized;
  cfg.parallel_jacobian = parallel_jacobian;
  for (auto _ : st) {
    const ShootingResult r = shoot(m, cost, inst.bc, cfg);
    if (!r.diagnostics.converged) st.SkipWithError("shooting did not converge");
    benchmark::DoNotOptimize(r.initial_costates.data());
  }
}

void BM_ShootSerialJacobian(benchmark::State& st) { shoot_planted(st, false); }
void BM_ShootParallelJacobian(benchmark::State& st) { shoot_planted(st, true); }

// cold starts only: warm-started continuation is inherently sequential
void cold_sweep(benchmark::State& st, int jobs) {
  const MechanicalModel m = models::chaplygin_sleigh(kSleigh);
  const models::ObstacleParams center{};
  ShootingConfig cfg;
  cfg.initial_costate_guess = models::sleigh_obstacle_costate_guess();
  SweepOptions opts;
  opts.warm_start = false;
  opts.jobs = jobs;
  for (auto _ : st) {
    const auto pts = sweep(
        m,
        [&](double kappa) {
          models::ObstacleParams o = center;
          o.kappa = kappa;
          return models::sleigh_with_obstacle(kSleigh, o);
        },
        models::sleigh_obstacle_boundary(), cfg, {0.25, 0.5},
        [&](const Vec& q) { return models::obstacle_distance(center, q); }, opts);
    benchmark::DoNotOptimize(pts.data());
  }
}

void BM_SweepColdSerial(benchmark::State& st) { cold_sweep(st, 1); }
void BM_SweepColdParallel(benchmark::State& st) { cold_sweep(st, std::max(2, parallel::thread_count())); }

}  // namespace

BENCHMARK(BM_FlowJacobianSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FlowJacobianParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ShootSerialJacobian)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ShootParallelJacobian)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepColdSerial)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK(BM_SweepColdParallel)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
