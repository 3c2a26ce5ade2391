#include <benchmark/benchmark.h>

#include <cmath>
#include <map>

#include "covfmm/covariance.hpp"
#include "covfmm/experiment.hpp"
#include "covfmm/fmm_plan.hpp"
#include "covfmm/random.hpp"

namespace {

using namespace covfmm;

struct Case {
  Matrix a;
  BoxTree tree;
  FmmPlan plan;
  Vector d;
};

// one shared state per problem size; building R and inverting it dominates
// setup and must stay out of the timed loops
const Case& case_for(long m) {
  static std::map<long, Case> cases;
  const auto it = cases.find(m);
  if (it != cases.end()) return it->second;

  const int side = static_cast<int>(std::lround(std::sqrt(double(m))));
  GridSpec spec;
  spec.lat_count = side;
  spec.lon_count = side;
  const ObservationSet obs = generate_grid(spec);

  Case c{inverse_weighting(
             recondition_rr(build_covariance(obs, CorrelationKind::Soar, 80.0),
                            1000.0))
             .matrix,
         build_tree(obs, 3), FmmPlan{}, Vector(m)};
  c.plan = plan_build(c.a, c.tree, 10);
  RandomStream rng(split_seed(static_cast<std::uint64_t>(m)));
  for (long i = 0; i < m; ++i) c.d[i] = rng.normal();
  return cases.emplace(m, std::move(c)).first->second;
}

void BM_dense_apply(benchmark::State& state) {
  const Case& c = case_for(state.range(0));
  for (auto _ : state) {
    Vector q = apply_dense_oracle(c.a, c.d);
    benchmark::DoNotOptimize(q.data());
  }
  state.SetComplexityN(state.range(0));
}

void BM_plan_apply(benchmark::State& state) {
  const Case& c = case_for(state.range(0));
  for (auto _ : state) {
    Vector q = apply(c.plan, c.d);
    benchmark::DoNotOptimize(q.data());
  }
  state.SetComplexityN(state.range(0));
}

void BM_plan_build(benchmark::State& state) {
  const Case& c = case_for(state.range(0));
  for (auto _ : state) {
    FmmPlan plan = plan_build(c.a, c.tree, 10);
    benchmark::DoNotOptimize(plan.factors.data());
  }
}

}  // namespace

BENCHMARK(BM_dense_apply)->Arg(256)->Arg(576)->Arg(1156)->Complexity();
BENCHMARK(BM_plan_apply)->Arg(256)->Arg(576)->Arg(1156)->Complexity();
BENCHMARK(BM_plan_build)->Arg(256)->Arg(576)->Arg(1156)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
