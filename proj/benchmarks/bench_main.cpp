#include <benchmark/benchmark.h>

#include <random>

#include "attrmetric/data.hpp"
#include "attrmetric/objective.hpp"
#include "attrmetric/rng.hpp"
#include "attrmetric/tasks.hpp"
#include "attrmetric/training.hpp"

using namespace attrmetric;

namespace {

Model random_model(Eigen::Index d, Eigen::Index p, Eigen::Index m, std::uint64_t seed) {
  std::srand(static_cast<unsigned>(seed));
  Model model = zero_model(d, p, m);
  model.w_x = Matrix::Random(d, p) * 0.3;
  model.b_x = Vector::Random(p) * 0.1;
  model.w_a = Matrix::Random(p, m);
  return model;
}

PairBatch synth_pairs() {
  const Dataset ds = synth_generate(SynthSpec::synth_a());
  return PairBatch::pack(make_pairs(ds.features, ds.attributes, PairConfig{}));
}

}  // namespace

// p = 20 attributes, d = 64 features, m from the arg
static void BM_Score(benchmark::State& state) {
  const Eigen::Index m = state.range(0);
  const Model model = random_model(64, 20, m, 1);
  const Vector x = Vector::Random(64);
  const Vector y = (Vector::Random(20).array() + 1.0) / 2.0;
  for (auto _ : state) benchmark::DoNotOptimize(score(x, y, model));
}
BENCHMARK(BM_Score)->Arg(4)->Arg(20)->Arg(40);

static void BM_Gradients(benchmark::State& state) {
  const PairBatch all = synth_pairs();
  const auto n = state.range(0);
  PairBatch batch;
  batch.x = all.x.topRows(n);
  batch.y = all.y.topRows(n);
  batch.z = all.z.head(n);
  const Model model = random_model(64, 20, 8, 2);
  const HyperParams hp;
  for (auto _ : state) benchmark::DoNotOptimize(gradients(batch, model, hp));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Gradients)->Arg(20)->Arg(100)->Arg(1000);

static void BM_Epoch(benchmark::State& state) {
  const PairBatch batch = synth_pairs();
  HyperParams hp;
  hp.epochs = 1;
  hp.m = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sgd_train(batch, hp, derive_seed(0, 0)));
  state.SetItemsProcessed(state.iterations() * batch.x.rows());
}
BENCHMARK(BM_Epoch)->Arg(8)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_ZslPredict(benchmark::State& state) {
  const Dataset ds = synth_generate(SynthSpec::synth_a());
  const auto descriptors = class_descriptors(ds.attributes, ds.labels);
  const Model model = random_model(64, 20, 8, 3);
  for (auto _ : state) benchmark::DoNotOptimize(zsl_predict(ds.features, descriptors, model));
}
BENCHMARK(BM_ZslPredict)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
