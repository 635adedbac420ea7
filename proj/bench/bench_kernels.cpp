// Serial reference kernels vs their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <numeric>

#include "seqtag/kernels.hpp"
#include "seqtag/synthetic.hpp"

using namespace seqtag;

namespace {

struct Fixture {
  std::vector<Sentence> data;
  ModelParams params;
  std::vector<std::size_t> batch;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    SyntheticOptions o;
    o.train_sentences = 256;
    o.dev_sentences = 1;
    Fixture x;
    x.data = generate_synthetic_corpus(o).train;
    TrainConfig c;
    c.architecture = Architecture::BiLstmCrf;
    x.params = init_model(c, x.data);
    x.batch.resize(64);
    std::iota(x.batch.begin(), x.batch.end(), 0);
    return x;
  }();
  return f;
}

void BM_BatchGradientSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(batch_gradient_serial(f.params, f.data, f.batch, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
}

void BM_BatchGradientParallel(benchmark::State& state) {
  const auto& f = fixture();
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(batch_gradient_parallel(f.params, f.data, f.batch, 1, workers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
}

void BM_PredictSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(predict_batch_serial(f.params, f.data));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.data.size()));
}

void BM_PredictParallel(benchmark::State& state) {
  const auto& f = fixture();
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(predict_batch_parallel(f.params, f.data, workers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.data.size()));
}

}  // namespace

BENCHMARK(BM_BatchGradientSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchGradientParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PredictSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PredictParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
