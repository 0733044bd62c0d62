#include <benchmark/benchmark.h>

#include <numbers>

#include "mmbeam/baseline.hpp"
#include "mmbeam/neural.hpp"
#include "mmbeam/sounding.hpp"

namespace {

using namespace mmbeam;

const ArrayGeometry kGeometry{36, 0.5};

void BM_ArrayResponse(benchmark::State& state) {
  double angle = -44.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(array_response(kGeometry, angle));
    angle += 0.01;
    if (angle > 44.0) angle = -44.0;
  }
}
BENCHMARK(BM_ArrayResponse);

void BM_SoundConcatCodebook(benchmark::State& state) {
  const Codebook all = concat_codebook(dft_codebook(kGeometry, 64, -45.0, 45.0),
                                       pn_codebook(kGeometry, 36, 7));
  const ImpairmentVector e = draw_impairment(ImpairmentConfig{}, kGeometry);
  const Eigen::VectorXcd h = channel_vector(make_channel(12.3, 1.0), kGeometry);
  Rng rng(1);
  for (auto _ : state)
    benchmark::DoNotOptimize(sound_codebook(all, e, h, 0.05, rng));
  state.SetItemsProcessed(state.iterations() * all.size());
}
BENCHMARK(BM_SoundConcatCodebook);

void BM_RssMp(benchmark::State& state) {
  const Codebook pn = pn_codebook(kGeometry, 36, 7);
  const Codebook dft = dft_codebook(kGeometry, 64, -45.0, 45.0);
  const int m = static_cast<int>(state.range(0));
  const MagnitudeDictionary dict =
      model_dictionary(pn, m, dft.angles_deg, kGeometry);
  Rng rng(2);
  Eigen::VectorXd p(m);
  for (int i = 0; i < m; ++i) p(i) = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(rss_mp(p, dict));
}
BENCHMARK(BM_RssMp)->Arg(5)->Arg(10)->Arg(20);

void BM_TrainStep(benchmark::State& state) {
  const int m = 10, kp = 51, batch = 32;
  NetworkParameters params = init_network(m, kp, 3);
  NetworkGradients rms = NetworkGradients::zeros_like(params);
  TrainConfig cfg;
  Rng rng(4);
  Eigen::MatrixXd x(batch, m);
  std::vector<int> y(batch);
  for (int i = 0; i < batch; ++i) {
    for (int j = 0; j < m; ++j) x(i, j) = rng.uniform();
    y[i] = static_cast<int>(rng.below(kp));
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(backward_and_step(params, x, y, cfg, rms));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_TrainStep);

void BM_Predict(benchmark::State& state) {
  const NetworkParameters params = init_network(10, 51, 5);
  Rng rng(6);
  Eigen::VectorXd p(10);
  for (int i = 0; i < 10; ++i) p(i) = rng.uniform() + 0.01;
  for (auto _ : state) benchmark::DoNotOptimize(predict(params, p));
}
BENCHMARK(BM_Predict);

}  // namespace

BENCHMARK_MAIN();
