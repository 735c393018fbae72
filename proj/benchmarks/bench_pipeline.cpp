#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "gripwatch/classify.hpp"
#include "gripwatch/detector.hpp"
#include "gripwatch/eval.hpp"
#include "gripwatch/grasp_sim.hpp"
#include "gripwatch/haar_features.hpp"
#include "gripwatch/tactile.hpp"

using namespace gripwatch;

namespace {

std::vector<FeatureVector> training_rows() {
  std::vector<NamedEpisode> eps;
  int i = 0;
  for (auto& ep : generate_dataset(2, 2, EpisodeConfig{})) eps.push_back({"e" + std::to_string(i++), std::move(ep)});
  return pool(extract_features(eps, default_fingertip_geometry(30), DwtConfig{}));
}

void BM_HaarDecompose(benchmark::State& state) {
  const DwtConfig cfg{static_cast<std::size_t>(state.range(0))};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> window(cfg.n_w);
  for (auto& v : window) v = u(rng);
  for (auto _ : state) {
    auto d = haar_decompose(window, cfg);
    benchmark::DoNotOptimize(compute_sigma(d, cfg));
  }
}
BENCHMARK(BM_HaarDecompose)->Arg(4)->Arg(14)->Arg(18);

void BM_AggregateTipForce(benchmark::State& state) {
  const auto ep = generate_episode(EpisodeConfig{});
  const auto geo = default_fingertip_geometry(30);
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(aggregate_tip_force(ep.frames[k], geo));
    k = (k + 1) % ep.frames.size();
  }
}
BENCHMARK(BM_AggregateTipForce);

void BM_ExtractorPush(benchmark::State& state) {
  FeatureExtractor ex(DwtConfig{});
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  double t = 0.0;
  for (auto _ : state) {
    const Vec3 f(3.0 + g(rng), g(rng), g(rng));
    t += 1.0 / 150.0;
    benchmark::DoNotOptimize(ex.push({t, f, f.norm()}));
  }
}
BENCHMARK(BM_ExtractorPush);

void BM_DetectorFrame(benchmark::State& state) {
  const auto model = std::make_shared<const LinearModel>(train(training_rows(), TrainConfig{}));
  EpisodeConfig c;
  c.phase_durations = {1.0, 0.5, 5.0, 200.0, 0.5};
  const auto ep = generate_episode(c);
  GraspDetector det(default_fingertip_geometry(30), model);
  std::size_t k = 0;
  for (auto _ : state) {
    if (k == ep.frames.size()) {
      state.PauseTiming();
      det = GraspDetector(default_fingertip_geometry(30), model);
      k = 0;
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(det.process(ep.frames[k++]));
  }
}
BENCHMARK(BM_DetectorFrame);

void BM_TrainLogReg(benchmark::State& state) {
  const auto rows = training_rows();
  for (auto _ : state) benchmark::DoNotOptimize(train(rows, TrainConfig{}));
  state.counters["rows"] = static_cast<double>(rows.size());
}
BENCHMARK(BM_TrainLogReg)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
