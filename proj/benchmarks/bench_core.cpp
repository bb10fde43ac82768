#include <benchmark/benchmark.h>

#include "viewgen/baselines.hpp"
#include "viewgen/coil.hpp"
#include "viewgen/firstorder.hpp"
#include "viewgen/viewsim.hpp"

using namespace viewgen;

namespace {

std::vector<View2D> random_views(std::size_t n) {
  Rng rng(1);
  std::vector<View2D> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(project(generate_clip(rng).rotated(random_orientation(rng))));
  return out;
}

std::vector<ClipModel3D> clips(std::size_t n) { return ClipSource(RngSeed{1}, SeedDomain::TrainingClips).clips(0, n); }

}  // namespace

static void BM_ProjectClip(benchmark::State& state) {
  Rng rng(2);
  const auto clip = generate_clip(rng);
  const ViewParams p{0.3, -0.2, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(project(clip, p));
}
BENCHMARK(BM_ProjectClip);

static void BM_Encode(benchmark::State& state) {
  const auto views = random_views(256);
  const Encoder enc{static_cast<FeatureKind>(state.range(0))};
  std::size_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(enc(views[k++ % views.size()]));
  state.SetLabel(std::string(to_string(enc.kind)));
}
BENCHMARK(BM_Encode)
    ->Arg(static_cast<int>(FeatureKind::Angles))
    ->Arg(static_cast<int>(FeatureKind::Locations))
    ->Arg(static_cast<int>(FeatureKind::FeatureMap));

static void BM_CooccurrenceAdd(benchmark::State& state) {
  const Encoder enc{FeatureKind::FeatureMap};
  const auto views = random_views(512);
  std::vector<FeatureVector> maps;
  for (const auto& v : views) maps.push_back(enc(v));
  CoOccurrenceCounter counter(enc.grid);
  std::size_t k = 0;
  for (auto _ : state) {
    counter.add(maps[k % maps.size()], maps[(k + 1) % maps.size()]);
    ++k;
  }
}
BENCHMARK(BM_CooccurrenceAdd);

static void BM_FirstOrderLogScore(benchmark::State& state) {
  const Encoder enc{FeatureKind::FeatureMap};
  const auto c = clips(50);
  CoOccurrenceCounter counter(enc.grid);
  for (const auto& s : make_pairs(c, 5000, enc, RotationSpec::continuous(40), RngSeed{3}))
    if (s.label) counter.add(s.b, s.t);
  const auto model = counter.finish();
  const auto views = random_views(256);
  std::vector<FeatureVector> maps;
  for (const auto& v : views) maps.push_back(enc(v));
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.log_score(maps[k % maps.size()], maps[(k + 7) % maps.size()]));
    ++k;
  }
}
BENCHMARK(BM_FirstOrderLogScore);

static void BM_MakePairs(benchmark::State& state) {
  const auto c = clips(200);
  const Encoder enc{FeatureKind::FeatureMap};
  for (auto _ : state) benchmark::DoNotOptimize(make_pairs(c, 1000, enc, RotationSpec::continuous(40), RngSeed{4}));
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_MakePairs)->Unit(benchmark::kMillisecond);

static void BM_MlpEpoch(benchmark::State& state) {
  const auto kind = static_cast<FeatureKind>(state.range(0));
  const Encoder enc{kind};
  const auto samples = make_pairs(clips(200), 5000, enc, RotationSpec::continuous(40), RngSeed{5});
  TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(samples, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples.size()));
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_MlpEpoch)
    ->Arg(static_cast<int>(FeatureKind::Angles))
    ->Arg(static_cast<int>(FeatureKind::FeatureMap))
    ->Unit(benchmark::kMillisecond);

static void BM_MlpLogit(benchmark::State& state) {
  Rng rng(6);
  auto m = MlpSimilarity::zeros(FeatureKind::FeatureMap, 1600, 8);
  for (auto& w : m.parameters()) w = rng.uniform(-0.1, 0.1);
  const Encoder enc{FeatureKind::FeatureMap};
  const auto views = random_views(64);
  std::vector<FeatureVector> maps;
  for (const auto& v : views) maps.push_back(enc(v));
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.logit(maps[k % 64], maps[(k + 3) % 64]));
    ++k;
  }
}
BENCHMARK(BM_MlpLogit);

static void BM_EigenspaceFit(benchmark::State& state) {
  Rng rng(7);
  std::vector<FeatureVector> views;
  for (int v = 0; v < 840; ++v) {
    std::vector<double> x(kCoilFeatureDim);
    for (auto& e : x) e = rng.uniform();
    views.push_back(FeatureVector::dense(FeatureKind::Gradient, x));
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_eigenspace(views, 20));
}
BENCHMARK(BM_EigenspaceFit)->Unit(benchmark::kMillisecond);

static void BM_LcvResidual(benchmark::State& state) {
  Rng rng(8);
  auto make = [&] {
    std::vector<double> x(static_cast<std::size_t>(state.range(0)));
    for (auto& e : x) e = rng.normal();
    return FeatureVector::dense(FeatureKind::Gradient, x);
  };
  std::vector<FeatureVector> training;
  for (int v = 0; v < 12; ++v) training.push_back(make());
  const auto b = make();
  for (auto _ : state) benchmark::DoNotOptimize(lcv_residual(b, training));
}
BENCHMARK(BM_LcvResidual)->Arg(12)->Arg(1024);

static void BM_GradientFeatures(benchmark::State& state) {
  GrayImage img{kCoilImageSide, kCoilImageSide, std::vector<double>(kCoilImageSide * kCoilImageSide)};
  Rng rng(9);
  for (auto& p : img.pixels) p = rng.uniform(0, 255);
  for (auto _ : state) benchmark::DoNotOptimize(gradient_features(img));
}
BENCHMARK(BM_GradientFeatures);
BENCHMARK_MAIN();
