#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "dgd/deformation.hpp"
#include "dgd/loss.hpp"
#include "dgd/rasterizer.hpp"

using namespace dgd;

namespace {

GaussianSet<float> random_scene(std::size_t n, std::size_t c, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> g;
  GaussianSet<float> s(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    s.positions[3 * i] = static_cast<float>(-1.5 + 3 * u(rng));
    s.positions[3 * i + 1] = static_cast<float>(-1.5 + 3 * u(rng));
    s.positions[3 * i + 2] = static_cast<float>(3 + 3 * u(rng));
    for (int k = 0; k < 4; ++k) s.rotations[4 * i + k] = static_cast<float>(g(rng));
    for (int k = 0; k < 3; ++k) {
      s.log_scales[3 * i + k] = static_cast<float>(std::log(scale * (0.3 + u(rng))));
      s.color_logits[3 * i + k] = static_cast<float>(g(rng));
    }
    s.opacity_logits[i] = static_cast<float>(g(rng));
    for (std::size_t k = 0; k < c; ++k) s.features[c * i + k] = static_cast<float>(g(rng));
  }
  return s;
}

Camera camera(int px) {
  Camera c;
  c.width = c.height = px;
  c.fx = c.fy = px;
  c.cx = c.cy = 0.5 * px;
  return c;
}

void BM_RenderTiled(benchmark::State& state) {
  const auto s = random_scene(static_cast<std::size_t>(state.range(0)), 8, 0.02, 1);
  const Camera cam = camera(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(render(s, cam));
  state.counters["FPS"] = benchmark::Counter(static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_RenderTiled)->Args({10000, 256})->Args({50000, 512})->Args({200000, 512})->Unit(benchmark::kMillisecond);

void BM_RenderBruteForce(benchmark::State& state) {
  const auto s = random_scene(static_cast<std::size_t>(state.range(0)), 8, 0.02, 1);
  const Camera cam = camera(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(render_brute_force(s, cam));
}
BENCHMARK(BM_RenderBruteForce)->Args({1000, 64})->Args({10000, 64})->Unit(benchmark::kMillisecond);

void BM_RenderBackward(benchmark::State& state) {
  const auto s = random_scene(static_cast<std::size_t>(state.range(0)), 8, 0.02, 2);
  const Camera cam = camera(256);
  const std::vector<float> gc(3 * cam.pixel_count(), 0.1f), gf(8 * cam.pixel_count(), 0.05f);
  for (auto _ : state) benchmark::DoNotOptimize(render_backward<float>(s, cam, gc, gf, {}));
}
BENCHMARK(BM_RenderBackward)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_DeformationForward(benchmark::State& state) {
  const DeformationField<float> field(DeformationConfig{}, 3);
  const auto s = random_scene(static_cast<std::size_t>(state.range(0)), 1, 0.02, 3);
  for (auto _ : state) benchmark::DoNotOptimize(field.forward(s.positions, 0.5f));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DeformationForward)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_DeformationBackward(benchmark::State& state) {
  const DeformationField<float> field(DeformationConfig{}, 4);
  const auto s = random_scene(static_cast<std::size_t>(state.range(0)), 1, 0.02, 4);
  DeformationField<float>::Tape tape;
  (void)field.forward(s.positions, 0.5f, &tape);
  const MatX<float> seed = MatX<float>::Constant(kDeformOutputs, state.range(0), 0.01f);
  std::vector<float> gx(s.positions.size());
  for (auto _ : state) {
    auto grads = field.zero_gradients();
    field.backward(tape, seed, grads, gx);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_DeformationBackward)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
