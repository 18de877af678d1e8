#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "solar/btc.hpp"
#include "solar/entropy.hpp"
#include "solar/losses.hpp"
#include "solar/render.hpp"

using namespace solar;

namespace {

std::vector<GaussianPrimitive> random_scene(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<GaussianPrimitive> gs(n);
  for (auto& g : gs) {
    for (int k = 0; k < 3; ++k) g.mu[k] = u(rng) - 0.5;
    for (int k = 0; k < 3; ++k) g.s[k] = 0.03 + 0.1 * u(rng);
    g.r = Eigen::Vector4d(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5).normalized();
    for (int k = 0; k < 3; ++k) g.c[k] = u(rng);
    g.alpha = 0.2 + 0.7 * u(rng);
  }
  return gs;
}

Camera bench_camera(int size) {
  return Camera::look_at({2.5, 0.3, 0.8}, {0, 0, 0}, {0, 0, 1}, 1.4 * size, size, size);
}

void BM_RenderForward(benchmark::State& state) {
  const auto gs = random_scene(static_cast<std::size_t>(state.range(0)), 1);
  const Camera cam = bench_camera(64);
  for (auto _ : state) benchmark::DoNotOptimize(render(gs, cam));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RenderForward)->Arg(100)->Arg(1000)->Arg(4000);

void BM_RenderBackward(benchmark::State& state) {
  const auto gs = random_scene(static_cast<std::size_t>(state.range(0)), 2);
  const Camera cam = bench_camera(64);
  RenderCache cache;
  const Image img = render(gs, cam, {}, &cache);
  Image dl(img.width, img.height);
  for (double& v : dl.pixels) v = 1e-3;
  for (auto _ : state) benchmark::DoNotOptimize(render_backward(gs, cam, cache, dl));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RenderBackward)->Arg(100)->Arg(1000)->Arg(4000);

void BM_SsimWithGradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image a(n, n), b(n, n), g;
  for (double& v : a.pixels) v = u(rng);
  for (double& v : b.pixels) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b, &g));
}
BENCHMARK(BM_SsimWithGradient)->Arg(64)->Arg(128);

void BM_ArithEncode(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution bit(0.3);
  std::vector<bool> bits(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = bit(rng);
  const auto p16 = quantize_probability(0.3);
  for (auto _ : state) benchmark::DoNotOptimize(arith_encode(bits, p16));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ArithEncode)->Arg(10000)->Arg(100000);

void BM_ArithDecode(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution bit(0.3);
  std::vector<bool> bits(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = bit(rng);
  const auto p16 = quantize_probability(0.3);
  const auto bytes = arith_encode(bits, p16);
  for (auto _ : state) benchmark::DoNotOptimize(arith_decode(bytes, bits.size(), p16));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ArithDecode)->Arg(10000)->Arg(100000);

void BM_BtcForward(benchmark::State& state) {
  BtcConfig cfg;
  const BtcPair pair = BtcPair::init(cfg, 6);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor x(static_cast<std::size_t>(state.range(0)), 3);
  for (double& v : x.values) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(btc_forward(pair, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BtcForward)->Arg(96)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
