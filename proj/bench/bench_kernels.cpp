#include <benchmark/benchmark.h>

#include <vector>

#include "lmlt/kernels.hpp"
#include "lmlt/model.hpp"
#include "lmlt/rng.hpp"
#include "lmlt/weights.hpp"

using namespace lmlt;

namespace {

std::vector<float> random_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

ExecMode mode_of(const benchmark::State& state) { return state.range(0) ? ExecMode::Parallel : ExecMode::Serial; }

void BM_Conv3x3(benchmark::State& state) {
  const kernels::ConvGeometry g{1, 36, 36, 64, 64, 3, 1};
  const auto x = random_values(static_cast<std::size_t>(g.in_ch * g.padded_h() * g.padded_w()), 1);
  const auto w = random_values(static_cast<std::size_t>(g.out_ch * g.in_ch * 9), 2);
  const auto b = random_values(static_cast<std::size_t>(g.out_ch), 3);
  std::vector<float> y(static_cast<std::size_t>(g.out_ch * g.h * g.w));
  for (auto _ : state) {
    kernels::conv2d_forward<float>(mode_of(state), g, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * g.out_ch * g.in_ch * 9 * g.h * g.w);
}
BENCHMARK(BM_Conv3x3)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_DepthwiseConv(benchmark::State& state) {
  const kernels::ConvGeometry g{1, 36, 36, 64, 64, 3, 36};
  const auto x = random_values(static_cast<std::size_t>(g.in_ch * g.padded_h() * g.padded_w()), 1);
  const auto w = random_values(static_cast<std::size_t>(g.out_ch * 9), 2);
  std::vector<float> y(static_cast<std::size_t>(g.out_ch * g.h * g.w));
  for (auto _ : state) {
    kernels::conv2d_forward<float>(mode_of(state), g, x, w, {}, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_DepthwiseConv)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

// window attention scores: 64 windows of 8x8 tokens, 9 channels per head
void BM_WindowScores(benchmark::State& state) {
  const kernels::BmmGeometry g{64, 64, 9, 64, false, true};
  const auto q = random_values(static_cast<std::size_t>(g.batch * g.rows * g.inner), 1);
  const auto k = random_values(static_cast<std::size_t>(g.batch * g.cols * g.inner), 2);
  std::vector<float> s(static_cast<std::size_t>(g.batch * g.rows * g.cols));
  for (auto _ : state) {
    kernels::bmm<float>(mode_of(state), g, q, k, s, false);
    benchmark::DoNotOptimize(s.data());
  }
}
BENCHMARK(BM_WindowScores)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMicrosecond);

void BM_ModelForward(benchmark::State& state) {
  const ModelConfig cfg = ModelConfig::preset("tiny", 2);
  const auto ws = init_weights<float>(cfg, 0);
  Rng rng(4);
  const auto x = tensor_new<float>({1, 3, 32, 32}, fill::Uniform{&rng, 0.0, 1.0});
  ExecModeScope scope(mode_of(state));
  for (auto _ : state) benchmark::DoNotOptimize(model_forward(x, ws, cfg));
}
BENCHMARK(BM_ModelForward)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
