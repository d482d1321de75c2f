#include <benchmark/benchmark.h>

#include <random>

#include "binecg/bits.hpp"
#include "binecg/layers.hpp"
#include "binecg/model.hpp"

using namespace binecg;

namespace {

std::vector<Real> bipolar(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<Real> v(n);
  for (Real& x : v) x = coin(rng) ? 1.0 : -1.0;
  return v;
}

Batch bipolar_batch(std::size_t c, std::size_t l, std::uint64_t seed) {
  Batch b(1, c, l);
  const auto v = bipolar(b.size(), seed);
  std::copy(v.begin(), v.end(), b.data().begin());
  return b;
}

ForwardContext infer(BinaryKernel k) {
  ForwardContext ctx;
  ctx.kernel = k;
  return ctx;
}

}  // namespace

static void BM_XnorDot(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = pack_bits(bipolar(n, 1));
  const auto b = pack_bits(bipolar(n, 2));
  for (auto _ : state) benchmark::DoNotOptimize(xnor_popcount_dot(a.row(0), b.row(0), n));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_XnorDot)->RangeMultiplier(4)->Range(64, 16384);

static void BM_RealDot(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = bipolar(n, 1), b = bipolar(n, 2);
  for (auto _ : state) {
    Real s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RealDot)->RangeMultiplier(4)->Range(64, 16384);

// Widest binarized layer of the network: 64 -> 64 channels, kernel 5, on 111 samples.
static void BM_BinaryConv(benchmark::State& state) {
  const auto kernel = static_cast<BinaryKernel>(state.range(0));
  Conv1d conv({64, 64, 5, 1, 2}, true, SteKind::TanhGrad, true);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (float& w : conv.weights()) w = u(rng);
  const Batch x = bipolar_batch(64, 111, 4);
  const ForwardContext ctx = infer(kernel);
  for (auto _ : state) benchmark::DoNotOptimize(conv.evaluate(x, ctx));
  state.SetLabel(kernel == BinaryKernel::Packed ? "packed" : "reference");
}
BENCHMARK(BM_BinaryConv)->Arg(static_cast<int>(BinaryKernel::Packed))->Arg(static_cast<int>(BinaryKernel::Reference));

static void BM_Infer(benchmark::State& state) {
  const auto kind = static_cast<ModelKind>(state.range(0));
  const Network net = build_model(kind, 1);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Real> seg(kSegmentLength);
  for (Real& v : seg) v = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(net.infer(seg));
  state.SetLabel(std::string(model_name(kind)));
}
BENCHMARK(BM_Infer)
    ->Arg(static_cast<int>(ModelKind::Baseline))
    ->Arg(static_cast<int>(ModelKind::BTPN))
    ->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
