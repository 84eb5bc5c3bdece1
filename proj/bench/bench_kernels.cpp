#include <benchmark/benchmark.h>

#include <random>

#include "symdyn/census.hpp"
#include "symdyn/codec.hpp"
#include "symdyn/fuzz.hpp"
#include "symdyn/kshift.hpp"
#include "symdyn/specification.hpp"

using namespace symdyn;

namespace {

GSet tromino(const Ctx& c) { return GSet(c, {c->make_elem({0, 0}), c->make_elem({0, 1}), c->make_elem({1, 0})}); }

void census_box(benchmark::State& st, bool parallel) {
  auto c = make_ctx(2);
  auto o = omega_k(tromino(c));
  CensusOptions co;
  co.halo = 2;
  co.parallel = parallel;
  const GSet dom = free_box(c, 0, int(st.range(0)) - 1);
  for (auto _ : st) benchmark::DoNotOptimize(Census::build(*o, dom, co)->count());
}
void BM_CensusSerial(benchmark::State& st) { census_box(st, false); }
void BM_CensusParallel(benchmark::State& st) { census_box(st, true); }
BENCHMARK(BM_CensusSerial)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CensusParallel)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_FuzzAuxSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(fuzz_aux_serial(st.range(0), 1).violations);
}
void BM_FuzzAuxParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(fuzz_aux(st.range(0), 1).violations);
}
void BM_FuzzKsetsSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(fuzz_ksets_serial(st.range(0), 1).violations);
}
void BM_FuzzKsetsParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(fuzz_ksets(st.range(0), 1).violations);
}
BENCHMARK(BM_FuzzAuxSerial)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FuzzAuxParallel)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FuzzKsetsSerial)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FuzzKsetsParallel)->Arg(2000)->Unit(benchmark::kMillisecond);

void spec_check(benchmark::State& st, bool parallel) {
  auto c = make_ctx(2);
  auto k = tromino(c);
  auto o = omega_k(k);
  auto spec = KShiftSpec::make(k);
  SpecCheckOptions so;
  so.trials = st.range(0);
  so.stop_at_first = false;
  so.parallel = parallel;
  for (auto _ : st) {
    auto r = parallel ? check_specification(*o, spec.margin, folner_box(c, 6), so)
                      : check_specification_serial(*o, spec.margin, folner_box(c, 6), so);
    benchmark::DoNotOptimize(r.refuted);
  }
}
void BM_SpecCheckSerial(benchmark::State& st) { spec_check(st, false); }
void BM_SpecCheckParallel(benchmark::State& st) { spec_check(st, true); }
BENCHMARK(BM_SpecCheckSerial)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpecCheckParallel)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_Encode(benchmark::State& st) {
  const CodecConfig cfg = codec_fixture("z-full3");
  CodeBook book;
  std::mt19937_64 rng(5);
  auto y = sample_pattern(*cfg.source, free_box(cfg.spec.ctx(), 0, cfg.window - 1), rng);
  encode(*y, cfg, &book);
  for (auto _ : st) benchmark::DoNotOptimize(encode(*y, cfg, &book).x.size());
}
void BM_Decode(benchmark::State& st) {
  const CodecConfig cfg = codec_fixture("z-full3");
  CodeBook book;
  std::mt19937_64 rng(5);
  auto y = sample_pattern(*cfg.source, free_box(cfg.spec.ctx(), 0, cfg.window - 1), rng);
  const Pattern x = encode(*y, cfg, &book).x;
  for (auto _ : st) benchmark::DoNotOptimize(decode(x, cfg, &book).y.size());
}
BENCHMARK(BM_Encode)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Decode)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
