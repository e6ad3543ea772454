#include <benchmark/benchmark.h>

#include <vector>

#include "capse/capse.hpp"

using namespace capse;

namespace {

struct Fixture {
  Vocab vocab;
  TripleSet train;
  RelationStats stats;
  EmbeddingTable emb{0, 0, 0};
  CapsEParams params;
  Triple probe{0, 0, 1};

  Fixture(std::size_t k, std::size_t n, std::size_t d, int m) {
    for (int e = 0; e < 64; ++e) vocab.entities.add("e" + std::to_string(e));
    for (int r = 0; r < 4; ++r) vocab.relations.add("r" + std::to_string(r));
    Rng rng(7);
    while (train.size() < 256) {
      train.add(Triple{static_cast<Index>(rng.below(64)),
                       static_cast<Index>(rng.below(4)),
                       static_cast<Index>(rng.below(64))});
    }
    stats = relation_stats(train, vocab);
    emb = init_random(vocab, k, 8);
    params = init_capse_params(k, n, d, m, 9);
  }
};

void BM_CapseScore(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)),
            static_cast<std::size_t>(state.range(1)), 10,
            static_cast<int>(state.range(2)));
  ScoreWorkspace ws;
  for (auto _ : state) {
    benchmark::DoNotOptimize(capse_score_fast(f.probe, f.emb, f.params, ws));
  }
}
BENCHMARK(BM_CapseScore)
    ->Args({50, 50, 1})
    ->Args({100, 50, 1})
    ->Args({100, 400, 1})
    ->Args({200, 400, 1});

void BM_Route(benchmark::State& state) {
  const std::size_t k = 100, d = 10;
  Rng rng(11);
  std::vector<double> uhat(k * d);
  for (double& x : uhat) x = rng.uniform(-1.0, 1.0);
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(route(uhat, k, d, m));
  }
}
BENCHMARK(BM_Route)->Arg(1)->Arg(3)->Arg(5)->Arg(7);

void BM_ForwardBackward(benchmark::State& state) {
  Fixture f(100, static_cast<std::size_t>(state.range(0)), 10, 1);
  const std::vector<LabeledTriple> batch = {{f.probe, +1},
                                            {Triple{2, 0, 3}, -1}};
  for (auto _ : state) {
    std::vector<ForwardTrace> traces;
    traces.reserve(batch.size());
    for (const LabeledTriple& lt : batch) {
      traces.push_back(capse_forward(lt.triple, f.emb, f.params));
    }
    benchmark::DoNotOptimize(capse_backward(batch, f.emb, f.params, traces));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(50)->Arg(400);

void BM_Corrupt(benchmark::State& state) {
  Fixture f(16, 8, 4, 1);
  Rng rng(13);
  const Triple t = f.train.triples()[0];
  for (auto _ : state) {
    benchmark::DoNotOptimize(corrupt(t, f.stats, f.train, 64, rng));
  }
}
BENCHMARK(BM_Corrupt);

void BM_RankTriple(benchmark::State& state) {
  Fixture f(50, 50, 10, 1);
  TripleMembership known;
  known.insert_all(f.train.triples());
  const Scorer scorer{ScoreDirection::HigherIsBetter, [&](const Triple& t) {
                        thread_local ScoreWorkspace ws;
                        return capse_score_fast(t, f.emb, f.params, ws);
                      }};
  const Triple t = f.train.triples()[0];
  for (auto _ : state) {
    benchmark::DoNotOptimize(rank_triple(t, Side::Tail, scorer, 64, known));
  }
}
BENCHMARK(BM_RankTriple);

void BM_TranseScore(benchmark::State& state) {
  Fixture f(100, 8, 4, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(transe_score(f.probe, f.emb, Norm::L1));
  }
}
BENCHMARK(BM_TranseScore);

}  // namespace

BENCHMARK_MAIN();
