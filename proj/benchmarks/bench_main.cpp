#include <cmath>
#include <filesystem>
#include <random>

#include <benchmark/benchmark.h>

#include "refind/corpus.hpp"
#include "refind/csr.hpp"
#include "refind/diff_spans.hpp"
#include "refind/evaluation.hpp"
#include "refind/retrieval.hpp"

namespace {

using namespace refind;

std::string random_words(std::mt19937& rng, std::size_t n, std::size_t vocab) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(rng() % vocab);
  return s;
}

void bm_bm25_search(benchmark::State& state) {
  std::mt19937 rng(1);
  const auto dir = std::filesystem::temp_directory_path() / ("refind-bench-" + std::to_string(state.range(0)));
  std::vector<corpus::RawDocument> docs;
  for (int i = 0; i < state.range(0); ++i) docs.push_back({"d" + std::to_string(i), "", random_words(rng, 100, 5000), "en"});
  const auto store = corpus::ingest_corpus(docs, {}, dir).store;
  const auto index = retrieval::Bm25Index::build(store);
  const auto query = random_words(rng, 8, 5000);
  for (auto _ : state) benchmark::DoNotOptimize(retrieval::bm25_search(index, query, 10));
  std::filesystem::remove_all(dir);
}
BENCHMARK(bm_bm25_search)->Arg(1000)->Arg(10000);

void bm_align_texts(benchmark::State& state) {
  std::mt19937 rng(2);
  const auto a = random_words(rng, state.range(0), 50);
  auto b = a;
  for (int i = 0; i < 5; ++i) b[rng() % b.size()] = 'x';
  for (auto _ : state) benchmark::DoNotOptimize(diff::align_texts(a, b));
}
BENCHMARK(bm_align_texts)->Arg(50)->Arg(200);

void bm_iou(benchmark::State& state) {
  const std::size_t len = 2000;
  std::vector<CharRange> a, b;
  for (std::size_t s = 0; s + 10 < len; s += 40) {
    a.push_back({s, s + 10});
    b.push_back({s + 5, s + 20});
  }
  const CharSpanSet sa(a, len), sb(b, len);
  for (auto _ : state) benchmark::DoNotOptimize(eval::iou(sa, sb));
}
BENCHMARK(bm_iou);

void bm_compute_csr(benchmark::State& state) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  lm::LogProbSeries with, without;
  with.conditioning = lm::Conditioning::kWithContext;
  without.conditioning = lm::Conditioning::kWithoutContext;
  for (int i = 0; i < state.range(0); ++i) {
    with.values.push_back(std::log(u(rng)));
    without.values.push_back(std::log(u(rng)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(csr::compute_csr(with, without));
}
BENCHMARK(bm_compute_csr)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
