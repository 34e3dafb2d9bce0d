#include <benchmark/benchmark.h>

#include <random>

#include "synthetic.hpp"
#include "topicforge/coherence.hpp"
#include "topicforge/embedding.hpp"
#include "topicforge/hdbscan.hpp"
#include "topicforge/represent.hpp"
#include "topicforge/umap.hpp"

using namespace topicforge;

namespace {

Matrix random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix m(n, d);
    for (auto& x : m.data()) x = g(rng);
    return m;
}

const fixtures::SyntheticCorpus& corpus() {
    static const auto c = fixtures::make_corpus(fixtures::CorpusSpec{});
    return c;
}

void BM_KnnGraph(benchmark::State& state) {
    const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 64, 1);
    for (auto _ : state) benchmark::DoNotOptimize(knn_graph(pts, 15, Metric::cosine));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KnnGraph)->RangeMultiplier(2)->Range(256, 2048)->Complexity(benchmark::oNSquared);

void BM_Reduce(benchmark::State& state) {
    const auto centers = fixtures::separated_centers(3, 10, 10.0, 2);
    const auto blobs = fixtures::gaussian_blobs(centers, static_cast<std::size_t>(state.range(0)) / 3, 0.05, 3);
    UmapParams p;
    p.n_epochs = 200;
    for (auto _ : state) benchmark::DoNotOptimize(reduce(blobs.points, p));
}
BENCHMARK(BM_Reduce)->Arg(300)->Arg(1200)->Unit(benchmark::kMillisecond);

void BM_Hdbscan(benchmark::State& state) {
    const auto centers = fixtures::separated_centers(6, 5, 10.0, 4);
    const auto blobs = fixtures::gaussian_blobs(centers, static_cast<std::size_t>(state.range(0)) / 6, 0.5, 5);
    HdbscanParams p;
    p.min_cluster_size = 30;
    for (auto _ : state) benchmark::DoNotOptimize(cluster(blobs.points, p));
}
BENCHMARK(BM_Hdbscan)->Arg(600)->Arg(2400)->Unit(benchmark::kMillisecond);

void BM_HashEmbed(benchmark::State& state) {
    const auto& texts = corpus().texts;
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(hash_embed(texts[i++ % texts.size()], 512, 0));
}
BENCHMARK(BM_HashEmbed);

void BM_Ctfidf(benchmark::State& state) {
    const auto& c = corpus();
    RepresentParams p;
    for (auto _ : state) {
        const auto counts = tokenize_count(c.texts, c.truth, p, false);
        benchmark::DoNotOptimize(ctfidf(counts.counts, counts.class_ids));
    }
}
BENCHMARK(BM_Ctfidf)->Unit(benchmark::kMillisecond);

void BM_CvCoherence(benchmark::State& state) {
    const CoherenceCorpus reference(corpus().texts);
    const auto& words = fixtures::keyword_pools()[0].words;
    const std::vector<std::string> top(words.begin(), words.begin() + 10);
    for (auto _ : state) benchmark::DoNotOptimize(cv_coherence(top, reference));
}
BENCHMARK(BM_CvCoherence)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
