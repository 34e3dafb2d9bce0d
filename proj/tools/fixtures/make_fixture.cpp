// Writes the synthetic transcript corpora used by the demo config and the tests.
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate synthetic transcript corpora"};
    std::string out = "synthetic.jsonl";
    std::string corpus_id = "synthetic";
    std::vector<std::size_t> pools{0, 1, 2, 3, 4, 5};
    std::size_t per_pool = 100;
    std::uint64_t seed = 7;
    app.add_option("-o,--output", out, "output JSON Lines file");
    app.add_option("--corpus-id", corpus_id);
    app.add_option("--pools", pools, "pool indices (0-7)");
    app.add_option("--per-pool", per_pool, "therapist utterances per pool");
    app.add_option("--seed", seed);
    CLI11_PARSE(app, argc, argv);

    topicforge::fixtures::CorpusSpec spec;
    spec.corpus_id = corpus_id;
    spec.pools = pools;
    spec.docs_per_pool = per_pool;
    spec.seed = seed;
    const auto corpus = topicforge::fixtures::make_corpus(spec);
    std::ofstream f(out);
    if (!f) {
        std::cerr << "cannot write " << out << '\n';
        return EXIT_FAILURE;
    }
    f << corpus.jsonl;
    std::cout << "wrote " << corpus.truth.size() << " therapist utterances to " << out << '\n';
    return EXIT_SUCCESS;
}
