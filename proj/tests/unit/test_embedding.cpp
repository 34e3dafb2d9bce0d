#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "support/mock_server.hpp"
#include "support/temp_dir.hpp"
#include "synthetic.hpp"
#include "topicforge/embedding.hpp"
#include "topicforge/errors.hpp"

using namespace topicforge;
using nlohmann::json;

namespace {

std::vector<Document> docs_of(const std::vector<std::string>& texts) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Document d;
        d.doc_id = "c:s:" + std::to_string(i) + ":0";
        d.text = texts[i];
        docs.push_back(d);
    }
    return docs;
}

double norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::Config;
}

} // namespace

TEST(HashEmbed, DeterministicAndUnitNorm) {
    const auto a = hash_embed("you feel hurt by that", 512, 3);
    const auto b = hash_embed("you feel hurt by that", 512, 3);
    EXPECT_EQ(a, b);
    EXPECT_NEAR(norm(a), 1.0, 1e-9);
    EXPECT_NE(a, hash_embed("you feel hurt by that", 512, 4));
    EXPECT_EQ(hash_embed("x y", 8, 0).size(), 8u);
}

TEST(HashEmbed, DisjointTokensNearlyOrthogonal) {
    const auto& pools = fixtures::keyword_pools();
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto& pa = pools[rng() % 4].words;
        const auto& pb = pools[4 + rng() % 4].words;
        std::string ta, tb;
        for (int i = 0; i < 8; ++i) {
            ta += pa[rng() % pa.size()] + " ";
            tb += pb[rng() % pb.size()] + " ";
        }
        const auto u = hash_embed(ta, 512, 42);
        const auto v = hash_embed(tb, 512, 42);
        EXPECT_LT(std::abs(cosine(u, v)), 0.2) << ta << "| " << tb;
    }
}

TEST(HashEmbed, EmptyTextIsZeroVector) {
    const auto v = hash_embed("", 16, 0);
    EXPECT_EQ(norm(v), 0.0);
}

TEST(Cosine, BasicValues) {
    const std::vector<double> v{0.3, -1.2, 4.0};
    EXPECT_DOUBLE_EQ(cosine(v, v), 1.0);
    EXPECT_DOUBLE_EQ(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
    EXPECT_DOUBLE_EQ(cosine(std::vector<double>{1, 0}, std::vector<double>{-1, 0}), -1.0);
    EXPECT_EQ(kind_of([] { cosine(std::vector<double>{0, 0}, std::vector<double>{1, 0}); }), ErrorKind::ZeroVector);
}

TEST(Cosine, Symmetric) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    for (int t = 0; t < 50; ++t) {
        std::vector<double> u(7), v(7);
        for (auto& x : u) x = n(rng);
        for (auto& x : v) x = n(rng);
        EXPECT_NEAR(cosine(u, v), cosine(v, u), 1e-12);
    }
}

TEST(EmbedDocuments, HashKind) {
    ProviderConfig cfg;
    cfg.hash_dim = 64;
    const auto docs = docs_of({"i see", "let us look at that", "how was your week"});
    const auto m = embed_documents(docs, cfg);
    EXPECT_EQ(m.n_docs(), 3u);
    EXPECT_EQ(m.dim(), 64u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(norm(m.row_double(i)), 1.0, 1e-6);
    EXPECT_EQ(m, embed_documents(docs, cfg));
    EXPECT_EQ(m.doc_ids()[2], docs[2].doc_id);
}

TEST(EmbedDocuments, HashPermutationPermutesRows) {
    ProviderConfig cfg;
    auto docs = docs_of({"alpha beta", "gamma delta", "epsilon zeta eta"});
    const auto m = embed_documents(docs, cfg);
    std::swap(docs[0], docs[2]);
    const auto p = embed_documents(docs, cfg);
    for (std::size_t j = 0; j < m.dim(); ++j) {
        EXPECT_EQ(m.row(0)[j], p.row(2)[j]);
        EXPECT_EQ(m.row(2)[j], p.row(0)[j]);
        EXPECT_EQ(m.row(1)[j], p.row(1)[j]);
    }
}

TEST(EmbedDocuments, EmptyInput) {
    EXPECT_EQ(kind_of([] { embed_documents({}, ProviderConfig{}); }), ErrorKind::EmptyCorpus);
}

TEST(EmbedDocuments, FileKindAlignment) {
    testsupport::TempDir dir;
    ProviderConfig hash;
    hash.hash_dim = 16;
    const auto docs = docs_of({"a b", "c d", "e f"});
    save_embedding_file(embed_documents(docs, hash), dir.path() / "e.bin");

    ProviderConfig file;
    file.kind = ProviderKind::file;
    file.path = (dir.path() / "e.bin").string();
    const auto m = embed_documents(docs, file);
    EXPECT_EQ(m.n_docs(), 3u);
    const auto fewer = docs_of({"a b", "c d"});
    EXPECT_EQ(kind_of([&] { embed_documents(fewer, file); }), ErrorKind::DimensionMismatch);
}

TEST(ProviderConfigTest, Validation) {
    ProviderConfig c;
    c.kind = ProviderKind::http;
    EXPECT_THROW(c.validate(), Error);
    c.endpoint = "http://localhost:1/embed";
    EXPECT_NO_THROW(c.validate());
    ProviderConfig h;
    h.hash_dim = 4;
    EXPECT_THROW(h.validate(), Error);
    const auto back = ProviderConfig::from_json(c.to_json());
    EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(EmbeddingFile, RoundTripBitExact) {
    testsupport::TempDir dir;
    std::vector<float> data{1.5f, -0.0f, 3.25e-7f, 1e30f, -2.0f, 0.1f};
    EmbeddingMatrix m(2, 3, data, {"a", "b"}, "tag");
    save_embedding_file(m, dir.path() / "m.bin");
    const auto back = load_embedding_file(dir.path() / "m.bin");
    EXPECT_EQ(back, m);
    EXPECT_EQ(std::memcmp(back.data().data(), data.data(), data.size() * sizeof(float)), 0);
    EXPECT_FALSE(std::filesystem::exists(dir.path() / "m.bin.tmp"));
}

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

} // namespace

TEST(EmbeddingFile, CorruptionDetected) {
    testsupport::TempDir dir;
    EmbeddingMatrix m(2, 2, {1, 2, 3, 4}, {"a", "b"}, "tag");
    const auto path = dir.path() / "m.bin";
    save_embedding_file(m, path);
    const auto bytes = slurp(path);

    spit(path, bytes.substr(0, bytes.size() - 7));
    EXPECT_EQ(kind_of([&] { load_embedding_file(path); }), ErrorKind::InputFormat);

    auto flipped = bytes;
    flipped[40] ^= 0x01;
    spit(path, flipped);
    EXPECT_EQ(kind_of([&] { load_embedding_file(path); }), ErrorKind::ChecksumMismatch);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    spit(path, bad_magic);
    EXPECT_EQ(kind_of([&] { load_embedding_file(path); }), ErrorKind::InputFormat);
}

TEST(EmbeddingFile, HeaderRowCountMismatch) {
    testsupport::TempDir dir;
    const auto path = dir.path() / "m.bin";
    MatrixFile three;
    three.rows = 3;
    three.cols = 2;
    three.data = {1, 2, 3, 4, 5, 6};
    write_matrix_file(path, three);
    auto bytes = slurp(path);
    bytes[16] = 2; // rows field
    spit(path, bytes);
    EXPECT_EQ(kind_of([&] { read_matrix_file(path); }), ErrorKind::InputFormat);
}

TEST(EmbeddingMatrixTest, RejectsNonFiniteAndMisaligned) {
    EXPECT_THROW(EmbeddingMatrix(1, 2, {1.0f, NAN}, {"a"}, "t"), Error);
    EXPECT_THROW(EmbeddingMatrix(2, 2, {1, 2, 3}, {"a", "b"}, "t"), Error);
    EXPECT_THROW(EmbeddingMatrix(2, 1, {1, 2}, {"a", "a"}, "t"), Error);
}

TEST(HttpProvider, BatchesAndPreservesOrder) {
    testsupport::MockServer mock;
    std::atomic<int> calls{0};
    mock.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        const auto body = json::parse(req.body);
        EXPECT_EQ(body.at("model"), "paraphrase-multilingual-MiniLM-L12-v2");
        json vectors = json::array();
        for (const auto& t : body.at("texts")) {
            const double x = std::stod(t.get<std::string>().substr(4));
            vectors.push_back({x, 1.0, -x});
        }
        res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
    });
    mock.start();

    std::vector<std::string> texts;
    for (int i = 0; i < 23; ++i) texts.push_back("doc " + std::to_string(i));
    ProviderConfig cfg;
    cfg.kind = ProviderKind::http;
    cfg.endpoint = mock.url("/embed");
    cfg.batch_size = 5;
    cfg.max_in_flight = 2;
    const auto m = embed_documents(docs_of(texts), cfg);
    EXPECT_EQ(calls.load(), 5);
    ASSERT_EQ(m.n_docs(), 23u);
    EXPECT_EQ(m.dim(), 3u);
    for (std::size_t i = 0; i < 23; ++i) EXPECT_FLOAT_EQ(m.row(i)[0], static_cast<float>(i));
    EXPECT_EQ(m.provider_tag(), cfg.model_name);
}

TEST(HttpProvider, RetriesTransientFailures) {
    testsupport::MockServer mock;
    std::atomic<int> calls{0};
    mock.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        if (++calls <= 2) {
            res.status = calls == 1 ? 503 : 429;
            return;
        }
        const auto body = json::parse(req.body);
        json vectors = json::array();
        for (std::size_t i = 0; i < body.at("texts").size(); ++i) vectors.push_back({1.0, 2.0});
        res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
    });
    mock.start();
    ProviderConfig cfg;
    cfg.kind = ProviderKind::http;
    cfg.endpoint = mock.url("/embed");
    cfg.retry_backoff_ms = 1;
    EXPECT_EQ(embed_documents(docs_of({"a", "b"}), cfg).n_docs(), 2u);
    EXPECT_EQ(calls.load(), 3);
}

TEST(HttpProvider, GivesUpAfterRetries) {
    testsupport::MockServer mock;
    std::atomic<int> calls{0};
    mock.server().Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 500;
    });
    mock.start();
    ProviderConfig cfg;
    cfg.kind = ProviderKind::http;
    cfg.endpoint = mock.url("/embed");
    cfg.retry_backoff_ms = 1;
    EXPECT_EQ(kind_of([&] { embed_documents(docs_of({"a"}), cfg); }), ErrorKind::ProviderUnavailable);
    EXPECT_EQ(calls.load(), 4);
}

TEST(HttpProvider, ConnectionRefused) {
    int port = 0;
    {
        testsupport::MockServer probe;
        probe.start();
        port = probe.port();
    }
    ProviderConfig cfg;
    cfg.kind = ProviderKind::http;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/embed";
    cfg.retry_backoff_ms = 1;
    cfg.timeout_seconds = 2;
    EXPECT_EQ(kind_of([&] { embed_documents(docs_of({"a"}), cfg); }), ErrorKind::ProviderUnavailable);
}

TEST(HttpProvider, RaggedRowsRejected) {
    testsupport::MockServer mock;
    mock.server().Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"vectors":[[1,2,3],[1,2]]})", "application/json");
    });
    mock.start();
    ProviderConfig cfg;
    cfg.kind = ProviderKind::http;
    cfg.endpoint = mock.url("/embed");
    EXPECT_EQ(kind_of([&] { embed_documents(docs_of({"a", "b"}), cfg); }), ErrorKind::DimensionMismatch);
}

TEST(HttpProvider, EnvironmentOverridesEndpoint) {
    testsupport::MockServer mock;
    mock.server().Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"vectors":[[0.5,0.5]]})", "application/json");
    });
    mock.start();
    ProviderConfig cfg;
    cfg.kind = ProviderKind::http;
    cfg.endpoint = "http://127.0.0.1:1/unused";
    ::setenv("TOPICFORGE_EMBED_ENDPOINT", mock.url("/embed").c_str(), 1);
    EXPECT_EQ(*effective_endpoint(cfg), mock.url("/embed"));
    const auto m = embed_documents(docs_of({"a"}), cfg);
    ::unsetenv("TOPICFORGE_EMBED_ENDPOINT");
    EXPECT_EQ(m.dim(), 2u);
}
