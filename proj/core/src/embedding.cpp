#include "topicforge/embedding.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <future>
#include <iterator>
#include <unordered_set>

#include <zlib.h>

#include "http_util.hpp"
#include "topicforge/errors.hpp"
#include "topicforge/text.hpp"

namespace topicforge {

using nlohmann::json;

EmbeddingMatrix::EmbeddingMatrix(std::size_t n_docs, std::size_t dim, std::vector<float> data,
                                 std::vector<std::string> doc_ids, std::string provider_tag)
    : n_docs_(n_docs), dim_(dim), data_(std::move(data)), doc_ids_(std::move(doc_ids)),
      provider_tag_(std::move(provider_tag)) {
    if (data_.size() != n_docs_ * dim_) {
        throw Error(ErrorKind::DimensionMismatch, "embedding data size does not match n_docs x dim");
    }
    if (!doc_ids_.empty() && doc_ids_.size() != n_docs_) {
        throw Error(ErrorKind::DimensionMismatch, "doc_ids (" + std::to_string(doc_ids_.size()) +
                                                      ") not aligned with rows (" + std::to_string(n_docs_) + ")");
    }
    for (float v : data_) {
        if (!std::isfinite(v)) throw Error(ErrorKind::InputFormat, "embedding contains a non-finite value");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& id : doc_ids_) {
        if (!seen.insert(id).second) throw Error(ErrorKind::InputFormat, "duplicate doc_id '" + id + "'");
    }
}

std::vector<double> EmbeddingMatrix::row_double(std::size_t i) const {
    const auto r = row(i);
    return {r.begin(), r.end()};
}

Matrix EmbeddingMatrix::to_matrix() const {
    return Matrix(n_docs_, dim_, std::vector<double>(data_.begin(), data_.end()));
}

void ProviderConfig::validate() const {
    if (kind == ProviderKind::http && !effective_endpoint(*this)) {
        throw Error(ErrorKind::Config, "http embedding provider requires an endpoint");
    }
    if (kind != ProviderKind::http && endpoint) {
        throw Error(ErrorKind::Config, "endpoint is only valid for the http embedding provider");
    }
    if (kind == ProviderKind::file && path.empty()) {
        throw Error(ErrorKind::Config, "file embedding provider requires a path");
    }
    if (hash_dim < 8) throw Error(ErrorKind::Config, "hash_dim must be at least 8");
    if (batch_size == 0) throw Error(ErrorKind::Config, "batch_size must be positive");
    if (max_in_flight == 0) throw Error(ErrorKind::Config, "max_in_flight must be positive");
}

json ProviderConfig::to_json() const {
    json j{{"kind", kind == ProviderKind::file ? "file" : kind == ProviderKind::http ? "http" : "hash"},
           {"model_name", model_name},
           {"batch_size", batch_size},
           {"timeout", timeout_seconds},
           {"hash_dim", hash_dim},
           {"seed", seed},
           {"max_in_flight", max_in_flight}};
    if (endpoint) j["endpoint"] = *endpoint;
    if (!path.empty()) j["path"] = path;
    return j;
}

ProviderConfig ProviderConfig::from_json(const json& j) {
    ProviderConfig c;
    const auto kind = j.value("kind", std::string("hash"));
    if (kind == "file") {
        c.kind = ProviderKind::file;
    } else if (kind == "http") {
        c.kind = ProviderKind::http;
    } else if (kind == "hash") {
        c.kind = ProviderKind::hash;
    } else {
        throw Error(ErrorKind::Config, "unknown embedding provider kind '" + kind + "'");
    }
    if (j.contains("endpoint") && !j.at("endpoint").is_null()) c.endpoint = j.at("endpoint").get<std::string>();
    c.path = j.value("path", c.path);
    c.model_name = j.value("model_name", c.model_name);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.timeout_seconds = j.value("timeout", c.timeout_seconds);
    c.hash_dim = j.value("hash_dim", c.hash_dim);
    c.seed = j.value("seed", c.seed);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.retry_backoff_ms = j.value("retry_backoff_ms", c.retry_backoff_ms);
    return c;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::vector<double> hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
    if (dim < 8) throw Error(ErrorKind::Config, "hash_embed: dim must be at least 8");
    std::vector<double> v(dim, 0.0);
    const auto features = ngrams(tokenize(to_lower_utf8(text)), 2);
    const std::uint64_t basis = splitmix64(seed ^ 0x5eedf00dULL);
    for (const auto& f : features) {
        const std::uint64_t h = splitmix64(fnv1a64(f, basis));
        v[h % dim] += (h >> 63) != 0 ? -1.0 : 1.0;
    }
    const double norm = std::sqrt(squared_norm(v));
    if (norm > 0.0) {
        for (auto& x : v) x /= norm;
    }
    return v;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw Error(ErrorKind::DimensionMismatch, "cosine of vectors with different lengths");
    const double nu = squared_norm(u);
    const double nv = squared_norm(v);
    if (nu == 0.0 || nv == 0.0) throw Error(ErrorKind::ZeroVector, "cosine of a zero vector");
    const double c = dot(u, v) / std::sqrt(nu * nv);
    return std::clamp(c, -1.0, 1.0);
}

std::optional<std::string> effective_endpoint(const ProviderConfig& config) {
    if (const char* env = std::getenv("TOPICFORGE_EMBED_ENDPOINT"); env != nullptr && *env != '\0') {
        return std::string(env);
    }
    return config.endpoint;
}

namespace {

std::string hash_tag(const ProviderConfig& config) {
    return "hash:dim=" + std::to_string(config.hash_dim) + ":seed=" + std::to_string(config.seed);
}

std::vector<std::vector<float>> fetch_batch(const std::string& url, const ProviderConfig& config,
                                            const std::vector<Document>& docs, std::size_t begin,
                                            std::size_t end) {
    json texts = json::array();
    for (std::size_t i = begin; i < end; ++i) texts.push_back(docs[i].text);
    const json response = detail::post_json(url, json{{"model", config.model_name}, {"texts", texts}},
                                            config.timeout_seconds, 3, config.retry_backoff_ms);
    if (!response.is_object() || !response.contains("vectors") || !response.at("vectors").is_array()) {
        throw Error(ErrorKind::ProviderUnavailable, "embedding service response lacks \"vectors\"");
    }
    const auto& vectors = response.at("vectors");
    if (vectors.size() != end - begin) {
        throw Error(ErrorKind::DimensionMismatch, "embedding service returned " + std::to_string(vectors.size()) +
                                                      " vectors for " + std::to_string(end - begin) + " texts");
    }
    std::vector<std::vector<float>> rows;
    rows.reserve(vectors.size());
    for (const auto& v : vectors) rows.push_back(v.get<std::vector<float>>());
    return rows;
}

EmbeddingMatrix embed_http(const std::vector<Document>& docs, const ProviderConfig& config) {
    const std::string url = *effective_endpoint(config);
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t b = 0; b < docs.size(); b += config.batch_size) {
        batches.emplace_back(b, std::min(docs.size(), b + config.batch_size));
    }
    std::vector<std::vector<std::vector<float>>> results(batches.size());
    for (std::size_t wave = 0; wave < batches.size(); wave += config.max_in_flight) {
        const std::size_t wave_end = std::min(batches.size(), wave + config.max_in_flight);
        std::vector<std::future<std::vector<std::vector<float>>>> inflight;
        for (std::size_t b = wave; b < wave_end; ++b) {
            inflight.push_back(std::async(std::launch::async, fetch_batch, std::cref(url), std::cref(config),
                                          std::cref(docs), batches[b].first, batches[b].second));
        }
        for (std::size_t b = wave; b < wave_end; ++b) results[b] = inflight[b - wave].get();
    }
    std::size_t dim = 0;
    std::vector<float> data;
    for (const auto& batch : results) {
        for (const auto& row : batch) {
            if (dim == 0) dim = row.size();
            if (row.size() != dim || dim == 0) {
                throw Error(ErrorKind::DimensionMismatch, "embedding service returned rows of differing length");
            }
            data.insert(data.end(), row.begin(), row.end());
        }
    }
    std::vector<std::string> ids;
    for (const auto& d : docs) ids.push_back(d.doc_id);
    return EmbeddingMatrix(docs.size(), dim, std::move(data), std::move(ids), config.model_name);
}

} // namespace

EmbeddingMatrix embed_documents(const std::vector<Document>& docs, const ProviderConfig& config) {
    if (docs.empty()) throw Error(ErrorKind::EmptyCorpus, "no documents to embed");
    config.validate();
    std::vector<std::string> ids;
    ids.reserve(docs.size());
    for (const auto& d : docs) ids.push_back(d.doc_id);

    switch (config.kind) {
    case ProviderKind::hash: {
        std::vector<float> data;
        data.reserve(docs.size() * config.hash_dim);
        for (const auto& d : docs) {
            const auto v = hash_embed(d.text, config.hash_dim, config.seed);
            for (double x : v) data.push_back(static_cast<float>(x));
        }
        return EmbeddingMatrix(docs.size(), config.hash_dim, std::move(data), std::move(ids), hash_tag(config));
    }
    case ProviderKind::file: {
        auto loaded = load_embedding_file(config.path);
        if (loaded.n_docs() != docs.size()) {
            throw Error(ErrorKind::DimensionMismatch, "embedding file has " + std::to_string(loaded.n_docs()) +
                                                          " rows for " + std::to_string(docs.size()) + " documents");
        }
        if (!loaded.doc_ids().empty() && loaded.doc_ids() != ids) {
            throw Error(ErrorKind::DimensionMismatch, "embedding file doc_ids are not aligned with the documents");
        }
        const auto data = loaded.data();
        return EmbeddingMatrix(loaded.n_docs(), loaded.dim(), std::vector<float>(data.begin(), data.end()),
                               std::move(ids), loaded.provider_tag());
    }
    case ProviderKind::http:
        return embed_http(docs, config);
    }
    throw Error(ErrorKind::Config, "unknown provider kind");
}

namespace {

constexpr std::array<char, 12> kMagic = {'T', 'F', 'R', 'G', 'M', 'A', 'T', 'R', 'I', 'X', '\r', '\n'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kHeaderBytes = 16 + 8 + 8;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(const std::string& in, std::size_t offset, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    }
    return v;
}

std::uint32_t crc32_of(const std::string& bytes, std::size_t n) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t done = 0;
    while (done < n) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(n - done, 1u << 30));
        crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + done), chunk);
        done += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::InputFormat, "cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorKind::InputFormat, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".json";
    return p;
}

} // namespace

void write_matrix_file(const std::filesystem::path& path, const MatrixFile& file) {
    if (file.data.size() != file.rows * file.cols) {
        throw Error(ErrorKind::DimensionMismatch, "matrix data size does not match shape");
    }
    std::string bytes;
    bytes.reserve(kHeaderBytes + file.data.size() * 4 + 4);
    bytes.append(kMagic.data(), kMagic.size());
    put_u32(bytes, kFormatVersion);
    put_u64(bytes, file.rows);
    put_u64(bytes, file.cols);
    for (float f : file.data) put_u32(bytes, std::bit_cast<std::uint32_t>(f));
    put_u32(bytes, crc32_of(bytes, bytes.size()));
    write_atomic(sidecar_path(path), file.sidecar.dump(2) + "\n");
    write_atomic(path, bytes);
}

MatrixFile read_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::InputFormat, "cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto bad = [&](const std::string& why) {
        return Error(ErrorKind::InputFormat, path.string() + ": " + why);
    };
    if (bytes.size() < kHeaderBytes + 4) throw bad("truncated header");
    if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) throw bad("bad magic");
    if (get_le(bytes, 12, 4) != kFormatVersion) throw bad("unsupported format version");
    MatrixFile file;
    file.rows = get_le(bytes, 16, 8);
    file.cols = get_le(bytes, 24, 8);
    const auto count = file.rows * file.cols;
    if (file.cols != 0 && count / file.cols != file.rows) throw bad("dimensions overflow");
    if (bytes.size() != kHeaderBytes + count * 4 + 4) {
        throw bad("size " + std::to_string(bytes.size()) + " does not match header " + std::to_string(file.rows) +
                  "x" + std::to_string(file.cols));
    }
    const auto stored = static_cast<std::uint32_t>(get_le(bytes, bytes.size() - 4, 4));
    if (stored != crc32_of(bytes, bytes.size() - 4)) {
        throw Error(ErrorKind::ChecksumMismatch, path.string() + ": CRC32 mismatch");
    }
    file.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        file.data[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, kHeaderBytes + 4 * i, 4)));
    }
    const auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        std::ifstream sin(side);
        try {
            file.sidecar = json::parse(sin);
        } catch (const json::parse_error& e) {
            throw bad(std::string("malformed sidecar: ") + e.what());
        }
    } else {
        file.sidecar = json::object();
    }
    return file;
}

void save_embedding_file(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    const auto data = matrix.data();
    write_matrix_file(path, MatrixFile{matrix.n_docs(), matrix.dim(), std::vector<float>(data.begin(), data.end()),
                                       json{{"doc_ids", matrix.doc_ids()}, {"provider_tag", matrix.provider_tag()}}});
}

EmbeddingMatrix load_embedding_file(const std::filesystem::path& path) {
    auto file = read_matrix_file(path);
    std::vector<std::string> ids;
    std::string tag;
    try {
        ids = file.sidecar.value("doc_ids", std::vector<std::string>{});
        tag = file.sidecar.value("provider_tag", std::string{});
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InputFormat, path.string() + ": malformed sidecar: " + e.what());
    }
    if (!ids.empty() && ids.size() != file.rows) {
        throw Error(ErrorKind::InputFormat, path.string() + ": sidecar lists " + std::to_string(ids.size()) +
                                                " ids for " + std::to_string(file.rows) + " rows");
    }
    return EmbeddingMatrix(file.rows, file.cols, std::move(file.data), std::move(ids), std::move(tag));
}

} // namespace topicforge
