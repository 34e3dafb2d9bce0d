#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicforge/corpus.hpp"
#include "topicforge/matrix.hpp"

namespace topicforge {

/// n_docs x dim document vectors, stored as 32-bit floats (the on-disk precision).
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t n_docs, std::size_t dim, std::vector<float> data,
                    std::vector<std::string> doc_ids, std::string provider_tag);

    std::size_t n_docs() const noexcept { return n_docs_; }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::vector<double> row_double(std::size_t i) const;
    std::span<const float> data() const noexcept { return data_; }
    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
    const std::string& provider_tag() const noexcept { return provider_tag_; }

    Matrix to_matrix() const;

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

private:
    std::size_t n_docs_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> data_;
    std::vector<std::string> doc_ids_;
    std::string provider_tag_;
};

enum class ProviderKind { file, http, hash };

struct ProviderConfig {
    ProviderKind kind = ProviderKind::hash;
    std::optional<std::string> endpoint;
    std::string path; ///< matrix file for kind=file
    std::string model_name = "paraphrase-multilingual-MiniLM-L12-v2";
    std::size_t batch_size = 64;
    double timeout_seconds = 30.0;
    std::size_t hash_dim = 512;
    std::uint64_t seed = 0;
    std::size_t max_in_flight = 4;
    int retry_backoff_ms = 200;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
    nlohmann::json to_json() const;
    static ProviderConfig from_json(const nlohmann::json& j);
};

/// Signed feature hashing of unigrams and bigrams into `dim` buckets, L2-normalized.
/// Token-less text maps to the zero vector.
std::vector<double> hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

/// Cosine similarity clamped to [-1, 1]; throws ZeroVector for a zero-norm input.
double cosine(std::span<const double> u, std::span<const double> v);

/// The endpoint for kind=http after applying TOPICFORGE_EMBED_ENDPOINT.
std::optional<std::string> effective_endpoint(const ProviderConfig& config);

EmbeddingMatrix embed_documents(const std::vector<Document>& docs, const ProviderConfig& config);

/// Binary matrix container: 16-byte magic/version header, u64 rows, u64 cols,
/// rows*cols little-endian float32, CRC32 of all preceding bytes. A JSON sidecar
/// at `<path>.json` carries ids and metadata.
struct MatrixFile {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;
    nlohmann::json sidecar;
};

void write_matrix_file(const std::filesystem::path& path, const MatrixFile& file);
MatrixFile read_matrix_file(const std::filesystem::path& path);

void save_embedding_file(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix load_embedding_file(const std::filesystem::path& path);

} // namespace topicforge
