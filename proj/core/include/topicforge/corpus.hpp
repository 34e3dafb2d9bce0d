#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace topicforge {

enum class Role { therapist, client, other };

std::string_view to_string(Role role);
Role parse_role(std::string_view text);

/// One speaker turn of a transcript.
struct Utterance {
    std::string corpus_id;
    std::string session_id;
    std::string speaker;
    Role role = Role::other;
    std::size_t index = 0; ///< ordinal within the session
    std::string text;
    std::optional<double> t_start;
};

/// One preprocessed sentence; the modelling unit.
struct Document {
    std::string doc_id;
    std::string text;
    std::string corpus_id;
    std::string session_id;
    std::size_t utterance_index = 0;
    std::size_t sentence_ordinal = 0;

    friend bool operator==(const Document&, const Document&) = default;
};

/// Lookup tables and patterns for the preprocessing stages. Keys of the
/// contraction and orthographic tables and filler entries are lowercase.
struct PreprocessConfig {
    std::map<std::string, std::string> contraction_table;
    std::set<std::string> filler_list;
    std::map<std::string, std::string> orthographic_table;
    std::vector<std::string> pause_mark_patterns;
    std::vector<std::string> identifier_patterns;
    std::set<std::string> abbreviation_exceptions;

    static PreprocessConfig defaults();

    /// Starts from defaults() and replaces every table present in `j`.
    static PreprocessConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    /// Throws ConfigError if a pattern does not compile.
    void validate() const;
};

/// Reads transcript JSON Lines. Blank lines are skipped; indices are assigned per session.
std::vector<Utterance> parse_transcripts(std::istream& in, std::string_view corpus_id);

std::vector<Utterance> select_role(const std::vector<Utterance>& utterances, Role role);

std::vector<std::string> segment_sentences(std::string_view text, const PreprocessConfig& config);
std::string normalize_lexical(std::string_view sentence, const PreprocessConfig& config);
std::string strip_metadata(std::string_view sentence, const PreprocessConfig& config);

/// segment -> strip_metadata -> normalize_lexical -> lowercase; token-less results are dropped.
std::vector<Document> preprocess_corpus(const std::vector<Utterance>& utterances,
                                        const PreprocessConfig& config);

std::string make_doc_id(std::string_view corpus_id, std::string_view session_id,
                        std::size_t utterance_index, std::size_t sentence_ordinal);

void write_documents(std::ostream& out, const std::vector<Document>& docs);
std::vector<Document> read_documents(std::istream& in);

} // namespace topicforge
