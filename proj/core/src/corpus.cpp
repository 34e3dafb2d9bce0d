#include "topicforge/corpus.hpp"

#include <cctype>
#include <istream>
#include <ostream>
#include <regex>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "topicforge/errors.hpp"
#include "topicforge/text.hpp"

namespace topicforge {

using nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
    case Role::therapist: return "therapist";
    case Role::client: return "client";
    case Role::other: return "other";
    }
    return "other";
}

Role parse_role(std::string_view text) {
    if (text == "therapist") return Role::therapist;
    if (text == "client") return Role::client;
    if (text == "other") return Role::other;
    throw Error(ErrorKind::InputFormat, "unknown role '" + std::string(text) + "'");
}

PreprocessConfig PreprocessConfig::defaults() {
    PreprocessConfig c;
    c.contraction_table = {
        {"don't", "do not"},       {"doesn't", "does not"},   {"didn't", "did not"},
        {"can't", "can not"},      {"cannot", "can not"},     {"won't", "will not"},
        {"wouldn't", "would not"}, {"shouldn't", "should not"}, {"couldn't", "could not"},
        {"mustn't", "must not"},   {"needn't", "need not"},   {"mightn't", "might not"},
        {"shan't", "shall not"},   {"isn't", "is not"},       {"aren't", "are not"},
        {"wasn't", "was not"},     {"weren't", "were not"},   {"haven't", "have not"},
        {"hasn't", "has not"},     {"hadn't", "had not"},     {"i'm", "i am"},
        {"i'll", "i will"},        {"you'll", "you will"},    {"he'll", "he will"},
        {"she'll", "she will"},    {"we'll", "we will"},      {"they'll", "they will"},
        {"it'll", "it will"},      {"that'll", "that will"},  {"i'd", "i would"},
        {"you'd", "you would"},    {"he'd", "he would"},      {"she'd", "she would"},
        {"we'd", "we would"},      {"they'd", "they would"},  {"i've", "i have"},
        {"you've", "you have"},    {"we've", "we have"},      {"they've", "they have"},
        {"you're", "you are"},     {"we're", "we are"},       {"they're", "they are"},
        {"it's", "it is"},         {"that's", "that is"},     {"what's", "what is"},
        {"there's", "there is"},   {"he's", "he is"},         {"she's", "she is"},
        {"let's", "let us"},       {"gonna", "going to"},     {"wanna", "want to"},
        {"gotta", "got to"},
    };
    c.filler_list = {"mhm", "uhm", "uh", "um", "hm", "mm", "uhm-hm", "mhm-mhm"};
    c.orthographic_table = {{"ok", "okay"}, {"okey", "okay"}, {"o.k", "okay"}};
    c.pause_mark_patterns = {R"(\(\s*\d+(\.\d+)?\s*\))", R"(\[\s*pause\s*\])"};
    c.identifier_patterns = {R"(^\s*Q\d+\s*:)"};
    c.abbreviation_exceptions = {"mr.", "mrs.", "ms.", "dr.", "prof.", "e.g.", "i.e.",
                                 "etc.", "vs.", "st.", "jr.", "sr."};
    return c;
}

PreprocessConfig PreprocessConfig::from_json(const json& j) {
    PreprocessConfig c = defaults();
    auto lower_map = [](const json& m) {
        std::map<std::string, std::string> out;
        for (const auto& [k, v] : m.items()) out.emplace(to_lower_utf8(k), v.get<std::string>());
        return out;
    };
    auto lower_set = [](const json& s) {
        std::set<std::string> out;
        for (const auto& v : s) out.insert(to_lower_utf8(v.get<std::string>()));
        return out;
    };
    if (j.contains("contraction_table")) c.contraction_table = lower_map(j.at("contraction_table"));
    if (j.contains("filler_list")) c.filler_list = lower_set(j.at("filler_list"));
    if (j.contains("orthographic_table")) c.orthographic_table = lower_map(j.at("orthographic_table"));
    if (j.contains("pause_mark_patterns"))
        c.pause_mark_patterns = j.at("pause_mark_patterns").get<std::vector<std::string>>();
    if (j.contains("identifier_patterns"))
        c.identifier_patterns = j.at("identifier_patterns").get<std::vector<std::string>>();
    if (j.contains("abbreviation_exceptions"))
        c.abbreviation_exceptions = lower_set(j.at("abbreviation_exceptions"));
    c.validate();
    return c;
}

json PreprocessConfig::to_json() const {
    return json{{"contraction_table", contraction_table},
                {"filler_list", filler_list},
                {"orthographic_table", orthographic_table},
                {"pause_mark_patterns", pause_mark_patterns},
                {"identifier_patterns", identifier_patterns},
                {"abbreviation_exceptions", abbreviation_exceptions}};
}

namespace {

std::regex compile(const std::string& pattern) {
    try {
        return std::regex(pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
        throw Error(ErrorKind::Config, "pattern '" + pattern + "' does not compile: " + e.what());
    }
}

bool is_space(char ch) { return std::isspace(static_cast<unsigned char>(ch)) != 0; }
bool is_terminator(char ch) { return ch == '.' || ch == '!' || ch == '?'; }
bool is_closer(char ch) { return ch == '"' || ch == '\'' || ch == ')' || ch == ']'; }

/// Splits a raw whitespace token into leading punctuation, core and trailing punctuation.
struct TokenParts {
    std::string_view lead, core, tail;
};

TokenParts split_punct(std::string_view tok) {
    auto is_edge = [](char ch) {
        const auto c = static_cast<unsigned char>(ch);
        return c < 0x80 && std::isalnum(c) == 0 && ch != '\'' && ch != '-';
    };
    std::size_t b = 0;
    while (b < tok.size() && is_edge(tok[b])) ++b;
    std::size_t e = tok.size();
    while (e > b && is_edge(tok[e - 1])) --e;
    return {tok.substr(0, b), tok.substr(b, e - b), tok.substr(e)};
}

std::string normalize_apostrophes(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        // U+2019 RIGHT SINGLE QUOTATION MARK
        if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
            static_cast<unsigned char>(text[i + 1]) == 0x80 &&
            static_cast<unsigned char>(text[i + 2]) == 0x99) {
            out.push_back('\'');
            i += 2;
            continue;
        }
        out.push_back(text[i]);
    }
    return out;
}

} // namespace

void PreprocessConfig::validate() const {
    for (const auto& p : pause_mark_patterns) compile(p);
    for (const auto& p : identifier_patterns) compile(p);
}

std::vector<Utterance> parse_transcripts(std::istream& in, std::string_view corpus_id) {
    std::vector<Utterance> out;
    std::unordered_map<std::string, std::size_t> next_index;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fail = [&](const std::string& why) {
            throw Error(ErrorKind::InputFormat, "line " + std::to_string(line_no) + ": " + why);
        };
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(std::string("malformed JSON (") + e.what() + ")");
        }
        if (!j.is_object()) fail("expected a JSON object");
        for (const char* key : {"session_id", "speaker", "role", "text"}) {
            if (!j.contains(key)) fail(std::string("missing \"") + key + "\"");
            if (!j.at(key).is_string()) fail(std::string("\"") + key + "\" must be a string");
        }
        Utterance u;
        u.corpus_id = std::string(corpus_id);
        u.session_id = j.at("session_id").get<std::string>();
        u.speaker = j.at("speaker").get<std::string>();
        try {
            u.role = parse_role(j.at("role").get<std::string>());
        } catch (const Error& e) {
            fail(e.what());
        }
        u.text = j.at("text").get<std::string>();
        if (trim(u.text).empty()) fail("empty \"text\"");
        if (j.contains("t_start") && !j.at("t_start").is_null()) {
            if (!j.at("t_start").is_number()) fail("\"t_start\" must be a number");
            u.t_start = j.at("t_start").get<double>();
        }
        u.index = next_index[u.session_id]++;
        out.push_back(std::move(u));
    }
    if (out.empty()) throw Error(ErrorKind::EmptyCorpus, "no utterances in corpus '" + std::string(corpus_id) + "'");
    return out;
}

std::vector<Utterance> select_role(const std::vector<Utterance>& utterances, Role role) {
    std::vector<Utterance> out;
    for (const auto& u : utterances) {
        if (u.role == role) out.push_back(u);
    }
    if (out.empty()) warn("select_role: no utterances with role '" + std::string(to_string(role)) + "'");
    return out;
}

std::vector<std::string> segment_sentences(std::string_view text, const PreprocessConfig& config) {
    std::vector<std::string> out;
    std::size_t start = 0;
    auto emit = [&](std::size_t end) {
        auto piece = trim(text.substr(start, end - start));
        if (!piece.empty()) out.emplace_back(piece);
        start = end;
    };
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_terminator(text[i])) {
            ++i;
            continue;
        }
        std::size_t end = i + 1;
        while (end < text.size() && (is_terminator(text[end]) || is_closer(text[end]))) ++end;
        const bool at_boundary = end == text.size() || is_space(text[end]);
        if (!at_boundary) {
            i = end;
            continue;
        }
        if (text[i] == '.' && end == i + 1) {
            std::size_t w = i;
            while (w > start && !is_space(text[w - 1])) --w;
            std::string word = to_lower_utf8(text.substr(w, i + 1 - w));
            while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) {
                word.erase(word.begin());
            }
            if (config.abbreviation_exceptions.contains(word)) {
                i = end;
                continue;
            }
        }
        emit(end);
        i = end;
    }
    emit(text.size());
    return out;
}

std::string normalize_lexical(std::string_view sentence, const PreprocessConfig& config) {
    const std::string text = normalize_apostrophes(sentence);
    std::string out;
    std::size_t i = 0;
    auto append = [&](std::string_view piece) {
        if (piece.empty()) return;
        if (!out.empty()) out.push_back(' ');
        out.append(piece);
    };
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j == i) break;
        const std::string_view raw(text.data() + i, j - i);
        i = j;

        const auto parts = split_punct(raw);
        std::string key = to_lower_utf8(parts.core);
        if (key.empty()) {
            append(raw);
            continue;
        }
        if (config.filler_list.contains(key)) continue;
        std::string core(parts.core);
        const bool capitalized = std::isupper(static_cast<unsigned char>(core.front())) != 0;
        bool replaced = false;
        if (auto it = config.contraction_table.find(key); it != config.contraction_table.end()) {
            core = it->second;
            key = to_lower_utf8(core);
            replaced = true;
        }
        if (auto it = config.orthographic_table.find(key); it != config.orthographic_table.end()) {
            core = it->second;
            replaced = true;
        }
        // keep a sentence-initial capital on replaced words
        if (replaced && capitalized && !core.empty()) {
            core.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(core.front())));
        }
        append(std::string(parts.lead) + core + std::string(parts.tail));
    }
    return collapse_spaces(out);
}

std::string strip_metadata(std::string_view sentence, const PreprocessConfig& config) {
    std::string text(sentence);
    for (const auto* patterns : {&config.pause_mark_patterns, &config.identifier_patterns}) {
        for (const auto& p : *patterns) {
            text = std::regex_replace(text, compile(p), " ");
        }
    }
    return std::string(trim(collapse_spaces(text)));
}

std::string make_doc_id(std::string_view corpus_id, std::string_view session_id,
                        std::size_t utterance_index, std::size_t sentence_ordinal) {
    return std::string(corpus_id) + ":" + std::string(session_id) + ":" + std::to_string(utterance_index) +
           ":" + std::to_string(sentence_ordinal);
}

std::vector<Document> preprocess_corpus(const std::vector<Utterance>& utterances,
                                        const PreprocessConfig& config) {
    if (utterances.empty()) throw Error(ErrorKind::EmptyCorpus, "no utterances to preprocess");
    config.validate();
    std::vector<Document> docs;
    for (const auto& u : utterances) {
        const auto sentences = segment_sentences(u.text, config);
        for (std::size_t s = 0; s < sentences.size(); ++s) {
            std::string text = strip_metadata(sentences[s], config);
            text = normalize_lexical(text, config);
            text = to_lower_utf8(text);
            if (tokenize(text).empty()) continue;
            docs.push_back(Document{make_doc_id(u.corpus_id, u.session_id, u.index, s), std::move(text),
                                    u.corpus_id, u.session_id, u.index, s});
        }
    }
    if (docs.empty()) throw Error(ErrorKind::EmptyCorpus, "no document survived preprocessing");
    return docs;
}

void write_documents(std::ostream& out, const std::vector<Document>& docs) {
    for (const auto& d : docs) {
        json j{{"doc_id", d.doc_id},
               {"text", d.text},
               {"corpus_id", d.corpus_id},
               {"session_id", d.session_id},
               {"utterance_index", d.utterance_index},
               {"sentence_ordinal", d.sentence_ordinal}};
        out << j.dump() << '\n';
    }
}

std::vector<Document> read_documents(std::istream& in) {
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            docs.push_back(Document{j.at("doc_id").get<std::string>(), j.at("text").get<std::string>(),
                                    j.at("corpus_id").get<std::string>(), j.at("session_id").get<std::string>(),
                                    j.at("utterance_index").get<std::size_t>(),
                                    j.at("sentence_ordinal").get<std::size_t>()});
        } catch (const json::exception& e) {
            throw Error(ErrorKind::InputFormat, "documents line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return docs;
}

} // namespace topicforge
