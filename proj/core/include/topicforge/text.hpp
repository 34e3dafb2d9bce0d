#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace topicforge {

/// Lowercases ASCII, Latin-1 supplement and Cyrillic letters; other bytes pass through.
std::string to_lower_utf8(std::string_view text);

/// Splits on whitespace and punctuation. Apostrophes and hyphens are kept
/// when they sit between word characters ("uhm-hm", "o'clock").
std::vector<std::string> tokenize(std::string_view text);

/// Joins tokens[begin, begin + n) with single spaces.
std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t n);

/// Unigrams and contiguous n-grams up to max_n, in document order.
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, std::size_t max_n);

std::string collapse_spaces(std::string_view text);
std::string_view trim(std::string_view text);

/// 64-bit FNV-1a, used for stable content hashes and ids.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

} // namespace topicforge
