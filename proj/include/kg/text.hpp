#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kg::text {

std::string to_lower(const std::string& s);
std::string trim(const std::string& s);

/// Strips whitespace and punctuation from both ends, leaving inner
/// punctuation ("edge-localized", "et al.") untouched.
std::string trim_edges(const std::string& s);

/// Lowercase alphanumeric token runs; hyphens and other punctuation split
/// tokens ("deuterium-tritium" -> {"deuterium", "tritium"}).
std::vector<std::string> tokenize(const std::string& s);

/// Whitespace-separated chunks, verbatim.
std::vector<std::string> split_whitespace(const std::string& s);

std::size_t count_whitespace_tokens(const std::string& s);

bool contains_ci(const std::string& haystack, const std::string& needle);
bool equals_ci(const std::string& a, const std::string& b);

/// True when every character is a digit or punctuation (no letters).
bool all_digits_or_punct(const std::string& s);

/// All-caps token of length 2..6 (letters required, digits allowed), the
/// shape treated as an acronym pending substitution.
bool looks_like_acronym(const std::string& s);

bool is_stopword(const std::string& lower_token);

/// Rule-based lemmatizer: strips -s/-es/-ied/-ed/-ing with consonant
/// undoubling and final-e restoration, irregular forms via a fixed table.
std::string lemma(const std::string& token);

/// Deterministic 64-bit string hash (FNV-1a mixed with a seed); stable
/// across platforms, unlike std::hash.
std::uint64_t stable_hash(const std::string& s, std::uint64_t seed);

}  // namespace kg::text
