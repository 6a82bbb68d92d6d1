#include "kg/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace kg::text {

namespace {

bool is_vowel_at(const std::string& w, std::size_t i) {
    char c = w[i];
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return true;
    // 'y' acts as a vowel after a consonant ("dry", "styles").
    if (c == 'y' && i > 0) {
        char p = w[i - 1];
        return !(p == 'a' || p == 'e' || p == 'i' || p == 'o' || p == 'u' || p == 'y');
    }
    return false;
}

// Number of vowel->consonant transitions ([C](VC)^m[V] in stemmer terms).
int measure(const std::string& w) {
    int m = 0;
    bool prev_vowel = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
        bool v = is_vowel_at(w, i);
        if (prev_vowel && !v) ++m;
        prev_vowel = v;
    }
    return m;
}

bool ends_cvc(const std::string& w) {
    if (w.size() < 3) return false;
    std::size_t n = w.size();
    if (is_vowel_at(w, n - 1) || !is_vowel_at(w, n - 2) || is_vowel_at(w, n - 3)) return false;
    char last = w[n - 1];
    return last != 'w' && last != 'x' && last != 'y';
}

bool ends_with(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

// Undouble a trailing consonant pair ("stopp" -> "stop"); l/s/z keep their
// doubling ("fill", "pass", "buzz").
std::string fix_stripped_stem(std::string stem) {
    if (stem.size() >= 2) {
        char a = stem[stem.size() - 1];
        char b = stem[stem.size() - 2];
        if (a == b && !is_vowel_at(stem, stem.size() - 1) && a != 'l' && a != 's' && a != 'z') {
            stem.pop_back();
            return stem;
        }
    }
    if (measure(stem) == 1 && ends_cvc(stem)) stem += 'e';
    return stem;
}

const std::map<std::string, std::string>& irregular_lemmas() {
    static const std::map<std::string, std::string> table = {
        {"is", "be"},        {"are", "be"},       {"was", "be"},       {"were", "be"},
        {"been", "be"},      {"being", "be"},     {"has", "have"},     {"had", "have"},
        {"having", "have"},  {"does", "do"},      {"did", "do"},       {"done", "do"},
        {"goes", "go"},      {"went", "go"},      {"gone", "go"},      {"made", "make"},
        {"making", "make"},  {"ran", "run"},      {"running", "run"},  {"gave", "give"},
        {"given", "give"},   {"giving", "give"},  {"took", "take"},    {"taken", "take"},
        {"taking", "take"},  {"found", "find"},   {"shown", "show"},   {"showed", "show"},
        {"held", "hold"},    {"kept", "keep"},    {"led", "lead"},     {"left", "leave"},
        {"lost", "lose"},    {"met", "meet"},     {"used", "use"},     {"using", "use"},
        {"generated", "generate"}, {"generating", "generate"},
        {"operated", "operate"},   {"operating", "operate"},
        {"controlled", "control"}, {"controlling", "control"},
        {"modelled", "model"},     {"modelling", "model"},
    };
    return table;
}

}  // namespace

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string trim_edges(const std::string& s) {
    auto strip = [](unsigned char c) { return std::isspace(c) || std::ispunct(c); };
    std::size_t b = 0, e = s.size();
    while (b < e && strip(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && strip(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<std::string> split_whitespace(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::size_t count_whitespace_tokens(const std::string& s) {
    std::size_t n = 0;
    bool in_token = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++n;
        }
    }
    return n;
}

bool contains_ci(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return true;
    return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

bool equals_ci(const std::string& a, const std::string& b) {
    return a.size() == b.size() && to_lower(a) == to_lower(b);
}

bool all_digits_or_punct(const std::string& s) {
    if (s.empty()) return true;
    for (unsigned char c : s) {
        if (std::isalpha(c)) return false;
        if (!std::isdigit(c) && !std::ispunct(c) && !std::isspace(c)) return false;
    }
    return true;
}

bool looks_like_acronym(const std::string& s) {
    if (s.size() < 2 || s.size() > 6) return false;
    bool has_upper = false;
    for (unsigned char c : s) {
        if (std::isupper(c)) {
            has_upper = true;
        } else if (!std::isdigit(c)) {
            return false;
        }
    }
    return has_upper;
}

bool is_stopword(const std::string& t) {
    static const std::set<std::string> words = {
        "a",    "an",   "and",  "are",  "as",    "at",    "be",    "by",   "can",
        "could", "do",  "does", "for",  "from",  "how",   "in",    "into", "is",
        "it",   "its",  "me",   "of",   "on",    "or",    "please", "s",   "so",
        "that", "the",  "their", "them", "then", "there", "these", "they", "this",
        "to",   "um",   "us",   "was",  "we",    "were",  "what",  "when", "where",
        "which", "who", "why",  "will", "with",  "would", "you",   "your", "about",
        "tell", "like", "very", "also", "such",  "between",
    };
    return words.count(t) > 0;
}

std::string lemma(const std::string& token) {
    std::string w = to_lower(token);
    const auto& irregular = irregular_lemmas();
    auto it = irregular.find(w);
    if (it != irregular.end()) return it->second;

    if (w.size() > 4 && ends_with(w, "ies")) return w.substr(0, w.size() - 3) + "y";
    if (w.size() > 3 && ends_with(w, "es")) {
        std::string stem = w.substr(0, w.size() - 2);
        if (ends_with(stem, "s") || ends_with(stem, "x") || ends_with(stem, "z") ||
            ends_with(stem, "ch") || ends_with(stem, "sh")) {
            return stem;
        }
    }
    if (w.size() > 3 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") &&
        !ends_with(w, "is")) {
        return w.substr(0, w.size() - 1);
    }
    if (w.size() > 4 && ends_with(w, "ied")) return w.substr(0, w.size() - 3) + "y";
    if (w.size() > 4 && ends_with(w, "eed")) return w.substr(0, w.size() - 1);
    if (w.size() > 4 && ends_with(w, "ed")) return fix_stripped_stem(w.substr(0, w.size() - 2));
    if (w.size() > 5 && ends_with(w, "ing")) return fix_stripped_stem(w.substr(0, w.size() - 3));
    return w;
}

std::uint64_t stable_hash(const std::string& s, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    // splitmix64 finalizer
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return h;
}

}  // namespace kg::text
