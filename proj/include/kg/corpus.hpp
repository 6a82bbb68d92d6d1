#pragma once

#include <map>
#include <string>
#include <vector>

namespace kg::llm {
class Gateway;
}

namespace kg::corpus {

/// One publication abstract plus its lens-style metadata.
struct AbstractRecord {
    std::string id;
    std::string title;
    std::string text;
    std::string first_author;
    int year = 0;
    std::vector<std::string> keywords;
    std::string url;
    long long citation_count = 0;
};

struct CorpusStats {
    std::size_t n_abstracts = 0;
    std::size_t total_words = 0;
    int year_min = 0;
    int year_max = 0;
    std::map<std::string, std::size_t> per_pattern_counts;
};

struct SentenceUnit {
    std::string abstract_id;
    int index = 0;
    std::string text;
};

struct LoadResult {
    std::vector<AbstractRecord> records;
    CorpusStats stats;
    // One message per rejected record, naming the record id (or line) and field.
    std::vector<std::string> record_errors;
};

/// Reads a JSON Lines corpus file. Well-formed records are kept; records
/// with missing/invalid fields are reported in record_errors. A line that
/// is not a JSON object at all aborts the load with IoError.
LoadResult load_corpus(const std::string& path);

void save_corpus(const std::vector<AbstractRecord>& records, const std::string& path);

CorpusStats compute_stats(const std::vector<AbstractRecord>& records,
                          const std::vector<std::string>& patterns);

/// Keeps records whose title contains any pattern, case-insensitive substring.
std::vector<AbstractRecord> scope_by_title(const std::vector<AbstractRecord>& records,
                                           const std::vector<std::string>& patterns);

/// Two-stage relevance filter: cheap keyword check over title+text first,
/// then the gateway's yes/no verdict. The provider is never called when the
/// keyword stage already fails.
bool validate_relevance(const AbstractRecord& record,
                        const std::vector<std::string>& domain_keywords, llm::Gateway& gateway);

struct SplitOptions {
    std::vector<std::string> abbreviations = {
        "e.g.", "i.e.", "et al.", "al.", "cf.", "vs.", "etc.", "fig.", "figs.",
        "eq.",  "eqs.", "ref.",   "refs.", "sec.", "no.", "dr.", "approx.",
    };
};

std::vector<SentenceUnit> split_sentences(const std::string& abstract_id, const std::string& text,
                                          const SplitOptions& options = {});

}  // namespace kg::corpus
