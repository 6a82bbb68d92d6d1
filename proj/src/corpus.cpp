#include "kg/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>

#include "kg/common.hpp"
#include "kg/llm.hpp"
#include "kg/text.hpp"

namespace kg::corpus {

namespace {

using nlohmann::json;

const char* kRequiredFields[] = {"id",   "title",    "text", "first_author",
                                 "year", "keywords", "url",  "citation_count"};

std::string record_error(const std::string& id, const std::string& field,
                         const std::string& what) {
    return "record " + id + ": field \"" + field + "\" " + what;
}

}  // namespace

LoadResult load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file: " + path);

    LoadResult result;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw IoError("malformed corpus line " + std::to_string(lineno) + " in " + path);
        }

        std::string id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                                 : "line " + std::to_string(lineno);
        bool ok = true;
        for (const char* field : kRequiredFields) {
            if (!j.contains(field)) {
                result.record_errors.push_back(record_error(id, field, "missing"));
                ok = false;
            }
        }
        if (!ok) continue;

        AbstractRecord rec;
        try {
            rec.id = j.at("id").get<std::string>();
            rec.title = j.at("title").get<std::string>();
            rec.text = j.at("text").get<std::string>();
            rec.first_author = j.at("first_author").get<std::string>();
            rec.year = j.at("year").get<int>();
            rec.keywords = j.at("keywords").get<std::vector<std::string>>();
            rec.url = j.at("url").get<std::string>();
            rec.citation_count = j.at("citation_count").get<long long>();
        } catch (const json::exception& e) {
            result.record_errors.push_back("record " + id + ": " + e.what());
            continue;
        }

        if (rec.id.empty()) {
            result.record_errors.push_back(record_error(id, "id", "empty"));
            continue;
        }
        if (seen_ids.count(rec.id)) {
            result.record_errors.push_back(record_error(rec.id, "id", "duplicate"));
            continue;
        }
        if (rec.title.empty()) {
            result.record_errors.push_back(record_error(rec.id, "title", "empty"));
            continue;
        }
        if (rec.text.empty()) {
            result.record_errors.push_back(record_error(rec.id, "text", "empty"));
            continue;
        }
        if (rec.year < 1000 || rec.year > 3000) {
            result.record_errors.push_back(record_error(rec.id, "year", "out of range"));
            continue;
        }
        if (rec.citation_count < 0) {
            result.record_errors.push_back(record_error(rec.id, "citation_count", "negative"));
            continue;
        }
        seen_ids.insert(rec.id);
        result.records.push_back(std::move(rec));
    }
    result.stats = compute_stats(result.records, {});
    return result;
}

void save_corpus(const std::vector<AbstractRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write corpus file: " + path);
    for (const auto& r : records) {
        json j{{"id", r.id},
               {"title", r.title},
               {"text", r.text},
               {"first_author", r.first_author},
               {"year", r.year},
               {"keywords", r.keywords},
               {"url", r.url},
               {"citation_count", r.citation_count}};
        out << j.dump() << "\n";
    }
}

CorpusStats compute_stats(const std::vector<AbstractRecord>& records,
                          const std::vector<std::string>& patterns) {
    CorpusStats stats;
    stats.n_abstracts = records.size();
    for (const auto& r : records) {
        stats.total_words += text::count_whitespace_tokens(r.text);
        if (stats.n_abstracts > 0) {
            if (stats.year_min == 0 || r.year < stats.year_min) stats.year_min = r.year;
            if (r.year > stats.year_max) stats.year_max = r.year;
        }
    }
    for (const auto& p : patterns) {
        std::size_t count = 0;
        for (const auto& r : records) {
            if (text::contains_ci(r.title, p)) ++count;
        }
        stats.per_pattern_counts[p] = count;
    }
    return stats;
}

std::vector<AbstractRecord> scope_by_title(const std::vector<AbstractRecord>& records,
                                           const std::vector<std::string>& patterns) {
    std::vector<AbstractRecord> out;
    for (const auto& r : records) {
        for (const auto& p : patterns) {
            if (!p.empty() && text::contains_ci(r.title, p)) {
                out.push_back(r);
                break;  // counted once in the subset
            }
        }
    }
    return out;
}

bool validate_relevance(const AbstractRecord& record,
                        const std::vector<std::string>& domain_keywords, llm::Gateway& gateway) {
    std::string body = record.title + " " + record.text;
    bool keyword_hit = false;
    for (const auto& kw : domain_keywords) {
        if (!kw.empty() && text::contains_ci(body, kw)) {
            keyword_hit = true;
            break;
        }
    }
    if (!keyword_hit) return false;  // provider never called

    llm::PromptContext ctx;
    ctx.title = record.title;
    ctx.text = record.text;
    ctx.keywords = domain_keywords;
    try {
        return gateway.ask(llm::PromptKind::RelevanceCheck, ctx).yes;
    } catch (const Error& e) {
        throw ProviderError("relevance check failed for record " + record.id + ": " + e.what());
    }
}

std::vector<SentenceUnit> split_sentences(const std::string& abstract_id, const std::string& input,
                                          const SplitOptions& options) {
    if (input.empty()) throw ValidationError("cannot split empty text");

    std::string lower = text::to_lower(input);
    auto guarded = [&](std::size_t dot) {
        // The terminator is part of an abbreviation when the text ending at it
        // matches a guard entry on a word boundary.
        for (const auto& abbr_raw : options.abbreviations) {
            std::string abbr = text::to_lower(abbr_raw);
            if (abbr.empty() || dot + 1 < abbr.size()) continue;
            std::size_t start = dot + 1 - abbr.size();
            if (lower.compare(start, abbr.size(), abbr) != 0) continue;
            if (start == 0 || std::isspace(static_cast<unsigned char>(lower[start - 1])) ||
                lower[start - 1] == '(') {
                return true;
            }
        }
        return false;
    };

    std::vector<SentenceUnit> out;
    std::size_t begin = 0;
    auto emit = [&](std::size_t end_exclusive) {
        std::string piece = text::trim(input.substr(begin, end_exclusive - begin));
        if (!piece.empty()) {
            out.push_back({abstract_id, static_cast<int>(out.size()), piece});
        }
        begin = end_exclusive;
    };

    for (std::size_t i = 0; i < input.size(); ++i) {
        char c = input[i];
        if (c != '.' && c != '!' && c != '?') continue;
        bool at_boundary =
            i + 1 == input.size() || std::isspace(static_cast<unsigned char>(input[i + 1]));
        if (!at_boundary) continue;
        if (c == '.') {
            // Decimal like "3.5" cannot reach here (not at a boundary); check guards.
            if (guarded(i)) continue;
        }
        emit(i + 1);
    }
    if (begin < input.size()) emit(input.size());
    return out;
}

}  // namespace kg::corpus
