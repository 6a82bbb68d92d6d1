#include "kg/resolution.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kg/common.hpp"
#include "kg/llm.hpp"
#include "kg/text.hpp"

namespace kg::resolution {

namespace {

using nlohmann::json;

bool ends_with(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

std::string singularize(const std::string& word, const NormalizeOptions& options) {
    auto irregular = options.irregular_plurals.find(word);
    if (irregular != options.irregular_plurals.end()) return irregular->second;
    if (options.keep_plural.count(word)) return word;
    if (word.size() > 4 && ends_with(word, "ies")) return word.substr(0, word.size() - 3) + "y";
    if (word.size() > 4 && ends_with(word, "sses")) return word.substr(0, word.size() - 2);
    if (word.size() > 3 && (ends_with(word, "xes") || ends_with(word, "zes"))) {
        return word.substr(0, word.size() - 2);
    }
    if (word.size() > 4 && (ends_with(word, "ches") || ends_with(word, "shes"))) {
        return word.substr(0, word.size() - 2);
    }
    if (word.size() > 4 && ends_with(word, "ses")) return word.substr(0, word.size() - 1);
    if (word.size() > 2 && ends_with(word, "s") && !ends_with(word, "ss") &&
        !ends_with(word, "us") && !ends_with(word, "is")) {
        return word.substr(0, word.size() - 1);
    }
    return word;
}

// Detects whether following `from` through the rule map returns to `from`.
// Returns the cycle path when one exists.
std::optional<std::vector<std::string>> find_cycle(
    const std::map<std::string, std::string>& rule_map, const std::string& start) {
    std::vector<std::string> path{start};
    std::string current = start;
    for (std::size_t step = 0; step <= rule_map.size(); ++step) {
        auto it = rule_map.find(current);
        if (it == rule_map.end()) return std::nullopt;
        current = it->second;
        for (const auto& p : path) {
            if (p == current) {
                path.push_back(current);
                return path;
            }
        }
        path.push_back(current);
    }
    return path;  // ran longer than the rule set: must have cycled
}

int origin_priority(RuleOrigin origin) {
    switch (origin) {
        case RuleOrigin::manual: return 0;
        case RuleOrigin::chemical: return 1;
        case RuleOrigin::acronym: return 2;
    }
    return 3;
}

}  // namespace

std::string to_string(RuleOrigin origin) {
    switch (origin) {
        case RuleOrigin::acronym: return "acronym";
        case RuleOrigin::chemical: return "chemical";
        case RuleOrigin::manual: return "manual";
    }
    return "acronym";
}

RuleOrigin rule_origin_from_string(const std::string& s) {
    if (s == "manual") return RuleOrigin::manual;
    if (s == "chemical") return RuleOrigin::chemical;
    return RuleOrigin::acronym;
}

std::optional<std::string> normalize_surface(const std::string& surface,
                                             const std::string& sentence_text,
                                             const NormalizeOptions& options,
                                             bool skip_in_text_check) {
    if (surface.empty()) return std::nullopt;

    std::string trimmed = text::trim_edges(surface);
    if (trimmed.empty()) return std::nullopt;
    if (text::all_digits_or_punct(trimmed)) return std::nullopt;
    if (!skip_in_text_check && !text::contains_ci(sentence_text, text::trim(surface))) {
        return std::nullopt;  // inferred by the model, not present in the text
    }

    auto words = text::split_whitespace(trimmed);
    std::string rebuilt;
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::string w = words[i];
        if (!text::looks_like_acronym(w)) {
            w = text::to_lower(w);
            if (i + 1 == words.size()) {
                // Exception list applies to the whole phrase and to the final word.
                std::string phrase = rebuilt.empty() ? w : rebuilt + " " + w;
                if (!options.keep_plural.count(text::to_lower(phrase))) {
                    w = singularize(w, options);
                }
            }
        }
        if (!rebuilt.empty()) rebuilt += " ";
        rebuilt += w;
    }
    if (rebuilt.empty()) return std::nullopt;
    return rebuilt;
}

std::vector<SubstitutionRule> build_substitutions(
    const std::vector<std::pair<std::string, long long>>& ranked_dictionary,
    llm::Gateway& gateway, const std::function<bool(const std::string&)>& corpus_contains,
    std::size_t top_n) {
    if (ranked_dictionary.empty()) throw ValidationError("substitution dictionary is empty");

    std::vector<std::pair<std::string, long long>> dict(
        ranked_dictionary.begin(),
        ranked_dictionary.begin() +
            std::min<std::size_t>(top_n, ranked_dictionary.size()));

    std::map<std::string, long long> counts;
    for (const auto& [name, count] : dict) counts[name] = count;

    std::vector<std::pair<std::pair<std::string, std::string>, RuleOrigin>> proposals;
    try {
        llm::PromptContext ctx;
        ctx.dictionary = dict;
        auto acronyms = gateway.ask(llm::PromptKind::AcronymResolution, ctx);
        for (const auto& p : acronyms.substitutions) {
            proposals.push_back({p, RuleOrigin::acronym});
        }
        auto chemicals = gateway.ask(llm::PromptKind::ChemicalStandardization, ctx);
        for (const auto& p : chemicals.substitutions) {
            proposals.push_back({p, RuleOrigin::chemical});
        }
    } catch (const Error& e) {
        std::cerr << "resolution: substitution pass degraded to empty rule list: " << e.what()
                  << "\n";
        return {};
    }

    // Validate each proposal, then keep the highest-count acyclic subset.
    struct Candidate {
        SubstitutionRule rule;
        long long count;
    };
    std::vector<Candidate> candidates;
    for (const auto& [pair, origin] : proposals) {
        const auto& [from, to] = pair;
        if (from.empty() || to.empty() || from == to) continue;
        bool expansion_known = counts.count(to) > 0 || (corpus_contains && corpus_contains(to));
        if (!expansion_known) continue;
        bool dup = false;
        for (const auto& c : candidates) {
            if (c.rule.from == from) {
                dup = true;
                break;
            }
        }
        if (dup) continue;
        long long count = counts.count(from) ? counts.at(from) : 0;
        candidates.push_back({{from, to, origin}, count});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.count > b.count; });

    std::map<std::string, std::string> accepted;
    std::vector<SubstitutionRule> rules;
    for (const auto& c : candidates) {
        accepted[c.rule.from] = c.rule.to;
        if (find_cycle(accepted, c.rule.from)) {
            accepted.erase(c.rule.from);  // lower-count rule dropped
            continue;
        }
        rules.push_back(c.rule);
    }
    std::sort(rules.begin(), rules.end(),
              [](const SubstitutionRule& a, const SubstitutionRule& b) { return a.from < b.from; });
    return rules;
}

std::vector<ResolvedEntity> apply_substitutions(const std::vector<NormalizedMention>& mentions,
                                                const std::vector<SubstitutionRule>& rules) {
    std::map<std::string, std::string> rule_map;
    for (const auto& r : rules) rule_map[r.from] = r.to;
    for (const auto& r : rules) {
        if (auto cycle = find_cycle(rule_map, r.from)) {
            std::ostringstream oss;
            oss << "substitution cycle:";
            for (const auto& step : *cycle) oss << " " << step;
            throw ValidationError(oss.str());
        }
    }

    auto resolve = [&](std::string form) {
        for (std::size_t step = 0; step <= rule_map.size(); ++step) {
            auto it = rule_map.find(form);
            if (it == rule_map.end()) return form;
            form = it->second;
        }
        return form;
    };

    struct Group {
        std::vector<ner::Category> categories;
        std::vector<MentionRef> refs;
    };
    std::map<std::string, Group> groups;
    for (const auto& m : mentions) {
        if (m.normalized.empty()) continue;
        auto& g = groups[resolve(m.normalized)];
        g.categories.push_back(m.category);
        g.refs.push_back(m.ref);
    }

    std::vector<ResolvedEntity> out;
    out.reserve(groups.size());
    for (auto& [canonical, group] : groups) {
        std::map<int, int> votes;
        for (auto c : group.categories) votes[static_cast<int>(c)] += 1;
        int best = static_cast<int>(ner::Category::Concept);
        int best_votes = -1;
        for (const auto& [cat, n] : votes) {
            if (n > best_votes) {  // ties resolve to the lowest taxonomy index
                best = cat;
                best_votes = n;
            }
        }
        ResolvedEntity entity;
        entity.canonical = canonical;
        entity.category = static_cast<ner::Category>(best);
        entity.mention_count = static_cast<long long>(group.refs.size());
        entity.sources = std::move(group.refs);
        out.push_back(std::move(entity));
    }
    return out;  // sorted by canonical (std::map order)
}

std::vector<SubstitutionRule> merge_rules(const std::vector<SubstitutionRule>& a,
                                          const std::vector<SubstitutionRule>& b) {
    std::vector<SubstitutionRule> merged = a;
    merged.insert(merged.end(), b.begin(), b.end());
    std::map<std::string, SubstitutionRule> by_from;
    for (const auto& r : merged) {
        auto it = by_from.find(r.from);
        if (it == by_from.end() ||
            origin_priority(r.origin) < origin_priority(it->second.origin)) {
            by_from[r.from] = r;
        }
    }
    std::vector<SubstitutionRule> out;
    out.reserve(by_from.size());
    for (const auto& [from, rule] : by_from) out.push_back(rule);
    return out;
}

void save_rules(const std::vector<SubstitutionRule>& rules, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write rules file: " + path);
    for (const auto& r : rules) {
        out << json{{"from", r.from}, {"to", r.to}, {"origin", to_string(r.origin)}}.dump()
            << "\n";
    }
}

std::vector<SubstitutionRule> load_rules(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open rules file: " + path);
    std::vector<SubstitutionRule> rules;
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw IoError("malformed rules line in " + path);
        rules.push_back({j.at("from").get<std::string>(), j.at("to").get<std::string>(),
                         rule_origin_from_string(j.value("origin", "acronym"))});
    }
    return rules;
}

void save_entities(const std::vector<ResolvedEntity>& entities, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write entities file: " + path);
    for (const auto& e : entities) {
        json sources = json::array();
        for (const auto& ref : e.sources) {
            sources.push_back({{"abstract_id", ref.abstract_id}, {"sentence_index", ref.sentence_index}});
        }
        out << json{{"canonical", e.canonical},
                    {"category", ner::to_string(e.category)},
                    {"mention_count", e.mention_count},
                    {"sources", sources}}
                   .dump()
            << "\n";
    }
}

std::vector<ResolvedEntity> load_entities(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open entities file: " + path);
    std::vector<ResolvedEntity> entities;
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw IoError("malformed entities line in " + path);
        ResolvedEntity e;
        e.canonical = j.at("canonical").get<std::string>();
        e.category = ner::category_from_name(j.at("category").get<std::string>())
                         .value_or(ner::Category::Concept);
        e.mention_count = j.at("mention_count").get<long long>();
        for (const auto& s : j.at("sources")) {
            e.sources.push_back(
                {s.at("abstract_id").get<std::string>(), s.at("sentence_index").get<int>()});
        }
        entities.push_back(std::move(e));
    }
    return entities;
}

}  // namespace kg::resolution
