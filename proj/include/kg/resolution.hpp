#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kg/ner.hpp"

namespace kg::llm {
class Gateway;
}

namespace kg::resolution {

enum class RuleOrigin { acronym, chemical, manual };

std::string to_string(RuleOrigin origin);
RuleOrigin rule_origin_from_string(const std::string& s);

struct SubstitutionRule {
    std::string from;
    std::string to;
    RuleOrigin origin = RuleOrigin::acronym;
};

struct MentionRef {
    std::string abstract_id;
    int sentence_index = 0;
};

struct NormalizedMention {
    std::string normalized;
    ner::Category category = ner::Category::Concept;
    MentionRef ref;
};

struct ResolvedEntity {
    std::string canonical;
    ner::Category category = ner::Category::Concept;  // majority vote over mentions
    long long mention_count = 0;
    std::vector<MentionRef> sources;
};

struct NormalizeOptions {
    // Final tokens (or whole phrases) whose trailing s is not a plural.
    std::set<std::string> keep_plural = {
        "physics",  "plasma physics", "magnetohydrodynamics", "dynamics",
        "statistics", "diagnostics",  "kinetics",             "optics",
        "electronics", "gauss",       "stokes",               "siemens",
    };
    std::map<std::string, std::string> irregular_plurals = {
        {"gases", "gas"},
        {"lenses", "lens"},
        {"analyses", "analysis"},
        {"nuclei", "nucleus"},
    };
};

/// Canonicalizes one NER surface: trims edges, lowercases (all-caps acronyms
/// of length 2-6 are preserved for the substitution pass), singularizes the
/// final token. Returns nullopt (REJECT) for all-numeric/punctuation surfaces
/// and for surfaces that do not occur in their sentence.
std::optional<std::string> normalize_surface(const std::string& surface,
                                             const std::string& sentence_text,
                                             const NormalizeOptions& options = {},
                                             bool skip_in_text_check = false);

/// Asks the provider for acronym expansions and chemical standardizations
/// over the top-ranked dictionary. Expansions must exist in the dictionary or
/// (when corpus_contains is given) in the corpus; cycles are removed by
/// dropping the rule with the lower-count source. Provider failure degrades
/// to an empty rule list with a warning on stderr.
std::vector<SubstitutionRule> build_substitutions(
    const std::vector<std::pair<std::string, long long>>& ranked_dictionary,
    llm::Gateway& gateway, const std::function<bool(const std::string&)>& corpus_contains = {},
    std::size_t top_n = 500);

/// Rewrites every mention to its fixpoint under the rules and groups by the
/// final canonical form. Throws on a rule cycle, listing it.
std::vector<ResolvedEntity> apply_substitutions(const std::vector<NormalizedMention>& mentions,
                                                const std::vector<SubstitutionRule>& rules);

/// Merges rule lists; on duplicate `from`, manual origin wins, then chemical,
/// then acronym, then first occurrence.
std::vector<SubstitutionRule> merge_rules(const std::vector<SubstitutionRule>& a,
                                          const std::vector<SubstitutionRule>& b);

void save_rules(const std::vector<SubstitutionRule>& rules, const std::string& path);
std::vector<SubstitutionRule> load_rules(const std::string& path);

void save_entities(const std::vector<ResolvedEntity>& entities, const std::string& path);
std::vector<ResolvedEntity> load_entities(const std::string& path);

}  // namespace kg::resolution
