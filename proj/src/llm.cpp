#include "kg/llm.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "kg/common.hpp"
#include "kg/text.hpp"

namespace kg::llm {

namespace {

using nlohmann::json;

std::string single_line(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    }
    return text::trim(out);
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

std::string numbered_lines(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += std::to_string(i + 1) + ". " + single_line(items[i]) + "\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

void require_field(bool present, const std::string& field) {
    if (!present) throw ValidationError("prompt context missing field: " + field);
}

std::vector<std::string> prompt_lines(const std::string& prompt) {
    std::vector<std::string> lines;
    std::stringstream ss(prompt);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

// Value of the first "Key: rest" line, empty if absent.
std::string line_value(const std::vector<std::string>& lines, const std::string& key) {
    for (const auto& l : lines) {
        if (l.rfind(key, 0) == 0) return text::trim(l.substr(key.size()));
    }
    return "";
}

// Lines following the `header` line, up to the first blank line.
std::vector<std::string> section_lines(const std::vector<std::string>& lines,
                                       const std::string& header) {
    std::vector<std::string> out;
    bool in_section = false;
    for (const auto& l : lines) {
        if (!in_section) {
            if (l == header) in_section = true;
            continue;
        }
        if (text::trim(l).empty()) break;
        out.push_back(l);
    }
    return out;
}

std::string strip_list_number(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i + 1 < line.size() && line[i] == '.' && line[i + 1] == ' ') {
        return line.substr(i + 2);
    }
    return line;
}

struct TokenSpan {
    std::string lower;
    std::size_t begin;
    std::size_t end;
};

std::vector<TokenSpan> token_spans(const std::string& s) {
    std::vector<TokenSpan> spans;
    std::size_t i = 0;
    while (i < s.size()) {
        if (std::isalnum(static_cast<unsigned char>(s[i]))) {
            std::size_t b = i;
            std::string tok;
            while (i < s.size() && std::isalnum(static_cast<unsigned char>(s[i]))) {
                tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
                ++i;
            }
            spans.push_back({tok, b, i});
        } else {
            ++i;
        }
    }
    return spans;
}

bool token_matches(const std::string& text_tok, const std::string& entry_tok, bool last) {
    if (text_tok == entry_tok) return true;
    if (!last) return false;
    return text_tok == entry_tok + "s" || text_tok == entry_tok + "es";
}

// Finds the first balanced JSON object embedded in raw text.
std::optional<json> first_json_object(const std::string& raw) {
    for (std::size_t start = raw.find('{'); start != std::string::npos;
         start = raw.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) {
                    json parsed = json::parse(raw.substr(start, i - start + 1), nullptr, false);
                    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
                    break;
                }
            }
        }
    }
    return std::nullopt;
}

}  // namespace

const std::vector<PromptKind>& all_prompt_kinds() {
    static const std::vector<PromptKind> kinds = {
        PromptKind::RelevanceCheck,     PromptKind::Ner,
        PromptKind::AcronymResolution,  PromptKind::ChemicalStandardization,
        PromptKind::RelationExtraction, PromptKind::CypherGeneration,
        PromptKind::AnswerGeneration,
    };
    return kinds;
}

std::string to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::RelevanceCheck: return "RelevanceCheck";
        case PromptKind::Ner: return "Ner";
        case PromptKind::AcronymResolution: return "AcronymResolution";
        case PromptKind::ChemicalStandardization: return "ChemicalStandardization";
        case PromptKind::RelationExtraction: return "RelationExtraction";
        case PromptKind::CypherGeneration: return "CypherGeneration";
        case PromptKind::AnswerGeneration: return "AnswerGeneration";
    }
    return "Unknown";
}

std::string PromptLibrary::default_template(PromptKind kind) {
    switch (kind) {
        case PromptKind::RelevanceCheck:
            return "Task: RelevanceCheck\n"
                   "Judge whether the publication below belongs to the target domain.\n"
                   "Domain keywords: {{keywords}}\n"
                   "Title: {{title}}\n"
                   "Text: {{text}}\n"
                   "\n"
                   "Reply with one JSON object: {\"answer\": \"yes\"} or {\"answer\": \"no\"}.\n";
        case PromptKind::Ner:
            return "Task: NER\n"
                   "Extract the domain entities mentioned in the sentence. Assign each entity "
                   "exactly one category from the list below. Do not report entities that are "
                   "not mentioned in the sentence.\n"
                   "Categories: {{categories}}\n"
                   "Sentence: {{sentence}}\n"
                   "\n"
                   "Reply with one JSON object: "
                   "{\"entities\": [{\"name\": \"...\", \"category\": \"...\"}]}.\n";
        case PromptKind::AcronymResolution:
            return "Task: AcronymResolution\n"
                   "Below is a dictionary of top-ranked entities with their mention counts.\n"
                   "Dictionary:\n"
                   "{{dictionary}}\n"
                   "\n"
                   "Identify acronyms in the dictionary with their expanded forms. Propose a "
                   "substitution only when the expanded form itself appears in the dictionary "
                   "or in the corpus.\n"
                   "Reply with one JSON object: "
                   "{\"substitutions\": [{\"from\": \"...\", \"to\": \"...\"}]}.\n";
        case PromptKind::ChemicalStandardization:
            return "Task: ChemicalStandardization\n"
                   "Below is a dictionary of top-ranked entities with their mention counts.\n"
                   "Dictionary:\n"
                   "{{dictionary}}\n"
                   "\n"
                   "Identify chemical elements or compounds written as formulas or shorthand "
                   "and give their standardized names. Propose a substitution only when the "
                   "standardized form itself appears in the dictionary or in the corpus.\n"
                   "Reply with one JSON object: "
                   "{\"substitutions\": [{\"from\": \"...\", \"to\": \"...\"}]}.\n";
        case PromptKind::RelationExtraction:
            return "Task: RelationExtraction\n"
                   "Subject: {{subject}}\n"
                   "Object: {{object}}\n"
                   "Sentences:\n"
                   "{{sentences}}\n"
                   "\n"
                   "State the semantic relationship between the subject and the object that is "
                   "expressed in the sentences: a predicative statement, a causal link, or "
                   "another semantic connection.\n"
                   "Reply with one JSON object: "
                   "{\"subject\": \"...\", \"predicate\": \"...\", \"object\": \"...\"}.\n";
        case PromptKind::CypherGeneration:
            return "Task: CypherGeneration\n"
                   "Translate the question into one query over the graph described below.\n"
                   "Graph schema:\n"
                   "{{schema}}\n"
                   "\n"
                   "Use only these labels, relationship types, and properties. The full-text "
                   "index is invoked exactly as: CALL fulltext('sentences', \"<terms>\") YIELD "
                   "node, score\n"
                   "Question: {{question}}\n"
                   "\n"
                   "Reply with one JSON object: {\"query\": \"...\"}.\n";
        case PromptKind::AnswerGeneration:
            return "Task: AnswerGeneration\n"
                   "Answer the question using only the context below. Do not add information "
                   "from knowledge acquired during pre-training unless the question explicitly "
                   "asks for it. Do not invent sources or citations.\n"
                   "Top sentences:\n"
                   "{{sentences}}\n"
                   "\n"
                   "Documents:\n"
                   "{{documents}}\n"
                   "\n"
                   "Triplets:\n"
                   "{{triplets}}\n"
                   "\n"
                   "Table:\n"
                   "{{table}}\n"
                   "\n"
                   "Question: {{question}}\n"
                   "Reply in plain text.\n";
    }
    return "";
}

PromptLibrary::PromptLibrary() {
    for (PromptKind kind : all_prompt_kinds()) templates_[kind] = default_template(kind);
}

PromptLibrary PromptLibrary::from_directory(const std::string& dir) {
    PromptLibrary lib;
    for (PromptKind kind : all_prompt_kinds()) {
        std::filesystem::path p = std::filesystem::path(dir) / (to_string(kind) + ".txt");
        if (std::filesystem::exists(p)) {
            std::ifstream in(p);
            std::stringstream buf;
            buf << in.rdbuf();
            lib.templates_[kind] = buf.str();
        }
    }
    return lib;
}

const std::string& PromptLibrary::get(PromptKind kind) const {
    return templates_.at(kind);
}

RenderedPrompt render_prompt(PromptKind kind, const PromptContext& ctx, const PromptLibrary& lib,
                             std::size_t token_budget) {
    switch (kind) {
        case PromptKind::RelevanceCheck:
            require_field(!ctx.text.empty(), "text");
            break;
        case PromptKind::Ner:
            require_field(!ctx.sentence.empty(), "sentence");
            require_field(!ctx.categories.empty(), "categories");
            break;
        case PromptKind::AcronymResolution:
        case PromptKind::ChemicalStandardization:
            require_field(!ctx.dictionary.empty(), "dictionary");
            break;
        case PromptKind::RelationExtraction:
            require_field(!ctx.subject.empty(), "subject");
            require_field(!ctx.object.empty(), "object");
            require_field(!ctx.sentences.empty(), "sentences");
            break;
        case PromptKind::CypherGeneration:
            require_field(!ctx.question.empty(), "question");
            require_field(!ctx.schema_text.empty(), "schema_text");
            break;
        case PromptKind::AnswerGeneration:
            require_field(!ctx.question.empty(), "question");
            break;
    }

    // Bulk context that may be trimmed (oldest entries first) to honor the
    // token budget; AnswerGeneration is exempt.
    std::size_t dict_skip = 0;
    std::size_t sent_skip = 0;
    RenderedPrompt result;
    for (;;) {
        std::string out = lib.get(kind);
        replace_all(out, "{{keywords}}", join(ctx.keywords, "; "));
        replace_all(out, "{{title}}", single_line(ctx.title));
        replace_all(out, "{{text}}", single_line(ctx.text));
        replace_all(out, "{{categories}}", join(ctx.categories, "; "));
        replace_all(out, "{{sentence}}", single_line(ctx.sentence));
        replace_all(out, "{{subject}}", single_line(ctx.subject));
        replace_all(out, "{{object}}", single_line(ctx.object));
        replace_all(out, "{{question}}", single_line(ctx.question));
        replace_all(out, "{{schema}}", ctx.schema_text);

        std::string dict_text;
        for (std::size_t i = dict_skip; i < ctx.dictionary.size(); ++i) {
            dict_text += single_line(ctx.dictionary[i].first) + ": " +
                         std::to_string(ctx.dictionary[i].second) + "\n";
        }
        if (!dict_text.empty()) dict_text.pop_back();
        replace_all(out, "{{dictionary}}", dict_text);

        std::vector<std::string> sentences(ctx.sentences.begin() + sent_skip,
                                           ctx.sentences.end());
        replace_all(out, "{{sentences}}", numbered_lines(sentences));
        replace_all(out, "{{documents}}", numbered_lines(ctx.documents));
        replace_all(out, "{{triplets}}", join(ctx.triplets, "\n"));
        replace_all(out, "{{table}}", join(ctx.table_rows, "\n"));

        result.text = out;
        if (kind == PromptKind::AnswerGeneration) break;
        if (text::count_whitespace_tokens(out) <= token_budget) break;
        if (dict_skip < ctx.dictionary.size()) {
            ++dict_skip;
            result.truncated = true;
        } else if (sent_skip < ctx.sentences.size()) {
            ++sent_skip;
            result.truncated = true;
        } else {
            break;  // nothing left to drop
        }
    }
    return result;
}

StructuredReply parse_reply(PromptKind kind, const std::string& raw,
                            const std::vector<std::string>& known_categories) {
    if (text::trim(raw).empty()) throw ValidationError("empty provider reply");
    StructuredReply reply;
    reply.kind = kind;

    if (kind == PromptKind::AnswerGeneration) {
        reply.text = text::trim(raw);
        return reply;
    }

    auto parsed = first_json_object(raw);
    if (!parsed) throw ParseError("no JSON object found in provider reply: " + raw);
    const json& j = *parsed;

    switch (kind) {
        case PromptKind::RelevanceCheck: {
            if (!j.contains("answer") || !j["answer"].is_string()) {
                throw ParseError("relevance reply lacks \"answer\": " + raw);
            }
            std::string a = text::to_lower(j["answer"].get<std::string>());
            if (a != "yes" && a != "no") {
                throw ParseError("relevance answer must be yes/no: " + raw);
            }
            reply.yes = (a == "yes");
            break;
        }
        case PromptKind::Ner: {
            if (!j.contains("entities") || !j["entities"].is_array()) {
                throw ParseError("NER reply lacks \"entities\" array: " + raw);
            }
            for (const auto& e : j["entities"]) {
                if (!e.is_object() || !e.contains("name") || !e["name"].is_string()) continue;
                std::string name = e["name"].get<std::string>();
                if (text::trim(name).empty()) continue;
                std::string category =
                    e.contains("category") && e["category"].is_string()
                        ? e["category"].get<std::string>()
                        : "";
                if (!known_categories.empty()) {
                    bool known = false;
                    for (const auto& k : known_categories) {
                        if (k == category) {
                            known = true;
                            break;
                        }
                    }
                    if (!known) {
                        category = "Concept";
                        ++reply.unknown_categories;
                    }
                }
                reply.entities.emplace_back(name, category);
            }
            break;
        }
        case PromptKind::AcronymResolution:
        case PromptKind::ChemicalStandardization: {
            if (!j.contains("substitutions") || !j["substitutions"].is_array()) {
                throw ParseError("substitution reply lacks \"substitutions\" array: " + raw);
            }
            for (const auto& s : j["substitutions"]) {
                if (!s.is_object() || !s.contains("from") || !s.contains("to")) continue;
                if (!s["from"].is_string() || !s["to"].is_string()) continue;
                reply.substitutions.emplace_back(s["from"].get<std::string>(),
                                                 s["to"].get<std::string>());
            }
            break;
        }
        case PromptKind::RelationExtraction: {
            for (const char* field : {"subject", "predicate", "object"}) {
                if (!j.contains(field) || !j[field].is_string()) {
                    throw ParseError(std::string("relation reply lacks \"") + field +
                                     "\": " + raw);
                }
            }
            reply.subject = j["subject"].get<std::string>();
            reply.predicate = j["predicate"].get<std::string>();
            reply.object = j["object"].get<std::string>();
            if (text::trim(reply.predicate).empty()) {
                throw ParseError("relation reply has empty predicate: " + raw);
            }
            break;
        }
        case PromptKind::CypherGeneration: {
            if (!j.contains("query") || !j["query"].is_string()) {
                throw ParseError("cypher reply lacks \"query\": " + raw);
            }
            reply.text = j["query"].get<std::string>();
            if (text::trim(reply.text).empty()) {
                throw ParseError("cypher reply has empty query: " + raw);
            }
            break;
        }
        case PromptKind::AnswerGeneration:
            break;  // handled above
    }
    return reply;
}

// ---------------------------------------------------------------------------
// Stub provider

StubData StubData::load(const std::string& gazetteer_path, const std::string& patterns_path,
                        const std::string& chemicals_path) {
    StubData data;
    auto load_jsonl = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open stub data file: " + path);
        std::vector<json> rows;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (text::trim(line).empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                throw IoError("malformed stub data line " + std::to_string(lineno) + " in " +
                              path);
            }
            rows.push_back(std::move(j));
        }
        return rows;
    };
    for (const auto& j : load_jsonl(gazetteer_path)) {
        data.gazetteer.emplace_back(j.at("surface").get<std::string>(),
                                    j.at("category").get<std::string>());
    }
    for (const auto& j : load_jsonl(patterns_path)) {
        data.relation_patterns.push_back(
            {{j.at("subject").get<std::string>(), j.at("object").get<std::string>()},
             j.at("predicate").get<std::string>()});
    }
    for (const auto& j : load_jsonl(chemicals_path)) {
        data.chemicals.emplace_back(j.at("from").get<std::string>(),
                                    j.at("to").get<std::string>());
    }
    return data;
}

StubProvider::StubProvider(StubData data) : data_(std::move(data)) {}

std::string StubProvider::complete(const std::string& prompt) {
    auto lines = prompt_lines(prompt);
    std::string task = lines.empty() ? "" : text::trim(lines[0]);
    if (task == "Task: RelevanceCheck") return answer_relevance(prompt);
    if (task == "Task: NER") return answer_ner(prompt);
    if (task == "Task: AcronymResolution") return answer_acronyms(prompt);
    if (task == "Task: ChemicalStandardization") return answer_chemicals(prompt);
    if (task == "Task: RelationExtraction") return answer_relation(prompt);
    if (task == "Task: CypherGeneration") return answer_cypher(prompt);
    if (task == "Task: AnswerGeneration") return answer_generation(prompt);
    throw ProviderError("stub provider cannot identify the task of this prompt");
}

std::string StubProvider::answer_relevance(const std::string& prompt) const {
    auto lines = prompt_lines(prompt);
    std::string keywords_line = line_value(lines, "Domain keywords:");
    std::string body = line_value(lines, "Title:") + " " + line_value(lines, "Text:");
    bool relevant = false;
    std::stringstream ss(keywords_line);
    std::string kw;
    while (std::getline(ss, kw, ';')) {
        kw = text::trim(kw);
        if (!kw.empty() && text::contains_ci(body, kw)) {
            relevant = true;
            break;
        }
    }
    return json{{"answer", relevant ? "yes" : "no"}}.dump();
}

std::string StubProvider::answer_ner(const std::string& prompt) const {
    auto lines = prompt_lines(prompt);
    std::string sentence = line_value(lines, "Sentence:");
    auto spans = token_spans(sentence);

    struct Match {
        std::size_t begin;
        std::size_t length;
        std::string surface;
        std::string category;
    };
    std::vector<Match> matches;
    for (const auto& [entry, category] : data_.gazetteer) {
        auto entry_tokens = text::tokenize(entry);
        if (entry_tokens.empty()) continue;
        for (std::size_t i = 0; i + entry_tokens.size() <= spans.size(); ++i) {
            bool ok = true;
            for (std::size_t k = 0; k < entry_tokens.size(); ++k) {
                if (!token_matches(spans[i + k].lower, entry_tokens[k],
                                   k + 1 == entry_tokens.size())) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            std::size_t b = spans[i].begin;
            std::size_t e = spans[i + entry_tokens.size() - 1].end;
            matches.push_back({b, e - b, sentence.substr(b, e - b), category});
        }
    }
    std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
        if (a.begin != b.begin) return a.begin < b.begin;
        if (a.length != b.length) return a.length > b.length;
        return a.surface < b.surface;
    });

    json entities = json::array();
    std::vector<std::pair<std::string, std::string>> seen;
    for (const auto& m : matches) {
        std::pair<std::string, std::string> key{m.surface, m.category};
        bool dup = false;
        for (const auto& s : seen) {
            if (s == key) {
                dup = true;
                break;
            }
        }
        if (dup) continue;
        seen.push_back(key);
        entities.push_back({{"name", m.surface}, {"category", m.category}});
    }
    return json{{"entities", entities}}.dump();
}

std::string StubProvider::answer_acronyms(const std::string& prompt) const {
    auto lines = prompt_lines(prompt);
    auto dict_lines = section_lines(lines, "Dictionary:");
    std::vector<std::string> names;
    for (const auto& l : dict_lines) {
        std::size_t pos = l.rfind(": ");
        names.push_back(pos == std::string::npos ? text::trim(l) : text::trim(l.substr(0, pos)));
    }

    auto initials_of = [](const std::string& name) {
        std::string initials;
        bool at_start = true;
        for (unsigned char c : name) {
            if (c == ' ' || c == '-') {
                at_start = true;
            } else {
                if (at_start && std::isalpha(c)) {
                    initials.push_back(static_cast<char>(std::toupper(c)));
                }
                at_start = false;
            }
        }
        return initials;
    };

    json subs = json::array();
    for (const auto& name : names) {
        if (!text::looks_like_acronym(name)) continue;
        std::string letters;
        for (unsigned char c : name) {
            if (std::isalpha(c)) letters.push_back(static_cast<char>(std::toupper(c)));
        }
        for (const auto& candidate : names) {
            if (candidate == name) continue;
            if (candidate.find(' ') == std::string::npos &&
                candidate.find('-') == std::string::npos) {
                continue;
            }
            if (initials_of(candidate) == letters) {
                subs.push_back({{"from", name}, {"to", candidate}});
                break;  // first (highest-ranked) expansion wins
            }
        }
    }
    return json{{"substitutions", subs}}.dump();
}

std::string StubProvider::answer_chemicals(const std::string& prompt) const {
    auto lines = prompt_lines(prompt);
    auto dict_lines = section_lines(lines, "Dictionary:");
    std::vector<std::string> names;
    for (const auto& l : dict_lines) {
        std::size_t pos = l.rfind(": ");
        names.push_back(text::to_lower(
            pos == std::string::npos ? text::trim(l) : text::trim(l.substr(0, pos))));
    }
    json subs = json::array();
    for (const auto& [from, to] : data_.chemicals) {
        for (const auto& n : names) {
            if (text::equals_ci(n, from)) {
                subs.push_back({{"from", n}, {"to", to}});
                break;
            }
        }
    }
    return json{{"substitutions", subs}}.dump();
}

std::string StubProvider::answer_relation(const std::string& prompt) const {
    auto lines = prompt_lines(prompt);
    std::string subject = line_value(lines, "Subject:");
    std::string object = line_value(lines, "Object:");
    std::string predicate = "co-occurs with";
    for (const auto& [pair, pred] : data_.relation_patterns) {
        if (text::equals_ci(pair.first, subject) && text::equals_ci(pair.second, object)) {
            predicate = pred;
            break;
        }
    }
    return json{{"subject", subject}, {"predicate", predicate}, {"object", object}}.dump();
}

std::string StubProvider::answer_cypher(const std::string& prompt) const {
    auto lines = prompt_lines(prompt);
    std::string question = line_value(lines, "Question:");
    std::string lower = text::to_lower(question);

    bool metadata = lower.find("most cited") != std::string::npos ||
                    lower.find("citation count") != std::string::npos ||
                    (lower.find("cited") != std::string::npos &&
                     lower.find("paper") != std::string::npos);

    if (metadata) {
        int year_min = 1000, year_max = 3000, limit = 3;
        bool have_min = false;
        std::regex number("[0-9]+");
        for (auto it = std::sregex_iterator(lower.begin(), lower.end(), number);
             it != std::sregex_iterator(); ++it) {
            long v = std::strtol(it->str().c_str(), nullptr, 10);
            if (it->str().size() == 4 && v >= 1000 && v <= 3000) {
                if (!have_min) {
                    year_min = static_cast<int>(v);
                    year_max = static_cast<int>(v);
                    have_min = true;
                } else {
                    year_min = std::min<int>(year_min, static_cast<int>(v));
                    year_max = std::max<int>(year_max, static_cast<int>(v));
                }
            } else if (v >= 1 && v <= 100) {
                limit = static_cast<int>(v);
            }
        }
        if (!have_min) {
            year_min = 1000;
            year_max = 3000;
        }
        std::string q = "MATCH (a:Abstract)-[:WAS_PUBLISHED_IN]->(t:TimeReference) WHERE t.name >= " +
                        std::to_string(year_min) + " AND t.name <= " + std::to_string(year_max) +
                        " RETURN a, a.name, a.citationCount ORDER BY a.citationCount DESC LIMIT " +
                        std::to_string(limit);
        return json{{"query", q}}.dump();
    }

    // Content question: full-text over the entities found in the question.
    auto spans = token_spans(question);
    std::vector<std::string> terms;
    for (const auto& [entry, category] : data_.gazetteer) {
        (void)category;
        auto entry_tokens = text::tokenize(entry);
        if (entry_tokens.empty()) continue;
        for (std::size_t i = 0; i + entry_tokens.size() <= spans.size(); ++i) {
            bool ok = true;
            for (std::size_t k = 0; k < entry_tokens.size(); ++k) {
                if (!token_matches(spans[i + k].lower, entry_tokens[k],
                                   k + 1 == entry_tokens.size())) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                if (std::find(terms.begin(), terms.end(), entry) == terms.end()) {
                    terms.push_back(entry);
                }
                break;
            }
        }
    }
    if (terms.empty()) {
        for (const auto& sp : spans) {
            if (!text::is_stopword(sp.lower) &&
                std::find(terms.begin(), terms.end(), sp.lower) == terms.end()) {
                terms.push_back(sp.lower);
            }
        }
    }
    std::string joined = join(terms, " ");
    replace_all(joined, "\"", "");
    std::string q = "CALL fulltext('sentences', \"" + joined +
                    "\") YIELD node, score RETURN node, score ORDER BY score DESC";
    return json{{"query", q}}.dump();
}

std::string StubProvider::answer_generation(const std::string& prompt) const {
    auto lines = prompt_lines(prompt);
    auto top = section_lines(lines, "Top sentences:");
    std::vector<std::string> picks;
    for (const auto& l : top) {
        if (picks.size() == 3) break;
        std::string body = strip_list_number(l);
        if (!text::trim(body).empty()) picks.push_back(text::trim(body));
    }
    if (!picks.empty()) return join(picks, " ");

    auto table = section_lines(lines, "Table:");
    if (!table.empty()) return join(table, "; ");
    return "No supporting context was provided.";
}

// ---------------------------------------------------------------------------
// HTTP provider

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config)) {}

std::string HttpProvider::complete(const std::string& prompt) {
    std::string endpoint = config_.endpoint;
    if (endpoint.rfind("http://", 0) != 0) {
        throw ProviderError("unsupported endpoint (http:// required): " + endpoint);
    }
    std::string rest = endpoint.substr(7);
    std::string path = "/";
    std::size_t slash = rest.find('/');
    if (slash != std::string::npos) {
        path = rest.substr(slash);
        rest = rest.substr(0, slash);
    }
    std::string host = rest;
    int port = 80;
    std::size_t colon = rest.rfind(':');
    if (colon != std::string::npos) {
        host = rest.substr(0, colon);
        port = std::atoi(rest.substr(colon + 1).c_str());
    }

    httplib::Client cli(host, port);
    cli.set_connection_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
    cli.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

    json body{{"model", config_.model_id},
              {"prompt", prompt},
              {"max_tokens", config_.max_tokens},
              {"temperature", config_.temperature}};
    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res) throw ProviderError("provider unreachable: " + config_.endpoint);
    if (res->status != 200) {
        throw ProviderError("provider returned status " + std::to_string(res->status));
    }

    json j = json::parse(res->body, nullptr, false);
    if (!j.is_discarded() && j.is_object()) {
        if (j.contains("text") && j["text"].is_string()) return j["text"].get<std::string>();
        if (j.contains("completion") && j["completion"].is_string()) {
            return j["completion"].get<std::string>();
        }
        if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
            const auto& c = j["choices"][0];
            if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
            if (c.contains("message") && c["message"].is_object() &&
                c["message"].contains("content")) {
                return c["message"]["content"].get<std::string>();
            }
        }
    }
    return res->body;
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<Provider> provider, ProviderConfig config, PromptLibrary library,
                 std::size_t token_budget)
    : provider_(std::move(provider)),
      config_(std::move(config)),
      library_(std::move(library)),
      token_budget_(token_budget) {}

RenderedPrompt Gateway::render(PromptKind kind, const PromptContext& ctx) const {
    return render_prompt(kind, ctx, library_, token_budget_);
}

std::string Gateway::complete(const std::string& prompt) {
    if (text::trim(prompt).empty()) throw ValidationError("empty prompt");
    int attempts = config_.max_retries + 1;
    std::chrono::milliseconds backoff(50);
    for (int i = 0; i < attempts; ++i) {
        try {
            return provider_->complete(prompt);
        } catch (const ProviderError&) {
            if (i + 1 == attempts) throw;
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw ProviderError("unreachable");
}

StructuredReply Gateway::ask(PromptKind kind, const PromptContext& ctx,
                             const std::vector<std::string>& known_categories) {
    RenderedPrompt prompt = render(kind, ctx);
    std::string raw = complete(prompt.text);
    StructuredReply reply = parse_reply(kind, raw, known_categories);
    unknown_category_tally_ += reply.unknown_categories;
    return reply;
}

std::string graph_schema_text() {
    return "Nodes: Abstract {name, text, url, citationCount}; Sentence {name, embeddings}; "
           "Entity {name, types, edges}; Person {name, types, edges}; "
           "TimeReference {name, types, edges}; KeyWord {name, types, edges}\n"
           "Relationships: HAS_FIRST_AUTHOR (Abstract -> Person); "
           "WAS_PUBLISHED_IN (Abstract -> TimeReference); "
           "HAS_KEYWORD (Abstract -> KeyWord); "
           "HAS_SENTENCE (Abstract -> Sentence); "
           "CONTAINS (Sentence -> Entity); "
           "CC (Entity -> Entity) with properties weight and optional text";
}

}  // namespace kg::llm
