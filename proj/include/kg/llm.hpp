#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kg::llm {

enum class PromptKind {
    RelevanceCheck,
    Ner,
    AcronymResolution,
    ChemicalStandardization,
    RelationExtraction,
    CypherGeneration,
    AnswerGeneration,
};

const std::vector<PromptKind>& all_prompt_kinds();
std::string to_string(PromptKind kind);

struct ProviderConfig {
    std::string endpoint;
    std::string model_id;
    int max_tokens = 1024;
    double temperature = 0.0;
    std::string api_key_env;
    int max_retries = 3;
    int timeout_ms = 30000;
};

/// Kind-specific inputs for a prompt. Only the fields a kind needs are
/// consulted; render_prompt errors on a missing required field.
struct PromptContext {
    std::string sentence;                  // Ner
    std::vector<std::string> categories;   // Ner
    std::string title;                     // RelevanceCheck
    std::string text;                      // RelevanceCheck
    std::vector<std::string> keywords;     // RelevanceCheck
    std::vector<std::pair<std::string, long long>> dictionary;  // Acronym/Chemical
    std::string subject;                   // RelationExtraction
    std::string object;                    // RelationExtraction
    std::vector<std::string> sentences;    // RelationExtraction, AnswerGeneration
    std::string question;                  // CypherGeneration, AnswerGeneration
    std::string schema_text;               // CypherGeneration
    std::vector<std::string> documents;    // AnswerGeneration ("title :: text")
    std::vector<std::string> triplets;     // AnswerGeneration ("s | p | o")
    std::vector<std::string> table_rows;   // AnswerGeneration metadata rows
};

struct RenderedPrompt {
    std::string text;
    bool truncated = false;
};

struct StructuredReply {
    PromptKind kind = PromptKind::AnswerGeneration;
    bool yes = false;                                            // RelevanceCheck
    std::vector<std::pair<std::string, std::string>> entities;   // Ner (surface, category)
    std::vector<std::pair<std::string, std::string>> substitutions;  // from -> to
    std::string subject;                                         // RelationExtraction
    std::string predicate;
    std::string object;
    std::string text;  // CypherGeneration query text / AnswerGeneration free text
    int unknown_categories = 0;  // Ner diagnostics
};

/// Prompt templates, keyed by kind. Defaults are compiled in; a directory of
/// <kind>.txt files can override them so templates stay editable data.
class PromptLibrary {
public:
    PromptLibrary();
    static PromptLibrary from_directory(const std::string& dir);
    const std::string& get(PromptKind kind) const;
    static std::string default_template(PromptKind kind);

private:
    std::map<PromptKind, std::string> templates_;
};

/// Pure template expansion; byte-identical for identical inputs. Kinds other
/// than AnswerGeneration are held under token_budget by dropping the oldest
/// entries of the kind's bulk list (dictionary or sentences) from the front.
RenderedPrompt render_prompt(PromptKind kind, const PromptContext& ctx, const PromptLibrary& lib,
                             std::size_t token_budget = 4096);

/// Extracts the structured payload from a provider reply: the first JSON
/// object found in the text, under the kind's reply schema. Ner categories
/// not in known_categories map to "Concept" and are tallied.
StructuredReply parse_reply(PromptKind kind, const std::string& raw,
                            const std::vector<std::string>& known_categories = {});

class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string complete(const std::string& prompt) = 0;
    virtual std::string id() const = 0;
};

struct StubData {
    // surface -> category, matched case-insensitively with plural tolerance
    std::vector<std::pair<std::string, std::string>> gazetteer;
    // (subject, object) -> predicate for RelationExtraction
    std::vector<std::pair<std::pair<std::string, std::string>, std::string>> relation_patterns;
    // chemical formula -> standard name, applied when the formula is in the dictionary
    std::vector<std::pair<std::string, std::string>> chemicals;

    static StubData load(const std::string& gazetteer_path, const std::string& patterns_path,
                         const std::string& chemicals_path);
};

/// Deterministic offline provider. Reads the structured sections of the
/// rendered prompt and answers by fixed rules, so the whole pipeline runs
/// bit-reproducibly without a model.
class StubProvider : public Provider {
public:
    explicit StubProvider(StubData data);
    std::string complete(const std::string& prompt) override;
    std::string id() const override { return "stub"; }

private:
    std::string answer_relevance(const std::string& prompt) const;
    std::string answer_ner(const std::string& prompt) const;
    std::string answer_acronyms(const std::string& prompt) const;
    std::string answer_chemicals(const std::string& prompt) const;
    std::string answer_relation(const std::string& prompt) const;
    std::string answer_cypher(const std::string& prompt) const;
    std::string answer_generation(const std::string& prompt) const;

    StubData data_;
};

/// POSTs {model, prompt, max_tokens, temperature} to the configured endpoint
/// and returns the reply text ("text", "completion", or OpenAI-style choices).
class HttpProvider : public Provider {
public:
    explicit HttpProvider(ProviderConfig config);
    std::string complete(const std::string& prompt) override;
    std::string id() const override { return "http:" + config_.model_id; }

private:
    ProviderConfig config_;
};

/// Front door for all LLM calls: owns the provider, templates, retry policy,
/// and the diagnostics tally for unknown NER categories.
class Gateway {
public:
    Gateway(std::shared_ptr<Provider> provider, ProviderConfig config,
            PromptLibrary library = PromptLibrary(), std::size_t token_budget = 4096);

    RenderedPrompt render(PromptKind kind, const PromptContext& ctx) const;

    /// Retries transient provider failures with exponential backoff up to
    /// config.max_retries; empty prompts are rejected before dispatch.
    std::string complete(const std::string& prompt);

    StructuredReply ask(PromptKind kind, const PromptContext& ctx,
                        const std::vector<std::string>& known_categories = {});

    int unknown_category_tally() const { return unknown_category_tally_; }
    const ProviderConfig& config() const { return config_; }
    Provider& provider() { return *provider_; }

private:
    std::shared_ptr<Provider> provider_;
    ProviderConfig config_;
    PromptLibrary library_;
    std::size_t token_budget_;
    int unknown_category_tally_ = 0;
};

/// Schema summary embedded in CypherGeneration prompts; names all six
/// relationship types with their endpoint labels.
std::string graph_schema_text();

}  // namespace kg::llm
