#include "kg/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "kg/common.hpp"
#include "kg/corpus.hpp"
#include "kg/cql.hpp"
#include "kg/evalkit.hpp"
#include "kg/graph.hpp"
#include "kg/ner.hpp"
#include "kg/rag.hpp"
#include "kg/resolution.hpp"
#include "kg/text.hpp"
#include "kg/zipf.hpp"

namespace kg::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class StageTimer {
public:
    explicit StageTimer(std::string name)
        : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start_)
                      .count();
        std::cerr << "[" << name_ << "] " << ms << " ms\n";
    }

private:
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = text::trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<std::string> load_keyword_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open keywords file: " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        line = text::trim(line);
        if (!line.empty() && line[0] != '#') out.push_back(line);
    }
    return out;
}

// Minimal INI reader: [section] headers, key=value lines, # comments.
std::map<std::string, std::string> read_ini(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string section;
    std::string line;
    while (std::getline(in, line)) {
        line = text::trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = text::trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("malformed config line: " + line);
        }
        std::string key = text::trim(line.substr(0, eq));
        std::string value = text::trim(line.substr(eq + 1));
        if (!value.empty() && value.front() == '"' && value.back() == '"' && value.size() > 1) {
            value = value.substr(1, value.size() - 2);
        }
        kv[section.empty() ? key : section + "." + key] = value;
    }
    return kv;
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
    auto kv = read_ini(path);
    PipelineConfig cfg;
    auto get = [&](const std::string& key, std::string& out) {
        auto it = kv.find(key);
        if (it != kv.end()) out = it->second;
    };
    auto get_ull = [&](const std::string& key, auto& out) {
        auto it = kv.find(key);
        if (it != kv.end()) out = static_cast<std::decay_t<decltype(out)>>(
                                 std::stoull(it->second));
    };
    auto get_double = [&](const std::string& key, double& out) {
        auto it = kv.find(key);
        if (it != kv.end()) out = std::stod(it->second);
    };

    get("paths.corpus", cfg.corpus);
    get("paths.keywords", cfg.keywords);
    get("paths.gazetteer", cfg.gazetteer);
    get("paths.relation_patterns", cfg.relation_patterns);
    get("paths.chemicals", cfg.chemicals);
    get("paths.prompts", cfg.prompts);
    get("paths.manual_rules", cfg.manual_rules);
    get("paths.out_dir", cfg.out_dir);

    get("provider.name", cfg.provider_name);
    get("provider.endpoint", cfg.provider.endpoint);
    get("provider.model_id", cfg.provider.model_id);
    get_ull("provider.max_tokens", cfg.provider.max_tokens);
    get_double("provider.temperature", cfg.provider.temperature);
    get("provider.api_key_env", cfg.provider.api_key_env);
    get_ull("provider.max_retries", cfg.provider.max_retries);

    get("embedding.provider", cfg.embedding.provider);
    get_ull("embedding.dimension", cfg.embedding.dimension);
    get_ull("embedding.seed", cfg.embedding.seed);

    get_ull("thresholds.dictionary_top", cfg.dictionary_top);
    get_ull("thresholds.zipf_top", cfg.zipf_top);
    get_double("thresholds.percentile", cfg.selection.weight_percentile);
    std::string spread;
    get("thresholds.degree_spread", spread);
    if (spread == "sigma") {
        cfg.selection.spread = relations::DegreeSpread::standard_deviation;
    } else if (spread == "sem" || spread.empty()) {
        cfg.selection.spread = relations::DegreeSpread::standard_error;
    } else {
        throw ConfigError("thresholds.degree_spread must be sem or sigma");
    }
    get_ull("thresholds.re_sentences", cfg.re_sentences);

    std::string patterns;
    get("run.patterns", patterns);
    if (!patterns.empty()) cfg.patterns = split_csv_list(patterns);
    get_ull("run.jobs", cfg.jobs);
    get_ull("run.seed", cfg.seed);
    return cfg;
}

std::unique_ptr<llm::Gateway> make_gateway(const PipelineConfig& config) {
    llm::PromptLibrary library = config.prompts.empty()
                                     ? llm::PromptLibrary()
                                     : llm::PromptLibrary::from_directory(config.prompts);
    std::shared_ptr<llm::Provider> provider;
    if (config.provider_name == "stub") {
        if (config.gazetteer.empty() || config.relation_patterns.empty() ||
            config.chemicals.empty()) {
            throw ConfigError(
                "stub provider needs gazetteer, relation_patterns, and chemicals paths");
        }
        provider = std::make_shared<llm::StubProvider>(llm::StubData::load(
            config.gazetteer, config.relation_patterns, config.chemicals));
    } else if (config.provider_name == "http") {
        if (config.provider.endpoint.empty()) {
            throw ConfigError("http provider needs provider.endpoint");
        }
        provider = std::make_shared<llm::HttpProvider>(config.provider);
    } else {
        throw ConfigError("unknown provider: " + config.provider_name);
    }
    return std::make_unique<llm::Gateway>(provider, config.provider, library);
}

std::unique_ptr<embedding::Embedder> make_embedder(const PipelineConfig& config) {
    return embedding::make_embedder(config.embedding);
}

namespace {

struct IngestResult {
    std::vector<corpus::AbstractRecord> records;
    corpus::CorpusStats stats;
};

IngestResult run_ingest_stage(const PipelineConfig& cfg, llm::Gateway& gateway) {
    StageTimer timer("ingest");
    if (cfg.corpus.empty()) throw ConfigError("no corpus path configured");
    auto loaded = corpus::load_corpus(cfg.corpus);
    for (const auto& err : loaded.record_errors) std::cerr << "corpus: " << err << "\n";

    std::vector<corpus::AbstractRecord> records = std::move(loaded.records);
    if (!cfg.patterns.empty()) records = corpus::scope_by_title(records, cfg.patterns);

    if (!cfg.keywords.empty()) {
        auto keywords = load_keyword_file(cfg.keywords);
        std::vector<corpus::AbstractRecord> kept;
        for (const auto& r : records) {
            if (corpus::validate_relevance(r, keywords, gateway)) kept.push_back(r);
        }
        records = std::move(kept);
    }

    IngestResult result;
    result.stats = corpus::compute_stats(records, cfg.patterns);
    result.records = std::move(records);
    return result;
}

json stats_to_json(const corpus::CorpusStats& stats) {
    json patterns = json::object();
    for (const auto& [pattern, count] : stats.per_pattern_counts) patterns[pattern] = count;
    return json{{"n_abstracts", stats.n_abstracts},
                {"total_words", stats.total_words},
                {"year_min", stats.year_min},
                {"year_max", stats.year_max},
                {"per_pattern_counts", patterns}};
}

}  // namespace

BuildOutputs run_build(const PipelineConfig& cfg) {
    auto gateway = make_gateway(cfg);
    auto embedder = make_embedder(cfg);
    fs::create_directories(cfg.out_dir);

    auto ingest = run_ingest_stage(cfg, *gateway);

    // Sentence splitting, in record order.
    std::vector<corpus::SentenceUnit> sentences;
    {
        StageTimer timer("split");
        for (const auto& r : ingest.records) {
            auto units = corpus::split_sentences(r.id, r.text);
            sentences.insert(sentences.end(), units.begin(), units.end());
        }
    }

    // NER, parallel per sentence with deterministic join order.
    std::vector<ner::EntityMention> mentions;
    {
        StageTimer timer("ner");
        auto per_sentence = parallel_map<std::vector<ner::EntityMention>>(
            sentences.size(), cfg.jobs, [&](std::size_t i) {
                return ner::extract_entities(sentences[i], *gateway);
            });
        for (auto& batch : per_sentence) {
            mentions.insert(mentions.end(), batch.begin(), batch.end());
        }
    }

    BuildOutputs outputs;
    outputs.mentions_path = (fs::path(cfg.out_dir) / "mentions.jsonl").string();
    ner::save_mentions(mentions, outputs.mentions_path);

    // Resolution: normalize, build the substitution list, apply.
    std::vector<resolution::ResolvedEntity> entities;
    std::vector<resolution::SubstitutionRule> rules;
    {
        StageTimer timer("resolution");
        std::map<std::pair<std::string, int>, const corpus::SentenceUnit*> sentence_index;
        for (const auto& s : sentences) sentence_index[{s.abstract_id, s.index}] = &s;

        std::vector<resolution::NormalizedMention> normalized;
        for (const auto& m : mentions) {
            auto it = sentence_index.find({m.abstract_id, m.sentence_index});
            if (it == sentence_index.end()) continue;
            auto canonical = resolution::normalize_surface(m.surface, it->second->text);
            if (!canonical) continue;
            normalized.push_back({*canonical, m.category, {m.abstract_id, m.sentence_index}});
        }

        std::map<std::string, long long> counts;
        for (const auto& n : normalized) counts[n.normalized] += 1;
        std::vector<std::pair<std::string, long long>> ranked(counts.begin(), counts.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });

        if (!ranked.empty()) {
            auto corpus_contains = [&](const std::string& needle) {
                for (const auto& r : ingest.records) {
                    if (text::contains_ci(r.text, needle)) return true;
                }
                return false;
            };
            rules = resolution::build_substitutions(ranked, *gateway, corpus_contains,
                                                    cfg.dictionary_top);
        }
        if (!cfg.manual_rules.empty()) {
            rules = resolution::merge_rules(resolution::load_rules(cfg.manual_rules), rules);
        }
        entities = resolution::apply_substitutions(normalized, rules);
    }

    outputs.rules_path = (fs::path(cfg.out_dir) / "rules.jsonl").string();
    resolution::save_rules(rules, outputs.rules_path);
    outputs.resolved_path = (fs::path(cfg.out_dir) / "resolved.jsonl").string();
    resolution::save_entities(entities, outputs.resolved_path);

    {
        StageTimer timer("graph");
        graph::BuildInput input{ingest.records, sentences, entities};
        auto g = graph::build_graph(input, *embedder);
        outputs.graph_path = (fs::path(cfg.out_dir) / "graph.jsonl").string();
        g.persist(outputs.graph_path);
    }

    outputs.stats_path = (fs::path(cfg.out_dir) / "stats.json").string();
    {
        std::ofstream out(outputs.stats_path);
        out << stats_to_json(ingest.stats).dump(2) << "\n";
    }
    return outputs;
}

namespace {

int run_ingest_cmd(const PipelineConfig& cfg, const std::string& scoped_out) {
    auto gateway = make_gateway(cfg);
    auto result = run_ingest_stage(cfg, *gateway);
    if (!scoped_out.empty()) corpus::save_corpus(result.records, scoped_out);
    std::cout << stats_to_json(result.stats).dump(2) << "\n";
    return 0;
}

int run_enrich_cmd(const PipelineConfig& cfg, const std::string& graph_path,
                   const std::string& out_path, const std::string& triplets_path) {
    auto gateway = make_gateway(cfg);
    auto embedder = make_embedder(cfg);

    auto g = graph::PropertyGraph::load(graph_path);
    g.build_fulltext_index();
    {
        StageTimer timer("cc");
        relations::build_cc_edges(g);
    }
    relations::EnrichmentReport report;
    {
        StageTimer timer("enrich");
        report = relations::enrich(g, *gateway, *embedder, cfg.selection, cfg.re_sentences);
    }
    g.persist(out_path.empty() ? graph_path : out_path);
    if (!triplets_path.empty()) relations::save_triplets(report.triplets, g, triplets_path);
    std::cerr << "enrich: " << report.triplets.size() << " triplets, " << report.skipped
              << " skipped\n";
    return 0;
}

int run_zipf_cmd(const std::string& before_path, const std::string& after_path, int top,
                 const std::string& out_csv) {
    auto mentions = ner::load_mentions(before_path);
    std::map<std::string, long long> before_counts;
    for (const auto& m : mentions) before_counts[m.surface] += 1;

    auto entities = resolution::load_entities(after_path);
    std::map<std::string, long long> after_counts;
    for (const auto& e : entities) after_counts[e.canonical] += e.mention_count;

    auto before = zipf::rank_frequencies(
        {before_counts.begin(), before_counts.end()}, top, true);
    auto after = zipf::rank_frequencies({after_counts.begin(), after_counts.end()}, top, true);
    auto cmp = zipf::zipf_report(before, after, out_csv);
    std::cout << json{{"C_before", cmp.before.c},
                      {"chi2_before", cmp.before.chi2_norm},
                      {"C_after", cmp.after.c},
                      {"chi2_after", cmp.after.chi2_norm}}
                     .dump(2)
              << "\n";
    return 0;
}

int run_query_cmd(const std::string& graph_path, const std::string& query_text) {
    auto g = graph::PropertyGraph::load(graph_path);
    g.build_fulltext_index();
    auto ast = cql::parse(query_text);
    cql::validate(ast);
    std::cout << cql::to_csv(cql::execute(ast, g));
    return 0;
}

int run_ask_cmd(const PipelineConfig& cfg, const std::string& graph_path, int k,
                const std::string& question, bool as_json) {
    auto gateway = make_gateway(cfg);
    auto embedder = make_embedder(cfg);
    auto g = graph::PropertyGraph::load(graph_path);
    g.build_fulltext_index();

    rag::RetrievalRequest request{question, k};
    auto outcome = rag::retrieve_detailed(request, g, *gateway, *embedder);
    auto answer = rag::answer(request, g, *gateway, *embedder);

    if (as_json) {
        json sources = json::array();
        for (const auto& s : answer.sources) {
            sources.push_back({{"title", s.title}, {"url", s.url}});
        }
        json triplets = json::array();
        for (const auto& t : answer.triplets_used) {
            triplets.push_back(
                {{"subject", t.subject}, {"predicate", t.predicate}, {"object", t.object}});
        }
        json hits = json::array();
        for (const auto& h : outcome.hits) {
            const auto& props = g.node(h.abstract_id).props;
            auto it = props.find("id");
            hits.push_back({{"abstract_id",
                             it != props.end() ? it->second.display()
                                               : std::to_string(h.abstract_id)},
                            {"score", h.score}});
        }
        std::cout << json{{"answer", answer.text},
                          {"sources", sources},
                          {"triplets", triplets},
                          {"hits", hits}}
                         .dump(2)
                  << "\n";
    } else {
        std::cout << answer.text << "\n";
        if (!answer.sources.empty()) {
            std::cout << "\nSources:\n";
            for (std::size_t i = 0; i < answer.sources.size(); ++i) {
                std::cout << "  [" << i + 1 << "] " << answer.sources[i].title << " — "
                          << answer.sources[i].url << "\n";
            }
        }
    }
    return 0;
}

int run_eval_cmd(const PipelineConfig& cfg, const std::string& graph_path,
                 const std::string& cases_spec, int k, const std::string& out_path) {
    auto gateway = make_gateway(cfg);
    auto embedder = make_embedder(cfg);
    auto g = graph::PropertyGraph::load(graph_path);
    g.build_fulltext_index();

    std::vector<evalkit::EvalCase> cases;
    if (cases_spec == "auto:expert") {
        cases = evalkit::make_cases_from_graph(g, evalkit::CaseMode::expert, cfg.seed);
    } else if (cases_spec == "auto:persona") {
        cases = evalkit::make_cases_from_graph(g, evalkit::CaseMode::persona, cfg.seed);
    } else {
        cases = evalkit::load_cases(cases_spec);
    }

    auto report = evalkit::run_eval(cases, g, k, *gateway, *embedder);
    for (const auto& err : report.case_errors) std::cerr << "eval: " << err << "\n";
    if (!out_path.empty()) evalkit::save_report(report, out_path);
    std::cout << "cases=" << report.n_cases
              << " top1=" << (report.top1_rate ? std::to_string(*report.top1_rate) : "n/a")
              << " topk=" << (report.topk_rate ? std::to_string(*report.topk_rate) : "n/a")
              << "\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Knowledge-graph construction and KG-RAG query tool"};
    app.require_subcommand(1);

    std::string config_path;
    std::string corpus_path;
    std::string patterns;
    std::string keywords_path;
    std::string provider_name;
    std::string out_dir;
    std::string graph_path;
    std::string out_path;
    std::string triplets_path;
    std::string question;
    std::string query_text;
    std::string cases_spec;
    std::string before_path;
    std::string after_path;
    int k = 3;
    int top = 500;
    bool as_json = false;
    unsigned jobs = 0;
    unsigned long long seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Config file (INI sections)");
        cmd->add_option("--provider", provider_name, "Provider: stub or http");
        cmd->add_option("--jobs", jobs, "Parallel workers for provider fan-out");
    };

    auto* ingest = app.add_subcommand("ingest", "Load, scope, and validate a corpus");
    add_common(ingest);
    ingest->add_option("--corpus", corpus_path, "Corpus JSON Lines file");
    ingest->add_option("--patterns", patterns, "Comma-separated title patterns");
    ingest->add_option("--keywords", keywords_path, "Domain keywords file");
    ingest->add_option("--out", out_path, "Write the scoped corpus here");

    auto* build = app.add_subcommand("build", "Run ingest, NER, resolution, and graph build");
    add_common(build);
    build->add_option("--corpus", corpus_path, "Corpus JSON Lines file");
    build->add_option("--patterns", patterns, "Comma-separated title patterns");
    build->add_option("--keywords", keywords_path, "Domain keywords file");
    build->add_option("--out-dir", out_dir, "Output directory");

    auto* enrich = app.add_subcommand("enrich", "Build CC edges and extract semantic relations");
    add_common(enrich);
    enrich->add_option("--graph", graph_path, "Graph snapshot")->required();
    enrich->add_option("--out", out_path, "Enriched snapshot path (default: in place)");
    enrich->add_option("--triplets", triplets_path, "Triplets report path");

    auto* zipf_cmd = app.add_subcommand("zipf", "Rank-frequency fit before/after resolution");
    zipf_cmd->add_option("--before", before_path, "Mentions JSON Lines")->required();
    zipf_cmd->add_option("--after", after_path, "Resolved entities JSON Lines")->required();
    zipf_cmd->add_option("--top", top, "Window size");
    zipf_cmd->add_option("--out", out_path, "CSV output path");

    auto* query = app.add_subcommand("query", "Run a CQL-S query against a graph");
    query->add_option("--graph", graph_path, "Graph snapshot")->required();
    query->add_option("--cypher", query_text, "Query text")->required();

    auto* ask = app.add_subcommand("ask", "Grounded question answering");
    add_common(ask);
    ask->add_option("--graph", graph_path, "Graph snapshot")->required();
    ask->add_option("--k", k, "Documents to retrieve");
    ask->add_option("--question", question, "Question text")->required();
    ask->add_flag("--json", as_json, "Emit JSON output");

    auto* eval = app.add_subcommand("eval", "Retrieval evaluation");
    add_common(eval);
    eval->add_option("--graph", graph_path, "Graph snapshot")->required();
    eval->add_option("--cases", cases_spec, "Cases file or auto:expert / auto:persona")
        ->required();
    eval->add_option("--k", k, "Documents to retrieve");
    eval->add_option("--out", out_path, "Report path");
    eval->add_option("--seed", seed, "Case generator seed")->each([&](const std::string&) {
        seed_set = true;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (!corpus_path.empty()) cfg.corpus = corpus_path;
        if (!patterns.empty()) cfg.patterns = split_csv_list(patterns);
        if (!keywords_path.empty()) cfg.keywords = keywords_path;
        if (!provider_name.empty()) cfg.provider_name = provider_name;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (jobs > 0) cfg.jobs = jobs;
        if (seed_set) cfg.seed = seed;

        if (app.got_subcommand(ingest)) return run_ingest_cmd(cfg, out_path);
        if (app.got_subcommand(build)) {
            auto outputs = run_build(cfg);
            std::cerr << "build: graph written to " << outputs.graph_path << "\n";
            return 0;
        }
        if (app.got_subcommand(enrich)) {
            return run_enrich_cmd(cfg, graph_path, out_path, triplets_path);
        }
        if (app.got_subcommand(zipf_cmd)) {
            return run_zipf_cmd(before_path, after_path, top, out_path);
        }
        if (app.got_subcommand(query)) return run_query_cmd(graph_path, query_text);
        if (app.got_subcommand(ask)) return run_ask_cmd(cfg, graph_path, k, question, as_json);
        if (app.got_subcommand(eval)) return run_eval_cmd(cfg, graph_path, cases_spec, k, out_path);
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace kg::pipeline
