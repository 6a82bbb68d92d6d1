#pragma once

#include <memory>
#include <string>
#include <vector>

#include "kg/embedding.hpp"
#include "kg/llm.hpp"
#include "kg/relations.hpp"

namespace kg::pipeline {

/// Everything a pipeline run needs: file locations, provider settings, and
/// the statistical thresholds. Loaded from an INI-style config file with
/// sections; command-line flags override individual fields.
struct PipelineConfig {
    // [paths]
    std::string corpus;
    std::string keywords;
    std::string gazetteer;
    std::string relation_patterns;
    std::string chemicals;
    std::string prompts;      // optional prompt template directory
    std::string manual_rules; // optional substitution rules to merge in
    std::string out_dir = "out";

    // [provider]
    std::string provider_name = "stub";
    llm::ProviderConfig provider;

    // [embedding]
    embedding::EmbeddingConfig embedding;

    // [thresholds]
    std::size_t dictionary_top = 500;
    int zipf_top = 500;
    relations::SelectionThresholds selection;
    std::size_t re_sentences = 6;

    // [run]
    std::vector<std::string> patterns;
    unsigned jobs = 1;
    unsigned long long seed = 7;
};

PipelineConfig load_config(const std::string& path);

/// Builds the configured gateway (stub providers need the stub data files).
std::unique_ptr<llm::Gateway> make_gateway(const PipelineConfig& config);
std::unique_ptr<embedding::Embedder> make_embedder(const PipelineConfig& config);

struct BuildOutputs {
    std::string mentions_path;
    std::string rules_path;
    std::string resolved_path;
    std::string graph_path;
    std::string stats_path;
};

/// ingest -> ner -> resolution -> graph; returns the paths written.
BuildOutputs run_build(const PipelineConfig& config);

/// Full command-line entry point (ingest, build, enrich, zipf, query, ask,
/// eval). Returns the process exit code: 0 ok, 1 stage/config error, 2 usage.
int run_cli(int argc, const char* const* argv);

}  // namespace kg::pipeline
