#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kg/embedding.hpp"
#include "kg/graph.hpp"

namespace kg::llm {
class Gateway;
}

namespace kg::evalkit {

struct EvalCase {
    std::string question;
    std::string gold_abstract_id;  // corpus record id stored on the Abstract node
    std::string persona_tag;
};

struct EvalRow {
    std::string question;
    std::string gold;
    std::vector<std::string> retrieved;  // abstract record ids in rank order
    int gold_rank = -1;                  // 1-based, -1 = MISS
};

struct EvalReport {
    std::size_t n_cases = 0;
    std::optional<double> top1_rate;
    std::optional<double> topk_rate;
    std::vector<EvalRow> rows;
    std::vector<std::string> case_errors;
};

/// Runs retrieval for every case and records where the gold abstract landed.
/// Cases whose gold id is absent from the graph are excluded from the rates
/// and reported in case_errors.
EvalReport run_eval(const std::vector<EvalCase>& cases, const graph::PropertyGraph& g, int k,
                    llm::Gateway& gateway, embedding::Embedder& embedder);

enum class CaseMode { expert, persona };

/// Builds one case per abstract. Expert mode quotes the abstract's most
/// distinctive sentence through a fixed template; persona mode degrades the
/// expert question deterministically (typos, filler, truncation) while
/// keeping at least 60% of its content tokens.
std::vector<EvalCase> make_cases_from_graph(const graph::PropertyGraph& g, CaseMode mode,
                                            unsigned long long seed);

void save_report(const EvalReport& report, const std::string& path);
std::vector<EvalCase> load_cases(const std::string& path);

}  // namespace kg::evalkit
