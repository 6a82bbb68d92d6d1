#include "kg/evalkit.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "kg/common.hpp"
#include "kg/llm.hpp"
#include "kg/rag.hpp"
#include "kg/text.hpp"

namespace kg::evalkit {

namespace {

using graph::NodeLabel;
using nlohmann::json;

std::string abstract_record_id(const graph::PropertyGraph& g, long long node_id) {
    const auto& props = g.node(node_id).props;
    auto it = props.find("id");
    return it != props.end() ? it->second.display() : std::to_string(node_id);
}

std::vector<long long> sentences_of(const graph::PropertyGraph& g, long long abstract_id) {
    std::vector<long long> out;
    for (std::size_t e : g.out_edges(abstract_id)) {
        if (g.edges()[e].type == graph::EdgeType::HAS_SENTENCE) out.push_back(g.edges()[e].end);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

EvalReport run_eval(const std::vector<EvalCase>& cases, const graph::PropertyGraph& g, int k,
                    llm::Gateway& gateway, embedding::Embedder& embedder) {
    EvalReport report;
    report.n_cases = cases.size();

    std::map<std::string, long long> gold_index;
    for (long long id : g.nodes_with_label(NodeLabel::Abstract)) {
        gold_index[abstract_record_id(g, id)] = id;
    }

    std::size_t evaluated = 0;
    std::size_t top1 = 0;
    std::size_t topk = 0;
    for (const auto& c : cases) {
        auto gold_it = gold_index.find(c.gold_abstract_id);
        if (gold_it == gold_index.end()) {
            report.case_errors.push_back("gold abstract not in graph: " + c.gold_abstract_id);
            continue;
        }
        rag::RetrievalRequest request{c.question, k};
        auto hits = rag::retrieve(request, g, gateway, embedder);

        // Distinct abstracts in first-hit order; rank of gold within it.
        std::vector<long long> order;
        std::set<long long> seen;
        for (const auto& hit : hits) {
            if (hit.abstract_id >= 0 && seen.insert(hit.abstract_id).second) {
                order.push_back(hit.abstract_id);
            }
        }
        EvalRow row;
        row.question = c.question;
        row.gold = c.gold_abstract_id;
        for (std::size_t i = 0; i < order.size() && i < static_cast<std::size_t>(k); ++i) {
            row.retrieved.push_back(abstract_record_id(g, order[i]));
        }
        row.gold_rank = -1;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (order[i] == gold_it->second) {
                row.gold_rank = static_cast<int>(i) + 1;
                break;
            }
        }
        ++evaluated;
        if (row.gold_rank == 1) ++top1;
        if (row.gold_rank >= 1 && row.gold_rank <= k) ++topk;
        report.rows.push_back(std::move(row));
    }

    if (evaluated > 0) {
        report.top1_rate = static_cast<double>(top1) / static_cast<double>(evaluated);
        report.topk_rate = static_cast<double>(topk) / static_cast<double>(evaluated);
    }
    return report;
}

std::vector<EvalCase> make_cases_from_graph(const graph::PropertyGraph& g, CaseMode mode,
                                            unsigned long long seed) {
    // Sentence-level document frequencies give a distinctiveness score.
    std::map<std::string, int> df;
    std::size_t n_sentences = 0;
    for (long long sid : g.nodes_with_label(NodeLabel::Sentence)) {
        ++n_sentences;
        std::set<std::string> uniq;
        for (const auto& tok : text::tokenize(g.node(sid).props.at("name").display())) {
            uniq.insert(tok);
        }
        for (const auto& tok : uniq) df[tok] += 1;
    }

    std::mt19937_64 rng(seed);
    std::vector<EvalCase> cases;
    for (long long aid : g.nodes_with_label(NodeLabel::Abstract)) {
        auto sentences = sentences_of(g, aid);
        if (sentences.empty()) continue;

        long long best = sentences.front();
        double best_score = -1.0;
        for (long long sid : sentences) {
            double score = 0.0;
            std::set<std::string> uniq;
            for (const auto& tok : text::tokenize(g.node(sid).props.at("name").display())) {
                uniq.insert(tok);
            }
            for (const auto& tok : uniq) {
                score += std::log(1.0 + static_cast<double>(n_sentences) /
                                            static_cast<double>(df.at(tok)));
            }
            if (score > best_score) {
                best_score = score;
                best = sid;
            }
        }

        std::string sentence = g.node(best).props.at("name").display();
        EvalCase c;
        c.gold_abstract_id = abstract_record_id(g, aid);
        c.question = "What is known about the following: " + sentence;

        if (mode == CaseMode::persona) {
            c.persona_tag = "persona";
            auto words = text::split_whitespace(c.question);
            std::size_t n_content = 0;
            for (const auto& w : words) {
                if (!text::is_stopword(text::to_lower(w))) ++n_content;
            }
            // Keep at least 60% of content tokens intact across typos and truncation.
            std::size_t budget = n_content * 2 / 5;
            std::size_t mutated = 0;

            for (auto& w : words) {
                if (mutated >= budget) break;
                if (w.size() >= 4 && !text::is_stopword(text::to_lower(w)) && rng() % 5 == 0) {
                    std::size_t i = 1 + rng() % (w.size() - 2);
                    std::swap(w[i], w[i + 1]);
                    ++mutated;
                }
            }
            if (rng() % 3 == 0 && mutated < budget) {
                std::size_t drop = std::min(words.size() / 5, budget - mutated);
                for (std::size_t i = 0; i < drop && words.size() > 3; ++i) words.pop_back();
            }
            static const std::vector<std::string> fillers = {"hey,", "um,", "so like,",
                                                             "quick question:"};
            std::string rebuilt = fillers[rng() % fillers.size()];
            for (const auto& w : words) rebuilt += " " + w;
            c.question = rebuilt;
        }
        cases.push_back(std::move(c));
    }
    return cases;
}

void save_report(const EvalReport& report, const std::string& path) {
    json rows = json::array();
    for (const auto& row : report.rows) {
        rows.push_back({{"question", row.question},
                        {"gold", row.gold},
                        {"retrieved", row.retrieved},
                        {"gold_rank", row.gold_rank == -1 ? json("MISS") : json(row.gold_rank)}});
    }
    json j{{"n_cases", report.n_cases},
           {"top1_rate", report.top1_rate ? json(*report.top1_rate) : json(nullptr)},
           {"topk_rate", report.topk_rate ? json(*report.topk_rate) : json(nullptr)},
           {"rows", rows},
           {"case_errors", report.case_errors}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write eval report: " + path);
    out << j.dump(2) << "\n";
}

std::vector<EvalCase> load_cases(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cases file: " + path);
    std::vector<EvalCase> cases;
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw IoError("malformed cases line in " + path);
        EvalCase c;
        c.question = j.at("question").get<std::string>();
        c.gold_abstract_id = j.at("gold_abstract_id").get<std::string>();
        c.persona_tag = j.value("persona_tag", "");
        cases.push_back(std::move(c));
    }
    return cases;
}

}  // namespace kg::evalkit
