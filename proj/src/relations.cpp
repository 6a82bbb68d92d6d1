#include "kg/relations.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "kg/common.hpp"
#include "kg/llm.hpp"

namespace kg::relations {

namespace {

using graph::EdgeType;
using graph::NodeLabel;

std::vector<long long> entities_in_sentence(const graph::PropertyGraph& g, long long sentence_id) {
    std::vector<long long> out;
    for (std::size_t e : g.out_edges(sentence_id)) {
        if (g.edges()[e].type == EdgeType::CONTAINS) out.push_back(g.edges()[e].end);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<long long> shared_sentences(const graph::PropertyGraph& g, long long a, long long b) {
    std::set<long long> sa;
    for (std::size_t e : g.in_edges(a)) {
        if (g.edges()[e].type == EdgeType::CONTAINS) sa.insert(g.edges()[e].start);
    }
    std::vector<long long> both;
    for (std::size_t e : g.in_edges(b)) {
        if (g.edges()[e].type == EdgeType::CONTAINS && sa.count(g.edges()[e].start)) {
            both.push_back(g.edges()[e].start);
        }
    }
    std::sort(both.begin(), both.end());
    both.erase(std::unique(both.begin(), both.end()), both.end());
    return both;
}

}  // namespace

std::size_t build_cc_edges(graph::PropertyGraph& g) {
    std::map<std::pair<long long, long long>, long long> weights;
    for (long long sid : g.nodes_with_label(NodeLabel::Sentence)) {
        auto entities = entities_in_sentence(g, sid);
        for (std::size_t i = 0; i < entities.size(); ++i) {
            for (std::size_t j = i + 1; j < entities.size(); ++j) {
                weights[{entities[i], entities[j]}] += 1;
            }
        }
    }
    for (const auto& [pair, weight] : weights) {
        g.add_cc_edge(pair.first, pair.second, weight);
    }
    g.recompute_degrees();
    return weights.size();
}

std::vector<PairCandidate> select_semantic_candidates(const graph::PropertyGraph& g,
                                                      const SelectionThresholds& thresholds) {
    auto entity_ids = g.nodes_with_label(NodeLabel::Entity);
    if (entity_ids.size() < 2) return {};

    std::vector<long long> cc_weights;
    for (const auto& e : g.edges()) {
        if (e.type == EdgeType::CC) cc_weights.push_back(e.weight);
    }
    if (cc_weights.empty()) return {};

    // Nearest-rank percentile over all CC weights.
    std::sort(cc_weights.begin(), cc_weights.end());
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(thresholds.weight_percentile / 100.0 * static_cast<double>(cc_weights.size())));
    if (rank < 1) rank = 1;
    if (rank > cc_weights.size()) rank = cc_weights.size();
    long long weight_cut = cc_weights[rank - 1];

    // Degree statistics over Entity nodes.
    std::map<long long, long long> degree;
    for (long long id : entity_ids) degree[id] = 0;
    for (const auto& e : g.edges()) {
        if (e.type != EdgeType::CC) continue;
        degree[e.start] += 1;
        degree[e.end] += 1;
    }
    double n = static_cast<double>(entity_ids.size());
    double mean = 0.0;
    for (long long id : entity_ids) mean += static_cast<double>(degree[id]);
    mean /= n;
    double var = 0.0;
    for (long long id : entity_ids) {
        double d = static_cast<double>(degree[id]) - mean;
        var += d * d;
    }
    var /= n;
    double spread = std::sqrt(var);
    if (thresholds.spread == DegreeSpread::standard_error) spread /= std::sqrt(n);
    double degree_cut = mean + thresholds.sigmas * spread;

    std::vector<PairCandidate> out;
    for (const auto& e : g.edges()) {
        if (e.type != EdgeType::CC || e.weight < weight_cut) continue;
        bool start_hub = static_cast<double>(degree[e.start]) > degree_cut;
        bool end_hub = static_cast<double>(degree[e.end]) > degree_cut;
        if (!start_hub && !end_hub) continue;
        // The recurrent node is the qualifying endpoint; when both qualify,
        // the higher-degree one (ties to the lower id).
        long long n_node, p_node;
        if (start_hub && end_hub) {
            if (degree[e.start] != degree[e.end]) {
                n_node = degree[e.start] > degree[e.end] ? e.start : e.end;
            } else {
                n_node = std::min(e.start, e.end);
            }
            p_node = n_node == e.start ? e.end : e.start;
        } else if (start_hub) {
            n_node = e.start;
            p_node = e.end;
        } else {
            n_node = e.end;
            p_node = e.start;
        }
        out.push_back({n_node, p_node, e.weight});
    }
    std::sort(out.begin(), out.end(), [](const PairCandidate& a, const PairCandidate& b) {
        if (a.cc_weight != b.cc_weight) return a.cc_weight > b.cc_weight;
        if (a.n != b.n) return a.n < b.n;
        return a.p < b.p;
    });
    return out;
}

std::vector<long long> top_sentences_for_pair(const graph::PropertyGraph& g,
                                              const PairCandidate& pair,
                                              embedding::Embedder& embedder, std::size_t k) {
    auto shared = shared_sentences(g, pair.n, pair.p);
    if (shared.empty()) return {};

    std::string pair_text = g.node(pair.n).props.at("name").display() + " " +
                            g.node(pair.p).props.at("name").display();
    auto query = embedder.embed(pair_text);

    std::vector<std::pair<long long, double>> scored;
    scored.reserve(shared.size());
    for (long long sid : shared) {
        const auto& props = g.node(sid).props;
        auto it = props.find("embeddings");
        if (it == props.end() || !it->second.is_vector()) {
            throw ValidationError("sentence " + std::to_string(sid) + " has no embedding");
        }
        scored.emplace_back(sid, embedding::similarity(query, it->second.as_vector()));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > k) scored.resize(k);

    std::vector<long long> out;
    out.reserve(scored.size());
    for (const auto& [sid, score] : scored) out.push_back(sid);
    return out;
}

Triplet extract_relation(graph::PropertyGraph& g, const PairCandidate& pair,
                         const std::vector<long long>& sentence_ids, llm::Gateway& gateway) {
    if (sentence_ids.empty()) throw ValidationError("relation extraction needs sentences");

    llm::PromptContext ctx;
    ctx.subject = g.node(pair.n).props.at("name").display();
    ctx.object = g.node(pair.p).props.at("name").display();
    for (long long sid : sentence_ids) {
        ctx.sentences.push_back(g.node(sid).props.at("name").display());
    }
    auto reply = gateway.ask(llm::PromptKind::RelationExtraction, ctx);

    graph::Edge* edge = g.find_cc_edge(pair.n, pair.p);
    if (!edge) throw ValidationError("no CC edge for candidate pair");
    edge->text = reply.predicate;
    edge->has_text = true;

    Triplet t;
    t.subject = ctx.subject;
    t.predicate = reply.predicate;
    t.object = ctx.object;
    t.support = sentence_ids;
    return t;
}

EnrichmentReport enrich(graph::PropertyGraph& g, llm::Gateway& gateway,
                        embedding::Embedder& embedder, const SelectionThresholds& thresholds,
                        std::size_t sentences_per_pair) {
    EnrichmentReport report;
    for (const auto& candidate : select_semantic_candidates(g, thresholds)) {
        auto sentences = top_sentences_for_pair(g, candidate, embedder, sentences_per_pair);
        if (sentences.empty()) {
            ++report.skipped;
            continue;
        }
        try {
            report.triplets.push_back(extract_relation(g, candidate, sentences, gateway));
        } catch (const ParseError& e) {
            std::cerr << "relations: skipping pair (" << candidate.n << "," << candidate.p
                      << "): " << e.what() << "\n";
            ++report.skipped;
        }
    }
    return report;
}

std::vector<Triplet> collect_triplets(const graph::PropertyGraph& g) {
    std::vector<Triplet> out;
    for (const auto& e : g.edges()) {
        if (e.type != EdgeType::CC || !e.has_text) continue;
        Triplet t;
        t.subject = g.node(e.start).props.at("name").display();
        t.predicate = e.text;
        t.object = g.node(e.end).props.at("name").display();
        t.support = shared_sentences(g, e.start, e.end);
        out.push_back(std::move(t));
    }
    return out;
}

void save_triplets(const std::vector<Triplet>& triplets, const graph::PropertyGraph& g,
                   const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write triplets file: " + path);
    for (const auto& t : triplets) {
        long long weight = 0;
        auto subject_id = g.find_named(NodeLabel::Entity, graph::Value(t.subject));
        auto object_id = g.find_named(NodeLabel::Entity, graph::Value(t.object));
        if (subject_id && object_id) {
            // find_cc_edge is non-const; scan instead.
            for (const auto& e : g.edges()) {
                if (e.type == EdgeType::CC &&
                    ((e.start == *subject_id && e.end == *object_id) ||
                     (e.start == *object_id && e.end == *subject_id))) {
                    weight = e.weight;
                    break;
                }
            }
        }
        nlohmann::json j{{"subject", t.subject},
                         {"predicate", t.predicate},
                         {"object", t.object},
                         {"weight", weight},
                         {"support", t.support}};
        out << j.dump() << "\n";
    }
}

}  // namespace kg::relations
