#include "kg/rag.hpp"

#include <algorithm>
#include <iostream>
#include <limits>
#include <map>
#include <set>

#include "kg/common.hpp"
#include "kg/llm.hpp"
#include "kg/ner.hpp"
#include "kg/resolution.hpp"
#include "kg/text.hpp"

namespace kg::rag {

namespace {

using graph::NodeLabel;

std::vector<std::string> content_words(const std::string& question) {
    std::vector<std::string> out;
    for (const auto& tok : text::tokenize(question)) {
        if (text::is_stopword(tok)) continue;
        if (std::find(out.begin(), out.end(), tok) == out.end()) out.push_back(tok);
    }
    return out;
}

}  // namespace

std::vector<std::string> extract_query_entities(const std::string& question,
                                                llm::Gateway& gateway) {
    if (text::trim(question).empty()) throw ValidationError("question must be non-empty");

    std::vector<std::pair<std::string, std::string>> raw;
    try {
        llm::PromptContext ctx;
        ctx.sentence = question;
        ctx.categories = ner::category_names();
        auto reply = gateway.ask(llm::PromptKind::Ner, ctx, ner::category_names());
        raw = reply.entities;
    } catch (const Error& e) {
        std::cerr << "rag: entity extraction fell back to content words: " << e.what() << "\n";
        return content_words(question);
    }

    std::vector<std::string> out;
    for (const auto& [surface, category] : raw) {
        (void)category;
        auto normalized =
            resolution::normalize_surface(surface, question, {}, /*skip_in_text_check=*/true);
        if (!normalized) continue;
        if (std::find(out.begin(), out.end(), *normalized) == out.end()) {
            out.push_back(*normalized);
        }
    }
    return out;
}

RetrievalOutcome retrieve_detailed(const RetrievalRequest& request,
                                   const graph::PropertyGraph& g, llm::Gateway& gateway,
                                   embedding::Embedder& embedder) {
    if (text::trim(request.question).empty()) {
        throw ValidationError("question must be non-empty");
    }
    if (request.k < 1) throw ValidationError("k must be >= 1");

    RetrievalOutcome outcome;
    outcome.entities = extract_query_entities(request.question, gateway);

    // Candidate sentences come from the generated query when it works, else
    // from direct fulltext over the extracted entities.
    std::vector<long long> candidates;
    bool query_ok = false;
    try {
        llm::PromptContext ctx;
        ctx.question = request.question;
        ctx.schema_text = llm::graph_schema_text();
        auto reply = gateway.ask(llm::PromptKind::CypherGeneration, ctx);
        auto ast = cql::parse(reply.text);
        cql::validate(ast);
        outcome.table = cql::execute(ast, g);
        outcome.query_text = reply.text;
        query_ok = true;

        std::set<long long> seen;
        for (const auto& row : outcome.table.rows) {
            for (const auto& value : row) {
                if (!value.is_int()) continue;
                long long id = value.as_int();
                if (!g.has_node(id) || g.node(id).label != NodeLabel::Sentence) continue;
                if (seen.insert(id).second) candidates.push_back(id);
            }
        }
    } catch (const Error& e) {
        std::cerr << "rag: query path failed, using direct fulltext: " << e.what() << "\n";
    }

    if (!query_ok) {
        outcome.used_fallback = true;
        std::string terms;
        for (const auto& entity : outcome.entities) {
            if (!terms.empty()) terms += " ";
            terms += entity;
        }
        if (terms.empty()) {
            for (const auto& word : content_words(request.question)) {
                if (!terms.empty()) terms += " ";
                terms += word;
            }
        }
        if (!terms.empty()) {
            for (const auto& [sid, score] :
                 g.fulltext_search(terms, std::numeric_limits<std::size_t>::max())) {
                (void)score;
                candidates.push_back(sid);
            }
        }
    }

    if (candidates.empty()) return outcome;  // empty hit list is a valid result

    auto question_vec = embedder.embed(request.question);
    outcome.hits.reserve(candidates.size());
    for (long long sid : candidates) {
        const auto& props = g.node(sid).props;
        auto it = props.find("embeddings");
        if (it == props.end() || !it->second.is_vector()) continue;
        RankedHit hit;
        hit.sentence_id = sid;
        hit.score = embedding::similarity(question_vec, it->second.as_vector());
        auto parent = g.sentence_parent(sid);
        hit.abstract_id = parent.value_or(-1);
        outcome.hits.push_back(hit);
    }
    std::sort(outcome.hits.begin(), outcome.hits.end(), [](const RankedHit& a, const RankedHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.sentence_id < b.sentence_id;
    });
    return outcome;
}

std::vector<RankedHit> retrieve(const RetrievalRequest& request, const graph::PropertyGraph& g,
                                llm::Gateway& gateway, embedding::Embedder& embedder) {
    return retrieve_detailed(request, g, gateway, embedder).hits;
}

std::vector<long long> select_top_abstracts(const std::vector<RankedHit>& hits, int k) {
    std::vector<long long> out;
    std::set<long long> seen;
    for (const auto& hit : hits) {
        if (hit.abstract_id < 0) continue;
        if (static_cast<int>(out.size()) >= k) break;
        if (seen.insert(hit.abstract_id).second) out.push_back(hit.abstract_id);
    }
    return out;
}

long long entity_occurrence(const graph::PropertyGraph& g, const std::string& name) {
    auto id = g.find_named(NodeLabel::Entity, graph::Value(name));
    if (!id) return 0;
    long long count = 0;
    for (std::size_t e : g.in_edges(*id)) {
        if (g.edges()[e].type == graph::EdgeType::CONTAINS) ++count;
    }
    return count;
}

std::vector<relations::Triplet> filter_triplets(const std::vector<relations::Triplet>& triplets,
                                                const std::vector<std::string>& query_entities,
                                                const std::string& question,
                                                const graph::PropertyGraph& g) {
    std::set<std::string> entity_set;
    for (const auto& e : query_entities) entity_set.insert(text::to_lower(e));

    std::set<std::string> question_lemmas;
    for (const auto& tok : text::tokenize(question)) {
        if (!text::is_stopword(tok)) question_lemmas.insert(text::lemma(tok));
    }

    std::vector<relations::Triplet> kept;
    for (const auto& t : triplets) {
        bool entity_match = entity_set.count(text::to_lower(t.subject)) > 0 ||
                            entity_set.count(text::to_lower(t.object)) > 0;
        bool lemma_match = false;
        if (!entity_match) {
            for (const auto& tok : text::tokenize(t.predicate)) {
                if (text::is_stopword(tok)) continue;
                if (question_lemmas.count(text::lemma(tok))) {
                    lemma_match = true;
                    break;
                }
            }
        }
        if (entity_match || lemma_match) kept.push_back(t);
    }
    if (!kept.empty()) return kept;

    // No match at all: every triplet, ordered by subject+object occurrence.
    std::vector<std::pair<long long, std::size_t>> order;
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        long long occurrence = entity_occurrence(g, triplets[i].subject) +
                               entity_occurrence(g, triplets[i].object);
        order.emplace_back(occurrence, i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<relations::Triplet> out;
    out.reserve(triplets.size());
    for (const auto& [occ, idx] : order) out.push_back(triplets[idx]);
    return out;
}

Answer answer(const RetrievalRequest& request, const graph::PropertyGraph& g,
              llm::Gateway& gateway, embedding::Embedder& embedder) {
    auto outcome = retrieve_detailed(request, g, gateway, embedder);

    Answer result;

    // Sources: hits first (top-k abstracts in first-hit order), else Abstract
    // nodes returned by a metadata query, in row order.
    std::vector<long long> abstract_ids;
    if (!outcome.hits.empty()) {
        abstract_ids = select_top_abstracts(outcome.hits, request.k);
    } else {
        std::set<long long> seen;
        for (const auto& row : outcome.table.rows) {
            for (const auto& value : row) {
                if (!value.is_int()) continue;
                long long id = value.as_int();
                if (!g.has_node(id) || g.node(id).label != NodeLabel::Abstract) continue;
                if (seen.insert(id).second) abstract_ids.push_back(id);
            }
        }
        if (static_cast<int>(abstract_ids.size()) > request.k) {
            abstract_ids.resize(static_cast<std::size_t>(request.k));
        }
    }

    if (outcome.hits.empty() && abstract_ids.empty()) {
        result.text = "No supporting documents were found for this question.";
        return result;
    }

    auto triplets = filter_triplets(relations::collect_triplets(g), outcome.entities,
                                    request.question, g);
    result.triplets_used = triplets;

    llm::PromptContext ctx;
    ctx.question = request.question;
    std::size_t top_sentences = std::min<std::size_t>(outcome.hits.size(), 6);
    for (std::size_t i = 0; i < top_sentences; ++i) {
        ctx.sentences.push_back(
            g.node(outcome.hits[i].sentence_id).props.at("name").display());
    }
    for (std::size_t i = 0; i < abstract_ids.size(); ++i) {
        const auto& props = g.node(abstract_ids[i]).props;
        ctx.documents.push_back(props.at("name").display() + " :: " +
                                props.at("text").display());
    }
    std::size_t top_triplets = std::min<std::size_t>(triplets.size(), 10);
    for (std::size_t i = 0; i < top_triplets; ++i) {
        ctx.triplets.push_back("- " + triplets[i].subject + " | " + triplets[i].predicate +
                               " | " + triplets[i].object);
    }
    if (outcome.hits.empty() && !outcome.table.rows.empty()) {
        // Metadata query: pass the result table through to the prompt.
        std::string header;
        for (std::size_t i = 0; i < outcome.table.columns.size(); ++i) {
            if (i) header += ", ";
            header += outcome.table.columns[i];
        }
        ctx.table_rows.push_back(header);
        for (const auto& row : outcome.table.rows) {
            std::string line;
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) line += ", ";
                line += row[i].display();
            }
            ctx.table_rows.push_back(line);
        }
    }

    auto reply = gateway.ask(llm::PromptKind::AnswerGeneration, ctx);
    result.text = reply.text;

    for (long long id : abstract_ids) {
        const auto& props = g.node(id).props;
        result.sources.push_back({props.at("name").display(), props.at("url").display()});
    }
    return result;
}

}  // namespace kg::rag
