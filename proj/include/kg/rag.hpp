#pragma once

#include <string>
#include <vector>

#include "kg/cql.hpp"
#include "kg/embedding.hpp"
#include "kg/graph.hpp"
#include "kg/relations.hpp"

namespace kg::llm {
class Gateway;
}

namespace kg::rag {

struct RetrievalRequest {
    std::string question;
    int k = 3;  // number of documents to retrieve
};

struct RankedHit {
    long long sentence_id = 0;
    long long abstract_id = 0;
    double score = 0.0;
};

struct SourceRef {
    std::string title;
    std::string url;
};

struct Answer {
    std::string text;
    std::vector<SourceRef> sources;
    std::vector<relations::Triplet> triplets_used;
};

/// First LLM pass over the question; entity strings are normalized like NER
/// surfaces (without the in-text check). Gateway failure falls back to the
/// question's content words.
std::vector<std::string> extract_query_entities(const std::string& question,
                                                llm::Gateway& gateway);

struct RetrievalOutcome {
    std::vector<RankedHit> hits;
    cql::ResultTable table;      // result of the generated query
    std::string query_text;      // generated CQL-S, empty when fallback ran
    bool used_fallback = false;  // direct fulltext over extracted entities
    std::vector<std::string> entities;
};

/// Full retrieval pipeline: entity extraction, query generation + execution
/// (falling back to direct fulltext on a bad query), candidate sentences
/// scored by similarity(embed(question), sentence embedding), descending
/// with node-id tie-break.
RetrievalOutcome retrieve_detailed(const RetrievalRequest& request,
                                   const graph::PropertyGraph& g, llm::Gateway& gateway,
                                   embedding::Embedder& embedder);

std::vector<RankedHit> retrieve(const RetrievalRequest& request, const graph::PropertyGraph& g,
                                llm::Gateway& gateway, embedding::Embedder& embedder);

/// Walks hits in order and collects distinct parent abstracts until k.
std::vector<long long> select_top_abstracts(const std::vector<RankedHit>& hits, int k);

/// Keeps triplets whose subject/object matches a query entity or whose
/// predicate shares a verb lemma with the question; an empty keep-set falls
/// back to all triplets sorted by occurrence sum of subject and object.
std::vector<relations::Triplet> filter_triplets(const std::vector<relations::Triplet>& triplets,
                                                const std::vector<std::string>& query_entities,
                                                const std::string& question,
                                                const graph::PropertyGraph& g);

/// Number of sentences containing the entity (its CONTAINS fan-in), the
/// occurrence measure used by the triplet fallback ordering.
long long entity_occurrence(const graph::PropertyGraph& g, const std::string& name);

/// End-to-end grounded answer: prompt composed from the question, top-k
/// abstract texts, and filtered triplets; sources are assembled from the
/// retrieved Abstract nodes by the system, never by the model.
Answer answer(const RetrievalRequest& request, const graph::PropertyGraph& g,
              llm::Gateway& gateway, embedding::Embedder& embedder);

}  // namespace kg::rag
