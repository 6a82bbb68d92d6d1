#pragma once

#include <string>
#include <vector>

#include "kg/embedding.hpp"
#include "kg/graph.hpp"

namespace kg::llm {
class Gateway;
}

namespace kg::relations {

struct PairCandidate {
    long long n = 0;  // recurrent node
    long long p = 0;
    long long cc_weight = 0;
};

struct Triplet {
    std::string subject;
    std::string predicate;
    std::string object;
    std::vector<long long> support;  // sentence node ids
};

/// Creates one CC edge per unordered entity pair sharing at least one
/// sentence, weighted by the number of shared sentences, then refreshes the
/// degree properties. Returns the number of CC edges.
std::size_t build_cc_edges(graph::PropertyGraph& g);

enum class DegreeSpread { standard_error, standard_deviation };

struct SelectionThresholds {
    double weight_percentile = 99.7;  // nearest-rank over all CC weights
    double sigmas = 3.0;
    DegreeSpread spread = DegreeSpread::standard_error;
};

/// Statistically selected pairs for semantic enrichment: weight at or above
/// the percentile threshold and recurrent-node degree above
/// mean + sigmas * spread. Ordered by descending weight, then ids.
std::vector<PairCandidate> select_semantic_candidates(const graph::PropertyGraph& g,
                                                      const SelectionThresholds& thresholds = {});

/// Sentences containing both entities, ranked by cosine similarity between
/// the embedded "subject object" pair text and each sentence embedding.
std::vector<long long> top_sentences_for_pair(const graph::PropertyGraph& g,
                                              const PairCandidate& pair,
                                              embedding::Embedder& embedder, std::size_t k = 6);

/// Asks the provider for the semantic predicate and writes it into the CC
/// edge's optional text property. Re-running overwrites deterministically.
Triplet extract_relation(graph::PropertyGraph& g, const PairCandidate& pair,
                         const std::vector<long long>& sentence_ids, llm::Gateway& gateway);

struct EnrichmentReport {
    std::vector<Triplet> triplets;
    std::size_t skipped = 0;
};

/// Full enrichment pass: candidate selection, per-pair sentence ranking,
/// relation extraction. Parse failures skip the pair and leave the edge
/// text absent.
EnrichmentReport enrich(graph::PropertyGraph& g, llm::Gateway& gateway,
                        embedding::Embedder& embedder, const SelectionThresholds& thresholds = {},
                        std::size_t sentences_per_pair = 6);

/// All triplets currently materialized as CC edges with text, support being
/// the shared sentences of the pair.
std::vector<Triplet> collect_triplets(const graph::PropertyGraph& g);

void save_triplets(const std::vector<Triplet>& triplets, const graph::PropertyGraph& g,
                   const std::string& path);

}  // namespace kg::relations
