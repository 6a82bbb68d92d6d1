#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kg/corpus.hpp"
#include "kg/embedding.hpp"
#include "kg/resolution.hpp"

namespace kg::graph {

enum class NodeLabel { Abstract, Sentence, Entity, Person, TimeReference, KeyWord };
enum class EdgeType { HAS_FIRST_AUTHOR, WAS_PUBLISHED_IN, HAS_KEYWORD, HAS_SENTENCE, CONTAINS, CC };

const std::vector<std::string>& node_label_names();
const std::vector<std::string>& edge_type_names();
std::string to_string(NodeLabel label);
std::string to_string(EdgeType type);
std::optional<NodeLabel> node_label_from_string(const std::string& s);
std::optional<EdgeType> edge_type_from_string(const std::string& s);

/// Property value: null, integer, double, string, or a float vector
/// (sentence embeddings).
class Value {
public:
    using Storage = std::variant<std::monostate, long long, double, std::string,
                                 std::vector<float>>;

    Value() = default;
    Value(long long v) : storage_(v) {}
    Value(int v) : storage_(static_cast<long long>(v)) {}
    Value(double v) : storage_(v) {}
    Value(std::string v) : storage_(std::move(v)) {}
    Value(const char* v) : storage_(std::string(v)) {}
    Value(std::vector<float> v) : storage_(std::move(v)) {}

    bool is_null() const { return std::holds_alternative<std::monostate>(storage_); }
    bool is_int() const { return std::holds_alternative<long long>(storage_); }
    bool is_double() const { return std::holds_alternative<double>(storage_); }
    bool is_string() const { return std::holds_alternative<std::string>(storage_); }
    bool is_vector() const { return std::holds_alternative<std::vector<float>>(storage_); }
    bool is_numeric() const { return is_int() || is_double(); }

    long long as_int() const { return std::get<long long>(storage_); }
    double as_double() const;
    const std::string& as_string() const { return std::get<std::string>(storage_); }
    const std::vector<float>& as_vector() const { return std::get<std::vector<float>>(storage_); }

    /// Canonical text form, used for lexicographic comparison and CSV output.
    std::string display() const;

    bool operator==(const Value& other) const { return storage_ == other.storage_; }
    bool operator!=(const Value& other) const { return !(*this == other); }

private:
    Storage storage_;
};

using Properties = std::map<std::string, Value>;

struct Node {
    long long id = 0;
    NodeLabel label = NodeLabel::Entity;
    Properties props;
};

struct Edge {
    EdgeType type = EdgeType::CC;
    long long start = 0;
    long long end = 0;
    long long weight = 0;      // CC only
    std::string text;          // CC only, optional semantic predicate
    bool has_text = false;
};

struct SnapshotCounts {
    std::size_t nodes = 0;
    std::size_t edges = 0;
};

inline constexpr int kSnapshotVersion = 1;

class PropertyGraph {
public:
    long long add_node(NodeLabel label, Properties props);

    /// Upsert for the entity-like labels keyed by (label, name); never
    /// duplicates, returns the existing id when present.
    long long upsert_named(NodeLabel label, const Value& name, const std::string& types);

    /// Routes a resolved entity to its label: "Person" -> Person,
    /// "Time Reference" -> TimeReference, anything else -> Entity.
    long long upsert_entity(const std::string& name, const std::string& category);

    std::size_t add_edge(EdgeType type, long long start, long long end);

    /// One CC edge per unordered pair, stored with the lower id first.
    std::size_t add_cc_edge(long long a, long long b, long long weight);
    Edge* find_cc_edge(long long a, long long b);

    bool has_node(long long id) const { return id >= 0 && id < static_cast<long long>(nodes_.size()); }
    const Node& node(long long id) const;
    Node& node_mut(long long id);
    std::size_t node_count() const { return nodes_.size(); }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    /// Node ids carrying the label, ascending.
    std::vector<long long> nodes_with_label(NodeLabel label) const;

    const std::vector<std::size_t>& out_edges(long long id) const;
    const std::vector<std::size_t>& in_edges(long long id) const;

    std::optional<long long> find_named(NodeLabel label, const Value& name) const;

    /// Parent Abstract of a Sentence via its HAS_SENTENCE edge.
    std::optional<long long> sentence_parent(long long sentence_id) const;

    /// Sets every entity-like node's `edges` property to its CC degree.
    void recompute_degrees();

    void build_fulltext_index();
    bool fulltext_ready() const { return fulltext_built_; }

    /// Case-insensitive token search over Sentence nodes; score is
    /// sum of tf * ln(1 + N/df) per query token; descending, ties by id.
    std::vector<std::pair<long long, double>> fulltext_search(const std::string& query,
                                                              std::size_t limit) const;

    void persist(const std::string& path) const;
    static PropertyGraph load(const std::string& path);

    bool structurally_equal(const PropertyGraph& other) const;

    /// Full-scan schema check: endpoint labels per the node/relationship
    /// table, (label, name) uniqueness, degree property consistency.
    std::vector<std::string> validate_schema() const;

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> out_edges_;
    std::vector<std::vector<std::size_t>> in_edges_;
    std::map<std::pair<int, std::string>, long long> named_index_;
    std::map<std::pair<long long, long long>, std::size_t> cc_index_;

    bool fulltext_built_ = false;
    std::map<std::string, std::vector<std::pair<long long, int>>> fulltext_postings_;
    std::size_t fulltext_doc_count_ = 0;

    static std::string name_key(const Value& name);
};

/// Expected endpoint labels for each relationship type.
std::pair<NodeLabel, NodeLabel> edge_endpoints(EdgeType type);

/// Properties each label carries, for schema validation of queries.
const std::vector<std::string>& label_properties(NodeLabel label);

struct BuildInput {
    std::vector<corpus::AbstractRecord> records;
    std::vector<corpus::SentenceUnit> sentences;
    std::vector<resolution::ResolvedEntity> entities;
};

/// Materializes the property graph: one Abstract per record, Sentence nodes
/// with embeddings, Person/TimeReference/KeyWord metadata nodes, one node
/// per resolved entity, and CONTAINS edges for Entity-labeled nodes.
/// CC edges are built by the relations stage.
PropertyGraph build_graph(const BuildInput& input, embedding::Embedder& embedder);

}  // namespace kg::graph
