#include "kg/graph.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "kg/common.hpp"
#include "kg/ner.hpp"
#include "kg/text.hpp"

namespace kg::graph {

namespace {
using nlohmann::json;
}

const std::vector<std::string>& node_label_names() {
    static const std::vector<std::string> names = {"Abstract", "Sentence",      "Entity",
                                                   "Person",   "TimeReference", "KeyWord"};
    return names;
}

const std::vector<std::string>& edge_type_names() {
    static const std::vector<std::string> names = {"HAS_FIRST_AUTHOR", "WAS_PUBLISHED_IN",
                                                   "HAS_KEYWORD",      "HAS_SENTENCE",
                                                   "CONTAINS",         "CC"};
    return names;
}

std::string to_string(NodeLabel label) {
    return node_label_names().at(static_cast<std::size_t>(label));
}

std::string to_string(EdgeType type) {
    return edge_type_names().at(static_cast<std::size_t>(type));
}

std::optional<NodeLabel> node_label_from_string(const std::string& s) {
    const auto& names = node_label_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == s) return static_cast<NodeLabel>(i);
    }
    return std::nullopt;
}

std::optional<EdgeType> edge_type_from_string(const std::string& s) {
    const auto& names = edge_type_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == s) return static_cast<EdgeType>(i);
    }
    return std::nullopt;
}

double Value::as_double() const {
    if (is_int()) return static_cast<double>(as_int());
    return std::get<double>(storage_);
}

std::string Value::display() const {
    if (is_null()) return "";
    if (is_int()) return std::to_string(as_int());
    if (is_double()) {
        std::ostringstream oss;
        oss.precision(17);
        oss << std::get<double>(storage_);
        return oss.str();
    }
    if (is_string()) return as_string();
    std::ostringstream oss;
    oss << "[" << as_vector().size() << " floats]";
    return oss.str();
}

std::pair<NodeLabel, NodeLabel> edge_endpoints(EdgeType type) {
    switch (type) {
        case EdgeType::HAS_FIRST_AUTHOR: return {NodeLabel::Abstract, NodeLabel::Person};
        case EdgeType::WAS_PUBLISHED_IN: return {NodeLabel::Abstract, NodeLabel::TimeReference};
        case EdgeType::HAS_KEYWORD: return {NodeLabel::Abstract, NodeLabel::KeyWord};
        case EdgeType::HAS_SENTENCE: return {NodeLabel::Abstract, NodeLabel::Sentence};
        case EdgeType::CONTAINS: return {NodeLabel::Sentence, NodeLabel::Entity};
        case EdgeType::CC: return {NodeLabel::Entity, NodeLabel::Entity};
    }
    return {NodeLabel::Entity, NodeLabel::Entity};
}

const std::vector<std::string>& label_properties(NodeLabel label) {
    static const std::vector<std::string> abstract_props = {"id", "name", "text", "url",
                                                            "citationCount"};
    static const std::vector<std::string> sentence_props = {"name", "embeddings"};
    static const std::vector<std::string> entity_props = {"name", "types", "edges"};
    switch (label) {
        case NodeLabel::Abstract: return abstract_props;
        case NodeLabel::Sentence: return sentence_props;
        default: return entity_props;
    }
}

std::string PropertyGraph::name_key(const Value& name) {
    if (name.is_int()) return "i:" + std::to_string(name.as_int());
    if (name.is_string()) return "s:" + name.as_string();
    return "o:" + name.display();
}

long long PropertyGraph::add_node(NodeLabel label, Properties props) {
    long long id = static_cast<long long>(nodes_.size());
    nodes_.push_back({id, label, std::move(props)});
    out_edges_.emplace_back();
    in_edges_.emplace_back();
    return id;
}

long long PropertyGraph::upsert_named(NodeLabel label, const Value& name,
                                      const std::string& types) {
    if (name.is_string() && name.as_string().empty()) {
        throw ValidationError("named node requires a non-empty name");
    }
    std::pair<int, std::string> key{static_cast<int>(label), name_key(name)};
    auto it = named_index_.find(key);
    if (it != named_index_.end()) return it->second;

    Properties props;
    props["name"] = name;
    props["types"] = types;
    props["edges"] = static_cast<long long>(0);
    long long id = add_node(label, std::move(props));
    named_index_[key] = id;
    return id;
}

long long PropertyGraph::upsert_entity(const std::string& name, const std::string& category) {
    if (name.empty()) throw ValidationError("entity name must be non-empty");
    NodeLabel label = NodeLabel::Entity;
    if (category == "Person") label = NodeLabel::Person;
    if (category == "Time Reference") label = NodeLabel::TimeReference;
    return upsert_named(label, Value(name), category);
}

std::size_t PropertyGraph::add_edge(EdgeType type, long long start, long long end) {
    if (!has_node(start) || !has_node(end)) {
        throw ValidationError("edge endpoint does not exist: " + std::to_string(start) + "->" +
                              std::to_string(end));
    }
    std::size_t index = edges_.size();
    edges_.push_back({type, start, end, 0, "", false});
    out_edges_[static_cast<std::size_t>(start)].push_back(index);
    in_edges_[static_cast<std::size_t>(end)].push_back(index);
    return index;
}

std::size_t PropertyGraph::add_cc_edge(long long a, long long b, long long weight) {
    if (a == b) throw ValidationError("CC edge endpoints must differ");
    if (weight < 1) throw ValidationError("CC weight must be >= 1");
    long long lo = std::min(a, b);
    long long hi = std::max(a, b);
    auto it = cc_index_.find({lo, hi});
    if (it != cc_index_.end()) {
        edges_[it->second].weight = weight;
        return it->second;
    }
    std::size_t index = add_edge(EdgeType::CC, lo, hi);
    edges_[index].weight = weight;
    cc_index_[{lo, hi}] = index;
    return index;
}

Edge* PropertyGraph::find_cc_edge(long long a, long long b) {
    long long lo = std::min(a, b);
    long long hi = std::max(a, b);
    auto it = cc_index_.find({lo, hi});
    if (it == cc_index_.end()) return nullptr;
    return &edges_[it->second];
}

const Node& PropertyGraph::node(long long id) const {
    if (!has_node(id)) throw ValidationError("unknown node id " + std::to_string(id));
    return nodes_[static_cast<std::size_t>(id)];
}

Node& PropertyGraph::node_mut(long long id) {
    if (!has_node(id)) throw ValidationError("unknown node id " + std::to_string(id));
    return nodes_[static_cast<std::size_t>(id)];
}

std::vector<long long> PropertyGraph::nodes_with_label(NodeLabel label) const {
    std::vector<long long> out;
    for (const auto& n : nodes_) {
        if (n.label == label) out.push_back(n.id);
    }
    return out;
}

const std::vector<std::size_t>& PropertyGraph::out_edges(long long id) const {
    if (!has_node(id)) throw ValidationError("unknown node id " + std::to_string(id));
    return out_edges_[static_cast<std::size_t>(id)];
}

const std::vector<std::size_t>& PropertyGraph::in_edges(long long id) const {
    if (!has_node(id)) throw ValidationError("unknown node id " + std::to_string(id));
    return in_edges_[static_cast<std::size_t>(id)];
}

std::optional<long long> PropertyGraph::find_named(NodeLabel label, const Value& name) const {
    auto it = named_index_.find({static_cast<int>(label), name_key(name)});
    if (it == named_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<long long> PropertyGraph::sentence_parent(long long sentence_id) const {
    for (std::size_t e : in_edges(sentence_id)) {
        if (edges_[e].type == EdgeType::HAS_SENTENCE) return edges_[e].start;
    }
    return std::nullopt;
}

void PropertyGraph::recompute_degrees() {
    std::vector<long long> degree(nodes_.size(), 0);
    for (const auto& e : edges_) {
        if (e.type != EdgeType::CC) continue;
        degree[static_cast<std::size_t>(e.start)] += 1;
        degree[static_cast<std::size_t>(e.end)] += 1;
    }
    for (auto& n : nodes_) {
        if (n.label == NodeLabel::Abstract || n.label == NodeLabel::Sentence) continue;
        n.props["edges"] = degree[static_cast<std::size_t>(n.id)];
    }
}

void PropertyGraph::build_fulltext_index() {
    fulltext_postings_.clear();
    fulltext_doc_count_ = 0;
    for (const auto& n : nodes_) {
        if (n.label != NodeLabel::Sentence) continue;
        ++fulltext_doc_count_;
        auto it = n.props.find("name");
        if (it == n.props.end() || !it->second.is_string()) continue;
        std::map<std::string, int> tf;
        for (const auto& tok : text::tokenize(it->second.as_string())) tf[tok] += 1;
        for (const auto& [tok, count] : tf) {
            fulltext_postings_[tok].emplace_back(n.id, count);
        }
    }
    fulltext_built_ = true;
}

std::vector<std::pair<long long, double>> PropertyGraph::fulltext_search(
    const std::string& query, std::size_t limit) const {
    if (!fulltext_built_) throw ValidationError("fulltext index not built");
    std::map<long long, double> scores;
    for (const auto& tok : text::tokenize(query)) {
        auto it = fulltext_postings_.find(tok);
        if (it == fulltext_postings_.end()) continue;
        double df = static_cast<double>(it->second.size());
        double idf = std::log(1.0 + static_cast<double>(fulltext_doc_count_) / df);
        for (const auto& [node_id, tf] : it->second) {
            scores[node_id] += static_cast<double>(tf) * idf;
        }
    }
    std::vector<std::pair<long long, double>> out(scores.begin(), scores.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (out.size() > limit) out.resize(limit);
    return out;
}

// ---------------------------------------------------------------------------
// Persistence: JSON Lines with a header line carrying version and counts.

namespace {

json value_to_json(const Value& v) {
    if (v.is_null()) return nullptr;
    if (v.is_int()) return v.as_int();
    if (v.is_double()) return v.as_double();
    if (v.is_string()) return v.as_string();
    json arr = json::array();
    for (float f : v.as_vector()) arr.push_back(f);
    return arr;
}

Value value_from_json(const json& j) {
    if (j.is_null()) return Value();
    if (j.is_number_integer() || j.is_number_unsigned()) return Value(j.get<long long>());
    if (j.is_number_float()) return Value(j.get<double>());
    if (j.is_string()) return Value(j.get<std::string>());
    if (j.is_array()) {
        std::vector<float> v;
        v.reserve(j.size());
        for (const auto& x : j) v.push_back(x.get<float>());
        return Value(std::move(v));
    }
    throw IoError("unsupported property value in snapshot");
}

}  // namespace

void PropertyGraph::persist(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write graph snapshot: " + path);
    out << json{{"version", kSnapshotVersion},
                {"node_count", nodes_.size()},
                {"edge_count", edges_.size()}}
               .dump()
        << "\n";
    for (const auto& n : nodes_) {
        json props = json::object();
        for (const auto& [k, v] : n.props) props[k] = value_to_json(v);
        out << json{{"id", n.id}, {"label", to_string(n.label)}, {"properties", props}}.dump()
            << "\n";
    }
    for (const auto& e : edges_) {
        json props = json::object();
        if (e.type == EdgeType::CC) {
            props["weight"] = e.weight;
            if (e.has_text) props["text"] = e.text;
        }
        out << json{{"type", to_string(e.type)},
                    {"start", e.start},
                    {"end", e.end},
                    {"properties", props}}
                   .dump()
            << "\n";
    }
}

PropertyGraph PropertyGraph::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open graph snapshot: " + path);

    std::string line;
    if (!std::getline(in, line)) throw IoError("empty graph snapshot: " + path);
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.is_object() || !header.contains("version")) {
        throw IoError("malformed snapshot header in " + path);
    }
    if (header["version"].get<int>() != kSnapshotVersion) {
        throw IoError("snapshot version mismatch in " + path + ": expected " +
                      std::to_string(kSnapshotVersion) + ", found " +
                      header["version"].dump());
    }
    std::size_t node_count = header.at("node_count").get<std::size_t>();
    std::size_t edge_count = header.at("edge_count").get<std::size_t>();

    PropertyGraph g;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw IoError("malformed snapshot line " + std::to_string(lineno) + " in " + path);
        }
        if (j.contains("id")) {
            auto label = node_label_from_string(j.at("label").get<std::string>());
            if (!label) throw IoError("unknown node label in snapshot: " + j.at("label").dump());
            Properties props;
            for (const auto& [k, v] : j.at("properties").items()) props[k] = value_from_json(v);
            long long id = g.add_node(*label, std::move(props));
            if (id != j.at("id").get<long long>()) {
                throw IoError("non-contiguous node ids in snapshot at line " +
                              std::to_string(lineno));
            }
            if (*label != NodeLabel::Abstract && *label != NodeLabel::Sentence) {
                auto name_it = g.nodes_[static_cast<std::size_t>(id)].props.find("name");
                if (name_it != g.nodes_[static_cast<std::size_t>(id)].props.end()) {
                    std::pair<int, std::string> key{static_cast<int>(*label),
                                                    name_key(name_it->second)};
                    if (g.named_index_.count(key)) {
                        throw IoError("duplicate (label, name) in snapshot at line " +
                                      std::to_string(lineno));
                    }
                    g.named_index_[key] = id;
                }
            }
        } else {
            auto type = edge_type_from_string(j.at("type").get<std::string>());
            if (!type) throw IoError("unknown edge type in snapshot: " + j.at("type").dump());
            long long start = j.at("start").get<long long>();
            long long end = j.at("end").get<long long>();
            if (!g.has_node(start) || !g.has_node(end)) {
                throw IoError("edge references missing node at line " + std::to_string(lineno));
            }
            std::size_t index = g.add_edge(*type, start, end);
            const json& props = j.at("properties");
            if (*type == EdgeType::CC) {
                g.edges_[index].weight = props.at("weight").get<long long>();
                if (props.contains("text")) {
                    g.edges_[index].text = props.at("text").get<std::string>();
                    g.edges_[index].has_text = true;
                }
                g.cc_index_[{std::min(start, end), std::max(start, end)}] = index;
            }
        }
    }
    if (g.nodes_.size() != node_count || g.edges_.size() != edge_count) {
        throw IoError("snapshot counts do not match content in " + path);
    }
    return g;
}

bool PropertyGraph::structurally_equal(const PropertyGraph& other) const {
    if (nodes_.size() != other.nodes_.size() || edges_.size() != other.edges_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& a = nodes_[i];
        const Node& b = other.nodes_[i];
        if (a.id != b.id || a.label != b.label || a.props != b.props) return false;
    }
    auto edge_key = [](const Edge& e) {
        return std::make_tuple(static_cast<int>(e.type), e.start, e.end, e.weight, e.has_text,
                               e.text);
    };
    std::vector<std::tuple<int, long long, long long, long long, bool, std::string>> ea, eb;
    for (const auto& e : edges_) ea.push_back(edge_key(e));
    for (const auto& e : other.edges_) eb.push_back(edge_key(e));
    std::sort(ea.begin(), ea.end());
    std::sort(eb.begin(), eb.end());
    return ea == eb;
}

std::vector<std::string> PropertyGraph::validate_schema() const {
    std::vector<std::string> violations;

    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const Edge& e = edges_[i];
        if (!has_node(e.start) || !has_node(e.end)) {
            violations.push_back("edge " + std::to_string(i) + " references a missing node");
            continue;
        }
        auto [want_start, want_end] = edge_endpoints(e.type);
        if (node(e.start).label != want_start || node(e.end).label != want_end) {
            violations.push_back("edge " + std::to_string(i) + " (" + to_string(e.type) +
                                 ") joins " + to_string(node(e.start).label) + "->" +
                                 to_string(node(e.end).label));
        }
        if (e.type == EdgeType::CC) {
            if (e.weight < 1) {
                violations.push_back("CC edge " + std::to_string(i) + " has weight < 1");
            }
            if (e.start >= e.end) {
                violations.push_back("CC edge " + std::to_string(i) +
                                     " not in canonical direction");
            }
        }
    }

    std::set<std::pair<int, std::string>> seen_names;
    std::vector<long long> degree(nodes_.size(), 0);
    for (const auto& e : edges_) {
        if (e.type == EdgeType::CC && has_node(e.start) && has_node(e.end)) {
            degree[static_cast<std::size_t>(e.start)] += 1;
            degree[static_cast<std::size_t>(e.end)] += 1;
        }
    }
    for (const auto& n : nodes_) {
        if (n.label == NodeLabel::Abstract || n.label == NodeLabel::Sentence) continue;
        auto name_it = n.props.find("name");
        if (name_it == n.props.end()) {
            violations.push_back("node " + std::to_string(n.id) + " lacks a name");
            continue;
        }
        auto key = std::make_pair(static_cast<int>(n.label), name_key(name_it->second));
        if (!seen_names.insert(key).second) {
            violations.push_back("duplicate (label, name): " + to_string(n.label) + "/" +
                                 name_it->second.display());
        }
        auto edges_it = n.props.find("edges");
        long long stored = edges_it != n.props.end() && edges_it->second.is_int()
                               ? edges_it->second.as_int()
                               : -1;
        if (stored != degree[static_cast<std::size_t>(n.id)]) {
            violations.push_back("node " + std::to_string(n.id) + " edges property " +
                                 std::to_string(stored) + " != CC degree " +
                                 std::to_string(degree[static_cast<std::size_t>(n.id)]));
        }
    }
    return violations;
}

// ---------------------------------------------------------------------------
// Graph construction

PropertyGraph build_graph(const BuildInput& input, embedding::Embedder& embedder) {
    PropertyGraph g;

    // Sentence lookup for referential checks and CONTAINS edges.
    std::map<std::pair<std::string, int>, long long> sentence_node;
    std::set<std::string> record_ids;
    for (const auto& r : input.records) record_ids.insert(r.id);
    for (const auto& s : input.sentences) {
        if (!record_ids.count(s.abstract_id)) {
            throw ValidationError("sentence references unknown abstract: " + s.abstract_id);
        }
    }

    for (const auto& r : input.records) {
        Properties props;
        props["id"] = r.id;
        props["name"] = r.title;
        props["text"] = r.text;
        props["url"] = r.url;
        props["citationCount"] = r.citation_count;
        long long abstract_id = g.add_node(NodeLabel::Abstract, std::move(props));

        if (!r.first_author.empty()) {
            long long person = g.upsert_named(NodeLabel::Person, Value(r.first_author), "Person");
            g.add_edge(EdgeType::HAS_FIRST_AUTHOR, abstract_id, person);
        }
        long long year = g.upsert_named(NodeLabel::TimeReference,
                                        Value(static_cast<long long>(r.year)), "Time Reference");
        g.add_edge(EdgeType::WAS_PUBLISHED_IN, abstract_id, year);

        std::set<std::string> seen_keywords;
        for (const auto& kw : r.keywords) {
            if (kw.empty() || !seen_keywords.insert(kw).second) continue;
            long long kw_id = g.upsert_named(NodeLabel::KeyWord, Value(kw), "Concept");
            g.add_edge(EdgeType::HAS_KEYWORD, abstract_id, kw_id);
        }

        int expected_index = 0;
        for (const auto& s : input.sentences) {
            if (s.abstract_id != r.id) continue;
            if (s.index != expected_index) {
                throw ValidationError("sentence indexes not contiguous for abstract " + r.id);
            }
            ++expected_index;
            Properties sprops;
            sprops["name"] = s.text;
            sprops["embeddings"] = Value(embedder.embed(s.text));
            long long sid = g.add_node(NodeLabel::Sentence, std::move(sprops));
            g.add_edge(EdgeType::HAS_SENTENCE, abstract_id, sid);
            sentence_node[{s.abstract_id, s.index}] = sid;
        }
    }

    // Entities in canonical-name order; CONTAINS only for Entity-labeled
    // nodes, per the relationship table.
    std::vector<const resolution::ResolvedEntity*> sorted;
    sorted.reserve(input.entities.size());
    for (const auto& e : input.entities) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->canonical < b->canonical; });

    for (const auto* entity : sorted) {
        long long node_id = g.upsert_entity(entity->canonical, ner::to_string(entity->category));
        if (g.node(node_id).label != NodeLabel::Entity) continue;

        std::set<long long> linked;
        for (const auto& ref : entity->sources) {
            auto it = sentence_node.find({ref.abstract_id, ref.sentence_index});
            if (it == sentence_node.end()) {
                throw ValidationError("entity \"" + entity->canonical +
                                      "\" references unknown sentence " + ref.abstract_id + "#" +
                                      std::to_string(ref.sentence_index));
            }
            if (linked.insert(it->second).second) {
                g.add_edge(EdgeType::CONTAINS, it->second, node_id);
            }
        }
    }

    g.recompute_degrees();
    g.build_fulltext_index();
    return g;
}

}  // namespace kg::graph
