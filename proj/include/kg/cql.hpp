#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kg/graph.hpp"

namespace kg::cql {

struct NodePattern {
    std::string var;
    std::optional<graph::NodeLabel> label;
};

enum class Direction { Out, In, Undirected };

struct Hop {
    std::optional<graph::EdgeType> type;  // untyped hop matches any relationship
    Direction direction = Direction::Out;
    NodePattern to;
};

struct PatternChain {
    NodePattern head;
    std::vector<Hop> hops;  // at most 3
};

enum class CompareOp { Eq, Lt, Le, Gt, Ge, Contains };

struct Operand {
    enum class Kind { Property, Var, Literal };
    Kind kind = Kind::Literal;
    std::string var;
    std::string prop;
    graph::Value literal;
};

struct Comparison {
    Operand lhs;
    CompareOp op = CompareOp::Eq;
    Operand rhs;
};

struct FulltextClause {
    std::string index_name;  // only 'sentences' exists
    std::string query;
};

struct ReturnItem {
    std::string var;
    std::string prop;  // empty for a bare variable
    bool is_property() const { return !prop.empty(); }
};

struct OrderBy {
    ReturnItem item;
    bool ascending = true;
};

struct QueryAst {
    std::optional<FulltextClause> fulltext;
    std::vector<PatternChain> patterns;
    std::vector<Comparison> where;
    std::vector<ReturnItem> returns;
    std::optional<OrderBy> order_by;
    std::optional<long long> limit;
};

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<graph::Value>> rows;
    bool operator==(const ResultTable& other) const;
};

/// Parses the CQL-S subset. Unknown labels or relationship types and
/// non-positive LIMITs are parse errors with a byte offset.
QueryAst parse(const std::string& query_text);

/// Canonical text form; parse(print(ast)) reproduces the AST exactly.
std::string print(const QueryAst& ast);

/// Schema check against the node/relationship table: hop endpoint
/// compatibility, variable binding, property existence.
void validate(const QueryAst& ast);

/// Read-only evaluation. Rows enumerate fulltext results in score order and
/// pattern variables in ascending node-id order; WHERE filters, then
/// RETURN projection, ORDER BY (stable), LIMIT.
ResultTable execute(const QueryAst& ast, const graph::PropertyGraph& g);

/// Seeded generator of schema-valid queries for differential testing.
std::string random_query(unsigned long long seed);

std::string to_csv(const ResultTable& table);

}  // namespace kg::cql
