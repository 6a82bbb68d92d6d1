#include "kg/cql.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kg/common.hpp"
#include "kg/text.hpp"

namespace kg::cql {

namespace {

using graph::EdgeType;
using graph::NodeLabel;
using graph::Value;

// ---------------------------------------------------------------------------
// Lexer

enum class TokKind {
    Ident,
    Keyword,
    String,
    Int,
    Float,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Dot,
    Dash,        // -
    ArrowRight,  // ->
    ArrowLeft,   // <-
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
    End,
};

struct Token {
    TokKind kind = TokKind::End;
    std::string text;
    long long int_value = 0;
    double float_value = 0.0;
    std::size_t pos = 0;
};

const std::set<std::string>& keywords() {
    static const std::set<std::string> kw = {"MATCH", "WHERE",    "RETURN", "ORDER", "BY",
                                             "LIMIT", "CALL",     "YIELD",  "AND",   "ASC",
                                             "DESC",  "CONTAINS"};
    return kw;
}

std::vector<Token> lex(const std::string& s) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto push = [&](TokKind kind, std::string text, std::size_t pos) {
        Token t;
        t.kind = kind;
        t.text = std::move(text);
        t.pos = pos;
        out.push_back(std::move(t));
    };
    while (i < s.size()) {
        unsigned char c = s[i];
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        std::size_t pos = i;
        if (std::isalpha(c) || c == '_') {
            std::string ident;
            while (i < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) {
                ident.push_back(s[i++]);
            }
            std::string upper;
            for (char ch : ident) upper.push_back(static_cast<char>(std::toupper(ch)));
            if (keywords().count(upper)) {
                push(TokKind::Keyword, upper, pos);
            } else {
                push(TokKind::Ident, ident, pos);
            }
            continue;
        }
        if (std::isdigit(c)) {
            std::string num;
            bool is_float = false;
            while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
                num.push_back(s[i++]);
            }
            if (i + 1 < s.size() && s[i] == '.' &&
                std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
                is_float = true;
                num.push_back(s[i++]);
                while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
                    num.push_back(s[i++]);
                }
            }
            Token t;
            t.pos = pos;
            t.text = num;
            if (is_float) {
                t.kind = TokKind::Float;
                t.float_value = std::stod(num);
            } else {
                t.kind = TokKind::Int;
                t.int_value = std::stoll(num);
            }
            out.push_back(std::move(t));
            continue;
        }
        if (c == '"' || c == '\'') {
            char quote = static_cast<char>(c);
            ++i;
            std::string str;
            bool closed = false;
            while (i < s.size()) {
                char ch = s[i];
                if (ch == '\\' && i + 1 < s.size()) {
                    str.push_back(s[i + 1]);
                    i += 2;
                    continue;
                }
                if (ch == quote) {
                    closed = true;
                    ++i;
                    break;
                }
                str.push_back(ch);
                ++i;
            }
            if (!closed) throw ParseError("unterminated string literal", pos);
            push(TokKind::String, str, pos);
            continue;
        }
        switch (c) {
            case '(': push(TokKind::LParen, "(", pos); ++i; break;
            case ')': push(TokKind::RParen, ")", pos); ++i; break;
            case '[': push(TokKind::LBracket, "[", pos); ++i; break;
            case ']': push(TokKind::RBracket, "]", pos); ++i; break;
            case ':': push(TokKind::Colon, ":", pos); ++i; break;
            case ',': push(TokKind::Comma, ",", pos); ++i; break;
            case '.': push(TokKind::Dot, ".", pos); ++i; break;
            case '=': push(TokKind::Eq, "=", pos); ++i; break;
            case '-':
                if (i + 1 < s.size() && s[i + 1] == '>') {
                    push(TokKind::ArrowRight, "->", pos);
                    i += 2;
                } else {
                    push(TokKind::Dash, "-", pos);
                    ++i;
                }
                break;
            case '<':
                if (i + 1 < s.size() && s[i + 1] == '=') {
                    push(TokKind::Le, "<=", pos);
                    i += 2;
                } else if (i + 1 < s.size() && s[i + 1] == '-') {
                    push(TokKind::ArrowLeft, "<-", pos);
                    i += 2;
                } else {
                    push(TokKind::Lt, "<", pos);
                    ++i;
                }
                break;
            case '>':
                if (i + 1 < s.size() && s[i + 1] == '=') {
                    push(TokKind::Ge, ">=", pos);
                    i += 2;
                } else {
                    push(TokKind::Gt, ">", pos);
                    ++i;
                }
                break;
            default:
                throw ParseError(std::string("unexpected character '") + static_cast<char>(c) +
                                     "'",
                                 pos);
        }
    }
    Token end;
    end.kind = TokKind::End;
    end.pos = s.size();
    out.push_back(end);
    return out;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    explicit Parser(const std::string& input) : tokens_(lex(input)) {}

    QueryAst parse_query() {
        QueryAst ast;
        if (at_keyword("CALL")) ast.fulltext = parse_call();
        if (at_keyword("MATCH")) parse_match(ast);
        if (at_keyword("WHERE")) parse_where(ast);
        expect_keyword("RETURN");
        ast.returns.push_back(parse_return_item());
        while (accept(TokKind::Comma)) ast.returns.push_back(parse_return_item());
        if (at_keyword("ORDER")) {
            advance();
            expect_keyword("BY");
            OrderBy ob;
            ob.item = parse_return_item();
            if (at_keyword("ASC")) {
                advance();
            } else if (at_keyword("DESC")) {
                advance();
                ob.ascending = false;
            }
            ast.order_by = ob;
        }
        if (at_keyword("LIMIT")) {
            advance();
            const Token& t = current();
            if (t.kind != TokKind::Int) throw ParseError("LIMIT expects an integer", t.pos);
            if (t.int_value < 1) throw ParseError("LIMIT must be positive", t.pos);
            ast.limit = t.int_value;
            advance();
        }
        if (current().kind != TokKind::End) {
            throw ParseError("unexpected trailing input \"" + current().text + "\"",
                             current().pos);
        }
        return ast;
    }

private:
    std::vector<Token> tokens_;
    std::size_t index_ = 0;

    const Token& current() const { return tokens_[index_]; }
    void advance() {
        if (index_ + 1 < tokens_.size()) ++index_;
    }
    bool at_keyword(const std::string& kw) const {
        return current().kind == TokKind::Keyword && current().text == kw;
    }
    void expect_keyword(const std::string& kw) {
        if (!at_keyword(kw)) {
            throw ParseError("expected " + kw + ", found \"" + current().text + "\"",
                             current().pos);
        }
        advance();
    }
    bool accept(TokKind kind) {
        if (current().kind == kind) {
            advance();
            return true;
        }
        return false;
    }
    void expect(TokKind kind, const char* what) {
        if (current().kind != kind) {
            throw ParseError(std::string("expected ") + what + ", found \"" + current().text +
                                 "\"",
                             current().pos);
        }
        advance();
    }
    std::string expect_ident(const char* what) {
        if (current().kind != TokKind::Ident) {
            throw ParseError(std::string("expected ") + what + ", found \"" + current().text +
                                 "\"",
                             current().pos);
        }
        std::string name = current().text;
        advance();
        return name;
    }

    FulltextClause parse_call() {
        expect_keyword("CALL");
        std::size_t pos = current().pos;
        std::string fn = expect_ident("function name");
        if (fn != "fulltext") throw ParseError("unknown procedure: " + fn, pos);
        expect(TokKind::LParen, "(");
        if (current().kind != TokKind::String) {
            throw ParseError("fulltext expects an index name string", current().pos);
        }
        FulltextClause clause;
        clause.index_name = current().text;
        advance();
        expect(TokKind::Comma, ",");
        if (current().kind != TokKind::String) {
            throw ParseError("fulltext expects a query string", current().pos);
        }
        clause.query = current().text;
        advance();
        expect(TokKind::RParen, ")");
        expect_keyword("YIELD");
        std::size_t ypos = current().pos;
        std::string first = expect_ident("yield name");
        expect(TokKind::Comma, ",");
        std::string second = expect_ident("yield name");
        if (first != "node" || second != "score") {
            throw ParseError("fulltext must yield exactly: node, score", ypos);
        }
        return clause;
    }

    NodePattern parse_node_pattern() {
        expect(TokKind::LParen, "(");
        NodePattern np;
        if (current().kind == TokKind::Ident) {
            np.var = current().text;
            advance();
        }
        if (accept(TokKind::Colon)) {
            std::size_t pos = current().pos;
            std::string label = expect_ident("node label");
            auto parsed = graph::node_label_from_string(label);
            if (!parsed) throw ParseError("unknown label: " + label, pos);
            np.label = *parsed;
        }
        expect(TokKind::RParen, ")");
        if (np.var.empty() && !np.label) {
            throw ParseError("empty node pattern", current().pos);
        }
        return np;
    }

    void parse_match(QueryAst& ast) {
        expect_keyword("MATCH");
        for (;;) {
            PatternChain chain;
            chain.head = parse_node_pattern();
            while (current().kind == TokKind::Dash || current().kind == TokKind::ArrowLeft) {
                Hop hop;
                bool left = current().kind == TokKind::ArrowLeft;
                advance();
                expect(TokKind::LBracket, "[");
                if (accept(TokKind::Colon)) {
                    std::size_t pos = current().pos;
                    std::string type = expect_ident("relationship type");
                    auto parsed = graph::edge_type_from_string(type);
                    if (!parsed) throw ParseError("unknown relationship type: " + type, pos);
                    hop.type = *parsed;
                }
                expect(TokKind::RBracket, "]");
                if (left) {
                    expect(TokKind::Dash, "-");
                    hop.direction = Direction::In;
                } else if (current().kind == TokKind::ArrowRight) {
                    advance();
                    hop.direction = Direction::Out;
                } else if (current().kind == TokKind::Dash) {
                    advance();
                    hop.direction = Direction::Undirected;
                } else {
                    throw ParseError("expected -> or - after relationship", current().pos);
                }
                hop.to = parse_node_pattern();
                chain.hops.push_back(std::move(hop));
                if (chain.hops.size() > 3) {
                    throw ParseError("pattern chains are limited to 3 hops", current().pos);
                }
            }
            ast.patterns.push_back(std::move(chain));
            if (!accept(TokKind::Comma)) break;
        }
    }

    Operand parse_operand() {
        Operand op;
        const Token& t = current();
        switch (t.kind) {
            case TokKind::Ident: {
                op.var = t.text;
                advance();
                if (accept(TokKind::Dot)) {
                    op.kind = Operand::Kind::Property;
                    op.prop = expect_ident("property name");
                } else {
                    op.kind = Operand::Kind::Var;
                }
                return op;
            }
            case TokKind::String:
                op.kind = Operand::Kind::Literal;
                op.literal = Value(t.text);
                advance();
                return op;
            case TokKind::Int:
                op.kind = Operand::Kind::Literal;
                op.literal = Value(t.int_value);
                advance();
                return op;
            case TokKind::Float:
                op.kind = Operand::Kind::Literal;
                op.literal = Value(t.float_value);
                advance();
                return op;
            default:
                throw ParseError("expected operand, found \"" + t.text + "\"", t.pos);
        }
    }

    void parse_where(QueryAst& ast) {
        expect_keyword("WHERE");
        for (;;) {
            Comparison cmp;
            cmp.lhs = parse_operand();
            const Token& t = current();
            switch (t.kind) {
                case TokKind::Eq: cmp.op = CompareOp::Eq; break;
                case TokKind::Lt: cmp.op = CompareOp::Lt; break;
                case TokKind::Le: cmp.op = CompareOp::Le; break;
                case TokKind::Gt: cmp.op = CompareOp::Gt; break;
                case TokKind::Ge: cmp.op = CompareOp::Ge; break;
                case TokKind::Keyword:
                    if (t.text == "CONTAINS") {
                        cmp.op = CompareOp::Contains;
                        break;
                    }
                    [[fallthrough]];
                default:
                    throw ParseError("expected comparison operator, found \"" + t.text + "\"",
                                     t.pos);
            }
            advance();
            cmp.rhs = parse_operand();
            ast.where.push_back(std::move(cmp));
            if (at_keyword("AND")) {
                advance();
                continue;
            }
            break;
        }
    }

    ReturnItem parse_return_item() {
        ReturnItem item;
        item.var = expect_ident("variable");
        if (accept(TokKind::Dot)) item.prop = expect_ident("property name");
        return item;
    }
};

// ---------------------------------------------------------------------------
// Printing

std::string quote_string(const std::string& s, char quote) {
    std::string out(1, quote);
    for (char c : s) {
        if (c == quote || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back(quote);
    return out;
}

std::string print_value(const Value& v) {
    if (v.is_int()) return std::to_string(v.as_int());
    if (v.is_double()) return nlohmann::json(v.as_double()).dump();
    return quote_string(v.display(), '"');
}

std::string print_node_pattern(const NodePattern& np) {
    std::string out = "(" + np.var;
    if (np.label) out += ":" + graph::to_string(*np.label);
    out += ")";
    return out;
}

std::string print_operand(const Operand& op) {
    switch (op.kind) {
        case Operand::Kind::Property: return op.var + "." + op.prop;
        case Operand::Kind::Var: return op.var;
        case Operand::Kind::Literal: return print_value(op.literal);
    }
    return "";
}

std::string print_op(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "=";
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ge: return ">=";
        case CompareOp::Contains: return "CONTAINS";
    }
    return "=";
}

std::string print_return_item(const ReturnItem& item) {
    return item.is_property() ? item.var + "." + item.prop : item.var;
}

// ---------------------------------------------------------------------------
// Validation

struct VarInfo {
    std::set<NodeLabel> possible;  // candidate labels
    bool is_score = false;
    bool bound = false;
};

std::set<NodeLabel> all_labels() {
    return {NodeLabel::Abstract, NodeLabel::Sentence,      NodeLabel::Entity,
            NodeLabel::Person,   NodeLabel::TimeReference, NodeLabel::KeyWord};
}

std::map<std::string, VarInfo> bind_variables(const QueryAst& ast) {
    std::map<std::string, VarInfo> vars;
    if (ast.fulltext) {
        if (ast.fulltext->index_name != "sentences") {
            throw ValidationError("unknown fulltext index: " + ast.fulltext->index_name);
        }
        VarInfo node_info;
        node_info.possible = {NodeLabel::Sentence};
        node_info.bound = true;
        vars["node"] = node_info;
        VarInfo score_info;
        score_info.is_score = true;
        score_info.bound = true;
        vars["score"] = score_info;
    }

    auto touch = [&](const NodePattern& np) {
        if (np.var.empty()) throw ValidationError("anonymous pattern nodes are not supported");
        auto [it, inserted] = vars.try_emplace(np.var);
        if (inserted) {
            it->second.possible = all_labels();
            it->second.bound = true;
        }
        if (it->second.is_score) {
            throw ValidationError("variable " + np.var + " is a score, not a node");
        }
        if (np.label) {
            if (!it->second.possible.count(*np.label)) {
                throw ValidationError("variable " + np.var + " cannot have label " +
                                      graph::to_string(*np.label));
            }
            it->second.possible = {*np.label};
        }
    };

    for (const auto& chain : ast.patterns) {
        touch(chain.head);
        for (const auto& hop : chain.hops) touch(hop.to);
    }

    // Propagate endpoint constraints from typed hops to a fixpoint.
    bool changed = true;
    int guard = 0;
    while (changed && guard++ < 64) {
        changed = false;
        for (const auto& chain : ast.patterns) {
            const NodePattern* from = &chain.head;
            for (const auto& hop : chain.hops) {
                const NodePattern* to = &hop.to;
                if (hop.type) {
                    auto [first, second] = graph::edge_endpoints(*hop.type);
                    auto constrain = [&](const std::string& var, std::set<NodeLabel> allowed) {
                        auto& info = vars.at(var);
                        std::set<NodeLabel> next;
                        for (auto l : info.possible) {
                            if (allowed.count(l)) next.insert(l);
                        }
                        if (next != info.possible) {
                            info.possible = next;
                            changed = true;
                        }
                        if (info.possible.empty()) {
                            throw ValidationError(
                                "pattern hop " + graph::to_string(*hop.type) +
                                " is incompatible with variable " + var + " (expects " +
                                graph::to_string(first) + "->" + graph::to_string(second) + ")");
                        }
                    };
                    if (hop.direction == Direction::Out) {
                        constrain(from->var, {first});
                        constrain(to->var, {second});
                    } else if (hop.direction == Direction::In) {
                        constrain(from->var, {second});
                        constrain(to->var, {first});
                    } else {
                        constrain(from->var, {first, second});
                        constrain(to->var, {first, second});
                    }
                }
                from = to;
            }
        }
    }
    return vars;
}

void check_item_access(const std::map<std::string, VarInfo>& vars, const std::string& var,
                       const std::string& prop) {
    auto it = vars.find(var);
    if (it == vars.end()) throw ValidationError("unbound variable: " + var);
    if (prop.empty()) return;
    if (it->second.is_score) {
        throw ValidationError("score has no properties (found " + var + "." + prop + ")");
    }
    for (NodeLabel label : it->second.possible) {
        const auto& props = graph::label_properties(label);
        if (std::find(props.begin(), props.end(), prop) != props.end()) return;
    }
    throw ValidationError("unknown property " + prop + " for variable " + var);
}

// ---------------------------------------------------------------------------
// Execution

struct Binding {
    std::map<std::string, long long> nodes;
    double score = 0.0;
    bool has_score = false;
};

Value operand_value(const Operand& op, const Binding& binding, const graph::PropertyGraph& g) {
    switch (op.kind) {
        case Operand::Kind::Literal: return op.literal;
        case Operand::Kind::Var: {
            if (op.var == "score" && binding.has_score) return Value(binding.score);
            auto it = binding.nodes.find(op.var);
            if (it == binding.nodes.end()) return Value();
            return Value(it->second);
        }
        case Operand::Kind::Property: {
            auto it = binding.nodes.find(op.var);
            if (it == binding.nodes.end()) return Value();
            const auto& props = g.node(it->second).props;
            auto p = props.find(op.prop);
            if (p == props.end()) return Value();
            return p->second;
        }
    }
    return Value();
}

bool compare_values(const Value& a, CompareOp op, const Value& b) {
    if (op == CompareOp::Contains) {
        if (a.is_null() || b.is_null()) return false;
        return a.display().find(b.display()) != std::string::npos;
    }
    if (a.is_null() || b.is_null()) return false;
    int cmp;
    if (a.is_numeric() && b.is_numeric()) {
        double x = a.as_double();
        double y = b.as_double();
        cmp = x < y ? -1 : (x > y ? 1 : 0);
    } else {
        std::string x = a.display();
        std::string y = b.display();
        cmp = x < y ? -1 : (x > y ? 1 : 0);
    }
    switch (op) {
        case CompareOp::Eq: return cmp == 0;
        case CompareOp::Lt: return cmp < 0;
        case CompareOp::Le: return cmp <= 0;
        case CompareOp::Gt: return cmp > 0;
        case CompareOp::Ge: return cmp >= 0;
        case CompareOp::Contains: return false;
    }
    return false;
}

// Distinct neighbors of `from` reachable over one hop, ascending by id.
std::vector<long long> hop_neighbors(const graph::PropertyGraph& g, long long from,
                                     const Hop& hop) {
    std::vector<long long> out;
    auto matches = [&](const graph::Edge& e) { return !hop.type || e.type == *hop.type; };
    if (hop.direction == Direction::Out || hop.direction == Direction::Undirected) {
        for (std::size_t idx : g.out_edges(from)) {
            if (matches(g.edges()[idx])) out.push_back(g.edges()[idx].end);
        }
    }
    if (hop.direction == Direction::In || hop.direction == Direction::Undirected) {
        for (std::size_t idx : g.in_edges(from)) {
            if (matches(g.edges()[idx])) out.push_back(g.edges()[idx].start);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool label_ok(const graph::PropertyGraph& g, long long id, const NodePattern& np) {
    return !np.label || g.node(id).label == *np.label;
}

void extend_chain(const graph::PropertyGraph& g, const PatternChain& chain, std::size_t hop_index,
                  Binding binding, std::vector<Binding>& out) {
    if (hop_index == chain.hops.size()) {
        out.push_back(std::move(binding));
        return;
    }
    const Hop& hop = chain.hops[hop_index];
    const std::string& from_var =
        hop_index == 0 ? chain.head.var : chain.hops[hop_index - 1].to.var;
    long long from = binding.nodes.at(from_var);

    auto it = binding.nodes.find(hop.to.var);
    if (it != binding.nodes.end()) {
        long long target = it->second;
        for (long long n : hop_neighbors(g, from, hop)) {
            if (n == target && label_ok(g, target, hop.to)) {
                extend_chain(g, chain, hop_index + 1, binding, out);
                break;
            }
        }
        return;
    }
    for (long long n : hop_neighbors(g, from, hop)) {
        if (!label_ok(g, n, hop.to)) continue;
        Binding next = binding;
        next.nodes[hop.to.var] = n;
        extend_chain(g, chain, hop_index + 1, std::move(next), out);
    }
}

std::vector<Binding> match_patterns(const QueryAst& ast, const graph::PropertyGraph& g) {
    std::vector<Binding> bindings;
    if (ast.fulltext) {
        for (const auto& [sid, score] :
             g.fulltext_search(ast.fulltext->query, std::numeric_limits<std::size_t>::max())) {
            Binding b;
            b.nodes["node"] = sid;
            b.score = score;
            b.has_score = true;
            bindings.push_back(std::move(b));
        }
    } else {
        bindings.emplace_back();
    }

    for (const auto& chain : ast.patterns) {
        std::vector<Binding> next;
        for (const auto& binding : bindings) {
            auto it = binding.nodes.find(chain.head.var);
            if (it != binding.nodes.end()) {
                if (!label_ok(g, it->second, chain.head)) continue;
                extend_chain(g, chain, 0, binding, next);
            } else {
                for (const auto& n : g.nodes()) {
                    if (!label_ok(g, n.id, chain.head)) continue;
                    Binding seeded = binding;
                    seeded.nodes[chain.head.var] = n.id;
                    extend_chain(g, chain, 0, std::move(seeded), next);
                }
            }
        }
        bindings = std::move(next);
    }
    return bindings;
}

}  // namespace

bool ResultTable::operator==(const ResultTable& other) const {
    return columns == other.columns && rows == other.rows;
}

QueryAst parse(const std::string& query_text) {
    if (text::trim(query_text).empty()) throw ParseError("empty query", 0);
    Parser parser(query_text);
    return parser.parse_query();
}

std::string print(const QueryAst& ast) {
    std::ostringstream out;
    bool first = true;
    auto sep = [&]() {
        if (!first) out << " ";
        first = false;
    };
    if (ast.fulltext) {
        sep();
        out << "CALL fulltext(" << quote_string(ast.fulltext->index_name, '\'') << ", "
            << quote_string(ast.fulltext->query, '"') << ") YIELD node, score";
    }
    if (!ast.patterns.empty()) {
        sep();
        out << "MATCH ";
        for (std::size_t c = 0; c < ast.patterns.size(); ++c) {
            if (c) out << ", ";
            const auto& chain = ast.patterns[c];
            out << print_node_pattern(chain.head);
            for (const auto& hop : chain.hops) {
                std::string rel = hop.type ? ":" + graph::to_string(*hop.type) : "";
                switch (hop.direction) {
                    case Direction::Out: out << "-[" << rel << "]->"; break;
                    case Direction::In: out << "<-[" << rel << "]-"; break;
                    case Direction::Undirected: out << "-[" << rel << "]-"; break;
                }
                out << print_node_pattern(hop.to);
            }
        }
    }
    if (!ast.where.empty()) {
        sep();
        out << "WHERE ";
        for (std::size_t i = 0; i < ast.where.size(); ++i) {
            if (i) out << " AND ";
            out << print_operand(ast.where[i].lhs) << " " << print_op(ast.where[i].op) << " "
                << print_operand(ast.where[i].rhs);
        }
    }
    sep();
    out << "RETURN ";
    for (std::size_t i = 0; i < ast.returns.size(); ++i) {
        if (i) out << ", ";
        out << print_return_item(ast.returns[i]);
    }
    if (ast.order_by) {
        out << " ORDER BY " << print_return_item(ast.order_by->item)
            << (ast.order_by->ascending ? " ASC" : " DESC");
    }
    if (ast.limit) out << " LIMIT " << *ast.limit;
    return out.str();
}

void validate(const QueryAst& ast) {
    if (ast.returns.empty()) throw ValidationError("query returns nothing");
    auto vars = bind_variables(ast);
    for (const auto& cmp : ast.where) {
        for (const Operand* op : {&cmp.lhs, &cmp.rhs}) {
            if (op->kind == Operand::Kind::Property) {
                check_item_access(vars, op->var, op->prop);
            } else if (op->kind == Operand::Kind::Var) {
                check_item_access(vars, op->var, "");
            }
        }
    }
    for (const auto& item : ast.returns) check_item_access(vars, item.var, item.prop);
    if (ast.order_by) check_item_access(vars, ast.order_by->item.var, ast.order_by->item.prop);
}

ResultTable execute(const QueryAst& ast, const graph::PropertyGraph& g) {
    auto bindings = match_patterns(ast, g);

    std::vector<Binding> kept;
    kept.reserve(bindings.size());
    for (auto& b : bindings) {
        bool ok = true;
        for (const auto& cmp : ast.where) {
            if (!compare_values(operand_value(cmp.lhs, b, g), cmp.op,
                                operand_value(cmp.rhs, b, g))) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(std::move(b));
    }

    ResultTable table;
    for (const auto& item : ast.returns) table.columns.push_back(print_return_item(item));

    auto item_value = [&](const ReturnItem& item, const Binding& b) {
        Operand op;
        op.var = item.var;
        if (item.is_property()) {
            op.kind = Operand::Kind::Property;
            op.prop = item.prop;
        } else {
            op.kind = Operand::Kind::Var;
        }
        return operand_value(op, b, g);
    };

    std::vector<std::pair<Value, std::size_t>> order_keys;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        std::vector<Value> row;
        row.reserve(ast.returns.size());
        for (const auto& item : ast.returns) row.push_back(item_value(item, kept[i]));
        table.rows.push_back(std::move(row));
        if (ast.order_by) order_keys.emplace_back(item_value(ast.order_by->item, kept[i]), i);
    }

    if (ast.order_by) {
        bool asc = ast.order_by->ascending;
        std::stable_sort(order_keys.begin(), order_keys.end(),
                         [asc](const auto& a, const auto& b) {
                             const Value& x = a.first;
                             const Value& y = b.first;
                             int cmp;
                             if (x.is_numeric() && y.is_numeric()) {
                                 double dx = x.as_double();
                                 double dy = y.as_double();
                                 cmp = dx < dy ? -1 : (dx > dy ? 1 : 0);
                             } else {
                                 std::string sx = x.display();
                                 std::string sy = y.display();
                                 cmp = sx < sy ? -1 : (sx > sy ? 1 : 0);
                             }
                             return asc ? cmp < 0 : cmp > 0;
                         });
        std::vector<std::vector<Value>> sorted;
        sorted.reserve(table.rows.size());
        for (const auto& [key, idx] : order_keys) sorted.push_back(std::move(table.rows[idx]));
        table.rows = std::move(sorted);
    }

    if (ast.limit && table.rows.size() > static_cast<std::size_t>(*ast.limit)) {
        table.rows.resize(static_cast<std::size_t>(*ast.limit));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Random query generator

namespace {

struct SchemaHop {
    EdgeType type;
    NodeLabel from;
    NodeLabel to;
};

const std::vector<SchemaHop>& schema_hops() {
    static const std::vector<SchemaHop> hops = {
        {EdgeType::HAS_FIRST_AUTHOR, NodeLabel::Abstract, NodeLabel::Person},
        {EdgeType::WAS_PUBLISHED_IN, NodeLabel::Abstract, NodeLabel::TimeReference},
        {EdgeType::HAS_KEYWORD, NodeLabel::Abstract, NodeLabel::KeyWord},
        {EdgeType::HAS_SENTENCE, NodeLabel::Abstract, NodeLabel::Sentence},
        {EdgeType::CONTAINS, NodeLabel::Sentence, NodeLabel::Entity},
        {EdgeType::CC, NodeLabel::Entity, NodeLabel::Entity},
    };
    return hops;
}

}  // namespace

std::string random_query(unsigned long long seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

    static const std::vector<std::string> name_pool = {"tokamak", "plasma",   "deuterium",
                                                       "tritium", "divertor", "neutron"};
    static const std::vector<std::string> contains_pool = {"a", "e", "ma", "to", "plas"};
    static const std::vector<std::string> fulltext_pool = {"plasma", "tokamak", "energy",
                                                           "neutron heating", "xyzzy"};

    QueryAst ast;
    int next_var = 0;
    std::vector<std::pair<std::string, NodeLabel>> bound;  // var -> label

    bool use_fulltext = pick(4) == 0;
    if (use_fulltext) {
        FulltextClause clause;
        clause.index_name = "sentences";
        clause.query = fulltext_pool[pick(fulltext_pool.size())];
        ast.fulltext = clause;
        bound.emplace_back("node", NodeLabel::Sentence);
    }

    std::size_t n_chains = 1 + (pick(4) == 0 ? 1 : 0);
    for (std::size_t c = 0; c < n_chains; ++c) {
        PatternChain chain;
        NodeLabel current;
        // Occasionally continue from an already-bound variable.
        if (!bound.empty() && pick(3) == 0) {
            std::size_t idx = pick(bound.size());
            chain.head.var = bound[idx].first;
            chain.head.label = bound[idx].second;
            current = bound[idx].second;
        } else {
            current = static_cast<NodeLabel>(pick(6));
            chain.head.var = "v" + std::to_string(next_var++);
            chain.head.label = current;
            bound.emplace_back(chain.head.var, current);
        }

        std::size_t hops = 1 + pick(3) % 3;  // 1..3, skewed low
        for (std::size_t h = 0; h < hops; ++h) {
            std::vector<std::pair<SchemaHop, bool>> options;  // (hop, forward)
            for (const auto& sh : schema_hops()) {
                if (sh.from == current) options.emplace_back(sh, true);
                if (sh.to == current) options.emplace_back(sh, false);
            }
            if (options.empty()) break;
            auto [sh, forward] = options[pick(options.size())];
            Hop hop;
            hop.type = sh.type;
            NodeLabel next_label = forward ? sh.to : sh.from;
            if (sh.type == EdgeType::CC && pick(2) == 0) {
                hop.direction = Direction::Undirected;
            } else {
                hop.direction = forward ? Direction::Out : Direction::In;
            }
            hop.to.var = "v" + std::to_string(next_var++);
            hop.to.label = next_label;
            bound.emplace_back(hop.to.var, next_label);
            chain.hops.push_back(std::move(hop));
            current = next_label;
        }
        ast.patterns.push_back(std::move(chain));
    }

    auto random_prop_item = [&](const std::string& var, NodeLabel label) {
        ReturnItem item;
        item.var = var;
        const auto& props = graph::label_properties(label);
        // embeddings vectors are legal but noisy; avoid them in generated queries
        std::vector<std::string> usable;
        for (const auto& p : props) {
            if (p != "embeddings") usable.push_back(p);
        }
        item.prop = usable[pick(usable.size())];
        return item;
    };

    std::size_t n_where = pick(3);
    for (std::size_t i = 0; i < n_where && !bound.empty(); ++i) {
        auto [var, label] = bound[pick(bound.size())];
        ReturnItem target = random_prop_item(var, label);
        Comparison cmp;
        cmp.lhs.kind = Operand::Kind::Property;
        cmp.lhs.var = target.var;
        cmp.lhs.prop = target.prop;
        bool numeric_prop = target.prop == "citationCount" || target.prop == "edges" ||
                            (target.prop == "name" && label == NodeLabel::TimeReference);
        if (numeric_prop) {
            static const CompareOp ops[] = {CompareOp::Eq, CompareOp::Lt, CompareOp::Le,
                                            CompareOp::Gt, CompareOp::Ge};
            cmp.op = ops[pick(5)];
            long long v = target.prop == "name" ? 1950 + static_cast<long long>(pick(80))
                                                : static_cast<long long>(pick(50));
            cmp.rhs.kind = Operand::Kind::Literal;
            cmp.rhs.literal = Value(v);
        } else if (pick(2) == 0) {
            cmp.op = CompareOp::Contains;
            cmp.rhs.kind = Operand::Kind::Literal;
            cmp.rhs.literal = Value(contains_pool[pick(contains_pool.size())]);
        } else {
            cmp.op = CompareOp::Eq;
            cmp.rhs.kind = Operand::Kind::Literal;
            cmp.rhs.literal = Value(name_pool[pick(name_pool.size())]);
        }
        ast.where.push_back(std::move(cmp));
    }

    std::size_t n_return = 1 + pick(3);
    for (std::size_t i = 0; i < n_return; ++i) {
        auto [var, label] = bound[pick(bound.size())];
        if (pick(3) == 0) {
            ReturnItem item;
            item.var = var;
            ast.returns.push_back(item);
        } else {
            ast.returns.push_back(random_prop_item(var, label));
        }
    }
    if (use_fulltext && pick(2) == 0) {
        ReturnItem item;
        item.var = "score";
        ast.returns.push_back(item);
    }

    if (pick(2) == 0) {
        OrderBy ob;
        auto [var, label] = bound[pick(bound.size())];
        ob.item = pick(4) == 0 ? ReturnItem{var, ""} : random_prop_item(var, label);
        ob.ascending = pick(2) == 0;
        ast.order_by = ob;
    }
    if (pick(5) < 2) ast.limit = 1 + static_cast<long long>(pick(10));

    std::string printed = print(ast);
    validate(parse(printed));  // generator output must always be schema-valid
    return printed;
}

std::string to_csv(const ResultTable& table) {
    std::ostringstream out;
    auto cell = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string quoted = "\"";
        for (char c : s) {
            if (c == '"') quoted += "\"\"";
            else quoted.push_back(c);
        }
        quoted += "\"";
        return quoted;
    };
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out << ",";
        out << cell(table.columns[i]);
    }
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << cell(row[i].display());
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace kg::cql
