#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "symreg/dataset.hpp"

namespace symreg {

enum class Symbol : std::uint8_t {
    add,
    sub,
    mul,
    div,
    avg,
    log,
    exp,
    sin,
    constant,
    variable,
};

inline constexpr std::array<Symbol, 5> binary_functions { Symbol::add, Symbol::sub, Symbol::mul, Symbol::div, Symbol::avg };
inline constexpr std::array<Symbol, 3> unary_functions { Symbol::log, Symbol::exp, Symbol::sin };
inline constexpr std::array<Symbol, 8> function_symbols { Symbol::add, Symbol::sub, Symbol::mul, Symbol::div,
                                                          Symbol::avg, Symbol::log, Symbol::exp, Symbol::sin };

constexpr std::size_t arity(Symbol s) noexcept
{
    switch (s) {
    case Symbol::add:
    case Symbol::sub:
    case Symbol::mul:
    case Symbol::div:
    case Symbol::avg:
        return 2;
    case Symbol::log:
    case Symbol::exp:
    case Symbol::sin:
        return 1;
    default:
        return 0;
    }
}

std::string_view symbol_name(Symbol s) noexcept;
std::optional<Symbol> function_from_name(std::string_view name) noexcept;

struct Node {
    Symbol symbol = Symbol::constant;
    double value = 0.0;          // constants only
    std::uint32_t variable = 0;  // index into the design matrix columns
    std::uint32_t lag = 0;

    static Node constant(double v) noexcept { return { Symbol::constant, v, 0, 0 }; }
    static Node var(std::uint32_t index, std::uint32_t lag = 0) noexcept { return { Symbol::variable, 0.0, index, lag }; }
    static Node function(Symbol s) noexcept { return { s, 0.0, 0, 0 }; }

    bool is_terminal() const noexcept { return arity(symbol) == 0; }
    bool is_variable() const noexcept { return symbol == Symbol::variable; }
    bool operator==(const Node&) const = default;
};

// Expression stored as a prefix-ordered node list. Every function node is
// followed by exactly arity(symbol) complete subtrees.
class ExpressionTree {
public:
    ExpressionTree() : nodes_ { Node::constant(0.0) } {}
    // Throws UsageError if the node list is not one well-formed prefix tree.
    explicit ExpressionTree(std::vector<Node> prefix);

    static ExpressionTree terminal(Node n);
    static ExpressionTree constant(double v) { return terminal(Node::constant(v)); }
    static ExpressionTree var(std::uint32_t index, std::uint32_t lag = 0) { return terminal(Node::var(index, lag)); }
    static ExpressionTree function(Symbol s, std::span<const ExpressionTree> children);
    static ExpressionTree function(Symbol s, const ExpressionTree& child);
    static ExpressionTree function(Symbol s, const ExpressionTree& left, const ExpressionTree& right);

    std::span<const Node> nodes() const noexcept { return nodes_; }
    const Node& node(std::size_t i) const { return nodes_.at(i); }

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t depth() const;

    // One past the last node of the subtree rooted at i.
    std::size_t subtree_end(std::size_t i) const;
    std::size_t subtree_size(std::size_t i) const { return subtree_end(i) - i; }
    // Depth of node i counted from the root (root = 1).
    std::size_t node_level(std::size_t i) const;

    ExpressionTree subtree(std::size_t i) const;
    ExpressionTree replace_subtree(std::size_t i, const ExpressionTree& replacement) const;
    ExpressionTree with_node(std::size_t i, Node n) const;

    bool operator==(const ExpressionTree&) const = default;

private:
    std::vector<Node> nodes_;
};

// Row-wise evaluation over rows (inclusive range). Division and log are
// unprotected; nonfinite values propagate. Throws SchemaError for a variable
// or lag the matrix cannot resolve, RangeError for rows outside valid_rows().
std::vector<double> evaluate(const ExpressionTree& tree, const LaggedDesignMatrix& matrix, IndexRange rows);

// Checks that every variable reference resolves in the matrix.
void check_references(const ExpressionTree& tree, const LaggedDesignMatrix& matrix);

// Number of references to a base variable, summed over all lags.
std::size_t ref_count(const ExpressionTree& tree, std::uint32_t variable) noexcept;
// Per-base-variable reference counts; entries beyond variable_count are ignored.
std::vector<std::size_t> ref_counts(const ExpressionTree& tree, std::size_t variable_count);
// Per-(variable, lag) counts, kept for diagnostics.
std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> lagged_ref_counts(const ExpressionTree& tree);
std::size_t variable_ref_total(const ExpressionTree& tree) noexcept;

// Canonical prefix text, e.g. (add (var x 3) (const 1.25)). Constants use the
// shortest representation that round-trips exactly. Names containing
// whitespace, parentheses or quotes are written as "quoted" strings.
std::string to_prefix(const ExpressionTree& tree, std::span<const std::string> names);
// Throws ParseError on malformed text and SchemaError on unknown names.
ExpressionTree parse_prefix(std::string_view text, std::span<const std::string> names);

} // namespace symreg
