#include "symreg/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "symreg/error.hpp"

namespace symreg {

std::string_view symbol_name(Symbol s) noexcept
{
    switch (s) {
    case Symbol::add: return "add";
    case Symbol::sub: return "sub";
    case Symbol::mul: return "mul";
    case Symbol::div: return "div";
    case Symbol::avg: return "avg";
    case Symbol::log: return "log";
    case Symbol::exp: return "exp";
    case Symbol::sin: return "sin";
    case Symbol::constant: return "const";
    case Symbol::variable: return "var";
    }
    return "?";
}

std::optional<Symbol> function_from_name(std::string_view name) noexcept
{
    for (auto s : function_symbols) {
        if (symbol_name(s) == name) {
            return s;
        }
    }
    return std::nullopt;
}

ExpressionTree::ExpressionTree(std::vector<Node> prefix)
    : nodes_(std::move(prefix))
{
    // open = number of subtrees still owed; a valid prefix list closes exactly at the end
    std::size_t open = 1;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (open == 0) {
            throw UsageError("prefix node list has trailing nodes after position " + std::to_string(i));
        }
        open = open - 1 + arity(nodes_[i].symbol);
    }
    if (nodes_.empty() || open != 0) {
        throw UsageError("prefix node list is not a complete tree");
    }
}

ExpressionTree ExpressionTree::terminal(Node n)
{
    if (!n.is_terminal()) {
        throw UsageError("terminal() requires a constant or variable node");
    }
    return ExpressionTree(std::vector<Node> { n });
}

ExpressionTree ExpressionTree::function(Symbol s, std::span<const ExpressionTree> children)
{
    if (arity(s) == 0 || children.size() != arity(s)) {
        throw UsageError(std::string(symbol_name(s)) + " needs " + std::to_string(arity(s)) + " children");
    }
    std::vector<Node> nodes { Node::function(s) };
    for (const auto& c : children) {
        nodes.insert(nodes.end(), c.nodes_.begin(), c.nodes_.end());
    }
    return ExpressionTree(std::move(nodes));
}

ExpressionTree ExpressionTree::function(Symbol s, const ExpressionTree& child)
{
    return function(s, std::span<const ExpressionTree>(&child, 1));
}

ExpressionTree ExpressionTree::function(Symbol s, const ExpressionTree& left, const ExpressionTree& right)
{
    const std::array<ExpressionTree, 2> children { left, right };
    return function(s, children);
}

std::size_t ExpressionTree::depth() const
{
    // Iterative: track the level of every pending child slot.
    std::vector<std::size_t> pending { 1 };
    std::size_t deepest = 0;
    for (const auto& n : nodes_) {
        auto level = pending.back();
        pending.pop_back();
        deepest = std::max(deepest, level);
        for (std::size_t k = 0; k < arity(n.symbol); ++k) {
            pending.push_back(level + 1);
        }
    }
    return deepest;
}

std::size_t ExpressionTree::subtree_end(std::size_t i) const
{
    std::size_t open = 1;
    while (open > 0) {
        open = open - 1 + arity(nodes_.at(i).symbol);
        ++i;
    }
    return i;
}

std::size_t ExpressionTree::node_level(std::size_t target) const
{
    if (target >= nodes_.size()) {
        throw UsageError("node index out of range");
    }
    std::vector<std::size_t> pending { 1 };
    for (std::size_t i = 0;; ++i) {
        auto level = pending.back();
        pending.pop_back();
        if (i == target) {
            return level;
        }
        for (std::size_t k = 0; k < arity(nodes_[i].symbol); ++k) {
            pending.push_back(level + 1);
        }
    }
}

ExpressionTree ExpressionTree::subtree(std::size_t i) const
{
    auto end = subtree_end(i);
    return ExpressionTree(std::vector<Node>(nodes_.begin() + static_cast<std::ptrdiff_t>(i),
                                            nodes_.begin() + static_cast<std::ptrdiff_t>(end)));
}

ExpressionTree ExpressionTree::replace_subtree(std::size_t i, const ExpressionTree& replacement) const
{
    auto end = subtree_end(i);
    std::vector<Node> out;
    out.reserve(nodes_.size() - (end - i) + replacement.size());
    out.insert(out.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(i));
    out.insert(out.end(), replacement.nodes_.begin(), replacement.nodes_.end());
    out.insert(out.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(end), nodes_.end());
    return ExpressionTree(std::move(out));
}

ExpressionTree ExpressionTree::with_node(std::size_t i, Node n) const
{
    if (arity(n.symbol) != arity(nodes_.at(i).symbol)) {
        throw UsageError("replacement node must have the same arity");
    }
    auto copy = *this;
    copy.nodes_[i] = n;
    return copy;
}

void check_references(const ExpressionTree& tree, const LaggedDesignMatrix& matrix)
{
    for (const auto& n : tree.nodes()) {
        if (!n.is_variable()) {
            continue;
        }
        if (n.variable >= matrix.variable_count()) {
            throw SchemaError("variable index " + std::to_string(n.variable) + " does not resolve");
        }
        if (n.lag > matrix.max_lag()) {
            throw SchemaError("lag " + std::to_string(n.lag) + " exceeds max_lag " + std::to_string(matrix.max_lag()));
        }
    }
}

namespace {

// Reused evaluation buffers, one pool per thread.
struct BufferPool {
    std::vector<std::vector<double>> buffers;

    std::vector<double>& get(std::size_t slot, std::size_t rows)
    {
        if (slot >= buffers.size()) {
            buffers.resize(slot + 1);
        }
        buffers[slot].resize(rows);
        return buffers[slot];
    }
};

} // namespace

std::vector<double> evaluate(const ExpressionTree& tree, const LaggedDesignMatrix& matrix, IndexRange rows)
{
    check_references(tree, matrix);
    if (rows.first > rows.last || rows.first < matrix.first_valid_row() || rows.last >= matrix.length()) {
        throw RangeError("evaluation rows [" + std::to_string(rows.first) + ", " + std::to_string(rows.last)
                         + "] are outside the valid row range");
    }
    thread_local BufferPool pool;
    const std::size_t m = rows.size();
    const auto nodes = tree.nodes();
    std::size_t top = 0; // number of occupied stack slots

    for (std::size_t i = nodes.size(); i-- > 0;) {
        const Node& n = nodes[i];
        switch (n.symbol) {
        case Symbol::constant: {
            auto& out = pool.get(top++, m);
            std::fill(out.begin(), out.end(), n.value);
            break;
        }
        case Symbol::variable: {
            auto& out = pool.get(top++, m);
            auto src = matrix.lagged(n.variable, n.lag, rows);
            std::copy(src.begin(), src.end(), out.begin());
            break;
        }
        case Symbol::log:
        case Symbol::exp:
        case Symbol::sin: {
            auto& x = pool.buffers[top - 1];
            if (n.symbol == Symbol::log) {
                // log of a negative number is NaN and log(0) is -inf; both stay nonfinite.
                for (auto& v : x) v = std::log(v);
            } else if (n.symbol == Symbol::exp) {
                for (auto& v : x) v = std::exp(v);
            } else {
                for (auto& v : x) v = std::sin(v);
            }
            break;
        }
        default: {
            // Reverse prefix order leaves the left operand on top.
            auto& left = pool.buffers[top - 1];
            const auto& right = pool.buffers[top - 2];
            switch (n.symbol) {
            case Symbol::add:
                for (std::size_t r = 0; r < m; ++r) left[r] += right[r];
                break;
            case Symbol::sub:
                for (std::size_t r = 0; r < m; ++r) left[r] -= right[r];
                break;
            case Symbol::mul:
                for (std::size_t r = 0; r < m; ++r) left[r] *= right[r];
                break;
            case Symbol::div:
                for (std::size_t r = 0; r < m; ++r) left[r] /= right[r];
                break;
            case Symbol::avg:
                for (std::size_t r = 0; r < m; ++r) left[r] = (left[r] + right[r]) / 2.0;
                break;
            default:
                break;
            }
            std::swap(pool.buffers[top - 1], pool.buffers[top - 2]);
            --top;
            break;
        }
        }
    }
    return pool.buffers[0];
}

std::size_t ref_count(const ExpressionTree& tree, std::uint32_t variable) noexcept
{
    return static_cast<std::size_t>(std::count_if(tree.nodes().begin(), tree.nodes().end(), [variable](const Node& n) {
        return n.is_variable() && n.variable == variable;
    }));
}

std::vector<std::size_t> ref_counts(const ExpressionTree& tree, std::size_t variable_count)
{
    std::vector<std::size_t> counts(variable_count, 0);
    for (const auto& n : tree.nodes()) {
        if (n.is_variable() && n.variable < variable_count) {
            ++counts[n.variable];
        }
    }
    return counts;
}

std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> lagged_ref_counts(const ExpressionTree& tree)
{
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> counts;
    for (const auto& n : tree.nodes()) {
        if (n.is_variable()) {
            ++counts[{ n.variable, n.lag }];
        }
    }
    return counts;
}

std::size_t variable_ref_total(const ExpressionTree& tree) noexcept
{
    return static_cast<std::size_t>(
        std::count_if(tree.nodes().begin(), tree.nodes().end(), [](const Node& n) { return n.is_variable(); }));
}

namespace {

bool plain_name(std::string_view s)
{
    if (s.empty()) {
        return false;
    }
    return std::none_of(s.begin(), s.end(), [](char c) {
        return c == '(' || c == ')' || c == '"' || c == '\\' || std::isspace(static_cast<unsigned char>(c));
    });
}

void append_name(std::string& out, std::string_view name)
{
    if (plain_name(name)) {
        out += name;
        return;
    }
    out += '"';
    for (char c : name) {
        if (c == '"' || c == '\\') {
            out += '\\';
        }
        out += c;
    }
    out += '"';
}

void append_double(std::string& out, double v)
{
    std::array<char, 64> buf {};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.append(buf.data(), end);
}

class PrefixParser {
public:
    PrefixParser(std::string_view text, std::span<const std::string> names)
        : text_(text)
        , names_(names)
    {
    }

    ExpressionTree parse()
    {
        std::vector<Node> nodes;
        parse_node(nodes);
        skip_ws();
        if (pos_ != text_.size()) {
            fail("trailing characters after expression");
        }
        return ExpressionTree(std::move(nodes));
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, 1, pos_ + 1); }

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    void expect(char c)
    {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != c) {
            fail(std::string("expected '") + c + "'");
        }
        ++pos_;
    }

    std::string token()
    {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '"') {
            ++pos_;
            std::string out;
            while (pos_ < text_.size() && text_[pos_] != '"') {
                if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                    ++pos_;
                }
                out += text_[pos_++];
            }
            if (pos_ >= text_.size()) {
                fail("unterminated quoted name");
            }
            ++pos_;
            return out;
        }
        auto start = pos_;
        while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')'
               && !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        if (start == pos_) {
            fail("expected a token");
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    void parse_node(std::vector<Node>& nodes)
    {
        expect('(');
        auto head = token();
        if (head == "const") {
            auto text = token();
            double v = 0;
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc {} || ptr != text.data() + text.size()) {
                fail("invalid constant '" + text + "'");
            }
            nodes.push_back(Node::constant(v));
        } else if (head == "var") {
            auto name = token();
            auto lag_text = token();
            std::uint32_t lag = 0;
            auto [ptr, ec] = std::from_chars(lag_text.data(), lag_text.data() + lag_text.size(), lag);
            if (ec != std::errc {} || ptr != lag_text.data() + lag_text.size()) {
                fail("invalid lag '" + lag_text + "'");
            }
            auto it = std::find(names_.begin(), names_.end(), name);
            if (it == names_.end()) {
                throw SchemaError("unknown variable '" + name + "' in expression");
            }
            nodes.push_back(Node::var(static_cast<std::uint32_t>(it - names_.begin()), lag));
        } else if (auto s = function_from_name(head)) {
            nodes.push_back(Node::function(*s));
            for (std::size_t k = 0; k < arity(*s); ++k) {
                parse_node(nodes);
            }
        } else {
            fail("unknown symbol '" + head + "'");
        }
        expect(')');
    }

    std::string_view text_;
    std::span<const std::string> names_;
    std::size_t pos_ = 0;
};

} // namespace

std::string to_prefix(const ExpressionTree& tree, std::span<const std::string> names)
{
    std::string out;
    // children still owed by each open function node
    std::vector<std::size_t> remaining;
    for (const auto& n : tree.nodes()) {
        if (!remaining.empty()) {
            out += ' ';
        }
        out += '(';
        out += symbol_name(n.symbol);
        if (n.symbol == Symbol::constant) {
            out += ' ';
            append_double(out, n.value);
        } else if (n.symbol == Symbol::variable) {
            if (n.variable >= names.size()) {
                throw SchemaError("variable index " + std::to_string(n.variable) + " has no name");
            }
            out += ' ';
            append_name(out, names[n.variable]);
            out += ' ';
            out += std::to_string(n.lag);
        }
        if (arity(n.symbol) > 0) {
            remaining.push_back(arity(n.symbol));
            continue;
        }
        out += ')';
        // close every function whose children are now complete
        while (!remaining.empty() && --remaining.back() == 0) {
            remaining.pop_back();
            out += ')';
        }
    }
    return out;
}

ExpressionTree parse_prefix(std::string_view text, std::span<const std::string> names)
{
    return PrefixParser(text, names).parse();
}

} // namespace symreg
