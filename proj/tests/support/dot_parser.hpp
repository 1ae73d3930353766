#pragma once

// Minimal DOT reader for the subset the network emitter produces:
//   digraph ID { stmt* }   stmt := node_id [attrs]? ';' | node_id '->' node_id [attrs]? ';'
// with quoted or bare identifiers and key=value attribute lists.

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace dot {

struct Graph {
    std::set<std::string> nodes;
    std::set<std::pair<std::string, std::string>> edges;
    std::map<std::pair<std::string, std::string>, std::string> labels;
};

class Reader {
public:
    explicit Reader(const std::string& text) : s_(text) {}

    Graph parse()
    {
        Graph g;
        expect_word("digraph");
        if (peek() != '{') identifier();
        expect('{');
        while (peek() != '}') {
            const auto a = identifier();
            if (peek() == '-') {
                expect('-');
                expect('>');
                const auto b = identifier();
                g.edges.insert({ a, b });
                auto attrs = attributes();
                if (attrs.contains("label")) g.labels[{ a, b }] = attrs["label"];
                g.nodes.insert(a);
                g.nodes.insert(b);
            } else {
                attributes();
                g.nodes.insert(a);
            }
            if (peek() == ';') expect(';');
        }
        expect('}');
        skip_ws();
        if (pos_ != s_.size()) throw std::runtime_error("trailing text after graph");
        return g;
    }

private:
    void skip_ws()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    char peek()
    {
        skip_ws();
        if (pos_ >= s_.size()) throw std::runtime_error("unexpected end of input");
        return s_[pos_];
    }
    void expect(char c)
    {
        if (peek() != c) throw std::runtime_error(std::string("expected '") + c + "' at " + std::to_string(pos_));
        ++pos_;
    }
    void expect_word(const std::string& w)
    {
        skip_ws();
        if (s_.compare(pos_, w.size(), w) != 0) throw std::runtime_error("expected " + w);
        pos_ += w.size();
    }
    std::string identifier()
    {
        if (peek() == '"') {
            ++pos_;
            std::string out;
            while (pos_ < s_.size() && s_[pos_] != '"') {
                if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
                out += s_[pos_++];
            }
            if (pos_ >= s_.size()) throw std::runtime_error("unterminated string");
            ++pos_;
            return out;
        }
        std::string out;
        while (pos_ < s_.size()
               && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '.')) {
            out += s_[pos_++];
        }
        if (out.empty()) throw std::runtime_error("expected identifier at " + std::to_string(pos_));
        return out;
    }
    std::map<std::string, std::string> attributes()
    {
        std::map<std::string, std::string> out;
        if (peek() != '[') return out;
        expect('[');
        while (peek() != ']') {
            const auto key = identifier();
            expect('=');
            out[key] = identifier();
            if (peek() == ',') expect(',');
        }
        expect(']');
        return out;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

inline Graph parse(const std::string& text)
{
    return Reader(text).parse();
}

} // namespace dot
