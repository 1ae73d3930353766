#include "symreg/network.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <set>

#include "symreg/error.hpp"

namespace symreg {

InteractionNetwork build_network(std::span<const AggregatedRelevance> aggregates, std::size_t k)
{
    if (k == 0) {
        throw UsageError("network k must be at least 1");
    }
    InteractionNetwork net;
    net.k = k;
    std::set<std::string> nodes;
    std::set<std::string> targets;
    for (const auto& agg : aggregates) {
        if (!targets.insert(agg.target).second) {
            throw UsageError("duplicate target '" + agg.target + "' in network input");
        }
        nodes.insert(agg.target);
        std::vector<std::pair<std::string, double>> ranked;
        for (const auto& [name, weight] : agg.mean) {
            nodes.insert(name);
            if (name != agg.target && weight > 0.0) {
                ranked.emplace_back(name, weight);
            }
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        ranked.resize(std::min(ranked.size(), k));
        for (auto& [name, weight] : ranked) {
            net.edges.push_back({ name, agg.target, weight });
        }
    }
    net.nodes.assign(nodes.begin(), nodes.end());
    std::sort(net.edges.begin(), net.edges.end(), [](const Edge& a, const Edge& b) {
        return a.source != b.source ? a.source < b.source : a.target < b.target;
    });
    return net;
}

namespace {

std::string quote(const std::string& id)
{
    std::string out = "\"";
    for (char c : id) {
        if (c == '"' || c == '\\') {
            out += '\\';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string fixed3(double v)
{
    std::array<char, 64> buf {};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 3);
    return std::string(buf.data(), end);
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string to_dot(const InteractionNetwork& network, const DotOptions& options)
{
    std::string out = "digraph G {\n";
    for (const auto& n : network.nodes) {
        out += "  " + quote(n) + ";\n";
    }
    for (const auto& e : network.edges) {
        out += "  " + quote(e.source) + " -> " + quote(e.target);
        if (options.label_weights) {
            out += " [label=\"" + fixed3(e.weight) + "\"]";
        }
        out += ";\n";
    }
    out += "}\n";
    return out;
}

std::string to_edge_csv(const InteractionNetwork& network)
{
    std::string out = "source,target,weight\n";
    std::array<char, 64> buf {};
    for (const auto& e : network.edges) {
        auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), e.weight);
        out += csv_field(e.source) + "," + csv_field(e.target) + "," + std::string(buf.data(), end) + "\n";
    }
    return out;
}

} // namespace symreg
