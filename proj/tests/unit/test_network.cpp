#include <doctest.h>

#include <map>
#include <random>

#include "dot_parser.hpp"
#include "symreg/error.hpp"
#include "symreg/network.hpp"

using namespace symreg;

namespace {

AggregatedRelevance agg(std::string target, RelevanceVector mean)
{
    return { std::move(target), {}, std::move(mean) };
}

std::size_t in_degree(const InteractionNetwork& n, const std::string& node)
{
    std::size_t d = 0;
    for (const auto& e : n.edges) d += e.target == node;
    return d;
}

} // namespace

TEST_CASE("top-k selection")
{
    const std::vector<AggregatedRelevance> in { agg("b", { { "x", 0.5 }, { "y", 0.3 }, { "z", 0.15 }, { "w", 0.05 } }) };
    const auto net = build_network(in, 3);
    REQUIRE(net.edges.size() == 3);
    CHECK(net.edges[0] == Edge { "x", "b", 0.5 });
    CHECK(net.edges[1] == Edge { "y", "b", 0.3 });
    CHECK(net.edges[2] == Edge { "z", "b", 0.15 });
    CHECK(net.nodes == std::vector<std::string> { "b", "w", "x", "y", "z" });
}

TEST_CASE("zero relevances never become edges")
{
    const std::vector<AggregatedRelevance> in { agg("b", { { "x", 0.0 }, { "y", 1.0 }, { "z", 0.0 } }) };
    const auto net = build_network(in, 1);
    REQUIRE(net.edges.size() == 1);
    CHECK(net.edges[0].source == "y");
    CHECK(build_network(in, 3).edges.size() == 1);
}

TEST_CASE("ties are broken by name and self edges are excluded")
{
    const std::vector<AggregatedRelevance> in { agg("t", { { "c", 0.25 }, { "a", 0.25 }, { "b", 0.25 }, { "t", 0.25 } }) };
    const auto net = build_network(in, 2);
    REQUIRE(net.edges.size() == 2);
    CHECK(net.edges[0].source == "a");
    CHECK(net.edges[1].source == "b");
}

TEST_CASE("double-linked pair")
{
    const std::vector<AggregatedRelevance> in { agg("a", { { "b", 0.9 }, { "c", 0.1 } }),
                                                agg("b", { { "a", 0.8 }, { "c", 0.2 } }) };
    const auto net = build_network(in, 1);
    REQUIRE(net.edges.size() == 2);
    CHECK(net.edges[0] == Edge { "a", "b", 0.8 });
    CHECK(net.edges[1] == Edge { "b", "a", 0.9 });
}

TEST_CASE("network errors")
{
    const std::vector<AggregatedRelevance> dup { agg("a", { { "b", 1 } }), agg("a", { { "b", 1 } }) };
    CHECK_THROWS_AS(build_network(dup, 3), UsageError);
    CHECK_THROWS_AS(build_network(std::vector<AggregatedRelevance> {}, 0), UsageError);
}

TEST_CASE("DOT output")
{
    SUBCASE("empty network")
    {
        const auto text = to_dot(InteractionNetwork {});
        CHECK(text == "digraph G {\n}\n");
        const auto g = dot::parse(text);
        CHECK(g.nodes.empty());
    }
    SUBCASE("single weighted edge")
    {
        const auto net = build_network(std::vector<AggregatedRelevance> { agg("y", { { "x", 0.5 } }) }, 3);
        const auto text = to_dot(net);
        CHECK(text.find("\"x\" -> \"y\" [label=\"0.500\"];") != std::string::npos);
        CHECK(to_dot(net, DotOptions { false }).find("label") == std::string::npos);
        const auto g = dot::parse(text);
        CHECK(g.labels.at({ "x", "y" }) == "0.500");
    }
    SUBCASE("quoted identifiers round trip")
    {
        const auto net = build_network(
            std::vector<AggregatedRelevance> { agg("a \"b\"", { { "back\\slash", 0.7 }, { "c d", 0.3 } }) }, 3);
        const auto g = dot::parse(to_dot(net));
        CHECK(g.edges.contains({ "back\\slash", "a \"b\"" }));
        CHECK(g.edges.contains({ "c d", "a \"b\"" }));
    }
}

TEST_CASE("33-variable network: parse round trip, in-degree and scale invariance")
{
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::string> names;
    for (int i = 0; i < 33; ++i) names.push_back("v" + std::to_string(i));
    std::vector<AggregatedRelevance> in, scaled;
    for (const auto& t : names) {
        RelevanceVector r, s;
        for (const auto& v : names) {
            if (v == t) continue;
            const double w = u(rng) < 0.3 ? 0.0 : u(rng);
            r[v] = w;
            s[v] = 7.5 * w;
        }
        in.push_back(agg(t, r));
        scaled.push_back(agg(t, s));
    }
    const auto net = build_network(in, 3);
    const auto text = to_dot(net);
    const auto g = dot::parse(text);
    CHECK(g.nodes.size() == 33);
    CHECK(net.edges.size() <= 99);
    std::set<std::pair<std::string, std::string>> edges;
    for (const auto& e : net.edges) {
        edges.insert({ e.source, e.target });
        CHECK(e.weight > 0.0);
        CHECK(e.source != e.target);
    }
    CHECK(g.edges == edges);
    for (const auto& n : names) CHECK(in_degree(net, n) <= 3);

    const auto net2 = build_network(scaled, 3);
    std::set<std::pair<std::string, std::string>> edges2;
    for (const auto& e : net2.edges) edges2.insert({ e.source, e.target });
    CHECK(edges2 == edges);
    CHECK(to_dot(build_network(in, 3)) == text);
}

TEST_CASE("edge CSV export")
{
    const auto net = build_network(std::vector<AggregatedRelevance> { agg("y", { { "x,1", 0.25 } }) }, 3);
    CHECK(to_edge_csv(net) == "source,target,weight\n\"x,1\",y,0.25\n");
}
