#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "symreg/relevance.hpp"

namespace symreg {

struct Edge {
    std::string source;
    std::string target;
    double weight = 0.0;

    bool operator==(const Edge&) const = default;
};

// Directed variable interaction network: source -> target when source is one
// of the k most relevant inputs of target. Nodes and edges are kept sorted.
struct InteractionNetwork {
    std::vector<std::string> nodes;
    std::vector<Edge> edges;
    std::size_t k = 3;
};

// Per target, the k largest non-zero mean relevances (ties by name). Self
// references are never selected. Throws UsageError for k == 0 or duplicate
// targets.
InteractionNetwork build_network(std::span<const AggregatedRelevance> aggregates, std::size_t k);

struct DotOptions {
    bool label_weights = true;
};

// GraphViz DOT text; byte-deterministic for a given network.
std::string to_dot(const InteractionNetwork& network, const DotOptions& options = {});

// source,target,weight rows with a header line.
std::string to_edge_csv(const InteractionNetwork& network);

} // namespace symreg
