#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace provsentinel {

// Deterministic Louvain community detection over an undirected unit-weight
// projection. Nodes are swept in ascending index order, modularity-gain ties
// break toward the smallest community id, and aggregation recurses until
// stable, so the partition is a pure function of the input. Self-loops are
// ignored (they never affect community assignment). Returns one community id
// per node, renumbered by first appearance.
std::vector<std::uint32_t> louvain_communities(
    std::size_t num_nodes,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

}  // namespace provsentinel
