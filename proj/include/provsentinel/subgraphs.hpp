#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "provsentinel/graph_store.hpp"

namespace provsentinel {

enum class Level { Minor = 0, Moderate = 1, Significant = 2, Critical = 3 };

const char* level_name(Level level);
Level level_from_name(const std::string& name);

struct SubgraphConfig {
  int n_seed = 15;
  std::size_t max_edges = 5000;
  // [0, t0) Minor, [t0, t1) Moderate, [t1, t2) Significant, [t2, ∞) Critical.
  std::array<double, 3> level_thresholds{10.0, 100.0, 1000.0};
  Level min_level = Level::Moderate;
};

struct AnomalousSubgraph {
  std::string id;  // assigned after ranking: "sg-001", ...
  std::vector<std::uint32_t> nodes;              // ascending
  std::vector<std::uint32_t> anomalous_members;  // subset of nodes, ascending
  std::vector<std::uint32_t> edges;              // parent edge ids, ascending
  double score = 0.0;
  Level level = Level::Minor;
  std::uint32_t seed = 0;  // seed node this candidate grew from
};

// Alg. lines 3–5: direct edges among anomalous nodes plus their one-hop
// neighbors with the boundary edges.
Subgraph build_initial_subgraph(const ProvenanceGraph& graph,
                                const std::vector<std::uint32_t>& anomalous);

// Per node type (type_vocab order): the n_seed highest-scoring anomalous
// nodes, descending score, ties by ascending node id string; concatenated.
std::vector<std::uint32_t> select_seeds(
    const ProvenanceGraph& graph,
    const std::map<std::uint32_t, double>& anomalous_scores, int n_seed);

// One seed expansion over init_SG under a snapshot of the visited set:
// keeps every length-1 path seed→u with u an unvisited anomalous node and
// every length-2 path seed→u→w with w unvisited anomalous (w ≠ seed), u any
// intermediate. The candidate holds exactly the path edges. `visited` is not
// mutated; the caller marks the seed and the candidate's anomalous members
// afterwards.
Subgraph expand_from_seed(const ProvenanceGraph& graph, const Subgraph& init_sg,
                          std::uint32_t seed,
                          const std::vector<char>& anomalous_flags,
                          const std::vector<char>& visited);

// Louvain partition of an oversized candidate; identity when already within
// max_edges. Cross-partition edges are dropped; every node keeps exactly one
// partition. Oversized communities split recursively with a BFS-chunk
// fallback, so every returned part has ≤ max_edges edges.
std::vector<Subgraph> partition_subgraph(const ProvenanceGraph& graph,
                                         const Subgraph& sg,
                                         std::size_t max_edges);

// score = Σ anomalous-member scores; level from the config's buckets.
std::pair<double, Level> score_and_level(
    const Subgraph& sg, const std::map<std::uint32_t, double>& anomalous_scores,
    const SubgraphConfig& config);

// Full orchestration: init subgraph, seed selection, expansion with global
// visited bookkeeping, partitioning, dedup on identical node sets (first
// kept), scoring, leveling, min-level filtering, stable sort by descending
// score, id assignment.
std::vector<AnomalousSubgraph> construct_anomalous_subgraphs(
    const ProvenanceGraph& graph,
    const std::map<std::uint32_t, double>& anomalous_scores,
    const SubgraphConfig& config);

// One JSON document per subgraph: nodes with type/attrs/score/tag, edges
// with action and timestamp, and a summary block (score/level/seed).
std::string subgraph_json(const ProvenanceGraph& graph,
                          const AnomalousSubgraph& sg);

}  // namespace provsentinel
