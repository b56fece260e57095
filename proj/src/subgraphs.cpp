#include "provsentinel/subgraphs.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "provsentinel/louvain.hpp"

namespace provsentinel {

const char* level_name(Level level) {
  switch (level) {
    case Level::Minor: return "Minor";
    case Level::Moderate: return "Moderate";
    case Level::Significant: return "Significant";
    case Level::Critical: return "Critical";
  }
  return "Minor";
}

Level level_from_name(const std::string& name) {
  for (Level l : {Level::Minor, Level::Moderate, Level::Significant,
                  Level::Critical}) {
    if (name == level_name(l)) return l;
  }
  throw std::invalid_argument("unknown abnormality level '" + name + "'");
}

Subgraph build_initial_subgraph(const ProvenanceGraph& graph,
                                const std::vector<std::uint32_t>& anomalous) {
  auto direct = query_direct_edges(graph, anomalous);
  auto hop = query_one_hop(graph, anomalous);

  std::set<std::uint32_t> nodes(anomalous.begin(), anomalous.end());
  nodes.insert(hop.neighbors.begin(), hop.neighbors.end());
  std::set<std::uint32_t> edges(direct.begin(), direct.end());
  edges.insert(hop.boundary_edges.begin(), hop.boundary_edges.end());

  Subgraph sg;
  sg.nodes.assign(nodes.begin(), nodes.end());
  sg.edges.assign(edges.begin(), edges.end());
  return sg;
}

std::vector<std::uint32_t> select_seeds(
    const ProvenanceGraph& graph,
    const std::map<std::uint32_t, double>& anomalous_scores, int n_seed) {
  std::vector<std::uint32_t> seeds;
  for (std::uint32_t t = 0; t < graph.type_vocab().size(); ++t) {
    std::vector<std::uint32_t> of_type;
    for (const auto& [node, score] : anomalous_scores) {
      if (graph.node(node).type == t) of_type.push_back(node);
    }
    std::sort(of_type.begin(), of_type.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                double sa = anomalous_scores.at(a), sb = anomalous_scores.at(b);
                if (sa != sb) return sa > sb;
                return graph.node(a).id < graph.node(b).id;
              });
    if (of_type.size() > static_cast<std::size_t>(n_seed)) {
      of_type.resize(static_cast<std::size_t>(n_seed));
    }
    seeds.insert(seeds.end(), of_type.begin(), of_type.end());
  }
  return seeds;
}

Subgraph expand_from_seed(const ProvenanceGraph& graph, const Subgraph& init_sg,
                          std::uint32_t seed,
                          const std::vector<char>& anomalous_flags,
                          const std::vector<char>& visited) {
  // Adjacency restricted to init_SG edges.
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> adj;
  for (auto e : init_sg.edges) {
    adj[graph.edge(e).src].push_back(e);
    adj[graph.edge(e).dst].push_back(e);
  }
  auto other_end = [&](std::uint32_t e, std::uint32_t v) {
    const Edge& edge = graph.edge(e);
    return edge.src == v ? edge.dst : edge.src;
  };
  auto target_of = [&](std::uint32_t v) {
    return anomalous_flags[v] && !visited[v];
  };

  std::set<std::uint32_t> nodes{seed};
  std::set<std::uint32_t> edges;
  auto seed_it = adj.find(seed);
  if (seed_it != adj.end()) {
    for (auto e1 : seed_it->second) {
      std::uint32_t u = other_end(e1, seed);
      if (u == seed) continue;
      // Length-1 path to an unvisited anomalous neighbor.
      if (target_of(u)) {
        nodes.insert(u);
        edges.insert(e1);
      }
      // Length-2 paths seed→u→w with w an unvisited anomalous node.
      auto u_it = adj.find(u);
      if (u_it == adj.end()) continue;
      for (auto e2 : u_it->second) {
        std::uint32_t w = other_end(e2, u);
        if (w == seed || w == u) continue;
        if (target_of(w)) {
          nodes.insert(u);
          nodes.insert(w);
          edges.insert(e1);
          edges.insert(e2);
        }
      }
    }
  }
  Subgraph sg;
  sg.nodes.assign(nodes.begin(), nodes.end());
  sg.edges.assign(edges.begin(), edges.end());
  return sg;
}

namespace {

// Induced partition member: community nodes plus the sg edges internal to it.
Subgraph induced_part(const ProvenanceGraph& graph, const Subgraph& sg,
                      const std::vector<std::uint32_t>& members) {
  std::unordered_set<std::uint32_t> in(members.begin(), members.end());
  Subgraph part;
  part.nodes = members;
  std::sort(part.nodes.begin(), part.nodes.end());
  for (auto e : sg.edges) {
    if (in.count(graph.edge(e).src) && in.count(graph.edge(e).dst)) {
      part.edges.push_back(e);
    }
  }
  return part;
}

// Fallback when community detection cannot split: BFS over the undirected
// adjacency, cutting every max_edges edges in discovery order. Isolated
// nodes are gathered into one final edgeless part.
std::vector<Subgraph> bfs_edge_chunks(const ProvenanceGraph& graph,
                                      const Subgraph& sg,
                                      std::size_t max_edges) {
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> adj;
  for (auto e : sg.edges) {
    adj[graph.edge(e).src].push_back(e);
    adj[graph.edge(e).dst].push_back(e);
  }
  std::unordered_set<std::uint32_t> edge_seen;
  std::unordered_set<std::uint32_t> node_seen;
  std::vector<std::vector<std::uint32_t>> chunks;
  std::vector<std::uint32_t> current;

  for (auto start : sg.nodes) {
    if (node_seen.count(start) || !adj.count(start)) continue;
    std::deque<std::uint32_t> queue{start};
    node_seen.insert(start);
    while (!queue.empty()) {
      std::uint32_t v = queue.front();
      queue.pop_front();
      for (auto e : adj[v]) {
        if (!edge_seen.insert(e).second) continue;
        current.push_back(e);
        if (current.size() == max_edges) {
          chunks.push_back(std::move(current));
          current.clear();
        }
        const Edge& edge = graph.edge(e);
        for (auto next : {edge.src, edge.dst}) {
          if (node_seen.insert(next).second) queue.push_back(next);
        }
      }
    }
  }
  if (!current.empty()) chunks.push_back(std::move(current));

  std::vector<Subgraph> parts;
  for (auto& chunk : chunks) {
    Subgraph part;
    std::set<std::uint32_t> nodes;
    for (auto e : chunk) {
      nodes.insert(graph.edge(e).src);
      nodes.insert(graph.edge(e).dst);
    }
    part.nodes.assign(nodes.begin(), nodes.end());
    std::sort(chunk.begin(), chunk.end());
    part.edges = std::move(chunk);
    parts.push_back(std::move(part));
  }
  std::vector<std::uint32_t> isolated;
  for (auto v : sg.nodes) {
    if (!adj.count(v)) isolated.push_back(v);
  }
  if (!isolated.empty()) {
    Subgraph part;
    part.nodes = std::move(isolated);
    parts.push_back(std::move(part));
  }
  return parts;
}

}  // namespace

std::vector<Subgraph> partition_subgraph(const ProvenanceGraph& graph,
                                         const Subgraph& sg,
                                         std::size_t max_edges) {
  if (sg.edges.size() <= max_edges) return {sg};

  // Local indices for the community detector.
  std::unordered_map<std::uint32_t, std::uint32_t> local;
  for (std::uint32_t i = 0; i < sg.nodes.size(); ++i) local[sg.nodes[i]] = i;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> proj;
  proj.reserve(sg.edges.size());
  for (auto e : sg.edges) {
    proj.emplace_back(local.at(graph.edge(e).src), local.at(graph.edge(e).dst));
  }
  auto comm = louvain_communities(sg.nodes.size(), proj);
  std::uint32_t num_comm = comm.empty()
                               ? 0
                               : *std::max_element(comm.begin(), comm.end()) + 1;
  if (num_comm <= 1) return bfs_edge_chunks(graph, sg, max_edges);

  std::vector<std::vector<std::uint32_t>> members(num_comm);
  for (std::uint32_t i = 0; i < sg.nodes.size(); ++i) {
    members[comm[i]].push_back(sg.nodes[i]);
  }
  std::vector<Subgraph> parts;
  for (const auto& m : members) {
    Subgraph part = induced_part(graph, sg, m);
    if (part.edges.size() <= max_edges) {
      parts.push_back(std::move(part));
    } else {
      // Recurse; if the community refuses to split further, the recursive
      // call falls back to BFS chunks.
      auto sub = partition_subgraph(graph, part, max_edges);
      if (sub.size() == 1 && sub[0].edges.size() > max_edges) {
        sub = bfs_edge_chunks(graph, part, max_edges);
      }
      for (auto& s : sub) parts.push_back(std::move(s));
    }
  }
  return parts;
}

std::pair<double, Level> score_and_level(
    const Subgraph& sg, const std::map<std::uint32_t, double>& anomalous_scores,
    const SubgraphConfig& config) {
  double score = 0.0;
  for (auto v : sg.nodes) {
    auto it = anomalous_scores.find(v);
    if (it != anomalous_scores.end()) score += it->second;
  }
  Level level = Level::Minor;
  if (score >= config.level_thresholds[2]) {
    level = Level::Critical;
  } else if (score >= config.level_thresholds[1]) {
    level = Level::Significant;
  } else if (score >= config.level_thresholds[0]) {
    level = Level::Moderate;
  }
  return {score, level};
}

std::vector<AnomalousSubgraph> construct_anomalous_subgraphs(
    const ProvenanceGraph& graph,
    const std::map<std::uint32_t, double>& anomalous_scores,
    const SubgraphConfig& config) {
  std::vector<AnomalousSubgraph> result;
  if (anomalous_scores.empty()) return result;

  std::vector<std::uint32_t> anomalous;
  anomalous.reserve(anomalous_scores.size());
  for (const auto& [node, score] : anomalous_scores) anomalous.push_back(node);

  Subgraph init_sg = build_initial_subgraph(graph, anomalous);
  auto seeds = select_seeds(graph, anomalous_scores, config.n_seed);

  std::vector<char> anomalous_flags(graph.node_count(), 0);
  for (auto v : anomalous) anomalous_flags[v] = 1;
  std::vector<char> visited(graph.node_count(), 0);

  struct Candidate {
    Subgraph sg;
    std::uint32_t seed;
  };
  std::vector<Candidate> candidates;
  for (auto seed : seeds) {
    // A seed absorbed by an earlier expansion is already accounted for;
    // re-expanding it would double-count its score.
    if (visited[seed]) continue;
    Subgraph candidate =
        expand_from_seed(graph, init_sg, seed, anomalous_flags, visited);
    visited[seed] = 1;
    for (auto v : candidate.nodes) {
      if (anomalous_flags[v]) visited[v] = 1;
    }
    if (candidate.edges.size() <= config.max_edges) {
      candidates.push_back({std::move(candidate), seed});
    } else {
      for (auto& part :
           partition_subgraph(graph, candidate, config.max_edges)) {
        candidates.push_back({std::move(part), seed});
      }
    }
  }

  // Dedup on identical node sets, keeping the first occurrence.
  std::set<std::vector<std::uint32_t>> seen;
  std::vector<AnomalousSubgraph> kept;
  for (auto& c : candidates) {
    if (!seen.insert(c.sg.nodes).second) continue;
    AnomalousSubgraph sg;
    sg.nodes = std::move(c.sg.nodes);
    sg.edges = std::move(c.sg.edges);
    sg.seed = c.seed;
    for (auto v : sg.nodes) {
      if (anomalous_flags[v]) sg.anomalous_members.push_back(v);
    }
    auto [score, level] = score_and_level(
        Subgraph{sg.nodes, sg.edges}, anomalous_scores, config);
    sg.score = score;
    sg.level = level;
    if (sg.level >= config.min_level) kept.push_back(std::move(sg));
  }

  std::stable_sort(kept.begin(), kept.end(),
                   [](const AnomalousSubgraph& a, const AnomalousSubgraph& b) {
                     return a.score > b.score;
                   });
  for (std::size_t i = 0; i < kept.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "sg-%03zu", i + 1);
    kept[i].id = buf;
  }
  return kept;
}

std::string subgraph_json(const ProvenanceGraph& graph,
                          const AnomalousSubgraph& sg) {
  nlohmann::json j;
  j["summary"] = {{"id", sg.id},
                  {"score", sg.score},
                  {"level", level_name(sg.level)},
                  {"seed", graph.node(sg.seed).id},
                  {"node_count", sg.nodes.size()},
                  {"edge_count", sg.edges.size()}};
  std::set<std::uint32_t> anomalous(sg.anomalous_members.begin(),
                                    sg.anomalous_members.end());
  nlohmann::json nodes = nlohmann::json::array();
  for (auto v : sg.nodes) {
    const Node& n = graph.node(v);
    nodes.push_back({{"id", n.id},
                     {"type", graph.type_name(n.type)},
                     {"attrs", n.attrs},
                     {"tag", anomalous.count(v) ? "anomalous" : "benign"}});
  }
  j["nodes"] = std::move(nodes);
  nlohmann::json edges = nlohmann::json::array();
  for (auto e : sg.edges) {
    const Edge& edge = graph.edge(e);
    edges.push_back({{"src", graph.node(edge.src).id},
                     {"action", graph.action_name(edge.action)},
                     {"dst", graph.node(edge.dst).id},
                     {"timestamp_us", edge.timestamp_us}});
  }
  j["edges"] = std::move(edges);
  return j.dump(2);
}

}  // namespace provsentinel
