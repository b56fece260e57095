#include "provsentinel/louvain.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace provsentinel {

namespace {

struct WeightedEdge {
  std::uint32_t u;
  std::uint32_t v;
  double w;
};

std::vector<std::uint32_t> louvain_pass(std::size_t n,
                                        const std::vector<WeightedEdge>& edges);

// One level: local moves until stable, then aggregate and recurse.
std::vector<std::uint32_t> louvain_level(
    std::size_t n, const std::vector<WeightedEdge>& edges) {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj(n);
  double total_weight = 0.0;  // m
  std::vector<double> degree(n, 0.0);
  for (const auto& e : edges) {
    adj[e.u].push_back({e.v, e.w});
    adj[e.v].push_back({e.u, e.w});
    degree[e.u] += e.w;
    degree[e.v] += e.w;
    total_weight += e.w;
  }
  std::vector<std::uint32_t> comm(n);
  std::iota(comm.begin(), comm.end(), 0);
  if (total_weight <= 0.0) return comm;
  double m2 = 2.0 * total_weight;

  std::vector<double> comm_total = degree;  // Σ degrees per community
  bool moved_any_level = false;
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool moved = false;
    for (std::uint32_t i = 0; i < n; ++i) {
      // Weight from i into each adjacent community.
      std::map<std::uint32_t, double> to_comm;
      for (const auto& [j, w] : adj[i]) {
        if (j != i) to_comm[comm[j]] += w;
      }
      std::uint32_t own = comm[i];
      comm_total[own] -= degree[i];
      double best_gain = to_comm.count(own)
                             ? to_comm[own] - comm_total[own] * degree[i] / m2
                             : -comm_total[own] * degree[i] / m2;
      std::uint32_t best = own;
      for (const auto& [c, w] : to_comm) {
        double gain = w - comm_total[c] * degree[i] / m2;
        if (gain > best_gain + 1e-12 ||
            (std::abs(gain - best_gain) <= 1e-12 && c < best)) {
          best_gain = gain;
          best = c;
        }
      }
      comm_total[best] += degree[i];
      if (best != own) {
        comm[i] = best;
        moved = true;
        moved_any_level = true;
      }
    }
    if (!moved) break;
  }

  // Renumber communities by first appearance.
  std::vector<std::uint32_t> renumber(n, UINT32_MAX);
  std::uint32_t next_id = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (renumber[comm[i]] == UINT32_MAX) renumber[comm[i]] = next_id++;
    comm[i] = renumber[comm[i]];
  }
  if (!moved_any_level || next_id == n) return comm;

  // Aggregate communities into super-nodes and recurse.
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> agg;
  for (const auto& e : edges) {
    auto a = comm[e.u], b = comm[e.v];
    if (a > b) std::swap(a, b);
    agg[{a, b}] += e.w;
  }
  // Intra-community weight becomes a super-node self-loop; it contributes
  // to degrees and total weight but never to move gains.
  std::vector<WeightedEdge> super_edges;
  super_edges.reserve(agg.size());
  for (const auto& [key, w] : agg) {
    super_edges.push_back({key.first, key.second, w});
  }
  auto upper = louvain_pass(next_id, super_edges);
  for (auto& c : comm) c = upper[c];
  return comm;
}

std::vector<std::uint32_t> louvain_pass(
    std::size_t n, const std::vector<WeightedEdge>& edges) {
  auto comm = louvain_level(n, edges);
  std::vector<std::uint32_t> renumber(n, UINT32_MAX);
  std::uint32_t next_id = 0;
  for (auto& c : comm) {
    if (renumber[c] == UINT32_MAX) renumber[c] = next_id++;
    c = renumber[c];
  }
  return comm;
}

}  // namespace

std::vector<std::uint32_t> louvain_communities(
    std::size_t num_nodes,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  // Merge parallel edges into weights; drop self-loops.
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> merged;
  for (const auto& [u, v] : edges) {
    if (u == v) continue;
    auto a = u, b = v;
    if (a > b) std::swap(a, b);
    merged[{a, b}] += 1.0;
  }
  std::vector<WeightedEdge> weighted;
  weighted.reserve(merged.size());
  for (const auto& [key, w] : merged) {
    weighted.push_back({key.first, key.second, w});
  }
  return louvain_pass(num_nodes, weighted);
}

}  // namespace provsentinel
