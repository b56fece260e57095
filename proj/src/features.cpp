#include "provsentinel/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace provsentinel {

namespace {

std::vector<std::int64_t> node_gaps(const ProvenanceGraph& graph,
                                    std::uint32_t node) {
  std::vector<std::int64_t> times;
  times.reserve(graph.out_edges(node).size() + graph.in_edges(node).size());
  for (auto e : graph.out_edges(node)) times.push_back(graph.edge(e).timestamp_us);
  for (auto e : graph.in_edges(node)) times.push_back(graph.edge(e).timestamp_us);
  std::sort(times.begin(), times.end());
  std::vector<std::int64_t> gaps;
  if (times.size() < 2) return gaps;
  gaps.reserve(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) {
    gaps.push_back(times[i] - times[i - 1]);
  }
  return gaps;
}

// Identity map when no override; otherwise old index -> new index, with
// UINT32_MAX marking labels absent from the override vocabulary.
std::vector<std::uint32_t> build_remap(const std::vector<std::string>& own,
                                       const std::vector<std::string>* target,
                                       bool absent_is_error,
                                       const char* what) {
  std::vector<std::uint32_t> remap(own.size());
  if (!target) {
    for (std::uint32_t i = 0; i < own.size(); ++i) remap[i] = i;
    return remap;
  }
  std::unordered_map<std::string, std::uint32_t> index;
  for (std::uint32_t i = 0; i < target->size(); ++i) index[(*target)[i]] = i;
  for (std::uint32_t i = 0; i < own.size(); ++i) {
    auto it = index.find(own[i]);
    if (it != index.end()) {
      remap[i] = it->second;
    } else if (absent_is_error) {
      throw std::runtime_error(std::string(what) + " '" + own[i] +
                               "' absent from the model vocabulary");
    } else {
      remap[i] = UINT32_MAX;
    }
  }
  return remap;
}

std::vector<double> action_frequency_mapped(
    const ProvenanceGraph& graph, std::uint32_t node,
    const std::vector<std::uint32_t>& action_remap, std::size_t vocab_size) {
  std::vector<double> counts(vocab_size, 0.0);
  double total = 0.0;
  for (auto e : graph.out_edges(node)) {
    std::uint32_t a = action_remap[graph.edge(e).action];
    if (a == UINT32_MAX) continue;
    counts[a] += 1.0;
    total += 1.0;
  }
  if (total == 0.0) return counts;
  double norm_sq = 0.0;
  for (auto& c : counts) {
    c /= total;
    norm_sq += c * c;
  }
  double norm = std::sqrt(norm_sq);
  for (auto& c : counts) c /= norm;
  return counts;
}

}  // namespace

std::vector<double> action_frequency(const ProvenanceGraph& graph,
                                     std::uint32_t node) {
  std::vector<std::uint32_t> identity(graph.edge_vocab().size());
  for (std::uint32_t i = 0; i < identity.size(); ++i) identity[i] = i;
  return action_frequency_mapped(graph, node, identity,
                                 graph.edge_vocab().size());
}

std::array<double, 3> idle_stats(const ProvenanceGraph& graph,
                                 std::uint32_t node,
                                 const IdleScaler& scaler) {
  auto gaps = node_gaps(graph, node);
  if (gaps.empty()) return {0.0, 0.0, 0.0};
  std::int64_t mn = gaps[0], mx = gaps[0];
  double sum = 0.0;
  for (auto g : gaps) {
    mn = std::min(mn, g);
    mx = std::max(mx, g);
    sum += static_cast<double>(g);
  }
  double mean = sum / static_cast<double>(gaps.size());
  // Scale the mean in double space with the same clamp semantics.
  auto scale_d = [&](double gap) {
    if (scaler.max_us <= scaler.min_us) return 0.0;
    double x = (gap - static_cast<double>(scaler.min_us)) /
               static_cast<double>(scaler.max_us - scaler.min_us);
    return std::clamp(x, 0.0, 1.0);
  };
  return {scaler.scale(mn), scaler.scale(mx), scale_d(mean)};
}

IdleScaler fit_idle_scaler(const ProvenanceGraph& graph) {
  IdleScaler scaler;
  bool seen = false;
  for (std::uint32_t v = 0; v < graph.node_count(); ++v) {
    for (auto gap : node_gaps(graph, v)) {
      if (!seen) {
        scaler.min_us = scaler.max_us = gap;
        seen = true;
      } else {
        scaler.min_us = std::min(scaler.min_us, gap);
        scaler.max_us = std::max(scaler.max_us, gap);
      }
    }
  }
  return scaler;
}

EncodedGraph encode_graph(const ProvenanceGraph& graph,
                          const EncodeOptions& options) {
  if (graph.node_count() == 0) {
    throw std::runtime_error("encode_graph: graph has no nodes");
  }
  EncodedGraph enc;
  enc.type_vocab =
      options.type_vocab ? *options.type_vocab : graph.type_vocab();
  enc.edge_vocab =
      options.edge_vocab ? *options.edge_vocab : graph.edge_vocab();
  enc.feature_width = enc.edge_vocab.size() + 3;
  enc.scaler = options.scaler ? *options.scaler : fit_idle_scaler(graph);

  auto type_remap = build_remap(graph.type_vocab(), options.type_vocab,
                                /*absent_is_error=*/true, "node type");
  auto action_remap = build_remap(graph.edge_vocab(), options.edge_vocab,
                                  /*absent_is_error=*/false, "action");

  std::size_t num_types = enc.type_vocab.size();
  enc.type_nodes.assign(num_types, {});
  for (std::uint32_t v = 0; v < graph.node_count(); ++v) {
    enc.type_nodes[type_remap[graph.node(v).type]].push_back(v);
  }
  enc.row_offset.assign(num_types, 0);
  std::size_t offset = 0;
  for (std::size_t t = 0; t < num_types; ++t) {
    enc.row_offset[t] = offset;
    offset += enc.type_nodes[t].size();
  }
  enc.row_of_node.assign(graph.node_count(), 0);
  for (std::size_t t = 0; t < num_types; ++t) {
    for (std::size_t i = 0; i < enc.type_nodes[t].size(); ++i) {
      enc.row_of_node[enc.type_nodes[t][i]] =
          static_cast<std::uint32_t>(enc.row_offset[t] + i);
    }
  }

  std::size_t n = graph.node_count();
  enc.features.setZero(static_cast<Eigen::Index>(n),
                       static_cast<Eigen::Index>(enc.feature_width));
  std::size_t e_vocab = enc.edge_vocab.size();
  for (std::uint32_t v = 0; v < n; ++v) {
    Eigen::Index row = enc.row_of_node[v];
    auto freq = action_frequency_mapped(graph, v, action_remap, e_vocab);
    for (std::size_t j = 0; j < e_vocab; ++j) {
      enc.features(row, static_cast<Eigen::Index>(j)) = freq[j];
    }
    auto idle = idle_stats(graph, v, enc.scaler);
    for (std::size_t j = 0; j < 3; ++j) {
      enc.features(row, static_cast<Eigen::Index>(e_vocab + j)) = idle[j];
    }
  }

  std::size_t num_relations = 2 * e_vocab + 1;
  enc.relations.assign(num_relations, {});
  for (const auto& edge : graph.edges()) {
    std::uint32_t a = action_remap[edge.action];
    if (a == UINT32_MAX) continue;
    std::uint32_t src_row = enc.row_of_node[edge.src];
    std::uint32_t dst_row = enc.row_of_node[edge.dst];
    enc.relations[a].emplace_back(src_row, dst_row);
    enc.relations[e_vocab + a].emplace_back(dst_row, src_row);
  }
  auto& self = enc.relations[2 * e_vocab];
  self.reserve(n);
  for (std::uint32_t row = 0; row < n; ++row) self.emplace_back(row, row);

  enc.relation_indegree.assign(num_relations,
                               std::vector<std::uint32_t>(n, 0));
  for (std::size_t r = 0; r < num_relations; ++r) {
    for (const auto& [src, dst] : enc.relations[r]) {
      ++enc.relation_indegree[r][dst];
    }
  }
  return enc;
}

}  // namespace provsentinel
