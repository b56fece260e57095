#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "provsentinel/graph_store.hpp"

namespace provsentinel {

// Min-max scaler over idle gaps, fitted once on the training graph and
// persisted in the model snapshot. Out-of-range inference gaps clamp to
// [0,1]; a degenerate range (max == min) scales everything to 0.
struct IdleScaler {
  std::int64_t min_us = 0;
  std::int64_t max_us = 0;

  double scale(std::int64_t gap_us) const {
    if (max_us <= min_us) return 0.0;
    double x = static_cast<double>(gap_us - min_us) /
               static_cast<double>(max_us - min_us);
    if (x < 0.0) return 0.0;
    if (x > 1.0) return 1.0;
    return x;
  }
};

struct NodeFeatures {
  std::vector<double> action_freq;  // length |edge_vocab|, L2-normalized
  std::array<double, 3> idle_stats{0, 0, 0};  // scaled (min, max, mean)
};

// Graph encoded for the relational GNN. Rows are stacked by node type in
// type_vocab order. Relation ids: [0,E) forward actions, [E,2E) inverses,
// 2E the self-loop relation, where E = |edge_vocab|.
struct EncodedGraph {
  std::vector<std::string> type_vocab;
  std::vector<std::string> edge_vocab;
  std::size_t feature_width = 0;  // |edge_vocab| + 3

  std::vector<std::vector<std::uint32_t>> type_nodes;  // type -> node indices
  std::vector<std::uint32_t> row_of_node;              // node index -> row
  std::vector<std::size_t> row_offset;                 // type -> first row
  Eigen::MatrixXd features;                            // N x feature_width

  // relation -> list of (src_row, dst_row); a row aggregates the mean of
  // messages arriving at it (dst side). The self relation is explicit.
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> relations;
  std::vector<std::vector<std::uint32_t>> relation_indegree;  // per dst row

  IdleScaler scaler;

  std::size_t num_rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t num_relations() const { return relations.size(); }
  // Feature block of one node type (rows are that type's nodes, in
  // type_nodes order).
  Eigen::Block<const Eigen::MatrixXd> type_features(std::size_t t) const {
    return features.block(static_cast<Eigen::Index>(row_offset[t]), 0,
                          static_cast<Eigen::Index>(type_nodes[t].size()),
                          features.cols());
  }
};

struct EncodeOptions {
  // Inference: reuse the training scaler instead of refitting.
  const IdleScaler* scaler = nullptr;
  // Inference: encode against the model's vocabularies. Node types absent
  // from the override are an error; actions absent from it are ignored
  // (no feature column, no relation).
  const std::vector<std::string>* type_vocab = nullptr;
  const std::vector<std::string>* edge_vocab = nullptr;
};

// Subject-role action proportions, L2-normalized; zero vector when the node
// performs no actions.
std::vector<double> action_frequency(const ProvenanceGraph& graph,
                                     std::uint32_t node);

// Scaled (min, max, mean) of successive timestamp gaps over the node's
// events in both roles; (0,0,0) for nodes with fewer than two events.
std::array<double, 3> idle_stats(const ProvenanceGraph& graph,
                                 std::uint32_t node, const IdleScaler& scaler);

// One global (min,max) over the successive gaps of every node.
IdleScaler fit_idle_scaler(const ProvenanceGraph& graph);

EncodedGraph encode_graph(const ProvenanceGraph& graph,
                          const EncodeOptions& options = {});

}  // namespace provsentinel
