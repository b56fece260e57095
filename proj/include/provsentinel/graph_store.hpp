#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace provsentinel {

using AttrMap = std::map<std::string, std::string>;

// One audit-log record: subject --action--> object at a point in time.
struct Event {
  std::string subject_id;
  std::string subject_type;
  std::string action;
  std::string object_id;
  std::string object_type;
  std::int64_t timestamp_us = 0;
  AttrMap subject_attrs;
  AttrMap object_attrs;
};

struct Node {
  std::string id;
  std::uint32_t type = 0;  // index into type_vocab
  AttrMap attrs;
};

struct Edge {
  std::uint32_t src = 0;     // node index
  std::uint32_t action = 0;  // index into edge_vocab
  std::uint32_t dst = 0;     // node index
  std::int64_t timestamp_us = 0;
};

// Node/edge indices into a parent ProvenanceGraph. Both lists are kept
// sorted ascending so identical subgraphs compare equal.
struct Subgraph {
  std::vector<std::uint32_t> nodes;
  std::vector<std::uint32_t> edges;
};

struct GroundTruthLabels {
  std::set<std::string> malicious_node_ids;
};

// Heterogeneous provenance graph with append-only vocabularies and
// per-node adjacency. Single writer during ingestion; immutable and safe
// for concurrent readers afterwards. Duplicate events are stored multiply.
class ProvenanceGraph {
 public:
  ProvenanceGraph() = default;
  ProvenanceGraph(std::vector<std::string> type_vocab,
                  std::vector<std::string> edge_vocab);

  std::uint32_t intern_type(const std::string& label);
  std::uint32_t intern_action(const std::string& label);
  std::optional<std::uint32_t> find_type(const std::string& label) const;
  std::optional<std::uint32_t> find_action(const std::string& label) const;

  // Returns the node index; creates the node on first sighting. Throws
  // std::runtime_error if the id already exists with a different type.
  std::uint32_t upsert_node(const std::string& id, std::uint32_t type);
  void merge_attrs(std::uint32_t node, const AttrMap& attrs);
  std::uint32_t add_edge(std::uint32_t src, std::uint32_t action,
                         std::uint32_t dst, std::int64_t timestamp_us);

  std::optional<std::uint32_t> find_node(const std::string& id) const;
  // Throws std::runtime_error naming the id when unknown.
  std::uint32_t node_index(const std::string& id) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const Node& node(std::uint32_t i) const { return nodes_[i]; }
  const Edge& edge(std::uint32_t i) const { return edges_[i]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::uint32_t>& out_edges(std::uint32_t node) const {
    return out_edges_[node];
  }
  const std::vector<std::uint32_t>& in_edges(std::uint32_t node) const {
    return in_edges_[node];
  }
  const std::vector<std::string>& type_vocab() const { return type_vocab_; }
  const std::vector<std::string>& edge_vocab() const { return edge_vocab_; }
  const std::string& type_name(std::uint32_t t) const { return type_vocab_[t]; }
  const std::string& action_name(std::uint32_t a) const {
    return edge_vocab_[a];
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::uint32_t>> out_edges_;
  std::vector<std::vector<std::uint32_t>> in_edges_;
  std::vector<std::string> type_vocab_;
  std::vector<std::string> edge_vocab_;
  std::unordered_map<std::string, std::uint32_t> node_by_id_;
  std::unordered_map<std::string, std::uint32_t> type_by_label_;
  std::unordered_map<std::string, std::uint32_t> action_by_label_;
};

struct IngestStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<std::string> diagnostics;  // one line-numbered entry per reject
};

// Validates and applies one typed event. On failure the graph is unchanged
// and *error (if non-null) describes the problem.
bool ingest_event(ProvenanceGraph& graph, const Event& event,
                  std::string* error = nullptr);

// Newline-delimited JSON, one Event per line. Malformed records are skipped
// with a line-numbered diagnostic; ingestion continues.
IngestStats ingest_jsonl(std::istream& in, ProvenanceGraph& graph);
IngestStats ingest_jsonl_file(const std::string& path, ProvenanceGraph& graph);

// Edges whose src AND dst are both in node_set. Result sorted ascending.
std::vector<std::uint32_t> query_direct_edges(
    const ProvenanceGraph& graph, const std::vector<std::uint32_t>& node_set);

struct OneHopResult {
  std::vector<std::uint32_t> neighbors;       // adjacent nodes not in the set
  std::vector<std::uint32_t> boundary_edges;  // exactly one endpoint in set
};
OneHopResult query_one_hop(const ProvenanceGraph& graph,
                           const std::vector<std::uint32_t>& node_set);

// Subgraph induced by {ioc} ∪ (one-hop neighbors of ioc ∩ anomalous_set).
Subgraph query_ioc_context(const ProvenanceGraph& graph, std::uint32_t ioc,
                           const std::vector<std::uint32_t>& anomalous_set);

// Maps ids to indices; throws naming the first unknown id.
std::vector<std::uint32_t> resolve_node_ids(const ProvenanceGraph& graph,
                                            const std::vector<std::string>& ids);

std::string graph_snapshot_json(const ProvenanceGraph& graph);
ProvenanceGraph parse_graph_snapshot(const std::string& text);
void save_graph_snapshot(const ProvenanceGraph& graph, const std::string& path);
ProvenanceGraph load_graph_snapshot(const std::string& path);

// Labels file: JSON array of ids, or object {"malicious_node_ids": [...]}.
GroundTruthLabels load_labels_file(const std::string& path);

}  // namespace provsentinel
