#include "provsentinel/graph_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace provsentinel {

namespace {

constexpr const char* kGraphMagic = "PROVSENTINEL-GRAPH-v1";

std::uint32_t intern(std::vector<std::string>& vocab,
                     std::unordered_map<std::string, std::uint32_t>& index,
                     const std::string& label) {
  auto it = index.find(label);
  if (it != index.end()) return it->second;
  auto id = static_cast<std::uint32_t>(vocab.size());
  vocab.push_back(label);
  index.emplace(label, id);
  return id;
}

}  // namespace

ProvenanceGraph::ProvenanceGraph(std::vector<std::string> type_vocab,
                                 std::vector<std::string> edge_vocab) {
  for (const auto& t : type_vocab) intern_type(t);
  for (const auto& a : edge_vocab) intern_action(a);
}

std::uint32_t ProvenanceGraph::intern_type(const std::string& label) {
  return intern(type_vocab_, type_by_label_, label);
}

std::uint32_t ProvenanceGraph::intern_action(const std::string& label) {
  return intern(edge_vocab_, action_by_label_, label);
}

std::optional<std::uint32_t> ProvenanceGraph::find_type(
    const std::string& label) const {
  auto it = type_by_label_.find(label);
  if (it == type_by_label_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> ProvenanceGraph::find_action(
    const std::string& label) const {
  auto it = action_by_label_.find(label);
  if (it == action_by_label_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t ProvenanceGraph::upsert_node(const std::string& id,
                                           std::uint32_t type) {
  auto it = node_by_id_.find(id);
  if (it != node_by_id_.end()) {
    const Node& existing = nodes_[it->second];
    if (existing.type != type) {
      throw std::runtime_error("node '" + id + "' seen with type '" +
                               type_vocab_[type] + "' but already stored as '" +
                               type_vocab_[existing.type] + "'");
    }
    return it->second;
  }
  auto idx = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{id, type, {}});
  out_edges_.emplace_back();
  in_edges_.emplace_back();
  node_by_id_.emplace(id, idx);
  return idx;
}

void ProvenanceGraph::merge_attrs(std::uint32_t node, const AttrMap& attrs) {
  for (const auto& [k, v] : attrs) nodes_[node].attrs[k] = v;
}

std::uint32_t ProvenanceGraph::add_edge(std::uint32_t src, std::uint32_t action,
                                        std::uint32_t dst,
                                        std::int64_t timestamp_us) {
  auto idx = static_cast<std::uint32_t>(edges_.size());
  edges_.push_back(Edge{src, action, dst, timestamp_us});
  out_edges_[src].push_back(idx);
  in_edges_[dst].push_back(idx);
  return idx;
}

std::optional<std::uint32_t> ProvenanceGraph::find_node(
    const std::string& id) const {
  auto it = node_by_id_.find(id);
  if (it == node_by_id_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t ProvenanceGraph::node_index(const std::string& id) const {
  auto idx = find_node(id);
  if (!idx) throw std::runtime_error("unknown node id '" + id + "'");
  return *idx;
}

bool ingest_event(ProvenanceGraph& graph, const Event& event,
                  std::string* error) {
  auto fail = [&](const std::string& msg) {
    if (error) *error = msg;
    return false;
  };
  if (event.subject_id.empty()) return fail("empty subject_id");
  if (event.object_id.empty()) return fail("empty object_id");
  if (event.subject_type.empty()) return fail("empty subject_type");
  if (event.object_type.empty()) return fail("empty object_type");
  if (event.action.empty()) return fail("empty action");
  if (event.timestamp_us < 0) return fail("negative timestamp_us");

  // Validate the type pairing before mutating anything so a rejected record
  // leaves the graph untouched.
  std::uint32_t subject_type = graph.intern_type(event.subject_type);
  std::uint32_t object_type = graph.intern_type(event.object_type);
  for (const auto& [id, type] :
       {std::pair{event.subject_id, subject_type},
        std::pair{event.object_id, object_type}}) {
    if (auto existing = graph.find_node(id)) {
      if (graph.node(*existing).type != type) {
        return fail("node '" + id + "' type conflict: '" +
                    graph.type_name(type) + "' vs stored '" +
                    graph.type_name(graph.node(*existing).type) + "'");
      }
    }
  }
  if (event.subject_id == event.object_id && subject_type != object_type) {
    return fail("node '" + event.subject_id + "' used with two types");
  }

  std::uint32_t src = graph.upsert_node(event.subject_id, subject_type);
  std::uint32_t dst = graph.upsert_node(event.object_id, object_type);
  graph.merge_attrs(src, event.subject_attrs);
  graph.merge_attrs(dst, event.object_attrs);
  std::uint32_t action = graph.intern_action(event.action);
  graph.add_edge(src, action, dst, event.timestamp_us);
  return true;
}

namespace {

bool parse_event(const nlohmann::json& j, Event& out, std::string& error) {
  if (!j.is_object()) {
    error = "record is not a JSON object";
    return false;
  }
  auto get_string = [&](const char* key, std::string& dst) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      error = std::string("missing or non-string field '") + key + "'";
      return false;
    }
    dst = it->get<std::string>();
    return true;
  };
  if (!get_string("subject_id", out.subject_id)) return false;
  if (!get_string("subject_type", out.subject_type)) return false;
  if (!get_string("action", out.action)) return false;
  if (!get_string("object_id", out.object_id)) return false;
  if (!get_string("object_type", out.object_type)) return false;

  auto ts = j.find("timestamp_us");
  if (ts == j.end()) {
    error = "missing field 'timestamp_us'";
    return false;
  }
  if (ts->is_number_integer()) {
    out.timestamp_us = ts->get<std::int64_t>();
  } else if (ts->is_string()) {
    try {
      std::size_t pos = 0;
      out.timestamp_us = std::stoll(ts->get<std::string>(), &pos);
      if (pos != ts->get<std::string>().size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      error = "timestamp_us not parseable as integer";
      return false;
    }
  } else {
    error = "timestamp_us not parseable as integer";
    return false;
  }

  auto get_attrs = [&](const char* key, AttrMap& dst) {
    auto it = j.find(key);
    if (it == j.end()) return true;  // optional
    if (!it->is_object()) {
      error = std::string("field '") + key + "' is not an object";
      return false;
    }
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) {
        error = std::string("attribute '") + k + "' in '" + key +
                "' is not a string";
        return false;
      }
      dst[k] = v.get<std::string>();
    }
    return true;
  };
  out.subject_attrs.clear();
  out.object_attrs.clear();
  if (!get_attrs("subject_attrs", out.subject_attrs)) return false;
  if (!get_attrs("object_attrs", out.object_attrs)) return false;
  return true;
}

}  // namespace

IngestStats ingest_jsonl(std::istream& in, ProvenanceGraph& graph) {
  IngestStats stats;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::string error;
    Event event;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      error = "invalid JSON";
    } else if (parse_event(j, event, error)) {
      if (ingest_event(graph, event, &error)) {
        ++stats.accepted;
        continue;
      }
    }
    ++stats.rejected;
    stats.diagnostics.push_back("line " + std::to_string(line_no) + ": " +
                                error);
  }
  return stats;
}

IngestStats ingest_jsonl_file(const std::string& path, ProvenanceGraph& graph) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open events file '" + path + "'");
  return ingest_jsonl(in, graph);
}

std::vector<std::uint32_t> query_direct_edges(
    const ProvenanceGraph& graph, const std::vector<std::uint32_t>& node_set) {
  std::vector<char> member(graph.node_count(), 0);
  for (auto n : node_set) member[n] = 1;
  std::vector<std::uint32_t> result;
  for (auto n : node_set) {
    for (auto e : graph.out_edges(n)) {
      if (member[graph.edge(e).dst]) result.push_back(e);
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

OneHopResult query_one_hop(const ProvenanceGraph& graph,
                           const std::vector<std::uint32_t>& node_set) {
  std::vector<char> member(graph.node_count(), 0);
  std::vector<char> neighbor(graph.node_count(), 0);
  for (auto n : node_set) member[n] = 1;
  OneHopResult result;
  for (auto n : node_set) {
    for (auto e : graph.out_edges(n)) {
      std::uint32_t other = graph.edge(e).dst;
      if (!member[other]) {
        result.boundary_edges.push_back(e);
        neighbor[other] = 1;
      }
    }
    for (auto e : graph.in_edges(n)) {
      std::uint32_t other = graph.edge(e).src;
      if (!member[other]) {
        result.boundary_edges.push_back(e);
        neighbor[other] = 1;
      }
    }
  }
  for (std::uint32_t v = 0; v < graph.node_count(); ++v) {
    if (neighbor[v]) result.neighbors.push_back(v);
  }
  std::sort(result.boundary_edges.begin(), result.boundary_edges.end());
  result.boundary_edges.erase(
      std::unique(result.boundary_edges.begin(), result.boundary_edges.end()),
      result.boundary_edges.end());
  return result;
}

Subgraph query_ioc_context(const ProvenanceGraph& graph, std::uint32_t ioc,
                           const std::vector<std::uint32_t>& anomalous_set) {
  std::vector<char> anomalous(graph.node_count(), 0);
  for (auto n : anomalous_set) anomalous[n] = 1;
  std::vector<char> keep(graph.node_count(), 0);
  keep[ioc] = 1;
  for (auto e : graph.out_edges(ioc)) {
    std::uint32_t other = graph.edge(e).dst;
    if (anomalous[other]) keep[other] = 1;
  }
  for (auto e : graph.in_edges(ioc)) {
    std::uint32_t other = graph.edge(e).src;
    if (anomalous[other]) keep[other] = 1;
  }
  Subgraph sg;
  for (std::uint32_t v = 0; v < graph.node_count(); ++v) {
    if (keep[v]) sg.nodes.push_back(v);
  }
  for (std::uint32_t e = 0; e < graph.edge_count(); ++e) {
    if (keep[graph.edge(e).src] && keep[graph.edge(e).dst])
      sg.edges.push_back(e);
  }
  return sg;
}

std::vector<std::uint32_t> resolve_node_ids(
    const ProvenanceGraph& graph, const std::vector<std::string>& ids) {
  std::vector<std::uint32_t> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(graph.node_index(id));
  return out;
}

std::string graph_snapshot_json(const ProvenanceGraph& graph) {
  nlohmann::json j;
  j["magic"] = kGraphMagic;
  j["type_vocab"] = graph.type_vocab();
  j["edge_vocab"] = graph.edge_vocab();
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : graph.nodes()) {
    nlohmann::json jn;
    jn["id"] = n.id;
    jn["type"] = n.type;
    jn["attrs"] = n.attrs;
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges()) {
    edges.push_back({e.src, e.action, e.dst, e.timestamp_us});
  }
  j["edges"] = std::move(edges);
  return j.dump();
}

ProvenanceGraph parse_graph_snapshot(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw std::runtime_error("graph snapshot: not valid JSON");
  }
  if (!j.contains("magic") || j["magic"] != kGraphMagic) {
    throw std::runtime_error("graph snapshot: missing or unsupported magic");
  }
  if (!j.contains("type_vocab") || !j.contains("edge_vocab") ||
      !j.contains("nodes") || !j.contains("edges")) {
    throw std::runtime_error("graph snapshot: truncated or missing sections");
  }
  ProvenanceGraph graph(j["type_vocab"].get<std::vector<std::string>>(),
                        j["edge_vocab"].get<std::vector<std::string>>());
  for (const auto& jn : j["nodes"]) {
    std::uint32_t type = jn.at("type").get<std::uint32_t>();
    if (type >= graph.type_vocab().size()) {
      throw std::runtime_error("graph snapshot: node type out of range");
    }
    std::uint32_t idx = graph.upsert_node(jn.at("id").get<std::string>(), type);
    graph.merge_attrs(idx, jn.at("attrs").get<AttrMap>());
  }
  for (const auto& je : j["edges"]) {
    if (!je.is_array() || je.size() != 4) {
      throw std::runtime_error("graph snapshot: malformed edge entry");
    }
    std::uint32_t src = je[0].get<std::uint32_t>();
    std::uint32_t action = je[1].get<std::uint32_t>();
    std::uint32_t dst = je[2].get<std::uint32_t>();
    if (src >= graph.node_count() || dst >= graph.node_count() ||
        action >= graph.edge_vocab().size()) {
      throw std::runtime_error("graph snapshot: edge index out of range");
    }
    graph.add_edge(src, action, dst, je[3].get<std::int64_t>());
  }
  return graph;
}

void save_graph_snapshot(const ProvenanceGraph& graph,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write snapshot '" + path + "'");
  out << graph_snapshot_json(graph);
  if (!out) throw std::runtime_error("short write on snapshot '" + path + "'");
}

ProvenanceGraph load_graph_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_graph_snapshot(buf.str());
}

GroundTruthLabels load_labels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open labels file '" + path + "'");
  nlohmann::json j;
  in >> j;
  GroundTruthLabels labels;
  const nlohmann::json* list = &j;
  if (j.is_object()) {
    if (!j.contains("malicious_node_ids")) {
      throw std::runtime_error("labels file: missing 'malicious_node_ids'");
    }
    list = &j["malicious_node_ids"];
  }
  if (!list->is_array()) {
    throw std::runtime_error("labels file: expected an array of node ids");
  }
  for (const auto& v : *list) {
    labels.malicious_node_ids.insert(v.get<std::string>());
  }
  return labels;
}

}  // namespace provsentinel
