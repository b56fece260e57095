#include "provsentinel/serializer.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <map>
#include <stdexcept>
#include <tuple>

namespace provsentinel {

std::string LogDocument::text() const {
  std::string out;
  for (const auto& s : sentences) {
    out += s;
    out += '\n';
  }
  return out;
}

std::string LogDocument::chunk_text(std::size_t chunk) const {
  const auto& [begin, end] = chunks.at(chunk);
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    out += sentences[i];
    out += '\n';
  }
  return out;
}

std::string node_label(const ProvenanceGraph& graph, std::uint32_t node) {
  const Node& n = graph.node(node);
  const std::string& type = graph.type_name(n.type);
  auto attr = [&](const char* key) -> const std::string* {
    auto it = n.attrs.find(key);
    return it == n.attrs.end() || it->second.empty() ? nullptr : &it->second;
  };
  if (type == "FILE") {
    if (const auto* path = attr("path")) return *path;
  } else if (type == "PROCESS") {
    if (const auto* image = attr("image")) return *image;
    if (const auto* command = attr("command")) return *command;
  } else if (type == "FLOW" || type == "IP") {
    const auto* addr = attr("remote_address");
    const auto* port = attr("remote_port");
    if (addr && port) return *addr + ":" + *port;
    if (addr) return *addr;
  }
  return n.id;
}

std::string iso8601_second(std::int64_t seconds_since_epoch) {
  std::time_t t = static_cast<std::time_t>(seconds_since_epoch);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

LogDocument serialize_subgraph(const ProvenanceGraph& graph,
                               const AnomalousSubgraph& sg) {
  LogDocument doc;
  doc.doc_id = sg.id;

  // Group events into tumbling one-second windows per
  // (subject, action, object). The map key carries the sort order:
  // (second, subject label, action, object label, ids for totality).
  using Key = std::tuple<std::int64_t, std::string, std::string, std::string,
                         std::uint32_t, std::uint32_t>;
  std::map<Key, std::size_t> groups;
  for (auto e : sg.edges) {
    const Edge& edge = graph.edge(e);
    std::int64_t second = edge.timestamp_us / 1000000;
    Key key{second, node_label(graph, edge.src),
            graph.action_name(edge.action), node_label(graph, edge.dst),
            edge.src, edge.dst};
    ++groups[key];
  }

  for (const auto& [key, count] : groups) {
    const auto& [second, subj_label, action, obj_label, src, dst] = key;
    std::string sentence = "At " + iso8601_second(second) + " " +
                           graph.type_name(graph.node(src).type) + " '" +
                           subj_label + "' " + action;
    if (count > 1) sentence += " " + std::to_string(count) + " times";
    sentence += " " + graph.type_name(graph.node(dst).type) + " '" +
                obj_label + "'";
    doc.sentences.push_back(std::move(sentence));
    doc.repetitions.push_back(count);
  }
  if (!doc.sentences.empty()) {
    doc.chunks.emplace_back(0, doc.sentences.size());
  }
  return doc;
}

void chunk_document(LogDocument& doc, std::size_t max_sentences_per_chunk) {
  if (max_sentences_per_chunk < 1) {
    throw std::runtime_error("chunk size must be at least 1");
  }
  doc.chunks.clear();
  for (std::size_t begin = 0; begin < doc.sentences.size();
       begin += max_sentences_per_chunk) {
    doc.chunks.emplace_back(
        begin, std::min(begin + max_sentences_per_chunk, doc.sentences.size()));
  }
}

}  // namespace provsentinel
