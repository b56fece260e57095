#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "provsentinel/graph_store.hpp"
#include "provsentinel/subgraphs.hpp"

namespace provsentinel {

// Reduced chronological log document for one subgraph. Chunks are
// [begin, end) sentence-index ranges; their concatenation reproduces the
// document exactly.
struct LogDocument {
  std::string doc_id;
  std::vector<std::string> sentences;
  std::vector<std::size_t> repetitions;  // per sentence; Σ = source edge count
  std::vector<std::pair<std::size_t, std::size_t>> chunks;

  std::string text() const;
  std::string chunk_text(std::size_t chunk) const;
};

// Most informative display label: FILE→path, PROCESS→image then command,
// FLOW/IP→remote address:port, anything else falls back to the node id.
std::string node_label(const ProvenanceGraph& graph, std::uint32_t node);

// "YYYY-MM-DDTHH:MM:SSZ" (UTC), seconds granularity.
std::string iso8601_second(std::int64_t seconds_since_epoch);

// Timestamps truncate to whole seconds; events sharing
// (subject, action, object, second) collapse into one sentence with an
// "N times" count; sentences sort by (second, subject label, action,
// object label).
LogDocument serialize_subgraph(const ProvenanceGraph& graph,
                               const AnomalousSubgraph& sg);

// Consecutive groups of at most max_sentences_per_chunk sentences.
void chunk_document(LogDocument& doc, std::size_t max_sentences_per_chunk);

}  // namespace provsentinel
