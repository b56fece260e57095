#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "provsentinel/graph_store.hpp"

namespace provsentinel {

struct DetectionOutcome {
  std::string mode;  // "two_hop" or "strict"
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double precision = 0.0;  // 0 when TP+FP = 0
  double recall = 0.0;     // 0 when TP+FN = 0
  double f1 = 0.0;         // 0 when precision and recall are both 0
};

// Plain set-overlap confusion matrix over all graph nodes.
DetectionOutcome score_strict(const ProvenanceGraph& graph,
                              const std::vector<std::uint32_t>& flagged,
                              const std::vector<std::uint32_t>& malicious);

// Neighbourhood-relaxed scoring: a malicious node is a true positive when
// any node within undirected distance 2 of it is flagged, and a flagged
// benign node is a false positive only when no malicious node lies within
// distance 2 of it. TN is the remainder.
DetectionOutcome score_two_hop(const ProvenanceGraph& graph,
                               const std::vector<std::uint32_t>& flagged,
                               const std::vector<std::uint32_t>& malicious);

nlohmann::json outcome_json(const DetectionOutcome& outcome);
std::string outcome_table(const DetectionOutcome& outcome);

}  // namespace provsentinel
