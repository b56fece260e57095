#include "provsentinel/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace provsentinel {

namespace {

void finish_rates(DetectionOutcome& out) {
  out.precision = out.tp + out.fp == 0
                      ? 0.0
                      : static_cast<double>(out.tp) / (out.tp + out.fp);
  out.recall = out.tp + out.fn == 0
                   ? 0.0
                   : static_cast<double>(out.tp) / (out.tp + out.fn);
  out.f1 = out.precision + out.recall == 0.0
               ? 0.0
               : 2.0 * out.precision * out.recall /
                     (out.precision + out.recall);
}

std::vector<char> to_mask(const ProvenanceGraph& graph,
                          const std::vector<std::uint32_t>& nodes,
                          const char* what) {
  std::vector<char> mask(graph.node_count(), 0);
  for (auto v : nodes) {
    if (v >= graph.node_count()) {
      throw std::invalid_argument(std::string(what) + " node " +
                                  std::to_string(v) +
                                  " is outside the graph");
    }
    mask[v] = 1;
  }
  return mask;
}

// Marks every node within undirected distance <= 2 of a source.
std::vector<char> within_two_hops(const ProvenanceGraph& graph,
                                  const std::vector<char>& sources) {
  std::vector<char> reach = sources;
  std::vector<std::uint32_t> frontier;
  for (std::uint32_t v = 0; v < graph.node_count(); ++v) {
    if (sources[v]) frontier.push_back(v);
  }
  for (int hop = 0; hop < 2; ++hop) {
    std::vector<std::uint32_t> next;
    for (auto v : frontier) {
      auto visit = [&](std::uint32_t u) {
        if (!reach[u]) {
          reach[u] = 1;
          next.push_back(u);
        }
      };
      for (auto e : graph.out_edges(v)) visit(graph.edge(e).dst);
      for (auto e : graph.in_edges(v)) visit(graph.edge(e).src);
    }
    frontier = std::move(next);
  }
  return reach;
}

}  // namespace

DetectionOutcome score_strict(const ProvenanceGraph& graph,
                              const std::vector<std::uint32_t>& flagged,
                              const std::vector<std::uint32_t>& malicious) {
  auto flagged_mask = to_mask(graph, flagged, "flagged");
  auto malicious_mask = to_mask(graph, malicious, "malicious");
  DetectionOutcome out;
  out.mode = "strict";
  for (std::uint32_t v = 0; v < graph.node_count(); ++v) {
    if (malicious_mask[v]) {
      flagged_mask[v] ? ++out.tp : ++out.fn;
    } else {
      flagged_mask[v] ? ++out.fp : ++out.tn;
    }
  }
  finish_rates(out);
  return out;
}

DetectionOutcome score_two_hop(const ProvenanceGraph& graph,
                               const std::vector<std::uint32_t>& flagged,
                               const std::vector<std::uint32_t>& malicious) {
  auto flagged_mask = to_mask(graph, flagged, "flagged");
  auto malicious_mask = to_mask(graph, malicious, "malicious");
  auto near_flagged = within_two_hops(graph, flagged_mask);
  auto near_malicious = within_two_hops(graph, malicious_mask);

  DetectionOutcome out;
  out.mode = "two_hop";
  for (std::uint32_t v = 0; v < graph.node_count(); ++v) {
    if (malicious_mask[v]) {
      near_flagged[v] ? ++out.tp : ++out.fn;
    } else if (flagged_mask[v] && !near_malicious[v]) {
      ++out.fp;
    } else {
      ++out.tn;
    }
  }
  finish_rates(out);
  return out;
}

nlohmann::json outcome_json(const DetectionOutcome& outcome) {
  return {{"mode", outcome.mode},     {"tp", outcome.tp},
          {"fp", outcome.fp},         {"fn", outcome.fn},
          {"tn", outcome.tn},         {"precision", outcome.precision},
          {"recall", outcome.recall}, {"f1", outcome.f1}};
}

std::string outcome_table(const DetectionOutcome& outcome) {
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer),
                "mode      %s\n"
                "tp        %zu\n"
                "fp        %zu\n"
                "fn        %zu\n"
                "tn        %zu\n"
                "precision %.6f\n"
                "recall    %.6f\n"
                "f1        %.6f\n",
                outcome.mode.c_str(), outcome.tp, outcome.fp, outcome.fn,
                outcome.tn, outcome.precision, outcome.recall, outcome.f1);
  return buffer;
}

}  // namespace provsentinel
