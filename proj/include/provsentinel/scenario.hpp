#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "provsentinel/graph_store.hpp"

namespace provsentinel {

// Knobs for the synthetic host-activity generator. Defaults produce roughly
// 5000 nodes with a 30-node planted intrusion (~0.6% malicious).
struct ScenarioParams {
  std::uint64_t rng_seed = 42;
  std::size_t processes = 900;
  std::size_t files = 2600;
  std::size_t flows = 1500;
  double min_benign_gap_s = 0.5;
  double max_benign_gap_s = 10.0;
  double min_attack_gap_s = 60.0;
  double max_attack_gap_s = 180.0;
  std::size_t staging_files = 25;
  bool plant_attack = true;
};

struct Scenario {
  std::vector<Event> events;  // ascending timestamp
  GroundTruthLabels labels;
  std::vector<std::string> expected_iocs;    // labels a report must surface
  std::vector<std::string> expected_stages;  // stages the intrusion exercises
  std::string payload_process_id;  // empty when no attack was planted
  std::string dormant_file_id;     // write-once implant, designed to be missed
};

// Deterministic for a fixed parameter set: same seed, same byte stream.
Scenario generate_scenario(const ScenarioParams& params);

// Replays the event stream into a graph; throws on a rejected event.
ProvenanceGraph build_graph(const std::vector<Event>& events);

void write_events_jsonl(const std::vector<Event>& events,
                        const std::string& path);
// Counterpart of graph_store's load_labels_file.
void write_labels_json(const GroundTruthLabels& labels,
                       const std::string& path);

}  // namespace provsentinel
