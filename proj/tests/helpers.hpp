#pragma once

#include <string>
#include <vector>

#include "provsentinel/graph_store.hpp"
#include "provsentinel/rng.hpp"

namespace provsentinel::testing {

inline Event make_event(const std::string& subj, const std::string& subj_type,
                        const std::string& action, const std::string& obj,
                        const std::string& obj_type, std::int64_t ts_us) {
  Event e;
  e.subject_id = subj;
  e.subject_type = subj_type;
  e.action = action;
  e.object_id = obj;
  e.object_type = obj_type;
  e.timestamp_us = ts_us;
  return e;
}

// Random multigraph for oracle comparisons. Node ids n0..n{k-1}; node i has
// type T{i % n_types} so ids never conflict across types.
inline ProvenanceGraph make_random_graph(Rng& rng, std::size_t n_nodes,
                                         std::size_t n_edges,
                                         std::size_t n_types = 3,
                                         std::size_t n_actions = 4) {
  ProvenanceGraph g;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    g.upsert_node("n" + std::to_string(i),
                  g.intern_type("T" + std::to_string(i % n_types)));
  }
  for (std::size_t i = 0; i < n_edges; ++i) {
    auto src = static_cast<std::uint32_t>(rng.uniform_index(n_nodes));
    auto dst = static_cast<std::uint32_t>(rng.uniform_index(n_nodes));
    auto action = g.intern_action(
        "a" + std::to_string(rng.uniform_index(n_actions)));
    g.add_edge(src, action, dst,
               static_cast<std::int64_t>(rng.uniform_index(1000000)) * 1000);
  }
  return g;
}

}  // namespace provsentinel::testing
