// Acceptance gate: one self-contained check per guarantee the project
// makes, each printed as a single PASS/FAIL line. Checks that carry a
// runtime budget fail when they exceed it. Exit code = number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "gradient_check.hpp"
#include "helpers.hpp"
#include "provsentinel/commands.hpp"
#include "provsentinel/detector.hpp"
#include "provsentinel/evaluation.hpp"
#include "provsentinel/features.hpp"
#include "provsentinel/graph_store.hpp"
#include "provsentinel/investigator.hpp"
#include "provsentinel/llm_gateway.hpp"
#include "provsentinel/prompts.hpp"
#include "provsentinel/scenario.hpp"
#include "provsentinel/serializer.hpp"
#include "provsentinel/subgraphs.hpp"

namespace fs = std::filesystem;
using namespace provsentinel;
using provsentinel::testing::gradient_check;
using provsentinel::testing::make_random_graph;

namespace {

// ---------------------------------------------------------------------------
// Harness

class Failure {
 public:
  // Call before starting a new message; later << appends to that message.
  void note() {
    if (failed_) sep_pending_ = true;
    failed_ = true;
  }
  template <typename T>
  Failure& operator<<(const T& value) {
    if (sep_pending_) {
      out_ << "; ";
      sep_pending_ = false;
    }
    out_ << value;
    return *this;
  }
  bool failed() const { return failed_; }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  bool failed_ = false;
  bool sep_pending_ = false;
};

#define EXPECT(cond, msg)                         \
  do {                                            \
    if (!(cond)) {                                \
      fail.note();                                \
      fail << msg;                                \
    }                                             \
  } while (0)

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic gradients vs central finite differences.

std::string criterion_gradients() {
  Failure fail;
  Rng rng(977);
  for (int trial = 0; trial < 3; ++trial) {
    auto g = make_random_graph(rng, 12, 36, 2, 2);
    auto enc = encode_graph(g);
    auto params =
        init_params(enc.num_relations(), enc.feature_width, 3, 5, 300 + trial);
    std::vector<std::uint32_t> rows;
    for (std::uint32_t i = 0; i < enc.num_rows(); ++i) rows.push_back(i);
    auto res = gradient_check(params, enc, rows, 0.5);
    EXPECT(res.params_checked > 100,
           "trial " << trial << ": only " << res.params_checked
                    << " parameters checked");
    EXPECT(res.max_rel_error <= 1e-4,
           "trial " << trial << ": max relative error " << res.max_rel_error
                    << " > 1e-4");
  }
  return fail.str();
}

// ---------------------------------------------------------------------------
// Criterion 2: node feature invariants on random graphs.

std::string criterion_features() {
  Failure fail;
  Rng rng(1201);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 5 + rng.uniform_index(116);
    auto g = make_random_graph(rng, n, n * 3, 1 + rng.uniform_index(3),
                               1 + rng.uniform_index(5));
    auto scaler = fit_idle_scaler(g);
    std::vector<std::size_t> touches(g.node_count(), 0);
    for (const auto& e : g.edges()) {
      ++touches[e.src];
      ++touches[e.dst];
    }
    for (std::uint32_t v = 0; v < g.node_count(); ++v) {
      auto af = action_frequency(g, v);
      EXPECT(af.size() == g.edge_vocab().size(),
             "node " << v << ": frequency width " << af.size() << " != "
                     << g.edge_vocab().size());
      double norm_sq = 0.0;
      for (double x : af) {
        EXPECT(x >= 0.0 && x <= 1.0, "node " << v << ": frequency entry " << x
                                             << " outside [0,1]");
        norm_sq += x * x;
      }
      EXPECT(norm_sq == 0.0 || std::abs(std::sqrt(norm_sq) - 1.0) <= 1e-9,
             "node " << v << ": L2 norm " << std::sqrt(norm_sq)
                     << " neither 0 nor 1");
      auto st = idle_stats(g, v, scaler);
      for (double x : st) {
        EXPECT(x >= 0.0 && x <= 1.0,
               "node " << v << ": idle stat " << x << " outside [0,1]");
      }
      if (touches[v] < 2) {
        EXPECT(st[0] == 0.0 && st[1] == 0.0 && st[2] == 0.0,
               "node " << v << ": fewer than two events but nonzero idle stats");
      }
      EXPECT(st[0] <= st[2] + 1e-12 && st[2] <= st[1] + 1e-12,
             "node " << v << ": idle stats violate min <= mean <= max");
    }
    auto enc = encode_graph(g);
    EXPECT(enc.feature_width == g.edge_vocab().size() + 3,
           "feature width " << enc.feature_width << " != |actions|+3");
    EXPECT(enc.num_rows() == g.node_count(), "encoded row count mismatch");
    EXPECT(enc.features.allFinite(), "non-finite feature entry");
    if (fail.str().size() > 400) break;  // enough detail to act on
  }
  return fail.str();
}

// ---------------------------------------------------------------------------
// Criterion 3: threshold calibration and the soft-boundary fraction.

std::string criterion_calibration() {
  Failure fail;
  const std::uint64_t graph_seeds[] = {63, 64};
  const std::size_t sizes[][2] = {{600, 2400}, {550, 2200}};
  for (int gi = 0; gi < 2; ++gi) {
    Rng rng(graph_seeds[gi]);
    auto g = make_random_graph(rng, sizes[gi][0], sizes[gi][1], 1, 4);
    auto enc = encode_graph(g);
    TrainingConfig base;
    base.max_epochs = 25;
    base.dim = 16;

    TypeModel last;
    for (double contamination : {0.001, 0.02, 0.05}) {
      TrainingConfig c = base;
      c.min_contamination = contamination;
      c.max_contamination = std::max(contamination, c.max_contamination);
      auto model = fit_type_model(enc, "T0", c);
      EXPECT(model.contamination == contamination,
             "graph " << gi << ": contamination " << model.contamination
                      << " != requested " << contamination);
      auto scores = score_nodes(model, enc);
      std::size_t flagged = 0;
      for (const auto& [node, s] : scores) {
        if (s > model.sphere.threshold) ++flagged;
      }
      double n = static_cast<double>(scores.size());
      double fraction = static_cast<double>(flagged) / n;
      EXPECT(fraction <= contamination + 1.0 / n,
             "graph " << gi << ", c=" << contamination << ": flagged fraction "
                      << fraction << " > c + 1/N");
      last = std::move(model);
    }

    // The sphere itself is contamination-independent; check the soft
    // boundary once per graph: about beta of training rows end up outside.
    Eigen::MatrixXd h = rgcn_forward(last.params, enc, "T0");
    double r_sq = last.sphere.radius * last.sphere.radius;
    std::size_t outside = 0;
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      if ((h.row(i).transpose() - last.sphere.center).squaredNorm() > r_sq) {
        ++outside;
      }
    }
    double fraction =
        static_cast<double>(outside) / static_cast<double>(h.rows());
    EXPECT(std::abs(fraction - base.beta) <= 0.1,
           "graph " << gi << ": outside fraction " << fraction
                    << " not within 0.1 of beta " << base.beta);
  }
  return fail.str();
}

// ---------------------------------------------------------------------------
// Criterion 4: subgraph construction vs an independent reference.

// Flat edge-scan enumeration of all length-<=2 paths from the seed ending at
// unvisited anomalous nodes; shares no adjacency machinery with the library.
Subgraph reference_expand(const ProvenanceGraph& g,
                          const std::vector<std::uint32_t>& init_edges,
                          std::uint32_t seed,
                          const std::set<std::uint32_t>& anom,
                          const std::set<std::uint32_t>& visited) {
  auto target = [&](std::uint32_t v) {
    return anom.count(v) && !visited.count(v);
  };
  auto touches = [&](std::uint32_t e, std::uint32_t v) {
    return g.edge(e).src == v || g.edge(e).dst == v;
  };
  auto other = [&](std::uint32_t e, std::uint32_t v) {
    return g.edge(e).src == v ? g.edge(e).dst : g.edge(e).src;
  };
  std::set<std::uint32_t> nodes{seed};
  std::set<std::uint32_t> edges;
  for (auto e1 : init_edges) {
    if (!touches(e1, seed)) continue;
    std::uint32_t u = other(e1, seed);
    if (u == seed) continue;
    if (target(u)) {
      nodes.insert(u);
      edges.insert(e1);
    }
    for (auto e2 : init_edges) {
      if (!touches(e2, u)) continue;
      std::uint32_t w = other(e2, u);
      if (w == seed || w == u) continue;
      if (target(w)) {
        nodes.insert(u);
        nodes.insert(w);
        edges.insert(e1);
        edges.insert(e2);
      }
    }
  }
  Subgraph sg;
  sg.nodes.assign(nodes.begin(), nodes.end());
  sg.edges.assign(edges.begin(), edges.end());
  return sg;
}

std::vector<AnomalousSubgraph> reference_construct(
    const ProvenanceGraph& g,
    const std::map<std::uint32_t, double>& anomalous_scores,
    const SubgraphConfig& config, std::string* error) {
  std::vector<AnomalousSubgraph> result;
  if (anomalous_scores.empty()) return result;

  std::set<std::uint32_t> anom;
  for (const auto& [v, s] : anomalous_scores) anom.insert(v);

  // Direct edges among anomalous nodes plus one-hop boundary edges: exactly
  // the edges with at least one anomalous endpoint.
  std::vector<std::uint32_t> init_edges;
  for (std::uint32_t e = 0; e < g.edge_count(); ++e) {
    if (anom.count(g.edge(e).src) || anom.count(g.edge(e).dst)) {
      init_edges.push_back(e);
    }
  }

  // Per type in vocabulary order: top n_seed by descending score, ties by
  // ascending node id string.
  std::vector<std::uint32_t> seeds;
  for (std::uint32_t t = 0; t < g.type_vocab().size(); ++t) {
    std::vector<std::uint32_t> of_type;
    for (auto v : anom) {
      if (g.node(v).type == t) of_type.push_back(v);
    }
    std::sort(of_type.begin(), of_type.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                double sa = anomalous_scores.at(a);
                double sb = anomalous_scores.at(b);
                if (sa != sb) return sa > sb;
                return g.node(a).id < g.node(b).id;
              });
    if (of_type.size() > static_cast<std::size_t>(config.n_seed)) {
      of_type.resize(static_cast<std::size_t>(config.n_seed));
    }
    seeds.insert(seeds.end(), of_type.begin(), of_type.end());
  }

  std::set<std::uint32_t> visited;
  struct Candidate {
    Subgraph sg;
    std::uint32_t seed;
  };
  std::vector<Candidate> candidates;
  for (auto seed : seeds) {
    if (visited.count(seed)) continue;
    auto candidate = reference_expand(g, init_edges, seed, anom, visited);
    visited.insert(seed);
    for (auto v : candidate.nodes) {
      if (anom.count(v)) visited.insert(v);
    }
    if (candidate.edges.size() > config.max_edges) {
      *error = "reference hit the partitioning path; shrink the trial";
      return result;
    }
    candidates.push_back({std::move(candidate), seed});
  }

  std::set<std::vector<std::uint32_t>> seen;
  std::vector<AnomalousSubgraph> kept;
  for (auto& c : candidates) {
    if (!seen.insert(c.sg.nodes).second) continue;
    AnomalousSubgraph sg;
    sg.nodes = std::move(c.sg.nodes);
    sg.edges = std::move(c.sg.edges);
    sg.seed = c.seed;
    double score = 0.0;
    for (auto v : sg.nodes) {
      if (anom.count(v)) {
        sg.anomalous_members.push_back(v);
        score += anomalous_scores.at(v);
      }
    }
    sg.score = score;
    sg.level = Level::Minor;
    if (score >= config.level_thresholds[2]) {
      sg.level = Level::Critical;
    } else if (score >= config.level_thresholds[1]) {
      sg.level = Level::Significant;
    } else if (score >= config.level_thresholds[0]) {
      sg.level = Level::Moderate;
    }
    if (sg.level >= config.min_level) kept.push_back(std::move(sg));
  }

  std::stable_sort(kept.begin(), kept.end(),
                   [](const AnomalousSubgraph& a, const AnomalousSubgraph& b) {
                     return a.score > b.score;
                   });
  for (std::size_t i = 0; i < kept.size(); ++i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "sg-%03zu", i + 1);
    kept[i].id = buf;
  }
  return kept;
}

std::string criterion_subgraph_oracle() {
  Failure fail;
  Rng rng(6101);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 20 + rng.uniform_index(181);
    auto g = make_random_graph(rng, n, n * 3, 3, 4);

    std::map<std::uint32_t, double> scores;
    std::size_t cap = (n * 3) / 10;  // at most 30% anomalous
    for (std::uint32_t v = 0; v < n && scores.size() < cap; ++v) {
      if (rng.uniform() < 0.25) {
        scores[v] = 0.5 + static_cast<double>(rng.uniform_index(40));
      }
    }

    SubgraphConfig config;
    config.n_seed = (trial % 2 == 0) ? 15 : 4;
    config.min_level = (trial % 3 == 0) ? Level::Moderate : Level::Minor;

    std::string ref_error;
    auto want = reference_construct(g, scores, config, &ref_error);
    if (!ref_error.empty()) {
      fail.note();
      fail << "trial " << trial << ": " << ref_error;
      break;
    }
    auto got = construct_anomalous_subgraphs(g, scores, config);

    if (got.size() != want.size()) {
      fail.note();
      fail << "trial " << trial << ": " << got.size() << " subgraphs, expected "
           << want.size();
      continue;
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      bool same = got[i].id == want[i].id && got[i].seed == want[i].seed &&
                  got[i].nodes == want[i].nodes &&
                  got[i].edges == want[i].edges &&
                  got[i].anomalous_members == want[i].anomalous_members &&
                  got[i].score == want[i].score &&
                  got[i].level == want[i].level;
      EXPECT(same, "trial " << trial << ": subgraph " << i
                            << " differs from the reference");
      if (!same) break;
    }
    if (fail.str().size() > 300) break;
  }
  return fail.str();
}

// ---------------------------------------------------------------------------
// Criterion 5: severity bucketing at the documented boundaries.

std::string criterion_bucketing() {
  Failure fail;
  const std::pair<double, Level> table[] = {
      {5, Level::Minor},        {10, Level::Moderate},
      {50, Level::Moderate},    {100, Level::Significant},
      {999, Level::Significant}, {1000, Level::Critical},
      {5000, Level::Critical},
  };
  SubgraphConfig config;
  for (const auto& [score, want] : table) {
    Subgraph sg;
    sg.nodes = {0};
    auto [got_score, got_level] = score_and_level(sg, {{0, score}}, config);
    EXPECT(got_score == score, "score " << score << " not preserved");
    EXPECT(got_level == want, "score " << score << " bucketed as "
                                       << level_name(got_level) << ", expected "
                                       << level_name(want));
  }
  for (const char* name : {"Minor", "Moderate", "Significant", "Critical"}) {
    EXPECT(std::string(level_name(level_from_name(name))) == name,
           "level name " << name << " does not round-trip");
  }
  return fail.str();
}

// ---------------------------------------------------------------------------
// Criterion 6: subgraph serialization soundness and determinism.

std::string criterion_serializer() {
  Failure fail;
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(2207 + trial);
    std::size_t n_nodes = 10 + rng.uniform_index(71);
    std::size_t n_edges = 40 + rng.uniform_index(200);
    auto g = make_random_graph(rng, n_nodes, n_edges, 3, 4);

    AnomalousSubgraph sg;
    sg.id = "sg-001";
    std::set<std::uint32_t> nodes;
    for (std::uint32_t e = 0; e < g.edge_count(); ++e) {
      if (rng.uniform() < 0.5) {
        sg.edges.push_back(e);
        nodes.insert(g.edge(e).src);
        nodes.insert(g.edge(e).dst);
      }
    }
    sg.nodes.assign(nodes.begin(), nodes.end());

    auto doc = serialize_subgraph(g, sg);

    std::size_t total = 0;
    for (auto r : doc.repetitions) total += r;
    EXPECT(total == sg.edges.size(), "trial " << trial << ": " << total
                                              << " events serialized, expected "
                                              << sg.edges.size());

    // Independent reconstruction from the documented sentence grammar:
    // events grouped per (second, subject, action, object).
    std::map<std::tuple<std::int64_t, std::uint32_t, std::uint32_t,
                        std::uint32_t>,
             std::size_t>
        groups;
    for (auto e : sg.edges) {
      const Edge& edge = g.edge(e);
      ++groups[{edge.timestamp_us / 1000000, edge.src, edge.action, edge.dst}];
    }
    std::multiset<std::string> want;
    for (const auto& [key, count] : groups) {
      const auto& [second, src, action, dst] = key;
      std::string s = "At " + iso8601_second(second) + " " +
                      g.type_name(g.node(src).type) + " '" +
                      node_label(g, src) + "' " + g.action_name(action);
      if (count > 1) s += " " + std::to_string(count) + " times";
      s += " " + g.type_name(g.node(dst).type) + " '" + node_label(g, dst) +
           "'";
      want.insert(std::move(s));
    }
    std::multiset<std::string> got(doc.sentences.begin(), doc.sentences.end());
    EXPECT(got == want,
           "trial " << trial << ": sentence multiset differs from the grammar");

    // Chronological order at second granularity.
    for (std::size_t i = 1; i < doc.sentences.size(); ++i) {
      EXPECT(doc.sentences[i - 1].substr(3, 20) <=
                 doc.sentences[i].substr(3, 20),
             "trial " << trial << ": sentences not in chronological order");
    }

    // Determinism: a second serialization and one from an independently
    // rebuilt graph produce identical bytes.
    EXPECT(serialize_subgraph(g, sg).text() == doc.text(),
           "trial " << trial << ": repeated serialization differs");
    ProvenanceGraph g2(g.type_vocab(), g.edge_vocab());
    for (std::uint32_t v = 0; v < g.node_count(); ++v) {
      g2.upsert_node(g.node(v).id, g.node(v).type);
    }
    for (const auto& e : g.edges()) {
      g2.add_edge(e.src, e.action, e.dst, e.timestamp_us);
    }
    EXPECT(serialize_subgraph(g2, sg).text() == doc.text(),
           "trial " << trial << ": rebuilt graph serializes differently");

    chunk_document(doc, 7);
    std::string joined;
    for (std::size_t c = 0; c < doc.chunks.size(); ++c) {
      auto [begin, end] = doc.chunks[c];
      EXPECT(end - begin <= 7, "trial " << trial << ": oversized chunk");
      joined += doc.chunk_text(c);
    }
    EXPECT(joined == doc.text(),
           "trial " << trial << ": chunks do not reassemble the document");
    if (fail.str().size() > 300) break;
  }
  return fail.str();
}

// ---------------------------------------------------------------------------
// Shared scripted-backend fixture for the investigation criteria.

const char* kReportMd = R"(# Attack Behavior Summary

The process '/tmp/.cache/payload' read and executed '/tmp/.cache/dropper.sh',
connected to 203.0.113.66:4443, staged archives under /tmp/.stage/ and wrote
'/etc/cron.d/.sysupdate' plus a quiet implant at /usr/lib/.hidden/dormant.bin.

## IOC Table

| IOC | Security Context |
| --- | --- |
| 203.0.113.66:4443 | External endpoint on an uncommon port. |
| /tmp/.cache/payload | Unsigned binary in a cache directory. |
| /tmp/.cache/dropper.sh | Dropped loader script. |
| ghost.dll | Fabricated row that must be scrubbed. |
| 198.51.100.99:1337 | Fabricated endpoint that must be scrubbed. |

## Chronological Action Log

- the payload read and executed the dropper
- the payload connected to its control endpoint
- staged archives were written and later deleted
)";

const char* kCompMd = R"(# Comprehensive Attack Summary

Coordinated activity around '/tmp/.cache/payload': the dropper
'/tmp/.cache/dropper.sh' started it, control traffic went to
203.0.113.66:4443, persistence landed in '/etc/cron.d/.sysupdate' and a
dormant implant sits at /usr/lib/.hidden/dormant.bin.

## Indicators

| Indicator | Security Context |
| --- | --- |
| 203.0.113.66:4443 | Command and control endpoint. |
| /tmp/.cache/payload | Primary malicious process image. |
| /tmp/evil-implant.so | Fabricated module that must be scrubbed. |

## Timeline

- initial access, control traffic, staging, cleanup
)";

const char* kMergedMd = R"(# Comprehensive Attack Summary

Merged view: '/tmp/.cache/payload' drove the intrusion; control traffic to
203.0.113.66:4443; loader '/tmp/.cache/dropper.sh'; persistence at
'/etc/cron.d/.sysupdate'; dormant implant /usr/lib/.hidden/dormant.bin.

## Indicators

| Indicator | Security Context |
| --- | --- |
| 203.0.113.66:4443 | Command and control endpoint. |
| /tmp/.cache/payload | Primary malicious process image. |

## Timeline

- one phase per hour, cleanup last
)";

// Later-stage patterns first: a stage's rendered history embeds earlier
// prompts, so a generic early-stage pattern would shadow them. Every
// extraction answer carries three fabricated indicators.
std::vector<MockRule> scripted_rules() {
  auto rule = [](const char* pattern, const std::string& response) {
    MockRule r;
    r.pattern = pattern;
    r.response = response;
    return r;
  };
  return {
      rule("Enrich the comprehensive attack report", kMergedMd),
      rule("Summarize all provided reports", kCompMd),
      rule("highest-priority IP IOC", "'203.0.113.66:4443'"),
      rule("highest-priority PROCESS IOC", "'/tmp/.cache/payload'"),
      rule("highest-priority FILE IOC", "'/tmp/.cache/dropper.sh'"),
      rule("related to the stage: Initial Compromise",
           "['/tmp/.cache/dropper.sh']"),
      rule("related to the stage: Command and Control",
           "['203.0.113.66:4443']"),
      rule("related to the stage: Data Exfiltration", "['203.0.113.66:4443']"),
      rule("related to the stage: Maintain Persistence",
           "['/etc/cron.d/.sysupdate']"),
      rule("related to the stage: Covering Tracks",
           "['/tmp/.cache/dropper.sh']"),
      rule("related to the stage:", "[]"),
      rule("Summarize the context-",
           "Context: the indicator interacted with '/tmp/.cache/payload'."),
      rule("Summarize the", kReportMd),
      rule("Extract the list of IOCs",
           "['203.0.113.66:4443', '/tmp/.cache/payload', "
           "'/tmp/.cache/dropper.sh', '/etc/cron.d/.sysupdate', 'ghost.dll', "
           "'198.51.100.99:1337', '/tmp/evil-implant.so']"),
      rule("question", "scripted answer"),
  };
}

const std::vector<std::string>& fabricated_iocs() {
  static const std::vector<std::string> iocs{
      "ghost.dll", "198.51.100.99:1337", "/tmp/evil-implant.so"};
  return iocs;
}

struct PipelineRun {
  ProvenanceGraph graph;
  std::vector<std::uint32_t> flagged;
  std::map<std::uint32_t, double> flagged_scores;
  std::vector<AnomalousSubgraph> subgraphs;
};

PipelineRun run_detection(const Scenario& benign, const Scenario& planted,
                          int jobs) {
  PipelineRun run;
  auto benign_graph = build_graph(benign.events);
  run.graph = build_graph(planted.events);
  TrainingConfig config;
  auto bundle = train_models(benign_graph, config, nullptr, jobs);
  auto detection = detect_anomalies(bundle, run.graph);
  run.flagged = detection.anomalous_nodes;
  for (auto v : run.flagged) run.flagged_scores[v] = detection.scores.at(v);
  run.subgraphs =
      construct_anomalous_subgraphs(run.graph, run.flagged_scores, {});
  return run;
}

ScenarioParams small_params(std::uint64_t seed, bool plant) {
  ScenarioParams p;
  p.rng_seed = seed;
  p.processes = 60;
  p.files = 200;
  p.flows = 100;
  p.staging_files = 5;
  p.plant_attack = plant;
  return p;
}

// ---------------------------------------------------------------------------
// Criterion 7: fabricated indicators never reach written reports.

std::string criterion_no_hallucinated_iocs() {
  Failure fail;
  auto benign = generate_scenario(small_params(42, false));
  auto planted = generate_scenario(small_params(777, true));
  auto run = run_detection(benign, planted, 2);
  EXPECT(!run.subgraphs.empty(), "no subgraph to investigate");
  if (run.subgraphs.empty()) return fail.str();

  MockChatBackend chat(scripted_rules());
  Investigator investigator(run.graph, run.flagged, chat,
                            std::make_shared<HashEmbedder>(),
                            default_prompts(), {});
  auto result = investigator.run(run.subgraphs);

  std::vector<std::pair<std::string, std::string>> documents;
  documents.emplace_back("comprehensive report", result.comprehensive.markdown);
  for (const auto& report : result.reports) {
    documents.emplace_back("report " + report.subgraph_id, report.markdown);
  }
  for (const auto& [name, text] : documents) {
    for (const auto& fake : fabricated_iocs()) {
      EXPECT(text.find(fake) == std::string::npos,
             "fabricated indicator '" << fake << "' leaked into " << name);
    }
  }
  EXPECT(result.comprehensive.markdown.find("/tmp/.cache/payload") !=
             std::string::npos,
         "genuine indicator missing from the comprehensive report");
  return fail.str();
}

// ---------------------------------------------------------------------------
// Criterion 8: planted-attack pipeline meets detection and reporting bars.

std::string criterion_end_to_end() {
  Failure fail;
  ScenarioParams benign_params;
  benign_params.rng_seed = 42;
  benign_params.plant_attack = false;
  ScenarioParams planted_params;
  planted_params.rng_seed = 777;
  auto benign = generate_scenario(benign_params);
  auto planted = generate_scenario(planted_params);

  auto run = run_detection(benign, planted, 3);
  std::size_t nodes = run.graph.node_count();
  EXPECT(nodes >= 4500 && nodes <= 5500,
         "graph has " << nodes << " nodes, expected about 5000");

  std::vector<std::string> label_ids(planted.labels.malicious_node_ids.begin(),
                                     planted.labels.malicious_node_ids.end());
  auto malicious = resolve_node_ids(run.graph, label_ids);
  EXPECT(static_cast<double>(malicious.size()) <= 0.01 * nodes,
         "planted fraction above 1%");

  auto outcome = score_strict(run.graph, run.flagged, malicious);
  EXPECT(outcome.recall >= 0.9, "strict recall " << outcome.recall << " < 0.9");
  EXPECT(outcome.precision >= 0.8,
         "strict precision " << outcome.precision << " < 0.8");

  EXPECT(!run.subgraphs.empty(), "no suspicious subgraph extracted");
  if (run.subgraphs.empty()) return fail.str();
  const auto& top = run.subgraphs.front();
  EXPECT(top.level >= Level::Moderate,
         "top subgraph level " << level_name(top.level) << " below Moderate");
  std::set<std::uint32_t> planted_set(malicious.begin(), malicious.end());
  std::size_t planted_members = 0;
  for (auto v : top.nodes) planted_members += planted_set.count(v);
  double planted_fraction = static_cast<double>(planted_members) /
                            static_cast<double>(top.nodes.size());
  EXPECT(planted_fraction >= 0.8, "top subgraph only " << planted_fraction
                                                       << " planted members");

  MockChatBackend chat(scripted_rules());
  Investigator investigator(run.graph, run.flagged, chat,
                            std::make_shared<HashEmbedder>(),
                            default_prompts(), {});
  auto result = investigator.run(run.subgraphs);
  const std::string& md = result.comprehensive.markdown;
  std::size_t stages_named = 0;
  for (const auto& stage : planted.expected_stages) {
    if (md.find(stage) != std::string::npos) ++stages_named;
  }
  EXPECT(stages_named >= 5, "only " << stages_named << " of "
                                    << planted.expected_stages.size()
                                    << " expected stages named");
  for (const auto& ioc : planted.expected_iocs) {
    EXPECT(md.find(ioc) != std::string::npos,
           "expected indicator '" << ioc << "' missing from the report");
  }
  return fail.str();
}

// ---------------------------------------------------------------------------
// Criterion 9: scoring vs a brute-force distance oracle.

std::vector<int> bfs_distances(const ProvenanceGraph& g, std::uint32_t from) {
  std::vector<std::vector<std::uint32_t>> adj(g.node_count());
  for (const auto& e : g.edges()) {
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  std::vector<int> dist(g.node_count(), -1);
  std::deque<std::uint32_t> queue{from};
  dist[from] = 0;
  while (!queue.empty()) {
    auto v = queue.front();
    queue.pop_front();
    for (auto w : adj[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

DetectionOutcome oracle_two_hop(const ProvenanceGraph& g,
                                const std::vector<std::uint32_t>& flagged,
                                const std::vector<std::uint32_t>& mal) {
  std::vector<std::vector<int>> dist;
  for (std::uint32_t v = 0; v < g.node_count(); ++v) {
    dist.push_back(bfs_distances(g, v));
  }
  auto near_any = [&](std::uint32_t v, const std::vector<std::uint32_t>& set) {
    return std::any_of(set.begin(), set.end(), [&](std::uint32_t s) {
      return dist[v][s] >= 0 && dist[v][s] <= 2;
    });
  };
  std::vector<char> is_mal(g.node_count(), 0), is_flagged(g.node_count(), 0);
  for (auto v : mal) is_mal[v] = 1;
  for (auto v : flagged) is_flagged[v] = 1;

  DetectionOutcome out;
  out.mode = "two_hop";
  for (std::uint32_t v = 0; v < g.node_count(); ++v) {
    if (is_mal[v]) {
      near_any(v, flagged) ? ++out.tp : ++out.fn;
    } else if (is_flagged[v] && !near_any(v, mal)) {
      ++out.fp;
    } else {
      ++out.tn;
    }
  }
  out.precision = out.tp + out.fp == 0
                      ? 0.0
                      : static_cast<double>(out.tp) / (out.tp + out.fp);
  out.recall = out.tp + out.fn == 0
                   ? 0.0
                   : static_cast<double>(out.tp) / (out.tp + out.fn);
  out.f1 = out.precision + out.recall == 0.0
               ? 0.0
               : 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

std::string criterion_metric_oracle() {
  Failure fail;
  Rng rng(3307);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t n = 8 + rng.uniform_index(113);
    auto g = make_random_graph(rng, n, n * 2, 2, 3);
    std::vector<std::uint32_t> mal, flagged;
    for (std::uint32_t v = 0; v < n; ++v) {
      if (rng.uniform() < 0.15) mal.push_back(v);
      if (rng.uniform() < 0.2) flagged.push_back(v);
    }

    auto strict = score_strict(g, flagged, mal);
    std::set<std::uint32_t> ms(mal.begin(), mal.end());
    std::size_t tp = 0;
    for (auto v : flagged) tp += ms.count(v);
    EXPECT(strict.tp == tp && strict.fp == flagged.size() - tp &&
               strict.fn == mal.size() - tp,
           "trial " << trial << ": strict confusion counts differ from sets");

    auto relaxed = score_two_hop(g, flagged, mal);
    auto want = oracle_two_hop(g, flagged, mal);
    EXPECT(relaxed.tp == want.tp && relaxed.fp == want.fp &&
               relaxed.fn == want.fn && relaxed.tn == want.tn,
           "trial " << trial << ": two-hop confusion counts differ from BFS");
    EXPECT(std::abs(relaxed.precision - want.precision) <= 1e-12 &&
               std::abs(relaxed.recall - want.recall) <= 1e-12 &&
               std::abs(relaxed.f1 - want.f1) <= 1e-12,
           "trial " << trial << ": two-hop rates differ from BFS");
    EXPECT(strict.precision <= relaxed.precision + 1e-12,
           "trial " << trial << ": strict precision " << strict.precision
                    << " above two-hop " << relaxed.precision);
    EXPECT(strict.recall <= relaxed.recall + 1e-12,
           "trial " << trial << ": strict recall above two-hop");
    if (fail.str().size() > 300) break;
  }
  return fail.str();
}

// ---------------------------------------------------------------------------
// Criterion 10: detect and scripted investigate are byte-identical reruns.

int run_cmd(const std::function<int(std::ostream&, std::ostream&)>& fn,
            Failure& fail, const char* what) {
  std::ostringstream out, err;
  int rc = fn(out, err);
  if (rc != 0) {
    fail.note();
    fail << what << " exited " << rc << ": " << err.str();
  }
  return rc;
}

std::string criterion_determinism() {
  Failure fail;
  fs::path dir = fs::current_path() / "acceptance-artifacts";
  fs::remove_all(dir);
  fs::create_directories(dir);

  RunConfig config;
  config.jobs = 2;
  config.scenario = small_params(42, false);

  auto benign_events = (dir / "benign.jsonl").string();
  auto benign_labels = (dir / "benign-labels.json").string();
  if (run_cmd(
          [&](std::ostream& o, std::ostream& e) {
            return cmd_scenario(config, benign_events, benign_labels, "", o, e);
          },
          fail, "scenario (benign)") != 0) {
    return fail.str();
  }
  config.scenario = small_params(777, true);
  auto planted_events = (dir / "planted.jsonl").string();
  auto planted_labels = (dir / "planted-labels.json").string();
  run_cmd(
      [&](std::ostream& o, std::ostream& e) {
        return cmd_scenario(config, planted_events, planted_labels, "", o, e);
      },
      fail, "scenario (planted)");

  auto benign_snapshot = (dir / "benign-snapshot.json").string();
  auto planted_snapshot = (dir / "planted-snapshot.json").string();
  run_cmd(
      [&](std::ostream& o, std::ostream& e) {
        return cmd_ingest(benign_events, benign_snapshot, false, o, e);
      },
      fail, "ingest (benign)");
  run_cmd(
      [&](std::ostream& o, std::ostream& e) {
        return cmd_ingest(planted_events, planted_snapshot, false, o, e);
      },
      fail, "ingest (planted)");

  auto model_a = (dir / "model-a.json").string();
  auto model_b = (dir / "model-b.json").string();
  run_cmd(
      [&](std::ostream& o, std::ostream& e) {
        return cmd_train(benign_snapshot, config, model_a, o, e);
      },
      fail, "train (first)");
  run_cmd(
      [&](std::ostream& o, std::ostream& e) {
        return cmd_train(benign_snapshot, config, model_b, o, e);
      },
      fail, "train (second)");
  EXPECT(slurp(model_a) == slurp(model_b), "trained models differ");
  if (fail.failed()) return fail.str();

  fs::path detect_a = dir / "detect-a";
  fs::path detect_b = dir / "detect-b";
  for (const auto& out_dir : {detect_a, detect_b}) {
    run_cmd(
        [&](std::ostream& o, std::ostream& e) {
          return cmd_detect(model_a, planted_snapshot, config,
                            out_dir.string(), o, e);
        },
        fail, "detect");
  }
  for (const auto& entry : fs::directory_iterator(detect_a)) {
    auto name = entry.path().filename();
    EXPECT(fs::exists(detect_b / name),
           "detect rerun missing " << name.string());
    EXPECT(slurp(entry.path()) == slurp(detect_b / name),
           "detect output " << name.string() << " differs across reruns");
  }

  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : scripted_rules()) {
    rules.push_back({{"pattern", r.pattern}, {"response", r.response}});
  }
  auto mock = dir / "mock-rules.json";
  spit(mock, nlohmann::json{{"rules", rules}}.dump(2));
  config.mock_replies = mock.string();

  fs::path inv_a = dir / "inv-a";
  fs::path inv_b = dir / "inv-b";
  for (const auto& out_dir : {inv_a, inv_b}) {
    run_cmd(
        [&](std::ostream& o, std::ostream& e) {
          return cmd_investigate(detect_a.string(), planted_snapshot, config,
                                 out_dir.string(), o, e);
        },
        fail, "investigate");
  }
  for (const auto& entry : fs::directory_iterator(inv_a)) {
    auto name = entry.path().filename();
    EXPECT(fs::exists(inv_b / name),
           "investigate rerun missing " << name.string());
    EXPECT(slurp(entry.path()) == slurp(inv_b / name),
           "investigate output " << name.string() << " differs across reruns");
  }
  EXPECT(fs::exists(inv_a / "comprehensive_report.md"),
         "comprehensive report not written");
  EXPECT(fs::exists(inv_a / "audit.json"), "audit log not written");
  return fail.str();
}

}  // namespace

int main() {
  struct Criterion {
    const char* label;
    std::function<std::string()> check;
    double budget_seconds;  // 0 = no pinned budget
  };
  const Criterion criteria[] = {
      {"analytic gradients match finite differences within 1e-4",
       criterion_gradients, 10},
      {"node feature invariants hold on random graphs", criterion_features, 5},
      {"flagging threshold calibration and soft-boundary fraction",
       criterion_calibration, 60},
      {"subgraph construction matches an independent reference on 100 graphs",
       criterion_subgraph_oracle, 60},
      {"severity bucketing at the documented boundaries", criterion_bucketing,
       0},
      {"subgraph serialization is sound and deterministic",
       criterion_serializer, 0},
      {"fabricated indicators never reach written reports",
       criterion_no_hallucinated_iocs, 0},
      {"planted-attack pipeline meets detection and reporting bars",
       criterion_end_to_end, 300},
      {"scoring matches a brute-force distance oracle and strict <= two-hop",
       criterion_metric_oracle, 0},
      {"detect and scripted investigate are byte-identical across reruns",
       criterion_determinism, 0},
  };

  int failures = 0;
  for (std::size_t i = 0; i < std::size(criteria); ++i) {
    const auto& criterion = criteria[i];
    auto start = std::chrono::steady_clock::now();
    std::string detail;
    try {
      detail = criterion.check();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (detail.empty() && criterion.budget_seconds > 0 &&
        seconds > criterion.budget_seconds) {
      std::ostringstream os;
      os << "took " << seconds << "s, budget " << criterion.budget_seconds
         << "s";
      detail = os.str();
    }
    bool passed = detail.empty();
    failures += passed ? 0 : 1;
    std::printf("%s %2zu %s (%.1fs)%s%s\n", passed ? "PASS" : "FAIL", i + 1,
                criterion.label, seconds, passed ? "" : ": ",
                detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n",
              static_cast<int>(std::size(criteria)) - failures,
              std::size(criteria));
  return failures;
}
