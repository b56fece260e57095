#include "provsentinel/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "provsentinel/evaluation.hpp"
#include "provsentinel/prompts.hpp"
#include "provsentinel/serializer.hpp"

namespace fs = std::filesystem;

namespace provsentinel {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& section,
                  std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = std::any_of(allowed.begin(), allowed.end(),
                             [&](const char* a) { return key == a; });
    if (!known) {
      throw std::invalid_argument("unknown config key '" + section + key +
                                  "'");
    }
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& dst) {
  if (auto it = obj.find(key); it != obj.end()) dst = it->get<T>();
}

void read_level(const json& obj, const char* key, Level& dst) {
  if (auto it = obj.find(key); it != obj.end()) {
    dst = level_from_name(it->get<std::string>());
  }
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  file << content;
  if (!content.empty() && content.back() != '\n') file << '\n';
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ", ";
    out += p;
  }
  return out;
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const RefusalError& e) {
    err << "refused: " << e.what() << "\n";
    return kExitRefusal;
  } catch (const TransportError& e) {
    err << "transport error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const ApiError& e) {
    err << "backend error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

// Chat backend selection. The mock is immovable (mutex member), so both
// candidates live in optionals and are constructed in place.
struct Backends {
  std::optional<MockChatBackend> mock;
  std::optional<HttpChatBackend> http;
  ChatBackend* chat = nullptr;

  explicit Backends(const RunConfig& config) {
    if (!config.mock_replies.empty()) {
      mock.emplace(MockChatBackend::rules_from_file(config.mock_replies));
      chat = &*mock;
    } else {
      http.emplace(config.llm);
      chat = &*http;
    }
  }
};

std::shared_ptr<Embedder> make_embedder(const RunConfig& config) {
  if (config.embedder == "hash") return std::make_shared<HashEmbedder>();
  if (config.embedder == "http") {
    return std::make_shared<HttpEmbedder>(config.llm, config.embed_dimension);
  }
  throw std::invalid_argument("unknown embedder '" + config.embedder +
                              "' (expected hash or http)");
}

PromptSet make_prompts(const RunConfig& config) {
  return config.prompts_dir.empty() ? default_prompts()
                                    : load_prompts(config.prompts_dir);
}

json subgraph_to_json(const AnomalousSubgraph& sg) {
  return {{"id", sg.id},
          {"score", sg.score},
          {"level", level_name(sg.level)},
          {"seed", sg.seed},
          {"nodes", sg.nodes},
          {"anomalous_members", sg.anomalous_members},
          {"edges", sg.edges}};
}

AnomalousSubgraph subgraph_from_json(const json& j) {
  AnomalousSubgraph sg;
  sg.id = j.at("id").get<std::string>();
  sg.score = j.at("score").get<double>();
  sg.level = level_from_name(j.at("level").get<std::string>());
  sg.seed = j.at("seed").get<std::uint32_t>();
  sg.nodes = j.at("nodes").get<std::vector<std::uint32_t>>();
  sg.anomalous_members =
      j.at("anomalous_members").get<std::vector<std::uint32_t>>();
  sg.edges = j.at("edges").get<std::vector<std::uint32_t>>();
  return sg;
}

}  // namespace

RunConfig run_config_from_json(const json& doc) {
  RunConfig config;
  config.llm = llm_config_from_env();
  try {
    require_keys(doc, "",
                 {"training", "subgraphs", "investigation", "scenario", "llm",
                  "prompts_dir", "mock_replies", "embedder", "embed_dimension",
                  "jobs"});
    if (auto it = doc.find("training"); it != doc.end()) {
      require_keys(*it, "training.",
                   {"learning_rate", "layers", "dim", "beta",
                    "min_contamination", "max_contamination", "max_epochs",
                    "patience", "rng_seed", "validation_fraction"});
      auto& t = config.training;
      read_field(*it, "learning_rate", t.learning_rate);
      read_field(*it, "layers", t.layers);
      read_field(*it, "dim", t.dim);
      read_field(*it, "beta", t.beta);
      read_field(*it, "min_contamination", t.min_contamination);
      read_field(*it, "max_contamination", t.max_contamination);
      read_field(*it, "max_epochs", t.max_epochs);
      read_field(*it, "patience", t.patience);
      read_field(*it, "rng_seed", t.rng_seed);
      read_field(*it, "validation_fraction", t.validation_fraction);
    }
    if (auto it = doc.find("subgraphs"); it != doc.end()) {
      require_keys(*it, "subgraphs.",
                   {"n_seed", "max_edges", "level_thresholds", "min_level"});
      auto& s = config.subgraphs;
      read_field(*it, "n_seed", s.n_seed);
      read_field(*it, "max_edges", s.max_edges);
      if (auto th = it->find("level_thresholds"); th != it->end()) {
        auto values = th->get<std::vector<double>>();
        if (values.size() != 3) {
          throw std::invalid_argument(
              "subgraphs.level_thresholds needs exactly 3 values");
        }
        std::copy(values.begin(), values.end(), s.level_thresholds.begin());
      }
      read_level(*it, "min_level", s.min_level);
    }
    if (auto it = doc.find("investigation"); it != doc.end()) {
      require_keys(*it, "investigation.",
                   {"reporting_level", "retrieval_k", "chunk_sentences"});
      auto& i = config.investigation;
      read_level(*it, "reporting_level", i.reporting_level);
      read_field(*it, "retrieval_k", i.retrieval_k);
      read_field(*it, "chunk_sentences", i.chunk_sentences);
    }
    if (auto it = doc.find("scenario"); it != doc.end()) {
      require_keys(*it, "scenario.",
                   {"rng_seed", "processes", "files", "flows",
                    "min_benign_gap_s", "max_benign_gap_s", "min_attack_gap_s",
                    "max_attack_gap_s", "staging_files", "plant_attack"});
      auto& s = config.scenario;
      read_field(*it, "rng_seed", s.rng_seed);
      read_field(*it, "processes", s.processes);
      read_field(*it, "files", s.files);
      read_field(*it, "flows", s.flows);
      read_field(*it, "min_benign_gap_s", s.min_benign_gap_s);
      read_field(*it, "max_benign_gap_s", s.max_benign_gap_s);
      read_field(*it, "min_attack_gap_s", s.min_attack_gap_s);
      read_field(*it, "max_attack_gap_s", s.max_attack_gap_s);
      read_field(*it, "staging_files", s.staging_files);
      read_field(*it, "plant_attack", s.plant_attack);
    }
    if (auto it = doc.find("llm"); it != doc.end()) {
      require_keys(*it, "llm.",
                   {"base_url", "model", "api_key", "embed_model",
                    "temperature", "timeout_seconds", "max_attempts",
                    "initial_backoff_ms"});
      auto& l = config.llm;
      read_field(*it, "base_url", l.base_url);
      read_field(*it, "model", l.model);
      read_field(*it, "api_key", l.api_key);
      read_field(*it, "embed_model", l.embed_model);
      read_field(*it, "temperature", l.temperature);
      read_field(*it, "timeout_seconds", l.timeout_seconds);
      read_field(*it, "max_attempts", l.max_attempts);
      read_field(*it, "initial_backoff_ms", l.initial_backoff_ms);
    }
    read_field(doc, "prompts_dir", config.prompts_dir);
    read_field(doc, "mock_replies", config.mock_replies);
    read_field(doc, "embedder", config.embedder);
    read_field(doc, "embed_dimension", config.embed_dimension);
    read_field(doc, "jobs", config.jobs);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw std::invalid_argument("config " + path + ": expected a JSON object");
  }
  return run_config_from_json(doc);
}

int cmd_ingest(const std::string& events_path, const std::string& out_snapshot,
               bool strict, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::ifstream in(events_path);
    if (!in) throw std::invalid_argument("cannot open " + events_path);
    ProvenanceGraph graph;
    auto stats = ingest_jsonl(in, graph);
    for (const auto& diag : stats.diagnostics) {
      err << "warning: " << diag << "\n";
    }
    out << "accepted " << stats.accepted << " events, rejected "
        << stats.rejected << "\n";
    out << "nodes " << graph.node_count() << ", edges " << graph.edge_count()
        << "\n";
    out << "node types: " << join(graph.type_vocab()) << "\n";
    out << "actions: " << join(graph.edge_vocab()) << "\n";
    if (strict && stats.rejected > 0) {
      err << "strict mode: refusing to snapshot a partial ingest\n";
      return static_cast<int>(kExitUsage);
    }
    save_graph_snapshot(graph, out_snapshot);
    out << "snapshot written to " << out_snapshot << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_train(const std::string& snapshot_path, const RunConfig& config,
              const std::string& out_model, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    auto graph = load_graph_snapshot(snapshot_path);
    if (graph.node_count() == 0) {
      throw std::invalid_argument("snapshot " + snapshot_path +
                                  " holds no nodes; nothing to train on");
    }
    std::vector<std::string> warnings;
    std::map<std::string, FitDiagnostics> diagnostics;
    auto bundle = train_models(graph, config.training, nullptr, config.jobs,
                               &warnings, &diagnostics);
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    for (const auto& [type, model] : bundle.models) {
      const auto& diag = diagnostics.at(type);
      char line[192];
      std::snprintf(line, sizeof(line),
                    "%-8s epochs=%-3d best=%-3d final_loss=%.6f "
                    "threshold=%.6f contamination=%.4f",
                    type.c_str(), diag.epochs_run, diag.best_epoch,
                    diag.final_loss, model.sphere.threshold,
                    model.contamination);
      out << line << "\n";
    }
    auto snapshot = model_snapshot_json(bundle);
    write_text_file(out_model, snapshot);
    char hash[24];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(snapshot)));
    out << "model hash " << hash << "\n";
    out << "model written to " << out_model << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_detect(const std::string& model_path, const std::string& snapshot_path,
               const RunConfig& config, const std::string& out_dir,
               std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto bundle = load_model_snapshot(model_path);
    auto graph = load_graph_snapshot(snapshot_path);
    auto detection = detect_anomalies(bundle, graph);
    for (const auto& w : detection.warnings) err << "warning: " << w << "\n";

    std::map<std::uint32_t, double> anomalous_scores;
    for (auto v : detection.anomalous_nodes) {
      anomalous_scores[v] = detection.scores.at(v);
    }
    auto subgraphs =
        construct_anomalous_subgraphs(graph, anomalous_scores,
                                      config.subgraphs);

    fs::create_directories(out_dir);
    auto ranked = detection.anomalous_nodes;
    std::sort(ranked.begin(), ranked.end(), [&](auto a, auto b) {
      double sa = anomalous_scores.at(a), sb = anomalous_scores.at(b);
      if (sa != sb) return sa > sb;
      return graph.node(a).id < graph.node(b).id;
    });
    json anomalous = json::array();
    for (auto v : ranked) {
      anomalous.push_back({{"index", v},
                           {"id", graph.node(v).id},
                           {"type", graph.type_vocab()[graph.node(v).type]},
                           {"score", anomalous_scores.at(v)}});
    }
    json subgraph_index = json::array();
    for (const auto& sg : subgraphs) subgraph_index.push_back(subgraph_to_json(sg));
    json root{{"anomalous", anomalous},
              {"subgraphs", subgraph_index},
              {"warnings", detection.warnings}};
    write_text_file(out_dir + "/detect.json", root.dump(2));
    for (const auto& sg : subgraphs) {
      write_text_file(out_dir + "/" + sg.id + ".json",
                      subgraph_json(graph, sg));
    }

    out << "flagged " << detection.anomalous_nodes.size() << " of "
        << graph.node_count() << " nodes\n";
    if (subgraphs.empty()) {
      out << "no subgraphs at or above "
          << level_name(config.subgraphs.min_level) << "\n";
    } else {
      out << "id      level        score        nodes  edges\n";
      for (const auto& sg : subgraphs) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-7s %-12s %-12.2f %-6zu %zu",
                      sg.id.c_str(), level_name(sg.level), sg.score,
                      sg.nodes.size(), sg.edges.size());
        out << line << "\n";
      }
    }
    out << "outputs written to " << out_dir << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_investigate(const std::string& detect_dir,
                    const std::string& snapshot_path, const RunConfig& config,
                    const std::string& out_dir, std::ostream& out,
                    std::ostream& err) {
  return guarded(err, [&] {
    auto graph = load_graph_snapshot(snapshot_path);
    json detect_doc;
    try {
      detect_doc = json::parse(read_text_file(detect_dir + "/detect.json"));
    } catch (const json::exception& e) {
      throw std::invalid_argument(detect_dir + "/detect.json: " + e.what());
    }
    std::vector<std::uint32_t> anomalous;
    for (const auto& entry : detect_doc.at("anomalous")) {
      anomalous.push_back(entry.at("index").get<std::uint32_t>());
    }
    std::sort(anomalous.begin(), anomalous.end());
    std::vector<AnomalousSubgraph> subgraphs;
    for (const auto& entry : detect_doc.at("subgraphs")) {
      subgraphs.push_back(subgraph_from_json(entry));
    }

    Backends backends(config);
    Investigator investigator(graph, anomalous, *backends.chat,
                              make_embedder(config), make_prompts(config),
                              config.investigation);
    auto result = investigator.run(subgraphs);

    fs::create_directories(out_dir);
    for (const auto& report : result.reports) {
      write_text_file(out_dir + "/report-" + report.subgraph_id + ".md",
                      report.markdown);
      if (report.incomplete) {
        err << "warning: report " << report.subgraph_id
            << " is structurally incomplete\n";
      }
    }
    write_text_file(out_dir + "/comprehensive_report.md",
                    result.comprehensive.markdown);
    write_text_file(out_dir + "/audit.json", result.audit.dump(2));

    out << result.reports.size() << " subgraph reports written\n";
    out << result.comprehensive.enrichments.size()
        << " indicators enriched\n";
    auto warnings = result.audit.value("warnings", json::array());
    if (!warnings.empty()) {
      out << warnings.size() << " audit warnings (see audit.json)\n";
    }
    out << "comprehensive report: " << out_dir
        << "/comprehensive_report.md\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_ask(const std::string& question, const std::string& reports_dir,
            const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::vector<fs::path> files;
    if (fs::is_directory(reports_dir)) {
      for (const auto& entry : fs::directory_iterator(reports_dir)) {
        if (entry.path().extension() == ".md") files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      throw RefusalError("no reports found in " + reports_dir);
    }
    auto embedder = make_embedder(config);
    VectorIndex index(embedder);
    for (const auto& file : files) {
      index.add(read_text_file(file.string()), file.stem().string());
    }
    Backends backends(config);
    out << answer_question(question, index, *backends.chat,
                           make_prompts(config),
                           config.investigation.retrieval_k)
        << "\n";
    return static_cast<int>(kExitOk);
  });
}

std::map<std::string, DetectionOutcome> evaluate_files(
    const std::string& flagged_path, const std::string& labels_path,
    const std::string& snapshot_path, const std::string& mode) {
  if (mode != "both" && mode != "strict" && mode != "two_hop") {
    throw std::invalid_argument("mode must be strict, two_hop or both");
  }
  auto graph = load_graph_snapshot(snapshot_path);
  json flagged_doc;
  try {
    flagged_doc = json::parse(read_text_file(flagged_path));
  } catch (const json::exception& e) {
    throw std::invalid_argument(flagged_path + ": " + e.what());
  }
  std::vector<std::string> flagged_ids;
  if (flagged_doc.is_array()) {
    for (const auto& id : flagged_doc) {
      flagged_ids.push_back(id.get<std::string>());
    }
  } else {
    for (const auto& entry : flagged_doc.at("anomalous")) {
      flagged_ids.push_back(entry.at("id").get<std::string>());
    }
  }
  auto labels = load_labels_file(labels_path);
  auto flagged = resolve_node_ids(graph, flagged_ids);
  auto malicious = resolve_node_ids(
      graph,
      {labels.malicious_node_ids.begin(), labels.malicious_node_ids.end()});

  std::map<std::string, DetectionOutcome> outcomes;
  if (mode == "both" || mode == "strict") {
    outcomes["strict"] = score_strict(graph, flagged, malicious);
  }
  if (mode == "both" || mode == "two_hop") {
    outcomes["two_hop"] = score_two_hop(graph, flagged, malicious);
  }
  return outcomes;
}

int cmd_evaluate(const std::string& flagged_path,
                 const std::string& labels_path,
                 const std::string& snapshot_path, const std::string& mode,
                 const std::optional<std::string>& out_json, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    auto outcomes =
        evaluate_files(flagged_path, labels_path, snapshot_path, mode);
    json combined;
    for (const auto& [name, outcome] : outcomes) {
      out << outcome_table(outcome);
      combined[name] = outcome_json(outcome);
    }
    out << combined.dump(2) << "\n";
    if (out_json) write_text_file(*out_json, combined.dump(2));
    return static_cast<int>(kExitOk);
  });
}

int cmd_scenario(const RunConfig& config, const std::string& out_events,
                 const std::string& out_labels, const std::string& out_meta,
                 std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto scenario = generate_scenario(config.scenario);
    write_events_jsonl(scenario.events, out_events);
    write_labels_json(scenario.labels, out_labels);
    if (!out_meta.empty()) {
      json meta{{"events", scenario.events.size()},
                {"planted_nodes", scenario.labels.malicious_node_ids.size()},
                {"expected_iocs", scenario.expected_iocs},
                {"expected_stages", scenario.expected_stages},
                {"payload_process_id", scenario.payload_process_id},
                {"dormant_file_id", scenario.dormant_file_id}};
      write_text_file(out_meta, meta.dump(2));
    }
    out << scenario.events.size() << " events, "
        << scenario.labels.malicious_node_ids.size() << " planted nodes\n";
    out << "events written to " << out_events << "\n";
    out << "labels written to " << out_labels << "\n";
    if (!out_meta.empty()) out << "metadata written to " << out_meta << "\n";
    return static_cast<int>(kExitOk);
  });
}

}  // namespace provsentinel
