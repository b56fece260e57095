#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "provsentinel/commands.hpp"

using namespace provsentinel;

int main(int argc, char** argv) {
  CLI::App app{
      "provenance-graph anomaly detection with LLM-assisted attack reports"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON run configuration file")
      ->check(CLI::ExistingFile);
  int jobs = 0;
  app.add_option("-j,--jobs", jobs, "cap worker parallelism");

  auto* ingest = app.add_subcommand(
      "ingest", "parse a JSONL event log into a graph snapshot");
  std::string ingest_events, ingest_out;
  bool ingest_strict = false;
  ingest->add_option("events", ingest_events, "JSONL event log")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "snapshot output path")->required();
  ingest->add_flag("--strict", ingest_strict,
                   "fail when any record is rejected");

  auto* train = app.add_subcommand(
      "train", "fit one anomaly model per node type on a benign snapshot");
  std::string train_snapshot, train_out;
  std::uint64_t train_seed = 0;
  int train_epochs = 0;
  train->add_option("snapshot", train_snapshot, "benign graph snapshot")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "model output path")->required();
  auto* train_seed_opt =
      train->add_option("--seed", train_seed, "training seed");
  train->add_option("--epochs", train_epochs, "max training epochs");

  auto* detect = app.add_subcommand(
      "detect", "score a snapshot and extract anomalous subgraphs");
  std::string detect_model, detect_snapshot, detect_out, detect_min_level;
  detect->add_option("model", detect_model, "trained model file")
      ->required()
      ->check(CLI::ExistingFile);
  detect->add_option("snapshot", detect_snapshot, "graph snapshot to score")
      ->required()
      ->check(CLI::ExistingFile);
  detect->add_option("--out-dir", detect_out, "output directory")->required();
  detect->add_option("--min-level", detect_min_level,
                     "report subgraphs at or above this level");

  auto* investigate = app.add_subcommand(
      "investigate", "turn detect outputs into attack reports");
  std::string inv_detect_dir, inv_snapshot, inv_out, inv_mock, inv_level;
  std::string inv_prompts, inv_embedder;
  investigate
      ->add_option("detect_dir", inv_detect_dir, "detect output directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  investigate->add_option("snapshot", inv_snapshot, "graph snapshot")
      ->required()
      ->check(CLI::ExistingFile);
  investigate->add_option("--out-dir", inv_out, "output directory")
      ->required();
  investigate->add_option("--mock", inv_mock,
                          "scripted chat fixture instead of live HTTP");
  investigate->add_option("--reporting-level", inv_level,
                          "minimum subgraph level worth reporting");
  investigate->add_option("--prompts-dir", inv_prompts,
                          "prompt template directory");
  investigate->add_option("--embedder", inv_embedder, "hash or http");

  auto* ask = app.add_subcommand(
      "ask", "answer one question over previously written reports");
  std::string ask_question, ask_reports, ask_mock, ask_embedder;
  ask->add_option("question", ask_question, "analyst question")->required();
  ask->add_option("--reports", ask_reports, "investigate output directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  ask->add_option("--mock", ask_mock,
                  "scripted chat fixture instead of live HTTP");
  ask->add_option("--embedder", ask_embedder, "hash or http");

  auto* evaluate = app.add_subcommand(
      "evaluate", "score flagged nodes against ground-truth labels");
  std::string eval_flagged, eval_labels, eval_snapshot;
  std::string eval_mode = "both", eval_out;
  evaluate->add_option("flagged", eval_flagged,
                       "detect.json or a JSON array of node ids")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("labels", eval_labels, "ground-truth labels file")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("snapshot", eval_snapshot, "graph snapshot")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--mode", eval_mode, "strict, two_hop or both");
  evaluate->add_option("--out", eval_out, "also write the JSON outcome here");

  auto* scenario = app.add_subcommand(
      "scenario", "generate a synthetic event log with optional attack");
  std::string sc_events, sc_labels, sc_meta;
  std::uint64_t sc_seed = 0;
  bool sc_benign_only = false;
  std::size_t sc_processes = 0, sc_files = 0, sc_flows = 0;
  scenario->add_option("--out-events", sc_events, "JSONL event log path")
      ->required();
  scenario->add_option("--out-labels", sc_labels, "labels output path")
      ->required();
  scenario->add_option("--out-meta", sc_meta, "scenario metadata path");
  auto* sc_seed_opt = scenario->add_option("--seed", sc_seed, "generator seed");
  scenario->add_flag("--benign-only", sc_benign_only, "skip the attack");
  scenario->add_option("--processes", sc_processes, "process count");
  scenario->add_option("--files", sc_files, "file count");
  scenario->add_option("--flows", sc_flows, "flow count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig config = config_path.empty()
                           ? run_config_from_json(nlohmann::json::object())
                           : load_run_config(config_path);
    if (jobs > 0) config.jobs = jobs;

    if (app.got_subcommand(ingest)) {
      return cmd_ingest(ingest_events, ingest_out, ingest_strict, std::cout,
                        std::cerr);
    }
    if (app.got_subcommand(train)) {
      if (train_seed_opt->count() > 0) config.training.rng_seed = train_seed;
      if (train_epochs > 0) config.training.max_epochs = train_epochs;
      return cmd_train(train_snapshot, config, train_out, std::cout,
                       std::cerr);
    }
    if (app.got_subcommand(detect)) {
      if (!detect_min_level.empty()) {
        config.subgraphs.min_level = level_from_name(detect_min_level);
      }
      return cmd_detect(detect_model, detect_snapshot, config, detect_out,
                        std::cout, std::cerr);
    }
    if (app.got_subcommand(investigate)) {
      if (!inv_mock.empty()) config.mock_replies = inv_mock;
      if (!inv_level.empty()) {
        config.investigation.reporting_level = level_from_name(inv_level);
      }
      if (!inv_prompts.empty()) config.prompts_dir = inv_prompts;
      if (!inv_embedder.empty()) config.embedder = inv_embedder;
      return cmd_investigate(inv_detect_dir, inv_snapshot, config, inv_out,
                             std::cout, std::cerr);
    }
    if (app.got_subcommand(ask)) {
      if (!ask_mock.empty()) config.mock_replies = ask_mock;
      if (!ask_embedder.empty()) config.embedder = ask_embedder;
      return cmd_ask(ask_question, ask_reports, config, std::cout, std::cerr);
    }
    if (app.got_subcommand(evaluate)) {
      std::optional<std::string> out_json;
      if (!eval_out.empty()) out_json = eval_out;
      return cmd_evaluate(eval_flagged, eval_labels, eval_snapshot, eval_mode,
                          out_json, std::cout, std::cerr);
    }
    if (app.got_subcommand(scenario)) {
      if (sc_seed_opt->count() > 0) config.scenario.rng_seed = sc_seed;
      if (sc_benign_only) config.scenario.plant_attack = false;
      if (sc_processes > 0) config.scenario.processes = sc_processes;
      if (sc_files > 0) config.scenario.files = sc_files;
      if (sc_flows > 0) config.scenario.flows = sc_flows;
      return cmd_scenario(config, sc_events, sc_labels, sc_meta, std::cout,
                          std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
