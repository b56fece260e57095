#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "provsentinel/detector.hpp"
#include "provsentinel/evaluation.hpp"
#include "provsentinel/investigator.hpp"
#include "provsentinel/llm_gateway.hpp"
#include "provsentinel/scenario.hpp"
#include "provsentinel/subgraphs.hpp"

namespace provsentinel {

// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,      // usage, configuration or input error
  kExitRefusal = 2,    // pipeline legitimately produced nothing to act on
  kExitTransport = 3,  // chat endpoint unreachable after retries
};

// Everything a run needs, fillable from one JSON file; command-line flags
// override single fields afterwards. LLM settings start from the
// environment (PROVSENTINEL_LLM_URL and friends).
struct RunConfig {
  TrainingConfig training;
  SubgraphConfig subgraphs;
  InvestigationConfig investigation;
  ScenarioParams scenario;
  LlmConfig llm;
  std::string prompts_dir;    // empty: compiled-in prompt templates
  std::string mock_replies;   // scripted-backend fixture; empty: live HTTP
  std::string embedder = "hash";  // "hash" (offline) or "http"
  std::size_t embed_dimension = 1536;  // http embedder output width
  int jobs = 1;
};

// Throws std::invalid_argument on unknown keys or malformed values.
RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

int cmd_ingest(const std::string& events_path, const std::string& out_snapshot,
               bool strict, std::ostream& out, std::ostream& err);

int cmd_train(const std::string& snapshot_path, const RunConfig& config,
              const std::string& out_model, std::ostream& out,
              std::ostream& err);

int cmd_detect(const std::string& model_path, const std::string& snapshot_path,
               const RunConfig& config, const std::string& out_dir,
               std::ostream& out, std::ostream& err);

int cmd_investigate(const std::string& detect_dir,
                    const std::string& snapshot_path, const RunConfig& config,
                    const std::string& out_dir, std::ostream& out,
                    std::ostream& err);

int cmd_ask(const std::string& question, const std::string& reports_dir,
            const RunConfig& config, std::ostream& out, std::ostream& err);

// Shared core of `evaluate`: loads the snapshot, labels and flagged list
// (a detect output file or a bare JSON array of node ids) and scores each
// requested mode ("strict", "two_hop" or "both"). Throws on bad input.
std::map<std::string, DetectionOutcome> evaluate_files(
    const std::string& flagged_path, const std::string& labels_path,
    const std::string& snapshot_path, const std::string& mode);

int cmd_evaluate(const std::string& flagged_path,
                 const std::string& labels_path,
                 const std::string& snapshot_path, const std::string& mode,
                 const std::optional<std::string>& out_json, std::ostream& out,
                 std::ostream& err);

int cmd_scenario(const RunConfig& config, const std::string& out_events,
                 const std::string& out_labels, const std::string& out_meta,
                 std::ostream& out, std::ostream& err);

}  // namespace provsentinel
