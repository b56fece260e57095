// Python face of the pipeline. Each binding wraps one subcommand entry
// point, captures what it would have printed and returns that text; a
// nonzero exit code becomes a RuntimeError carrying the stderr stream.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "provsentinel/commands.hpp"
#include "provsentinel/evaluation.hpp"

namespace py = pybind11;

namespace {

using provsentinel::RunConfig;

RunConfig config_from_json_text(const std::string& text) {
  if (text.empty()) {
    return provsentinel::run_config_from_json(nlohmann::json::object());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return provsentinel::run_config_from_json(doc);
}

template <typename Fn>
std::string run_command(Fn&& fn) {
  std::ostringstream out;
  std::ostringstream err;
  int rc = fn(out, err);
  if (rc != 0) {
    throw std::runtime_error("exit " + std::to_string(rc) + ": " + err.str());
  }
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Provenance-graph anomaly detection and investigation pipeline";

  m.def(
      "scenario",
      [](const std::string& out_events, const std::string& out_labels,
         const std::string& out_meta, const std::string& config) {
        auto cfg = config_from_json_text(config);
        return run_command([&](std::ostream& out, std::ostream& err) {
          return provsentinel::cmd_scenario(cfg, out_events, out_labels,
                                            out_meta, out, err);
        });
      },
      py::arg("out_events"), py::arg("out_labels"), py::arg("out_meta") = "",
      py::arg("config") = "", py::call_guard<py::gil_scoped_release>(),
      "Generate a synthetic audit trace plus ground-truth labels.");

  m.def(
      "ingest",
      [](const std::string& events, const std::string& out_snapshot,
         bool strict) {
        return run_command([&](std::ostream& out, std::ostream& err) {
          return provsentinel::cmd_ingest(events, out_snapshot, strict, out,
                                          err);
        });
      },
      py::arg("events"), py::arg("out_snapshot"), py::arg("strict") = false,
      py::call_guard<py::gil_scoped_release>(),
      "Build a graph snapshot from a JSONL event stream.");

  m.def(
      "train",
      [](const std::string& snapshot, const std::string& out_model,
         const std::string& config) {
        auto cfg = config_from_json_text(config);
        return run_command([&](std::ostream& out, std::ostream& err) {
          return provsentinel::cmd_train(snapshot, cfg, out_model, out, err);
        });
      },
      py::arg("snapshot"), py::arg("out_model"), py::arg("config") = "",
      py::call_guard<py::gil_scoped_release>(),
      "Fit per-type detectors on a benign snapshot and save the model.");

  m.def(
      "detect",
      [](const std::string& model, const std::string& snapshot,
         const std::string& out_dir, const std::string& config) {
        auto cfg = config_from_json_text(config);
        return run_command([&](std::ostream& out, std::ostream& err) {
          return provsentinel::cmd_detect(model, snapshot, cfg, out_dir, out,
                                          err);
        });
      },
      py::arg("model"), py::arg("snapshot"), py::arg("out_dir"),
      py::arg("config") = "", py::call_guard<py::gil_scoped_release>(),
      "Score a snapshot and write flagged nodes plus suspicious subgraphs.");

  m.def(
      "investigate",
      [](const std::string& detect_dir, const std::string& snapshot,
         const std::string& out_dir, const std::string& config) {
        auto cfg = config_from_json_text(config);
        return run_command([&](std::ostream& out, std::ostream& err) {
          return provsentinel::cmd_investigate(detect_dir, snapshot, cfg,
                                               out_dir, out, err);
        });
      },
      py::arg("detect_dir"), py::arg("snapshot"), py::arg("out_dir"),
      py::arg("config") = "", py::call_guard<py::gil_scoped_release>(),
      "Turn detection output into per-subgraph and comprehensive reports.");

  m.def(
      "ask",
      [](const std::string& question, const std::string& reports_dir,
         const std::string& config) {
        auto cfg = config_from_json_text(config);
        return run_command([&](std::ostream& out, std::ostream& err) {
          return provsentinel::cmd_ask(question, reports_dir, cfg, out, err);
        });
      },
      py::arg("question"), py::arg("reports"), py::arg("config") = "",
      py::call_guard<py::gil_scoped_release>(),
      "Answer a follow-up question against previously written reports.");

  m.def(
      "evaluate_json",
      [](const std::string& flagged, const std::string& labels,
         const std::string& snapshot, const std::string& mode) {
        auto outcomes =
            provsentinel::evaluate_files(flagged, labels, snapshot, mode);
        nlohmann::json combined;
        for (const auto& [name, outcome] : outcomes) {
          combined[name] = provsentinel::outcome_json(outcome);
        }
        return combined.dump();
      },
      py::arg("flagged"), py::arg("labels"), py::arg("snapshot"),
      py::arg("mode") = "both", py::call_guard<py::gil_scoped_release>(),
      "Score flagged nodes against labels; returns a JSON text of outcomes.");
}
