#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "provsentinel/features.hpp"
#include "provsentinel/graph_store.hpp"

namespace provsentinel {

struct TrainingConfig {
  double learning_rate = 0.005;
  int layers = 3;
  int dim = 32;
  double beta = 0.5;  // fraction of training nodes allowed outside the sphere
  double min_contamination = 0.001;
  double max_contamination = 0.05;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t rng_seed = 42;
  double validation_fraction = 0.1;
};

// Per-layer, per-relation dense weights. weights[l][r] maps layer-l inputs
// (columns) to layer-(l+1) outputs (rows); bias[l] is shared across
// relations, matching h = σ(Σ_r mean_r(h) W_rᵀ + b).
struct RgcnParams {
  std::vector<std::vector<Eigen::MatrixXd>> weights;
  std::vector<Eigen::VectorXd> bias;

  std::size_t num_layers() const { return weights.size(); }
  std::size_t num_relations() const {
    return weights.empty() ? 0 : weights[0].size();
  }
};

RgcnParams init_params(std::size_t num_relations, std::size_t in_width,
                       int layers, int dim, std::uint64_t seed);

struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // h^0 .. h^L
  std::vector<Eigen::MatrixXd> preact;       // z^1 .. z^L
};

// Full-graph forward pass: every row of the encoded graph, all types.
Eigen::MatrixXd rgcn_forward_all(const RgcnParams& params,
                                 const EncodedGraph& enc,
                                 ForwardCache* cache = nullptr);

// Final embeddings of one node type's rows (type_nodes order).
Eigen::MatrixXd rgcn_forward(const RgcnParams& params, const EncodedGraph& enc,
                             const std::string& node_type);

// Gradient of a scalar loss w.r.t. all parameters, given dL/dH^L.
RgcnParams rgcn_backward(const RgcnParams& params, const EncodedGraph& enc,
                         const ForwardCache& cache,
                         const Eigen::MatrixXd& grad_out);

struct Hypersphere {
  Eigen::VectorXd center;
  double radius = 0.0;
  double threshold = 0.0;  // anomaly-score cutoff
};

struct TypeModel {
  std::string node_type;
  RgcnParams params;
  Hypersphere sphere;
  double contamination = 0.001;
  IdleScaler scaler;
  bool degenerate = false;  // fewer than 2 training nodes
};

// Soft-boundary one-class loss over the given embedding rows:
// L = r² + (1/(β·N)) Σ max(0, ‖h−c‖² − r²).
double one_class_loss(const Eigen::MatrixXd& embeddings,
                      const std::vector<std::uint32_t>& rows,
                      const Hypersphere& sphere, double beta);

// clamp(malicious/total, Min_con, Max_con); Min_con when no labels exist.
double estimate_contamination(std::optional<std::pair<std::size_t, std::size_t>>
                                  validation_malicious_of_total,
                              const TrainingConfig& config);

// q-quantile of values under the fixed definition
// sorted[min(N-1, max(0, ceil(q·N)-1))]; values are copied and sorted.
double quantile(std::vector<double> values, double q);

struct FitDiagnostics {
  int epochs_run = 0;
  int best_epoch = 0;
  double final_loss = 0.0;
  std::vector<std::string> warnings;
};

// Trains one node type's model on a benign encoded graph. When
// malicious_rows is non-null its rows join the validation set, early
// stopping tracks validation F1, and contamination is estimated from the
// validation mix; otherwise stopping tracks the validation true-negative
// rate and contamination = Min_con.
TypeModel fit_type_model(const EncodedGraph& enc, const std::string& node_type,
                         const TrainingConfig& config,
                         const std::vector<std::uint32_t>* malicious_rows = nullptr,
                         FitDiagnostics* diag = nullptr);

// score(v) = max(0, ‖h_v − c‖² − r²) for every node of the model's type.
// Throws when the encoded relation count mismatches the trained weights.
std::map<std::uint32_t, double> score_nodes(const TypeModel& model,
                                            const EncodedGraph& enc);

struct ModelBundle {
  TrainingConfig config;
  std::vector<std::string> type_vocab;
  std::vector<std::string> edge_vocab;
  IdleScaler scaler;
  std::map<std::string, TypeModel> models;  // keyed by type label
};

struct DetectionResult {
  std::vector<std::uint32_t> anomalous_nodes;        // ascending node indices
  std::map<std::uint32_t, double> scores;            // every scored node
  std::vector<std::string> warnings;
};

// Trains one model per node type present in the training graph.
// jobs > 1 trains types concurrently; results are identical either way.
ModelBundle train_models(const ProvenanceGraph& benign_graph,
                         const TrainingConfig& config,
                         const GroundTruthLabels* labels = nullptr,
                         int jobs = 1,
                         std::vector<std::string>* warnings = nullptr,
                         std::map<std::string, FitDiagnostics>* diagnostics =
                             nullptr);

// Encodes the test graph with the bundle's vocabularies and scaler, scores
// every node, and flags score > per-type threshold. Types without a model
// are skipped with a warning.
DetectionResult detect_anomalies(const ModelBundle& bundle,
                                 const ProvenanceGraph& test_graph);

std::string model_snapshot_json(const ModelBundle& bundle);
ModelBundle parse_model_snapshot(const std::string& text);
void save_model_snapshot(const ModelBundle& bundle, const std::string& path);
ModelBundle load_model_snapshot(const std::string& path);

}  // namespace provsentinel
