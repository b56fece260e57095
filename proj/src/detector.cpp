#include "provsentinel/detector.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "provsentinel/rng.hpp"

namespace provsentinel {

namespace {

constexpr const char* kModelMagic = "PROVSENTINEL-MODEL-v1";

void check_compatible(const RgcnParams& params, const EncodedGraph& enc) {
  if (params.num_relations() != enc.num_relations()) {
    throw std::runtime_error(
        "relation count mismatch between model and encoded graph (" +
        std::to_string(params.num_relations()) + " vs " +
        std::to_string(enc.num_relations()) +
        "); re-encode the graph with the training vocabulary");
  }
  if (params.num_layers() == 0) throw std::runtime_error("model has no layers");
  if (static_cast<std::size_t>(params.weights[0][0].cols()) !=
      enc.feature_width) {
    throw std::runtime_error(
        "feature width mismatch between model and encoded graph; re-encode "
        "the graph with the training vocabulary");
  }
}

// Mean aggregation over one relation: out row dst += h row src / indeg(dst).
Eigen::MatrixXd aggregate(const EncodedGraph& enc, std::size_t r,
                          const Eigen::MatrixXd& h) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(h.rows(), h.cols());
  const auto& indeg = enc.relation_indegree[r];
  for (const auto& [src, dst] : enc.relations[r]) {
    out.row(dst) += h.row(src) / static_cast<double>(indeg[dst]);
  }
  return out;
}

// Transpose of aggregate: routes gradient at dst back to src.
Eigen::MatrixXd aggregate_transpose(const EncodedGraph& enc, std::size_t r,
                                    const Eigen::MatrixXd& g) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.rows(), g.cols());
  const auto& indeg = enc.relation_indegree[r];
  for (const auto& [src, dst] : enc.relations[r]) {
    out.row(src) += g.row(dst) / static_cast<double>(indeg[dst]);
  }
  return out;
}

std::size_t type_index_of(const EncodedGraph& enc, const std::string& label) {
  for (std::size_t t = 0; t < enc.type_vocab.size(); ++t) {
    if (enc.type_vocab[t] == label) return t;
  }
  throw std::runtime_error("node type '" + label +
                           "' absent from the encoded graph");
}

double squared_distance(const Eigen::MatrixXd& h, Eigen::Index row,
                        const Eigen::VectorXd& c) {
  return (h.row(row).transpose() - c).squaredNorm();
}

double anomaly_score(double squared_dist, const Hypersphere& sphere) {
  return std::max(0.0, squared_dist - sphere.radius * sphere.radius);
}

}  // namespace

RgcnParams init_params(std::size_t num_relations, std::size_t in_width,
                       int layers, int dim, std::uint64_t seed) {
  if (layers < 1) throw std::runtime_error("layer count must be >= 1");
  Rng rng(seed);
  RgcnParams params;
  params.weights.resize(layers);
  params.bias.resize(layers);
  std::size_t in_dim = in_width;
  for (int l = 0; l < layers; ++l) {
    std::size_t out_dim = static_cast<std::size_t>(dim);
    params.weights[l].reserve(num_relations);
    double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    for (std::size_t r = 0; r < num_relations; ++r) {
      Eigen::MatrixXd w(out_dim, in_dim);
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
          w(i, j) = rng.uniform(-limit, limit);
        }
      }
      params.weights[l].push_back(std::move(w));
    }
    params.bias[l] = Eigen::VectorXd::Zero(out_dim);
    in_dim = out_dim;
  }
  return params;
}

Eigen::MatrixXd rgcn_forward_all(const RgcnParams& params,
                                 const EncodedGraph& enc,
                                 ForwardCache* cache) {
  check_compatible(params, enc);
  std::size_t num_layers = params.num_layers();
  Eigen::MatrixXd h = enc.features;
  if (cache) {
    cache->activations.clear();
    cache->preact.clear();
    cache->activations.push_back(h);
  }
  for (std::size_t l = 0; l < num_layers; ++l) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(h.rows(), params.bias[l].size());
    z.rowwise() += params.bias[l].transpose();
    for (std::size_t r = 0; r < enc.num_relations(); ++r) {
      if (enc.relations[r].empty()) continue;
      z.noalias() += aggregate(enc, r, h) * params.weights[l][r].transpose();
    }
    if (cache) cache->preact.push_back(z);
    h = (l + 1 < num_layers) ? z.cwiseMax(0.0).eval() : z;
    if (cache) cache->activations.push_back(h);
  }
  return h;
}

Eigen::MatrixXd rgcn_forward(const RgcnParams& params, const EncodedGraph& enc,
                             const std::string& node_type) {
  std::size_t t = type_index_of(enc, node_type);
  Eigen::MatrixXd all = rgcn_forward_all(params, enc);
  return all.block(static_cast<Eigen::Index>(enc.row_offset[t]), 0,
                   static_cast<Eigen::Index>(enc.type_nodes[t].size()),
                   all.cols());
}

RgcnParams rgcn_backward(const RgcnParams& params, const EncodedGraph& enc,
                         const ForwardCache& cache,
                         const Eigen::MatrixXd& grad_out) {
  std::size_t num_layers = params.num_layers();
  RgcnParams grads;
  grads.weights.resize(num_layers);
  grads.bias.resize(num_layers);

  Eigen::MatrixXd grad_h = grad_out;
  for (std::size_t li = num_layers; li-- > 0;) {
    // ReLU on hidden layers only; ReLU'(0) taken as 0.
    Eigen::MatrixXd grad_z =
        (li + 1 < num_layers)
            ? (grad_h.array() * (cache.preact[li].array() > 0.0).cast<double>())
                  .matrix()
            : grad_h;
    grads.bias[li] = grad_z.colwise().sum().transpose();
    grads.weights[li].resize(enc.num_relations());
    const Eigen::MatrixXd& h_in = cache.activations[li];
    Eigen::MatrixXd next_grad_h = Eigen::MatrixXd::Zero(h_in.rows(), h_in.cols());
    for (std::size_t r = 0; r < enc.num_relations(); ++r) {
      if (enc.relations[r].empty()) {
        grads.weights[li][r] = Eigen::MatrixXd::Zero(
            params.weights[li][r].rows(), params.weights[li][r].cols());
        continue;
      }
      Eigen::MatrixXd m = aggregate(enc, r, h_in);
      grads.weights[li][r].noalias() = grad_z.transpose() * m;
      next_grad_h.noalias() +=
          aggregate_transpose(enc, r, grad_z * params.weights[li][r]);
    }
    grad_h = std::move(next_grad_h);
  }
  return grads;
}

double one_class_loss(const Eigen::MatrixXd& embeddings,
                      const std::vector<std::uint32_t>& rows,
                      const Hypersphere& sphere, double beta) {
  double r_sq = sphere.radius * sphere.radius;
  double penalty = 0.0;
  for (auto row : rows) {
    double d_sq = squared_distance(embeddings, row, sphere.center);
    penalty += std::max(0.0, d_sq - r_sq);
  }
  double n = static_cast<double>(rows.size());
  return r_sq + penalty / (beta * n);
}

double estimate_contamination(std::optional<std::pair<std::size_t, std::size_t>>
                                  validation_malicious_of_total,
                              const TrainingConfig& config) {
  if (!validation_malicious_of_total ||
      validation_malicious_of_total->second == 0) {
    return config.min_contamination;
  }
  double proportion =
      static_cast<double>(validation_malicious_of_total->first) /
      static_cast<double>(validation_malicious_of_total->second);
  return std::clamp(proportion, config.min_contamination,
                    config.max_contamination);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  auto n = static_cast<double>(values.size());
  auto idx = static_cast<std::ptrdiff_t>(std::ceil(q * n)) - 1;
  idx = std::clamp<std::ptrdiff_t>(idx, 0,
                                   static_cast<std::ptrdiff_t>(values.size()) - 1);
  return values[static_cast<std::size_t>(idx)];
}

namespace {

struct SphereSnapshot {
  RgcnParams params;
  Hypersphere sphere;
};

Eigen::VectorXd mean_of_rows(const Eigen::MatrixXd& h,
                             const std::vector<std::uint32_t>& rows) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(h.cols());
  for (auto row : rows) c += h.row(row).transpose();
  return c / static_cast<double>(rows.size());
}

double refit_radius(const Eigen::MatrixXd& h,
                    const std::vector<std::uint32_t>& rows,
                    const Eigen::VectorXd& c, double beta) {
  std::vector<double> dist;
  dist.reserve(rows.size());
  for (auto row : rows) {
    dist.push_back(std::sqrt(squared_distance(h, row, c)));
  }
  return quantile(std::move(dist), 1.0 - beta);
}

}  // namespace

TypeModel fit_type_model(const EncodedGraph& enc, const std::string& node_type,
                         const TrainingConfig& config,
                         const std::vector<std::uint32_t>* malicious_rows,
                         FitDiagnostics* diag) {
  std::size_t t = type_index_of(enc, node_type);
  std::uint64_t type_seed = splitmix64(config.rng_seed + 0x517cc1b7ULL * (t + 1));

  TypeModel model;
  model.node_type = node_type;
  model.scaler = enc.scaler;

  std::vector<std::uint32_t> type_rows;
  type_rows.reserve(enc.type_nodes[t].size());
  for (std::size_t i = 0; i < enc.type_nodes[t].size(); ++i) {
    type_rows.push_back(static_cast<std::uint32_t>(enc.row_offset[t] + i));
  }

  std::vector<char> is_malicious(enc.num_rows(), 0);
  std::vector<std::uint32_t> mal_rows;
  if (malicious_rows) {
    for (auto row : *malicious_rows) {
      if (row >= enc.row_offset[t] &&
          row < enc.row_offset[t] + enc.type_nodes[t].size() &&
          !is_malicious[row]) {
        is_malicious[row] = 1;
        mal_rows.push_back(row);
      }
    }
  }
  std::vector<std::uint32_t> benign_rows;
  for (auto row : type_rows) {
    if (!is_malicious[row]) benign_rows.push_back(row);
  }

  model.params = init_params(enc.num_relations(), enc.feature_width,
                             config.layers, config.dim, type_seed);

  if (benign_rows.size() < 2) {
    model.degenerate = true;
    model.contamination = config.min_contamination;
    Eigen::MatrixXd h = rgcn_forward_all(model.params, enc);
    model.sphere.center = benign_rows.empty()
                              ? Eigen::VectorXd::Zero(config.dim)
                              : h.row(benign_rows[0]).transpose().eval();
    model.sphere.radius = 0.0;
    model.sphere.threshold = 0.0;
    if (diag) {
      diag->warnings.push_back("type '" + node_type + "': fewer than 2 " +
                               "training nodes; degenerate model");
    }
    return model;
  }

  // 10% benign validation holdout (at least one node).
  Rng split_rng(splitmix64(type_seed));
  std::vector<std::uint32_t> shuffled = benign_rows;
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    std::swap(shuffled[i - 1], shuffled[split_rng.uniform_index(i)]);
  }
  std::size_t val_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(static_cast<double>(shuffled.size()) *
                                  config.validation_fraction));
  if (val_count >= shuffled.size()) val_count = shuffled.size() - 1;
  std::vector<std::uint32_t> val_rows(shuffled.begin(),
                                      shuffled.begin() + val_count);
  std::vector<std::uint32_t> train_rows(shuffled.begin() + val_count,
                                        shuffled.end());

  bool labeled = malicious_rows != nullptr;
  model.contamination = estimate_contamination(
      labeled ? std::make_optional(std::pair{mal_rows.size(),
                                             mal_rows.size() + val_rows.size()})
              : std::nullopt,
      config);

  Eigen::MatrixXd h = rgcn_forward_all(model.params, enc);
  model.sphere.center = mean_of_rows(h, train_rows);
  model.sphere.radius = refit_radius(h, train_rows, model.sphere.center,
                                     config.beta);

  SphereSnapshot best{model.params, model.sphere};
  double best_metric = -1.0;
  int best_epoch = 0;
  int since_best = 0;
  double n_train = static_cast<double>(train_rows.size());
  double r_out_coeff = 2.0 / (config.beta * n_train);

  int epoch = 1;
  for (; epoch <= config.max_epochs; ++epoch) {
    // (a) one gradient-descent step on the weights, center/radius fixed.
    ForwardCache cache;
    h = rgcn_forward_all(model.params, enc, &cache);
    double r_sq = model.sphere.radius * model.sphere.radius;
    Eigen::MatrixXd grad_out = Eigen::MatrixXd::Zero(h.rows(), h.cols());
    for (auto row : train_rows) {
      double d_sq = squared_distance(h, row, model.sphere.center);
      if (d_sq > r_sq) {
        grad_out.row(row) =
            r_out_coeff *
            (h.row(row) - model.sphere.center.transpose());
      }
    }
    RgcnParams grads = rgcn_backward(model.params, enc, cache, grad_out);
    for (std::size_t l = 0; l < model.params.num_layers(); ++l) {
      for (std::size_t r = 0; r < model.params.num_relations(); ++r) {
        model.params.weights[l][r] -= config.learning_rate * grads.weights[l][r];
      }
      model.params.bias[l] -= config.learning_rate * grads.bias[l];
    }

    // (b) recentre and refit the radius on the updated embeddings.
    h = rgcn_forward_all(model.params, enc);
    model.sphere.center = mean_of_rows(h, train_rows);
    model.sphere.radius = refit_radius(h, train_rows, model.sphere.center,
                                       config.beta);

    // Early-stopping metric on the validation holdout.
    double r_sq_now = model.sphere.radius * model.sphere.radius;
    std::vector<double> train_scores;
    train_scores.reserve(train_rows.size());
    for (auto row : train_rows) {
      train_scores.push_back(anomaly_score(
          squared_distance(h, row, model.sphere.center) , model.sphere));
    }
    (void)r_sq_now;
    double threshold_now =
        quantile(train_scores, 1.0 - model.contamination);
    double metric;
    if (labeled && !mal_rows.empty()) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (auto row : mal_rows) {
        double s = anomaly_score(
            squared_distance(h, row, model.sphere.center), model.sphere);
        (s > threshold_now) ? ++tp : ++fn;
      }
      for (auto row : val_rows) {
        double s = anomaly_score(
            squared_distance(h, row, model.sphere.center), model.sphere);
        if (s > threshold_now) ++fp;
      }
      metric = (2 * tp + fp + fn) == 0
                   ? 0.0
                   : 2.0 * static_cast<double>(tp) /
                         static_cast<double>(2 * tp + fp + fn);
    } else {
      std::size_t tn = 0;
      for (auto row : val_rows) {
        double s = anomaly_score(
            squared_distance(h, row, model.sphere.center), model.sphere);
        if (s <= threshold_now) ++tn;
      }
      metric = val_rows.empty()
                   ? 1.0
                   : static_cast<double>(tn) /
                         static_cast<double>(val_rows.size());
    }
    if (metric >= best_metric) {
      best_metric = metric;
      best = SphereSnapshot{model.params, model.sphere};
      best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  model.params = std::move(best.params);
  model.sphere = best.sphere;

  // Final calibration: threshold over the scores of every node of the type
  // in the training graph, so detect-on-train flags at most
  // contamination + 1/N of them.
  h = rgcn_forward_all(model.params, enc);
  std::vector<double> all_scores;
  all_scores.reserve(type_rows.size());
  for (auto row : type_rows) {
    all_scores.push_back(anomaly_score(
        squared_distance(h, row, model.sphere.center), model.sphere));
  }
  model.sphere.threshold = quantile(all_scores, 1.0 - model.contamination);

  if (diag) {
    diag->epochs_run = std::min(epoch, config.max_epochs);
    diag->best_epoch = best_epoch;
    diag->final_loss =
        one_class_loss(h, train_rows, model.sphere, config.beta);
  }
  return model;
}

std::map<std::uint32_t, double> score_nodes(const TypeModel& model,
                                            const EncodedGraph& enc) {
  std::size_t t = type_index_of(enc, model.node_type);
  Eigen::MatrixXd h = rgcn_forward_all(model.params, enc);
  std::map<std::uint32_t, double> scores;
  for (std::size_t i = 0; i < enc.type_nodes[t].size(); ++i) {
    auto row = static_cast<Eigen::Index>(enc.row_offset[t] + i);
    scores[enc.type_nodes[t][i]] = anomaly_score(
        squared_distance(h, row, model.sphere.center), model.sphere);
  }
  return scores;
}

ModelBundle train_models(const ProvenanceGraph& benign_graph,
                         const TrainingConfig& config,
                         const GroundTruthLabels* labels, int jobs,
                         std::vector<std::string>* warnings,
                         std::map<std::string, FitDiagnostics>* diagnostics) {
  ModelBundle bundle;
  bundle.config = config;
  bundle.type_vocab = benign_graph.type_vocab();
  bundle.edge_vocab = benign_graph.edge_vocab();

  EncodedGraph enc = encode_graph(benign_graph);
  bundle.scaler = enc.scaler;

  std::vector<std::uint32_t> malicious_rows;
  if (labels) {
    for (const auto& id : labels->malicious_node_ids) {
      if (auto idx = benign_graph.find_node(id)) {
        malicious_rows.push_back(enc.row_of_node[*idx]);
      }
    }
  }

  std::vector<std::string> types;
  for (std::size_t t = 0; t < bundle.type_vocab.size(); ++t) {
    if (!enc.type_nodes[t].empty()) types.push_back(bundle.type_vocab[t]);
  }
  std::vector<TypeModel> fitted(types.size());
  std::vector<FitDiagnostics> diags(types.size());

  auto fit_one = [&](std::size_t i) {
    fitted[i] = fit_type_model(enc, types[i], config,
                               labels ? &malicious_rows : nullptr, &diags[i]);
  };
  int workers = std::max(1, std::min<int>(jobs, static_cast<int>(types.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < types.size(); ++i) fit_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < types.size();
             i = next.fetch_add(1)) {
          fit_one(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < types.size(); ++i) {
    bundle.models[types[i]] = std::move(fitted[i]);
    if (warnings) {
      warnings->insert(warnings->end(), diags[i].warnings.begin(),
                       diags[i].warnings.end());
    }
    if (diagnostics) (*diagnostics)[types[i]] = diags[i];
  }
  return bundle;
}

DetectionResult detect_anomalies(const ModelBundle& bundle,
                                 const ProvenanceGraph& test_graph) {
  DetectionResult result;
  EncodeOptions opts;
  opts.scaler = &bundle.scaler;
  opts.type_vocab = &bundle.type_vocab;
  opts.edge_vocab = &bundle.edge_vocab;
  EncodedGraph enc = encode_graph(test_graph, opts);

  for (std::size_t t = 0; t < bundle.type_vocab.size(); ++t) {
    if (enc.type_nodes[t].empty()) continue;
    auto it = bundle.models.find(bundle.type_vocab[t]);
    if (it == bundle.models.end()) {
      result.warnings.push_back("no model for node type '" +
                                bundle.type_vocab[t] + "'; skipped " +
                                std::to_string(enc.type_nodes[t].size()) +
                                " nodes");
      continue;
    }
    auto scores = score_nodes(it->second, enc);
    for (const auto& [node, score] : scores) {
      result.scores[node] = score;
      if (score > it->second.sphere.threshold) {
        result.anomalous_nodes.push_back(node);
      }
    }
  }
  std::sort(result.anomalous_nodes.begin(), result.anomalous_nodes.end());
  return result;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(j.size(), j[0].size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(m.cols())) {
      throw std::runtime_error("model snapshot: ragged weight matrix");
    }
    for (Eigen::Index jj = 0; jj < m.cols(); ++jj) {
      m(i, jj) = row[static_cast<std::size_t>(jj)].get<double>();
    }
  }
  return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

}  // namespace

std::string model_snapshot_json(const ModelBundle& bundle) {
  nlohmann::json j;
  j["magic"] = kModelMagic;
  j["config"] = {{"learning_rate", bundle.config.learning_rate},
                 {"layers", bundle.config.layers},
                 {"dim", bundle.config.dim},
                 {"beta", bundle.config.beta},
                 {"min_contamination", bundle.config.min_contamination},
                 {"max_contamination", bundle.config.max_contamination},
                 {"max_epochs", bundle.config.max_epochs},
                 {"patience", bundle.config.patience},
                 {"rng_seed", bundle.config.rng_seed},
                 {"validation_fraction", bundle.config.validation_fraction}};
  j["type_vocab"] = bundle.type_vocab;
  j["edge_vocab"] = bundle.edge_vocab;
  j["scaler"] = {{"min_us", bundle.scaler.min_us},
                 {"max_us", bundle.scaler.max_us}};
  nlohmann::json models = nlohmann::json::object();
  for (const auto& [label, model] : bundle.models) {
    nlohmann::json jm;
    jm["node_type"] = model.node_type;
    jm["contamination"] = model.contamination;
    jm["degenerate"] = model.degenerate;
    jm["scaler"] = {{"min_us", model.scaler.min_us},
                    {"max_us", model.scaler.max_us}};
    jm["sphere"] = {{"center", vector_to_json(model.sphere.center)},
                    {"radius", model.sphere.radius},
                    {"threshold", model.sphere.threshold}};
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < model.params.num_layers(); ++l) {
      nlohmann::json jl;
      jl["bias"] = vector_to_json(model.params.bias[l]);
      nlohmann::json rels = nlohmann::json::array();
      for (const auto& w : model.params.weights[l]) {
        rels.push_back(matrix_to_json(w));
      }
      jl["weights"] = std::move(rels);
      layers.push_back(std::move(jl));
    }
    jm["layers"] = std::move(layers);
    models[label] = std::move(jm);
  }
  j["models"] = std::move(models);
  return j.dump();
}

ModelBundle parse_model_snapshot(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw std::runtime_error("model snapshot: not valid JSON");
  }
  if (!j.contains("magic") || j["magic"] != kModelMagic) {
    throw std::runtime_error("model snapshot: missing or unsupported magic");
  }
  ModelBundle bundle;
  const auto& jc = j.at("config");
  bundle.config.learning_rate = jc.at("learning_rate").get<double>();
  bundle.config.layers = jc.at("layers").get<int>();
  bundle.config.dim = jc.at("dim").get<int>();
  bundle.config.beta = jc.at("beta").get<double>();
  bundle.config.min_contamination = jc.at("min_contamination").get<double>();
  bundle.config.max_contamination = jc.at("max_contamination").get<double>();
  bundle.config.max_epochs = jc.at("max_epochs").get<int>();
  bundle.config.patience = jc.at("patience").get<int>();
  bundle.config.rng_seed = jc.at("rng_seed").get<std::uint64_t>();
  bundle.config.validation_fraction =
      jc.at("validation_fraction").get<double>();
  bundle.type_vocab = j.at("type_vocab").get<std::vector<std::string>>();
  bundle.edge_vocab = j.at("edge_vocab").get<std::vector<std::string>>();
  bundle.scaler.min_us = j.at("scaler").at("min_us").get<std::int64_t>();
  bundle.scaler.max_us = j.at("scaler").at("max_us").get<std::int64_t>();
  for (const auto& [label, jm] : j.at("models").items()) {
    TypeModel model;
    model.node_type = jm.at("node_type").get<std::string>();
    model.contamination = jm.at("contamination").get<double>();
    model.degenerate = jm.at("degenerate").get<bool>();
    model.scaler.min_us = jm.at("scaler").at("min_us").get<std::int64_t>();
    model.scaler.max_us = jm.at("scaler").at("max_us").get<std::int64_t>();
    model.sphere.center = vector_from_json(jm.at("sphere").at("center"));
    model.sphere.radius = jm.at("sphere").at("radius").get<double>();
    model.sphere.threshold = jm.at("sphere").at("threshold").get<double>();
    for (const auto& jl : jm.at("layers")) {
      model.params.bias.push_back(vector_from_json(jl.at("bias")));
      std::vector<Eigen::MatrixXd> rels;
      for (const auto& jw : jl.at("weights")) {
        rels.push_back(matrix_from_json(jw));
      }
      model.params.weights.push_back(std::move(rels));
    }
    bundle.models[label] = std::move(model);
  }
  return bundle;
}

void save_model_snapshot(const ModelBundle& bundle, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write snapshot '" + path + "'");
  out << model_snapshot_json(bundle);
  if (!out) throw std::runtime_error("short write on snapshot '" + path + "'");
}

ModelBundle load_model_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_snapshot(buf.str());
}

}  // namespace provsentinel
