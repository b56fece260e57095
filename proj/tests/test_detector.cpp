#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gradient_check.hpp"
#include "helpers.hpp"
#include "provsentinel/detector.hpp"
#include "provsentinel/features.hpp"
#include "provsentinel/graph_store.hpp"

using namespace provsentinel;
using provsentinel::testing::gradient_check;
using provsentinel::testing::make_event;
using provsentinel::testing::make_random_graph;

namespace {

RgcnParams zero_like(const RgcnParams& p) {
  RgcnParams z = p;
  for (auto& layer : z.weights) {
    for (auto& w : layer) w.setZero();
  }
  for (auto& b : z.bias) b.setZero();
  return z;
}

}  // namespace

TEST_CASE("rgcn_forward: all-zero parameters give zero embeddings") {
  Rng rng(5);
  auto g = make_random_graph(rng, 12, 40);
  auto enc = encode_graph(g);
  auto params = zero_like(init_params(enc.num_relations(), enc.feature_width,
                                      2, 8, 1));
  auto h = rgcn_forward_all(params, enc);
  CHECK(h.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rgcn_forward: identity over the self-loop reproduces the input") {
  ProvenanceGraph g;
  auto t = g.intern_type("T");
  g.upsert_node("only", t);
  g.intern_action("a");
  auto enc = encode_graph(g);
  REQUIRE(enc.num_relations() == 3);

  RgcnParams params;
  params.weights.resize(1);
  std::size_t w = enc.feature_width;
  for (std::size_t r = 0; r < 3; ++r) {
    params.weights[0].push_back(Eigen::MatrixXd::Zero(w, w));
  }
  params.weights[0][2] = Eigen::MatrixXd::Identity(w, w);  // self relation
  params.bias.push_back(Eigen::VectorXd::Zero(w));

  auto h = rgcn_forward_all(params, enc);
  CHECK((h - enc.features).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rgcn_forward matches a dense-matrix reference computation") {
  ProvenanceGraph g;
  auto tp = g.intern_type("P");
  auto tf = g.intern_type("F");
  for (int i = 0; i < 3; ++i) g.upsert_node("p" + std::to_string(i), tp);
  for (int i = 0; i < 2; ++i) g.upsert_node("f" + std::to_string(i), tf);
  auto read = g.intern_action("read");
  auto write = g.intern_action("write");
  g.add_edge(0, read, 3, 10);
  g.add_edge(0, read, 4, 20);
  g.add_edge(1, write, 3, 30);
  g.add_edge(2, read, 3, 40);
  g.add_edge(2, write, 4, 50);
  g.add_edge(1, read, 3, 60);  // duplicate endpoints, counted twice
  auto enc = encode_graph(g);
  REQUIRE(enc.num_relations() == 5);

  auto params = init_params(enc.num_relations(), enc.feature_width, 3, 6, 77);

  // Dense reference: Â_r[dst][src] += 1/indeg_r(dst); H' = σ(Σ Â_r H W_rᵀ + b).
  std::size_t n = enc.num_rows();
  std::vector<Eigen::MatrixXd> a_hat(
      enc.num_relations(), Eigen::MatrixXd::Zero(n, n));
  for (std::size_t r = 0; r < enc.num_relations(); ++r) {
    for (const auto& [src, dst] : enc.relations[r]) {
      a_hat[r](dst, src) +=
          1.0 / static_cast<double>(enc.relation_indegree[r][dst]);
    }
  }
  Eigen::MatrixXd h_ref = enc.features;
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, params.bias[l].size());
    z.rowwise() += params.bias[l].transpose();
    for (std::size_t r = 0; r < enc.num_relations(); ++r) {
      z += a_hat[r] * h_ref * params.weights[l][r].transpose();
    }
    h_ref = (l + 1 < params.num_layers()) ? z.cwiseMax(0.0).eval() : z;
  }

  auto h = rgcn_forward_all(params, enc);
  CHECK((h - h_ref).cwiseAbs().maxCoeff() < 1e-10);

  // Per-type view matches the corresponding block.
  auto hp = rgcn_forward(params, enc, "P");
  CHECK(hp.rows() == 3);
  CHECK((hp - h.topRows(3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(20260814);
  for (int trial = 0; trial < 3; ++trial) {
    auto g = make_random_graph(rng, 10, 30, 2, 2);
    auto enc = encode_graph(g);
    auto params = init_params(enc.num_relations(), enc.feature_width, 3, 5,
                              100 + trial);
    std::vector<std::uint32_t> rows;
    for (std::uint32_t i = 0; i < enc.num_rows(); ++i) rows.push_back(i);
    auto res = gradient_check(params, enc, rows, 0.5);
    CHECK(res.params_checked > 100);
    CHECK(res.max_rel_error <= 1e-4);
  }
}

TEST_CASE("rgcn_forward is permutation-equivariant (exact)") {
  Rng rng(31);
  auto a = make_random_graph(rng, 25, 90, 3, 3);

  // Same nodes inserted in a different order, same edges in the same order.
  std::vector<std::uint32_t> perm(a.node_count());
  for (std::uint32_t i = 0; i < perm.size(); ++i) perm[i] = i;
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
  }
  ProvenanceGraph b(a.type_vocab(), a.edge_vocab());
  for (auto old_idx : perm) {
    b.upsert_node(a.node(old_idx).id, a.node(old_idx).type);
  }
  for (const auto& e : a.edges()) {
    b.add_edge(b.node_index(a.node(e.src).id), e.action,
               b.node_index(a.node(e.dst).id), e.timestamp_us);
  }

  auto enc_a = encode_graph(a);
  auto enc_b = encode_graph(b);
  auto params = init_params(enc_a.num_relations(), enc_a.feature_width, 3, 8, 9);
  auto ha = rgcn_forward_all(params, enc_a);
  auto hb = rgcn_forward_all(params, enc_b);
  for (std::uint32_t v = 0; v < a.node_count(); ++v) {
    auto row_a = enc_a.row_of_node[v];
    auto row_b = enc_b.row_of_node[b.node_index(a.node(v).id)];
    CHECK((ha.row(row_a) - hb.row(row_b)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("estimate_contamination clamps to [Min_con, Max_con]") {
  TrainingConfig config;
  CHECK(estimate_contamination(std::pair<std::size_t, std::size_t>{0, 1000},
                               config) == 0.001);
  CHECK(estimate_contamination(std::pair<std::size_t, std::size_t>{100, 1000},
                               config) == 0.05);
  CHECK(estimate_contamination(std::pair<std::size_t, std::size_t>{2, 100},
                               config) == doctest::Approx(0.02));
  CHECK(estimate_contamination(std::nullopt, config) == 0.001);
}

TEST_CASE("quantile uses the pinned index definition") {
  std::vector<double> v{5, 1, 4, 2, 3};
  CHECK(quantile(v, 0.5) == 3);    // ceil(2.5)-1 = index 2
  CHECK(quantile(v, 1.0) == 5);
  CHECK(quantile(v, 0.0) == 1);
  CHECK(quantile(v, 0.999) == 5);  // ceil(4.995)-1 = index 4
  CHECK(quantile({7.0}, 0.3) == 7.0);
}

TEST_CASE("scoring: translation consistency and arithmetic") {
  Hypersphere sphere;
  sphere.center = Eigen::VectorXd::Zero(4);
  sphere.radius = 2.0;

  Eigen::VectorXd h = Eigen::VectorXd::Zero(4);
  auto score = [](const Eigen::VectorXd& emb, const Hypersphere& s) {
    return std::max(0.0, (emb - s.center).squaredNorm() - s.radius * s.radius);
  };
  CHECK(score(h, sphere) == 0.0);  // embedding = center

  h(0) = 2.0;  // distance² = radius² exactly
  CHECK(score(h, sphere) == 0.0);

  h(0) = std::sqrt(4.0 + 7.5);  // distance² = radius² + 7.5
  CHECK(score(h, sphere) == doctest::Approx(7.5).epsilon(1e-12));

  // Exactly representable embedding and shift: equality is bitwise.
  h(0) = 3.0;
  h(1) = -1.5;
  Eigen::VectorXd shift(4);
  shift << 3.25, -2.0, 0.5, 1024.0;
  Hypersphere moved = sphere;
  moved.center += shift;
  CHECK(score(h + shift, moved) == score(h, sphere));
}

TEST_CASE("fit: identical embeddings give a zero-radius, zero-threshold model") {
  // Edgeless graph: all features zero, hence identical embeddings.
  ProvenanceGraph g;
  auto t = g.intern_type("T");
  for (int i = 0; i < 20; ++i) g.upsert_node("n" + std::to_string(i), t);
  g.intern_action("a");
  auto enc = encode_graph(g);
  TrainingConfig config;
  config.max_epochs = 5;
  auto model = fit_type_model(enc, "T", config);
  CHECK(model.sphere.radius == 0.0);
  CHECK(model.sphere.threshold == 0.0);
  auto scores = score_nodes(model, enc);
  for (const auto& [node, s] : scores) CHECK(s == 0.0);
}

TEST_CASE("fit: degenerate single-node type") {
  ProvenanceGraph g;
  g.upsert_node("solo", g.intern_type("T"));
  g.intern_action("a");
  auto enc = encode_graph(g);
  TrainingConfig config;
  FitDiagnostics diag;
  auto model = fit_type_model(enc, "T", config, nullptr, &diag);
  CHECK(model.degenerate);
  CHECK(model.sphere.radius == 0.0);
  CHECK(model.sphere.threshold == 0.0);
  REQUIRE(diag.warnings.size() == 1);
  CHECK(diag.warnings[0].find("fewer than 2") != std::string::npos);
}

TEST_CASE("fit: threshold calibration on the training population") {
  Rng rng(63);
  auto g = make_random_graph(rng, 600, 2400, 1, 4);
  auto enc = encode_graph(g);
  TrainingConfig config;
  config.max_epochs = 25;
  config.dim = 16;

  for (double contamination : {0.001, 0.02, 0.05}) {
    TrainingConfig c = config;
    c.min_contamination = contamination;
    c.max_contamination = std::max(contamination, c.max_contamination);
    auto model = fit_type_model(enc, "T0", c);
    CHECK(model.contamination == contamination);

    auto scores = score_nodes(model, enc);
    std::size_t flagged = 0;
    for (const auto& [node, s] : scores) {
      if (s > model.sphere.threshold) ++flagged;
    }
    double n = static_cast<double>(scores.size());
    CHECK(static_cast<double>(flagged) / n <= contamination + 1.0 / n);
  }
}

TEST_CASE("fit: about β of training nodes end up outside the sphere") {
  Rng rng(64);
  auto g = make_random_graph(rng, 550, 2200, 1, 4);
  auto enc = encode_graph(g);
  TrainingConfig config;
  config.max_epochs = 20;
  config.dim = 16;
  auto model = fit_type_model(enc, "T0", config);

  Eigen::MatrixXd h = rgcn_forward(model.params, enc, "T0");
  std::size_t outside = 0;
  double r_sq = model.sphere.radius * model.sphere.radius;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    if ((h.row(i).transpose() - model.sphere.center).squaredNorm() > r_sq) {
      ++outside;
    }
  }
  double fraction = static_cast<double>(outside) / static_cast<double>(h.rows());
  CHECK(fraction == doctest::Approx(config.beta).epsilon(0.2));
  CHECK(std::abs(fraction - config.beta) <= 0.1);
}

TEST_CASE("detect_anomalies: missing type model warns and skips") {
  Rng rng(65);
  auto g = make_random_graph(rng, 60, 200, 2, 3);
  TrainingConfig config;
  config.max_epochs = 5;
  config.dim = 8;
  auto bundle = train_models(g, config);
  REQUIRE(bundle.models.size() == 2);
  bundle.models.erase("T1");

  auto result = detect_anomalies(bundle, g);
  REQUIRE(result.warnings.size() == 1);
  CHECK(result.warnings[0].find("T1") != std::string::npos);
  for (auto v : result.anomalous_nodes) {
    CHECK(g.type_name(g.node(v).type) == "T0");
  }
}

TEST_CASE("detect_anomalies: infinite thresholds flag nothing") {
  Rng rng(66);
  auto g = make_random_graph(rng, 40, 120, 2, 3);
  TrainingConfig config;
  config.max_epochs = 3;
  config.dim = 8;
  auto bundle = train_models(g, config);
  for (auto& [label, model] : bundle.models) {
    model.sphere.threshold = std::numeric_limits<double>::infinity();
  }
  auto result = detect_anomalies(bundle, g);
  CHECK(result.anomalous_nodes.empty());
  CHECK(result.scores.size() == g.node_count());
}

TEST_CASE("type isolation: removing an isolated type leaves scores unchanged") {
  Rng rng(67);
  // T0/T1 nodes participate in edges; T2 nodes are isolated.
  ProvenanceGraph a;
  auto t0 = a.intern_type("T0");
  auto t1 = a.intern_type("T1");
  auto t2 = a.intern_type("T2");
  auto act = a.intern_action("a");
  for (int i = 0; i < 30; ++i) a.upsert_node("x" + std::to_string(i), t0);
  for (int i = 0; i < 30; ++i) a.upsert_node("y" + std::to_string(i), t1);
  for (int i = 0; i < 10; ++i) a.upsert_node("z" + std::to_string(i), t2);
  for (int i = 0; i < 120; ++i) {
    a.add_edge(static_cast<std::uint32_t>(rng.uniform_index(30)), act,
               static_cast<std::uint32_t>(30 + rng.uniform_index(30)),
               static_cast<std::int64_t>(rng.uniform_index(1000)) * 1000000);
  }

  ProvenanceGraph b(a.type_vocab(), a.edge_vocab());
  for (const auto& n : a.nodes()) {
    if (a.type_name(n.type) != "T2") b.upsert_node(n.id, n.type);
  }
  for (const auto& e : a.edges()) {
    b.add_edge(b.node_index(a.node(e.src).id), e.action,
               b.node_index(a.node(e.dst).id), e.timestamp_us);
  }

  TrainingConfig config;
  config.max_epochs = 5;
  config.dim = 8;
  auto bundle = train_models(a, config);
  auto res_a = detect_anomalies(bundle, a);
  bundle.models.erase("T2");
  auto res_b = detect_anomalies(bundle, b);

  for (const auto& [node_b, score_b] : res_b.scores) {
    auto node_a = a.node_index(b.node(node_b).id);
    REQUIRE(res_a.scores.count(node_a) == 1);
    CHECK(res_a.scores.at(node_a) == score_b);
  }
}

TEST_CASE("train_models is deterministic and parallel-safe") {
  Rng rng(68);
  auto g = make_random_graph(rng, 90, 300, 3, 4);
  TrainingConfig config;
  config.max_epochs = 6;
  config.dim = 8;
  auto b1 = train_models(g, config, nullptr, 1);
  auto b2 = train_models(g, config, nullptr, 4);
  CHECK(model_snapshot_json(b1) == model_snapshot_json(b2));
}

TEST_CASE("model snapshot: round-trip, byte identity, behavioral identity") {
  Rng rng(69);
  auto g = make_random_graph(rng, 80, 280, 2, 3);
  TrainingConfig config;
  config.max_epochs = 6;
  config.dim = 8;
  auto bundle = train_models(g, config);

  auto tmp = std::filesystem::temp_directory_path() / "provsentinel_model_test";
  std::filesystem::create_directories(tmp);
  auto path = (tmp / "model.json").string();
  save_model_snapshot(bundle, path);
  auto loaded = load_model_snapshot(path);
  CHECK(model_snapshot_json(loaded) == model_snapshot_json(bundle));

  auto r1 = detect_anomalies(bundle, g);
  auto r2 = detect_anomalies(loaded, g);
  CHECK(r1.anomalous_nodes == r2.anomalous_nodes);
  CHECK(r1.scores == r2.scores);

  std::ofstream(path) << "{\"magic\": \"WRONG\"}";
  CHECK_THROWS_WITH_AS(load_model_snapshot(path), doctest::Contains("magic"),
                       std::runtime_error);
}

TEST_CASE("score_nodes rejects a graph encoded with a different vocabulary") {
  Rng rng(70);
  auto g = make_random_graph(rng, 30, 100, 2, 3);
  TrainingConfig config;
  config.max_epochs = 3;
  config.dim = 8;
  auto bundle = train_models(g, config);

  ProvenanceGraph other(g.type_vocab(), {});
  for (const auto& n : g.nodes()) other.upsert_node(n.id, n.type);
  other.intern_action("brand_new_action");
  auto enc = encode_graph(other);  // relation count 3, model expects 7
  CHECK_THROWS_WITH_AS(score_nodes(bundle.models.at("T0"), enc),
                       doctest::Contains("re-encode"), std::runtime_error);
}
