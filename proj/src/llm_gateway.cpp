#include "provsentinel/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace provsentinel {

using nlohmann::json;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value != nullptr && *value != '\0' ? value : fallback;
}

// Issues one POST with retry-on-transport-failure; non-2xx is not retried.
json post_json(const LlmConfig& config, const std::string& path,
               const json& body, std::atomic<std::size_t>* attempts) {
  httplib::Client client(config.base_url);
  client.set_connection_timeout(config.timeout_seconds, 0);
  client.set_read_timeout(config.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config.api_key);
  }

  int backoff_ms = config.initial_backoff_ms;
  std::string last_error;
  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    if (attempts != nullptr) attempts->fetch_add(1);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (res) {
      if (res->status / 100 != 2) {
        throw ApiError(res->status, res->body);
      }
      try {
        return json::parse(res->body);
      } catch (const json::exception& e) {
        throw ApiError(res->status, std::string("malformed response body: ") +
                                        e.what());
      }
    }
    last_error = httplib::to_string(res.error());
    if (attempt < config.max_attempts) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms *= 2;
    }
  }
  throw TransportError("POST " + config.base_url + path + " failed after " +
                       std::to_string(config.max_attempts) +
                       " attempts: " + last_error);
}

}  // namespace

LlmConfig llm_config_from_env() {
  LlmConfig config;
  config.base_url = env_or("PROVSENTINEL_LLM_URL", config.base_url);
  config.model = env_or("PROVSENTINEL_LLM_MODEL", config.model);
  config.api_key = env_or("PROVSENTINEL_LLM_KEY", config.api_key);
  config.embed_model = env_or("PROVSENTINEL_EMBED_MODEL", config.embed_model);
  return config;
}

HttpChatBackend::HttpChatBackend(LlmConfig config)
    : config_(std::move(config)) {}

std::string HttpChatBackend::chat(const std::string& system_instructions,
                                  const std::vector<ChatMessage>& messages) {
  if (messages.empty()) {
    throw std::invalid_argument("chat: message list is empty");
  }
  json payload_messages = json::array();
  payload_messages.push_back(
      {{"role", "system"}, {"content", system_instructions}});
  for (const auto& msg : messages) {
    payload_messages.push_back({{"role", msg.role}, {"content", msg.content}});
  }
  json body = {{"model", config_.model},
               {"temperature", config_.temperature},
               {"messages", std::move(payload_messages)}};

  json response = post_json(config_, "/v1/chat/completions", body, &attempts_);
  try {
    return response.at("choices").at(0).at("message").at("content")
        .get<std::string>();
  } catch (const json::exception&) {
    throw ApiError(200, "response lacks choices[0].message.content: " +
                            response.dump());
  }
}

std::vector<MockRule> MockChatBackend::rules_from_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("mock script: cannot open " + path);
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("mock script " + path + ": " + e.what());
  }
  const json& rules_json = doc.is_array() ? doc : doc.at("rules");
  std::vector<MockRule> rules;
  for (const auto& entry : rules_json) {
    MockRule rule;
    rule.pattern = entry.at("pattern").get<std::string>();
    rule.response = entry.at("response").get<std::string>();
    rule.once = entry.value("once", false);
    rules.push_back(std::move(rule));
  }
  return rules;
}

MockChatBackend MockChatBackend::from_file(const std::string& path) {
  return MockChatBackend(rules_from_file(path));
}

void MockChatBackend::add_rule(std::string pattern, std::string response,
                               bool once) {
  std::lock_guard<std::mutex> lock(mutex_);
  rules_.push_back({std::move(pattern), std::move(response), once, false});
}

std::string MockChatBackend::render(const std::string& system_instructions,
                                    const std::vector<ChatMessage>& messages) {
  std::string out = "system: " + system_instructions;
  for (const auto& msg : messages) {
    out += "\n" + msg.role + ": " + msg.content;
  }
  return out;
}

std::string MockChatBackend::chat(const std::string& system_instructions,
                                  const std::vector<ChatMessage>& messages) {
  if (messages.empty()) {
    throw std::invalid_argument("chat: message list is empty");
  }
  std::string rendered = render(system_instructions, messages);
  std::lock_guard<std::mutex> lock(mutex_);
  calls_.push_back(rendered);
  for (auto& rule : rules_) {
    if (rule.once && rule.used) continue;
    if (rendered.find(rule.pattern) != std::string::npos) {
      rule.used = true;
      return rule.response;
    }
  }
  throw std::runtime_error(
      "mock chat backend: no rule matches prompt: " + rendered.substr(0, 200));
}

std::vector<std::string> MockChatBackend::calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return calls_;
}

std::vector<std::vector<double>> HashEmbedder::embed(
    const std::vector<std::string>& texts) {
  if (texts.empty()) {
    throw std::invalid_argument("embed: text list is empty");
  }
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
      unsigned char c = static_cast<unsigned char>(ch);
      if (std::isalnum(c)) {
        current.push_back(static_cast<char>(std::tolower(c)));
      } else if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    }
    if (!current.empty()) tokens.push_back(std::move(current));

    std::vector<double> vec(width_, 0.0);
    if (tokens.empty()) {
      vec[0] = 1e-6;  // reserved epsilon vector, deliberately unnormalized
      out.push_back(std::move(vec));
      continue;
    }
    for (std::size_t n = 1; n <= 3; ++n) {
      if (tokens.size() < n) break;
      for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::uint64_t hash = 1469598103934665603ull;  // FNV-1a 64-bit
        for (std::size_t j = 0; j < n; ++j) {
          if (j > 0) {
            hash ^= static_cast<std::uint64_t>(' ');
            hash *= 1099511628211ull;
          }
          for (char ch : tokens[i + j]) {
            hash ^= static_cast<std::uint64_t>(
                static_cast<unsigned char>(ch));
            hash *= 1099511628211ull;
          }
        }
        double sign = (hash & 1ull) != 0 ? 1.0 : -1.0;
        vec[(hash >> 1) % width_] += sign;
      }
    }
    double norm = 0.0;
    for (double v : vec) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& v : vec) v /= norm;
    } else {
      vec[0] = 1e-6;  // all n-gram signs cancelled; keep cosine defined
    }
    out.push_back(std::move(vec));
  }
  return out;
}

std::vector<std::vector<double>> HttpEmbedder::embed(
    const std::vector<std::string>& texts) {
  if (texts.empty()) {
    throw std::invalid_argument("embed: text list is empty");
  }
  json body = {{"model", config_.embed_model}, {"input", texts}};
  json response = post_json(config_, "/v1/embeddings", body, nullptr);
  std::vector<std::vector<double>> out(texts.size());
  try {
    for (const auto& item : response.at("data")) {
      std::size_t index = item.at("index").get<std::size_t>();
      out.at(index) = item.at("embedding").get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw ApiError(200, std::string("malformed embeddings response: ") +
                            e.what());
  }
  for (const auto& vec : out) {
    if (vec.size() != dimension_) {
      throw ApiError(200, "embedding dimension mismatch: got " +
                              std::to_string(vec.size()) + ", expected " +
                              std::to_string(dimension_));
    }
  }
  return out;
}

double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::size_t VectorIndex::add(const std::string& text,
                             const std::string& doc_id) {
  auto vec = embedder_->embed({text})[0];
  double norm = 0.0;
  for (double v : vec) norm += v * v;
  if (norm == 0.0 && !vec.empty()) vec[0] = 1e-6;
  embeddings_.push_back(std::move(vec));
  texts_.push_back(text);
  docs_.push_back(doc_id);
  return texts_.size() - 1;
}

std::vector<RetrievedChunk> VectorIndex::retrieve(
    const std::string& query, std::size_t k,
    const std::optional<std::string>& doc_filter) const {
  if (k < 1) {
    throw std::invalid_argument("retrieve: k must be at least 1");
  }
  if (texts_.empty()) {
    throw std::invalid_argument("retrieve: index is empty");
  }
  auto query_vec = embedder_->embed({query})[0];
  std::vector<RetrievedChunk> scored;
  for (std::size_t id = 0; id < texts_.size(); ++id) {
    if (doc_filter && docs_[id] != *doc_filter) continue;
    RetrievedChunk chunk;
    chunk.chunk_id = id;
    chunk.similarity = cosine_similarity(query_vec, embeddings_[id]);
    chunk.text = texts_[id];
    chunk.doc_id = docs_[id];
    scored.push_back(std::move(chunk));
  }
  std::sort(scored.begin(), scored.end(),
            [](const RetrievedChunk& a, const RetrievedChunk& b) {
              if (a.similarity != b.similarity)
                return a.similarity > b.similarity;
              return a.chunk_id < b.chunk_id;
            });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

}  // namespace provsentinel
