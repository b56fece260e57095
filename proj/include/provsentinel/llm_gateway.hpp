#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace provsentinel {

// Connection-level failure (unreachable host, timeout) after all retries.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Server answered with a non-2xx status.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, const std::string& message)
      : std::runtime_error("api error (status " + std::to_string(status) +
                           "): " + message),
        status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct ChatMessage {
  std::string role;  // "user" or "assistant"
  std::string content;
};

// Stateless chat interface. Conversation memory belongs to the caller: the
// full message history is passed on every call, and "resetting memory" means
// the caller drops it.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string chat(const std::string& system_instructions,
                           const std::vector<ChatMessage>& messages) = 0;
};

struct LlmConfig {
  std::string base_url = "http://localhost:8080";
  std::string model = "gpt-4o-mini";
  std::string api_key;  // empty: no Authorization header
  std::string embed_model = "text-embedding-3-small";
  double temperature = 0.0;
  int timeout_seconds = 60;
  int max_attempts = 3;
  int initial_backoff_ms = 500;
};

// Reads PROVSENTINEL_LLM_URL, PROVSENTINEL_LLM_MODEL, PROVSENTINEL_LLM_KEY
// and PROVSENTINEL_EMBED_MODEL over the defaults above.
LlmConfig llm_config_from_env();

// OpenAI-compatible /v1/chat/completions client. Shareable across threads;
// every call opens its own connection.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(LlmConfig config);
  std::string chat(const std::string& system_instructions,
                   const std::vector<ChatMessage>& messages) override;

  // Total HTTP attempts across all calls, including retries.
  std::size_t attempts() const { return attempts_.load(); }

 private:
  LlmConfig config_;
  std::atomic<std::size_t> attempts_{0};
};

struct MockRule {
  std::string pattern;  // substring of the rendered prompt
  std::string response;
  bool once = false;
  bool used = false;
};

// Scripted backend for offline tests. Rules are tried in order against the
// rendered prompt (system plus every message, role-prefixed); the first live
// match answers. A prompt no rule matches throws: scripts must be exhaustive
// so fixture gaps fail loudly instead of skewing a test.
class MockChatBackend : public ChatBackend {
 public:
  MockChatBackend() = default;
  explicit MockChatBackend(std::vector<MockRule> rules)
      : rules_(std::move(rules)) {}

  // Fixture: {"rules": [{"pattern","response","once"?}, ...]} or a bare array.
  static MockChatBackend from_file(const std::string& path);
  // Same fixture format; lets callers construct the backend in place (the
  // mutex member makes this type immovable).
  static std::vector<MockRule> rules_from_file(const std::string& path);

  void add_rule(std::string pattern, std::string response, bool once = false);
  std::string chat(const std::string& system_instructions,
                   const std::vector<ChatMessage>& messages) override;

  // Rendered prompt of every chat() call, in order.
  std::vector<std::string> calls() const;

  static std::string render(const std::string& system_instructions,
                            const std::vector<ChatMessage>& messages);

 private:
  std::vector<MockRule> rules_;
  std::vector<std::string> calls_;
  mutable std::mutex mutex_;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<std::vector<double>> embed(
      const std::vector<std::string>& texts) = 0;
  virtual std::size_t dimension() const = 0;
};

// Deterministic offline embedding: word 1..3-grams hashed (FNV-1a) into a
// signed fixed-width vector, L2-normalized. Text with no tokens maps to a
// reserved epsilon vector so cosine similarity stays defined.
class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(std::size_t width = 512) : width_(width) {}
  std::vector<std::vector<double>> embed(
      const std::vector<std::string>& texts) override;
  std::size_t dimension() const override { return width_; }

 private:
  std::size_t width_;
};

// OpenAI-compatible /v1/embeddings client; retry semantics match chat.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(LlmConfig config, std::size_t dimension)
      : config_(std::move(config)), dimension_(dimension) {}
  std::vector<std::vector<double>> embed(
      const std::vector<std::string>& texts) override;
  std::size_t dimension() const override { return dimension_; }

 private:
  LlmConfig config_;
  std::size_t dimension_;
};

struct RetrievedChunk {
  std::size_t chunk_id = 0;
  double similarity = 0.0;
  std::string text;
  std::string doc_id;
};

// Exact-scan cosine index. Small document counts make anything fancier
// pointless; exactness keeps retrieval testable against a brute-force oracle
// (which is the same loop, so the tests re-derive it independently).
class VectorIndex {
 public:
  explicit VectorIndex(std::shared_ptr<Embedder> embedder)
      : embedder_(std::move(embedder)) {}

  // Returns the new chunk's id. Zero embeddings are nudged to epsilon.
  std::size_t add(const std::string& text, const std::string& doc_id);

  // Top-k by cosine similarity, ties broken by ascending chunk id. With a
  // doc filter only that document's chunks compete.
  std::vector<RetrievedChunk> retrieve(
      const std::string& query, std::size_t k,
      const std::optional<std::string>& doc_filter = std::nullopt) const;

  std::size_t size() const { return texts_.size(); }
  const std::string& chunk_text(std::size_t id) const { return texts_.at(id); }
  const std::string& chunk_doc(std::size_t id) const { return docs_.at(id); }

 private:
  std::shared_ptr<Embedder> embedder_;
  std::vector<std::vector<double>> embeddings_;
  std::vector<std::string> texts_;
  std::vector<std::string> docs_;
};

double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b);

}  // namespace provsentinel
