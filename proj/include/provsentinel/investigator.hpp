#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "provsentinel/graph_store.hpp"
#include "provsentinel/llm_gateway.hpp"
#include "provsentinel/prompts.hpp"
#include "provsentinel/serializer.hpp"
#include "provsentinel/subgraphs.hpp"

namespace provsentinel {

// Raised when there is nothing at the reporting level to investigate; the
// CLI maps it to the empty-result exit code.
class RefusalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IocEntry {
  std::string value;
  bool validated = false;
};

struct IocList {
  std::vector<IocEntry> entries;

  std::vector<std::string> validated() const;
  std::vector<std::string> rejected() const;
};

struct AttackReport {
  std::string subgraph_id;
  std::string markdown;
  bool incomplete = false;
};

struct StageIocs {
  std::string stage;
  std::vector<std::string> iocs;
};

struct EnrichmentRecord {
  std::string node_type;
  std::string ioc;
  std::size_t matched_nodes = 0;
  bool no_context = false;
  std::string context_report;  // empty when no_context
};

struct ComprehensiveReport {
  std::string markdown;  // assembled: body + stage map + enrichment appendix
  std::vector<StageIocs> stage_map;
  std::vector<EnrichmentRecord> enrichments;
  bool incomplete = false;
};

struct InvestigationConfig {
  Level reporting_level = Level::Moderate;
  std::size_t retrieval_k = 8;
  std::size_t chunk_sentences = 20;
};

struct InvestigationResult {
  std::vector<AttackReport> reports;
  ComprehensiveReport comprehensive;
  nlohmann::json audit;
};

// The eight recognized stages, in canonical order.
const std::vector<std::string>& apt_stages();

// Node types the judge is asked about, in loop order.
const std::vector<std::string>& judge_node_types();

// Parses a bracketed quoted-string list out of an LLM reply, tolerating
// surrounding prose and code fences. No brackets at all means unparseable.
std::optional<std::vector<std::string>> parse_ioc_list(
    const std::string& response);

// First quoted token in a reply; accepts 'x', "x" and the `x' convention.
std::optional<std::string> first_quoted(const std::string& response);

// Tags each candidate validated iff it occurs case-insensitively in the
// document text. Case-insensitive duplicates collapse to their first
// spelling.
IocList validate_iocs(const std::vector<std::string>& candidates,
                      const std::string& document_text);

// Mandated report sections still absent from the Markdown, judged by
// heading lines only. Empty result means the report is structurally
// complete.
std::vector<std::string> missing_sections(const std::string& markdown);

// Drops rows from IOC tables (tables whose first header cell names an
// IOC/indicator column) whose indicator does not occur in the grounding
// text. Returns the scrubbed Markdown and the dropped indicators.
std::pair<std::string, std::vector<std::string>> scrub_ioc_tables(
    const std::string& markdown, const std::string& grounding_text);

class Investigator {
 public:
  Investigator(const ProvenanceGraph& graph,
               std::vector<std::uint32_t> anomalous_nodes,
               ChatBackend& chat, std::shared_ptr<Embedder> embedder,
               PromptSet prompts, InvestigationConfig config);

  // Full pipeline. Refuses when no subgraph reaches the reporting level.
  InvestigationResult run(const std::vector<AnomalousSubgraph>& subgraphs);

  // Stage-level entry points, public so tests can pin each contract.
  void index_document(const LogDocument& doc);
  std::vector<std::string> extract_iocs(const LogDocument& doc,
                                        std::vector<ChatMessage>& history);
  AttackReport summarize_report(const LogDocument& doc,
                                const std::vector<std::string>& validated,
                                std::vector<ChatMessage>& history);
  IocList extract_stage_iocs(const std::string& stage,
                             const std::string& report_names,
                             const VectorIndex& report_index,
                             const std::string& grounding_text);
  // Judge acceptance requires membership in the validated pool, which run()
  // accumulates across all validation layers.
  std::optional<std::string> judge_select(const std::string& report_markdown,
                                          const std::string& node_type);
  void set_validated_pool(std::vector<std::string> pool) {
    validated_pool_ = std::move(pool);
  }

  const nlohmann::json& audit() const { return audit_; }

 private:
  std::string retrieval_context(const VectorIndex& index,
                                const std::string& query,
                                const std::optional<std::string>& doc_filter,
                                const std::string& heading) const;
  std::string grounded_union() const;

  const ProvenanceGraph& graph_;
  std::vector<std::uint32_t> anomalous_nodes_;
  ChatBackend& chat_;
  std::shared_ptr<Embedder> embedder_;
  PromptSet prompts_;
  InvestigationConfig config_;

  VectorIndex doc_index_;
  std::vector<std::string> doc_texts_;      // serialized subgraph documents
  std::vector<std::string> context_texts_;  // enrichment context documents
  std::vector<std::string> validated_pool_;
  nlohmann::json audit_;
};

// Stateless analyst follow-up: retrieves over an index of report files and
// answers one question.
std::string answer_question(const std::string& question,
                            const VectorIndex& report_index,
                            ChatBackend& chat, const PromptSet& prompts,
                            std::size_t k = 8);

}  // namespace provsentinel
