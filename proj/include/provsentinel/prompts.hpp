#pragma once

#include <map>
#include <string>
#include <vector>

namespace provsentinel {

// The eight prompt templates driving the investigation pipeline. Templates
// use {{name}} placeholders; document content itself arrives through
// retrieval context, not through the template.
struct PromptSet {
  std::string investigator_instructions;
  std::string retrieve_iocs;            // {{doc_id}}
  std::string summarize_report;         // {{doc_id}}, {{ioc_list}}
  std::string retrieve_iocs_per_stage;  // {{report_names}}, {{stage}}
  std::string summarize_comprehensive;  // {{ioc_list}}
  std::string judge_instructions;
  std::string select_ioc_judge;         // {{node_type}}
  std::string enrich_comprehensive;     // {{comprehensive_report}},
                                        // {{context_report}}
};

PromptSet default_prompts();

// Template file names (without .txt), in PromptSet field order.
const std::vector<std::string>& prompt_names();

// Reads <dir>/<name>.txt for each template that exists; absent files keep
// the compiled-in default.
PromptSet load_prompts(const std::string& dir);

// Writes all eight defaults as <dir>/<name>.txt, creating dir if needed.
void write_default_prompts(const std::string& dir);

// Substitutes every {{key}}. An unresolved placeholder throws: a template
// asking for a value the call site never supplies is a wiring bug, not a
// prompt-authoring choice.
std::string render_prompt(const std::string& tmpl,
                          const std::map<std::string, std::string>& values);

}  // namespace provsentinel
