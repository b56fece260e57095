#include "provsentinel/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace provsentinel {

namespace {

constexpr const char* kInvestigatorInstructions =
    "You are an advanced persistent threat (APT) attack investigator, "
    "skilled at summarizing log events related to anomaly detection alerts "
    "into comprehensive attack reports. You possess deep expertise in APTs, "
    "Cyber Threat Intelligence (CTI), and operating system security.\n"
    "Guidelines:\n"
    "Focus on delivering factual, high-quality analysis in a human-like "
    "narrative.\n"
    "Ensure all information is accurate and directly sourced from the "
    "document. Do not introduce any details not present in the document, "
    "avoiding any fabrications or hallucinations.\n"
    "Keep a detailed account of the attack's execution, including specific "
    "timestamps.\n"
    "All responses should be formatted in Markdown.\n"
    "Definitions:\n"
    "The APT stages are: Initial Compromise, Internal Reconnaissance, "
    "Command and Control, Privilege Escalation, Lateral Movement, Maintain "
    "Persistence, Data Exfiltration, and Covering Tracks.\n"
    "Indicators of Compromise (IOCs) include: External IP addresses. "
    "Suspicious or executable files suspected to be potential threats. "
    "Processes with moderate to high likelihood of exploitation.\n"
    "Your task is to generate an attack report that includes the following "
    "sections:\n"
    "A concise summary of the attack behavior, detailing key events and "
    "actions taken during the incident. Where applicable, specify the "
    "corresponding stage of the APT attack.\n"
    "A table of IOCs detected in the document. Based on your cybersecurity "
    "expertise, add a concise security context beside each detected IOC, "
    "including the legitimate usage and exploitation likelihood.\n"
    "A list of chronological log of actions, organized by minute.\n";

constexpr const char* kRetrieveIocs =
    "The provided document contains log events related to anomaly detection "
    "alerts.\n"
    "Extract the list of IOCs from the document {{doc_id}}.\n"
    "Return the output only as a Python list, formatted as: [`IOC1', `IOC2', "
    "`IOC3', etc].\n";

constexpr const char* kSummarizeReport =
    "Based on the logs in document {{doc_id}} and the extracted IOCs list: "
    "[{{ioc_list}}].\n"
    "Summarize the {{doc_id}} document into an attack report.\n"
    "The attack report includes the following sections:\n"
    "A concise summary of the attack behavior, detailing key events and "
    "actions taken during the incident. Where applicable, specify the "
    "corresponding stage of the APT attack.\n"
    "A table of IOCs detected in the document. Based on your cybersecurity "
    "expertise, add a concise security context beside each detected IOC, "
    "including the legitimate usage and exploitation likelihood.\n"
    "A list of chronological log of actions, organized by minute.\n";

constexpr const char* kRetrieveIocsPerStage =
    "The provided reports names are: [{{report_names}}].\n"
    "Extract the three highest-priority IOCs related to the stage: {{stage}} "
    "from each provided reports.\n"
    "Focus on external IP addresses, suspicious or executable files, "
    "malicious processes, and exploitable processes.\n"
    "Return the output only as a Python list, formatted as: [`IOC1', `IOC2', "
    "`IOC3', etc].\n";

constexpr const char* kSummarizeComprehensive =
    "Based on the provided reports and the extracted IOCs list: "
    "[{{ioc_list}}].\n"
    "Summarize all provided reports into a comprehensive attack report.\n"
    "Consider all external IP addresses, suspicious or executable files, "
    "malicious processes, and exploitable processes referenced in the "
    "provided reports.\n";

constexpr const char* kJudgeInstructions =
    "You are a highly skilled security analyst specializing in Advanced "
    "Persistent Threats (APTs), Cyber Threat Intelligence (CTI), and "
    "operating system security. Your expertise includes reviewing attack "
    "reports and providing actionable insights.\n"
    "The APT attack stages are: Initial Compromise, Internal "
    "Reconnaissance, Command and Control, Privilege Escalation, Lateral "
    "Movement, Maintain Persistence, Data Exfiltration, and Covering "
    "Tracks.\n"
    "Your task is to analyze the provided attack report and identify key "
    "Indicators of Compromise (IOCs) for further investigation. IOCs "
    "include external IP addresses, processes with moderate to high "
    "exploitation likelihood, and associated suspected files.\n"
    "Focus on identifying IOCs whose contextual analysis could uncover "
    "additional APT attack stages, enabling a comprehensive understanding "
    "of the full attack scenario.\n"
    "Prioritize IOCs directly tied to malicious activity, such as "
    "command-and-control IPs or malicious executable binaries, while "
    "deprioritizing general system processes or indicators linked to benign "
    "activities.\n";

constexpr const char* kSelectIocJudge =
    "Review the attack report to identify the highest-priority "
    "{{node_type}} IOC for further investigation, that could aid in "
    "uncovering additional APT attack stages.\n"
    "Return the IOC only, formatted as `IOC'.\n";

constexpr const char* kEnrichComprehensive =
    "Enrich the comprehensive attack report {{comprehensive_report}} by "
    "incorporating the summary of the attack report {{context_report}}.\n"
    "Consider all external IP addresses, suspicious or executable files, "
    "malicious processes, and exploitable processes referenced in the "
    "provided reports.\n";

std::vector<std::pair<std::string, std::string PromptSet::*>> field_table() {
  return {
      {"investigator_instructions", &PromptSet::investigator_instructions},
      {"retrieve_iocs", &PromptSet::retrieve_iocs},
      {"summarize_report", &PromptSet::summarize_report},
      {"retrieve_iocs_per_stage", &PromptSet::retrieve_iocs_per_stage},
      {"summarize_comprehensive", &PromptSet::summarize_comprehensive},
      {"judge_instructions", &PromptSet::judge_instructions},
      {"select_ioc_judge", &PromptSet::select_ioc_judge},
      {"enrich_comprehensive", &PromptSet::enrich_comprehensive},
  };
}

}  // namespace

PromptSet default_prompts() {
  PromptSet prompts;
  prompts.investigator_instructions = kInvestigatorInstructions;
  prompts.retrieve_iocs = kRetrieveIocs;
  prompts.summarize_report = kSummarizeReport;
  prompts.retrieve_iocs_per_stage = kRetrieveIocsPerStage;
  prompts.summarize_comprehensive = kSummarizeComprehensive;
  prompts.judge_instructions = kJudgeInstructions;
  prompts.select_ioc_judge = kSelectIocJudge;
  prompts.enrich_comprehensive = kEnrichComprehensive;
  return prompts;
}

const std::vector<std::string>& prompt_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : field_table()) out.push_back(name);
    return out;
  }();
  return names;
}

PromptSet load_prompts(const std::string& dir) {
  PromptSet prompts = default_prompts();
  for (const auto& [name, field] : field_table()) {
    std::filesystem::path path = std::filesystem::path(dir) / (name + ".txt");
    std::ifstream in(path);
    if (!in) continue;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    prompts.*field = buffer.str();
  }
  return prompts;
}

void write_default_prompts(const std::string& dir) {
  std::filesystem::create_directories(dir);
  PromptSet prompts = default_prompts();
  for (const auto& [name, field] : field_table()) {
    std::filesystem::path path = std::filesystem::path(dir) / (name + ".txt");
    std::ofstream out(path);
    if (!out) {
      throw std::runtime_error("cannot write prompt template " +
                               path.string());
    }
    out << prompts.*field;
  }
}

std::string render_prompt(const std::string& tmpl,
                          const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    std::size_t open = tmpl.find("{{", pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string::npos) {
      throw std::runtime_error("prompt render: unterminated placeholder at " +
                               tmpl.substr(open, 40));
    }
    out.append(tmpl, pos, open - pos);
    std::string key = tmpl.substr(open + 2, close - open - 2);
    auto it = values.find(key);
    if (it == values.end()) {
      throw std::runtime_error("prompt render: unresolved placeholder {{" +
                               key + "}}");
    }
    out += it->second;
    pos = close + 2;
  }
  return out;
}

}  // namespace provsentinel
