#include "provsentinel/investigator.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

namespace provsentinel {

using nlohmann::json;

namespace {

std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool contains_ci(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return false;
  return lowercase(haystack).find(lowercase(needle)) != std::string::npos;
}

std::string quote_list(const std::vector<std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    out += "'" + values[i] + "'";
  }
  return out;
}

std::string join(const std::vector<std::string>& values,
                 const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += sep;
    out += values[i];
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

// Removes Markdown decoration wrapping a table cell: `x`, 'x', "x", *x*, _x_
// and the `x' convention.
std::string strip_decoration(std::string cell) {
  cell = trim(cell);
  auto decorated = [](char open, char close) {
    return (open == close &&
            (open == '`' || open == '\'' || open == '"' || open == '*' ||
             open == '_')) ||
           (open == '`' && close == '\'');
  };
  while (cell.size() >= 2 && decorated(cell.front(), cell.back())) {
    cell = trim(cell.substr(1, cell.size() - 2));
  }
  return cell;
}

constexpr const char* kIocFormatReminder =
    "Your previous reply could not be parsed as a Python list. Return the "
    "output only as a Python list, formatted as: [`IOC1', `IOC2', `IOC3', "
    "etc].";

constexpr const char* kJudgeFormatReminder =
    "Your previous reply was not a validated IOC appearing in the report. "
    "Return the IOC only, formatted as `IOC'.";

std::string escape_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else out += c;
  }
  return out;
}

std::string stage_map_table(const std::vector<StageIocs>& stage_map) {
  std::string out = "## APT Stage Map\n\n| Stage | IOCs |\n| --- | --- |\n";
  for (const auto& entry : stage_map) {
    out += "| " + entry.stage + " | " +
           (entry.iocs.empty() ? std::string("-")
                               : escape_cell(quote_list(entry.iocs))) +
           " |\n";
  }
  return out;
}

}  // namespace

std::vector<std::string> IocList::validated() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (e.validated) out.push_back(e.value);
  }
  return out;
}

std::vector<std::string> IocList::rejected() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (!e.validated) out.push_back(e.value);
  }
  return out;
}

const std::vector<std::string>& apt_stages() {
  static const std::vector<std::string> stages = {
      "Initial Compromise",   "Internal Reconnaissance",
      "Command and Control",  "Privilege Escalation",
      "Lateral Movement",     "Maintain Persistence",
      "Data Exfiltration",    "Covering Tracks"};
  return stages;
}

const std::vector<std::string>& judge_node_types() {
  static const std::vector<std::string> types = {"IP", "PROCESS", "FILE"};
  return types;
}

std::optional<std::vector<std::string>> parse_ioc_list(
    const std::string& response) {
  // Code-fence marker lines are dropped; fenced content stays in place.
  std::string text;
  std::istringstream lines(response);
  std::string line;
  while (std::getline(lines, line)) {
    std::size_t first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line.compare(first, 3, "```") == 0) {
      continue;
    }
    text += line;
    text += '\n';
  }
  std::size_t open = text.find('[');
  std::size_t close = text.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    return std::nullopt;
  }
  std::string body = text.substr(open + 1, close - open - 1);
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    char c = body[pos];
    if (c == '\'' || c == '"' || c == '`') {
      char closer = c == '`' ? '\'' : c;
      std::size_t end = body.find(closer, pos + 1);
      if (end == std::string::npos) break;
      out.push_back(body.substr(pos + 1, end - pos - 1));
      pos = end + 1;
    } else {
      ++pos;
    }
  }
  return out;
}

std::optional<std::string> first_quoted(const std::string& response) {
  for (std::size_t pos = 0; pos < response.size(); ++pos) {
    char c = response[pos];
    if (c == '\'' || c == '"' || c == '`') {
      char closer = c == '`' ? '\'' : c;
      std::size_t end = response.find(closer, pos + 1);
      if (end == std::string::npos) return std::nullopt;
      return response.substr(pos + 1, end - pos - 1);
    }
  }
  return std::nullopt;
}

IocList validate_iocs(const std::vector<std::string>& candidates,
                      const std::string& document_text) {
  IocList out;
  std::set<std::string> seen;
  std::string haystack = lowercase(document_text);
  for (const auto& value : candidates) {
    std::string key = lowercase(value);
    if (!seen.insert(key).second) continue;
    bool ok = !value.empty() && haystack.find(key) != std::string::npos;
    out.entries.push_back({value, ok});
  }
  return out;
}

std::vector<std::string> missing_sections(const std::string& markdown) {
  static const std::regex heading_re(
      R"(^\s{0,3}(#{1,6}\s+.*|\*\*.*\*\*\s*)$)");
  static const std::regex summary_re("summary|behavior",
                                     std::regex::icase);
  static const std::regex ioc_re("ioc|indicator", std::regex::icase);
  static const std::regex chrono_re("chronolog|timeline|action log",
                                    std::regex::icase);
  bool has_summary = false, has_ioc = false, has_chrono = false;
  std::istringstream lines(markdown);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!std::regex_match(line, heading_re)) continue;
    if (std::regex_search(line, summary_re)) has_summary = true;
    if (std::regex_search(line, ioc_re)) has_ioc = true;
    if (std::regex_search(line, chrono_re)) has_chrono = true;
  }
  std::vector<std::string> missing;
  if (!has_summary) missing.push_back("attack behavior summary");
  if (!has_ioc) missing.push_back("IOC table");
  if (!has_chrono) missing.push_back("chronological action log");
  return missing;
}

std::pair<std::string, std::vector<std::string>> scrub_ioc_tables(
    const std::string& markdown, const std::string& grounding_text) {
  static const std::regex ioc_header_re("ioc|indicator", std::regex::icase);
  static const std::regex separator_re(R"(^[\s|:\-]+$)");

  auto first_cell = [](const std::string& line) -> std::string {
    std::size_t bar = line.find('|');
    if (bar == std::string::npos) return "";
    std::size_t next = line.find('|', bar + 1);
    if (next == std::string::npos) return "";
    return line.substr(bar + 1, next - bar - 1);
  };

  std::vector<std::string> dropped;
  std::string out;
  std::istringstream lines(markdown);
  std::string line;
  bool in_ioc_table = false;
  while (std::getline(lines, line)) {
    std::string stripped = trim(line);
    bool is_row = !stripped.empty() && stripped.front() == '|';
    if (!is_row) {
      in_ioc_table = false;
      out += line;
      out += '\n';
      continue;
    }
    if (!in_ioc_table) {
      // A table is an IOC table iff its first header cell names the
      // indicator column; the stage map and other tables pass untouched.
      std::string header = strip_decoration(first_cell(stripped));
      if (std::regex_search(header, ioc_header_re)) {
        in_ioc_table = true;
        out += line;
        out += '\n';
        continue;
      }
      // Non-IOC table: copy rows until it ends.
      out += line;
      out += '\n';
      while (std::getline(lines, line)) {
        std::string s = trim(line);
        if (s.empty() || s.front() != '|') {
          out += line;
          out += '\n';
          break;
        }
        out += line;
        out += '\n';
      }
      continue;
    }
    if (std::regex_match(stripped, separator_re)) {
      out += line;
      out += '\n';
      continue;
    }
    std::string indicator = strip_decoration(first_cell(stripped));
    if (!indicator.empty() && contains_ci(grounding_text, indicator)) {
      out += line;
      out += '\n';
    } else {
      dropped.push_back(indicator);
    }
  }
  return {out, dropped};
}

Investigator::Investigator(const ProvenanceGraph& graph,
                           std::vector<std::uint32_t> anomalous_nodes,
                           ChatBackend& chat,
                           std::shared_ptr<Embedder> embedder,
                           PromptSet prompts, InvestigationConfig config)
    : graph_(graph),
      anomalous_nodes_(std::move(anomalous_nodes)),
      chat_(chat),
      embedder_(std::move(embedder)),
      prompts_(std::move(prompts)),
      config_(config),
      doc_index_(embedder_),
      audit_(json::object()) {}

std::string Investigator::retrieval_context(
    const VectorIndex& index, const std::string& query,
    const std::optional<std::string>& doc_filter,
    const std::string& heading) const {
  auto hits = index.retrieve(query, config_.retrieval_k, doc_filter);
  std::string out = heading + "\n";
  for (const auto& hit : hits) {
    out += hit.text;
    if (out.back() != '\n') out += '\n';
  }
  return out;
}

std::string Investigator::grounded_union() const {
  std::string out;
  for (const auto& t : doc_texts_) out += t + "\n";
  for (const auto& t : context_texts_) out += t + "\n";
  return out;
}

void Investigator::index_document(const LogDocument& doc) {
  for (std::size_t c = 0; c < doc.chunks.size(); ++c) {
    doc_index_.add(doc.chunk_text(c), doc.doc_id);
  }
}

std::vector<std::string> Investigator::extract_iocs(
    const LogDocument& doc, std::vector<ChatMessage>& history) {
  std::string prompt =
      render_prompt(prompts_.retrieve_iocs, {{"doc_id", doc.doc_id}});
  std::string context = retrieval_context(
      doc_index_, prompt, doc.doc_id,
      "Context from document " + doc.doc_id + ":");
  history.push_back({"user", context + "\n" + prompt});
  std::string reply = chat_.chat(prompts_.investigator_instructions, history);
  history.push_back({"assistant", reply});
  auto parsed = parse_ioc_list(reply);
  if (!parsed) {
    history.push_back({"user", kIocFormatReminder});
    reply = chat_.chat(prompts_.investigator_instructions, history);
    history.push_back({"assistant", reply});
    parsed = parse_ioc_list(reply);
  }
  if (!parsed) {
    audit_["warnings"].push_back("extract_iocs(" + doc.doc_id +
                                 "): reply unparseable after one reprompt; "
                                 "continuing with no IOCs");
    return {};
  }
  return *parsed;
}

AttackReport Investigator::summarize_report(
    const LogDocument& doc, const std::vector<std::string>& validated,
    std::vector<ChatMessage>& history) {
  std::string prompt = render_prompt(
      prompts_.summarize_report,
      {{"doc_id", doc.doc_id}, {"ioc_list", quote_list(validated)}});
  std::string context = retrieval_context(
      doc_index_, prompt, doc.doc_id,
      "Context from document " + doc.doc_id + ":");
  history.push_back({"user", context + "\n" + prompt});
  std::string reply = chat_.chat(prompts_.investigator_instructions, history);
  history.push_back({"assistant", reply});

  AttackReport report;
  report.subgraph_id = doc.doc_id;
  auto missing = missing_sections(reply);
  if (!missing.empty()) {
    std::string reminder =
        "The report is missing the " + join(missing, ", ") +
        (missing.size() > 1 ? " sections" : " section") +
        ". Provide the complete report including all mandated sections.";
    history.push_back({"user", reminder});
    reply = chat_.chat(prompts_.investigator_instructions, history);
    history.push_back({"assistant", reply});
    missing = missing_sections(reply);
    if (!missing.empty()) {
      reply = "INCOMPLETE: missing sections: " + join(missing, ", ") +
              "\n\n" + reply;
      report.incomplete = true;
    }
  }
  report.markdown = reply;
  return report;
}

IocList Investigator::extract_stage_iocs(const std::string& stage,
                                         const std::string& report_names,
                                         const VectorIndex& report_index,
                                         const std::string& grounding_text) {
  std::string prompt = render_prompt(
      prompts_.retrieve_iocs_per_stage,
      {{"report_names", report_names}, {"stage", stage}});
  std::string context = retrieval_context(report_index, prompt, std::nullopt,
                                          "Context from reports:");
  std::vector<ChatMessage> history;
  history.push_back({"user", context + "\n" + prompt});
  std::string reply = chat_.chat(prompts_.investigator_instructions, history);
  history.push_back({"assistant", reply});
  auto parsed = parse_ioc_list(reply);
  if (!parsed) {
    history.push_back({"user", kIocFormatReminder});
    reply = chat_.chat(prompts_.investigator_instructions, history);
    parsed = parse_ioc_list(reply);
  }
  if (!parsed) {
    audit_["warnings"].push_back("extract_stage_iocs(" + stage +
                                 "): reply unparseable after one reprompt; "
                                 "continuing with no IOCs");
    return {};
  }
  return validate_iocs(*parsed, grounding_text);
}

std::optional<std::string> Investigator::judge_select(
    const std::string& report_markdown, const std::string& node_type) {
  std::string prompt =
      render_prompt(prompts_.select_ioc_judge, {{"node_type", node_type}});
  std::vector<ChatMessage> history;
  history.push_back(
      {"user", "Attack report:\n" + report_markdown + "\n\n" + prompt});

  auto attempt = [&]() -> std::pair<std::string, std::optional<std::string>> {
    std::string reply = chat_.chat(prompts_.judge_instructions, history);
    history.push_back({"assistant", reply});
    auto quoted = first_quoted(reply);
    if (quoted && contains_ci(report_markdown, *quoted) &&
        std::find_if(validated_pool_.begin(), validated_pool_.end(),
                     [&](const std::string& v) {
                       return lowercase(v) == lowercase(*quoted);
                     }) != validated_pool_.end()) {
      return {reply, quoted};
    }
    return {reply, std::nullopt};
  };

  auto [reply, selected] = attempt();
  bool reprompted = false;
  if (!selected) {
    reprompted = true;
    history.push_back({"user", kJudgeFormatReminder});
    std::tie(reply, selected) = attempt();
  }
  json entry;
  entry["node_type"] = node_type;
  entry["reply"] = reply;
  entry["selected"] = selected ? json(*selected) : json(nullptr);
  entry["reprompted"] = reprompted;
  audit_["judge"].push_back(entry);
  if (!selected) {
    audit_["warnings"].push_back("judge_select(" + node_type +
                                 "): no usable IOC after one reprompt; "
                                 "skipping this node type");
  }
  return selected;
}

InvestigationResult Investigator::run(
    const std::vector<AnomalousSubgraph>& all_subgraphs) {
  std::vector<const AnomalousSubgraph*> subgraphs;
  for (const auto& sg : all_subgraphs) {
    if (sg.level >= config_.reporting_level) subgraphs.push_back(&sg);
  }
  if (subgraphs.empty()) {
    throw RefusalError("nothing at reporting level");
  }

  InvestigationResult result;
  audit_ = json::object();
  audit_["subgraphs"] = json::array();
  audit_["stages"] = json::array();
  audit_["judge"] = json::array();
  audit_["enrichments"] = json::array();
  audit_["warnings"] = json::array();
  doc_texts_.clear();
  context_texts_.clear();
  validated_pool_.clear();

  auto pool_add = [&](const std::vector<std::string>& values) {
    for (const auto& v : values) {
      std::string key = lowercase(v);
      bool dup = std::any_of(validated_pool_.begin(), validated_pool_.end(),
                             [&](const std::string& p) {
                               return lowercase(p) == key;
                             });
      if (!dup) validated_pool_.push_back(v);
    }
  };

  // Per-subgraph stage: serialize, index, extract, validate, summarize.
  // Conversation history lives only inside this loop iteration.
  std::vector<LogDocument> docs;
  for (const auto* sg : subgraphs) {
    LogDocument doc = serialize_subgraph(graph_, *sg);
    chunk_document(doc, config_.chunk_sentences);
    index_document(doc);
    doc_texts_.push_back(doc.text());
    docs.push_back(std::move(doc));
  }

  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto& doc = docs[i];
    std::vector<ChatMessage> history;
    std::vector<std::string> extracted;
    IocList iocs;
    AttackReport report;
    try {
      extracted = extract_iocs(doc, history);
      iocs = validate_iocs(extracted, doc.text());
      report = summarize_report(doc, iocs.validated(), history);
    } catch (const TransportError& e) {
      throw TransportError("subgraph stage (" + doc.doc_id + "): " +
                           e.what());
    }
    auto [scrubbed, dropped] = scrub_ioc_tables(report.markdown, doc.text());
    report.markdown = scrubbed;
    pool_add(iocs.validated());

    json entry;
    entry["id"] = doc.doc_id;
    entry["extracted"] = extracted;
    entry["validated"] = iocs.validated();
    entry["rejected"] = iocs.rejected();
    entry["incomplete"] = report.incomplete;
    entry["scrubbed"] = dropped;
    audit_["subgraphs"].push_back(entry);

    result.reports.push_back(std::move(report));
  }

  // Merge stage: index reports, extract per-stage IOCs, compose.
  VectorIndex report_index(embedder_);
  std::vector<std::string> report_names;
  for (const auto& report : result.reports) {
    report_index.add(report.markdown, report.subgraph_id);
    report_names.push_back(report.subgraph_id);
  }
  std::string names = join(report_names, ", ");
  std::string union_text;
  for (const auto& t : doc_texts_) union_text += t + "\n";

  std::vector<std::string> stage_union;
  for (const auto& stage : apt_stages()) {
    IocList stage_iocs;
    try {
      stage_iocs = extract_stage_iocs(stage, names, report_index, union_text);
    } catch (const TransportError& e) {
      throw TransportError("per-stage extraction (" + stage + "): " +
                           e.what());
    }
    result.comprehensive.stage_map.push_back({stage, stage_iocs.validated()});
    for (const auto& v : stage_iocs.validated()) {
      bool dup = std::any_of(stage_union.begin(), stage_union.end(),
                             [&](const std::string& p) {
                               return lowercase(p) == lowercase(v);
                             });
      if (!dup) stage_union.push_back(v);
    }
    json entry;
    entry["stage"] = stage;
    entry["validated"] = stage_iocs.validated();
    entry["rejected"] = stage_iocs.rejected();
    audit_["stages"].push_back(entry);
  }
  pool_add(stage_union);

  std::string body;
  {
    std::string prompt =
        render_prompt(prompts_.summarize_comprehensive,
                      {{"ioc_list", quote_list(stage_union)}});
    std::string reports_blob;
    for (const auto& report : result.reports) {
      reports_blob +=
          "Report " + report.subgraph_id + ":\n" + report.markdown + "\n\n";
    }
    std::vector<ChatMessage> history;
    history.push_back({"user", reports_blob + prompt});
    try {
      body = chat_.chat(prompts_.investigator_instructions, history);
      history.push_back({"assistant", body});
      auto missing = missing_sections(body);
      if (!missing.empty()) {
        std::string reminder =
            "The report is missing the " + join(missing, ", ") +
            (missing.size() > 1 ? " sections" : " section") +
            ". Provide the complete report including all mandated sections.";
        history.push_back({"user", reminder});
        body = chat_.chat(prompts_.investigator_instructions, history);
        missing = missing_sections(body);
        if (!missing.empty()) {
          body = "INCOMPLETE: missing sections: " + join(missing, ", ") +
                 "\n\n" + body;
          result.comprehensive.incomplete = true;
        }
      }
    } catch (const TransportError& e) {
      throw TransportError(std::string("comprehensive composition: ") +
                           e.what());
    }
    auto [scrubbed, dropped] = scrub_ioc_tables(body, grounded_union());
    body = scrubbed;
    audit_["comprehensive"] = {{"incomplete", result.comprehensive.incomplete},
                               {"scrubbed", dropped}};
  }

  // Enrichment loop: judge picks one IOC per node type; its graph context
  // becomes a context report merged back into the body.
  for (const auto& node_type : judge_node_types()) {
    std::optional<std::string> selected;
    try {
      selected = judge_select(body, node_type);
    } catch (const TransportError& e) {
      throw TransportError("judge (" + node_type + "): " + e.what());
    }
    if (!selected) continue;

    EnrichmentRecord record;
    record.node_type = node_type;
    record.ioc = *selected;

    std::vector<std::uint32_t> matches;
    for (std::uint32_t v = 0; v < graph_.node_count(); ++v) {
      if (lowercase(node_label(graph_, v)) == lowercase(*selected)) {
        matches.push_back(v);
      }
    }
    record.matched_nodes = matches.size();
    json entry;
    entry["node_type"] = node_type;
    entry["ioc"] = *selected;
    entry["matched_nodes"] = matches.size();
    entry["stage_iocs"] = json::array();
    entry["scrubbed"] = json::array();

    if (matches.empty()) {
      record.no_context = true;
      audit_["warnings"].push_back("enrich(" + *selected +
                                   "): no node carries this label; skipping "
                                   "context retrieval");
      entry["no_context"] = true;
      audit_["enrichments"].push_back(entry);
      result.comprehensive.enrichments.push_back(std::move(record));
      continue;
    }

    Subgraph context;
    for (auto v : matches) {
      Subgraph part = query_ioc_context(graph_, v, anomalous_nodes_);
      context.nodes.insert(context.nodes.end(), part.nodes.begin(),
                           part.nodes.end());
      context.edges.insert(context.edges.end(), part.edges.begin(),
                           part.edges.end());
    }
    std::sort(context.nodes.begin(), context.nodes.end());
    context.nodes.erase(
        std::unique(context.nodes.begin(), context.nodes.end()),
        context.nodes.end());
    std::sort(context.edges.begin(), context.edges.end());
    context.edges.erase(
        std::unique(context.edges.begin(), context.edges.end()),
        context.edges.end());

    AnomalousSubgraph context_sg;
    context_sg.id = "context-" + *selected;
    context_sg.nodes = context.nodes;
    context_sg.edges = context.edges;
    LogDocument context_doc = serialize_subgraph(graph_, context_sg);
    chunk_document(context_doc, config_.chunk_sentences);

    if (context_doc.sentences.empty()) {
      record.no_context = true;
      entry["no_context"] = true;
      audit_["enrichments"].push_back(entry);
      result.comprehensive.enrichments.push_back(std::move(record));
      continue;
    }
    entry["no_context"] = false;
    context_texts_.push_back(context_doc.text());

    VectorIndex context_index(embedder_);
    for (std::size_t c = 0; c < context_doc.chunks.size(); ++c) {
      context_index.add(context_doc.chunk_text(c), context_doc.doc_id);
    }

    try {
      std::vector<std::string> context_union;
      for (const auto& stage : apt_stages()) {
        IocList stage_iocs = extract_stage_iocs(
            stage, context_doc.doc_id, context_index, context_doc.text());
        for (const auto& v : stage_iocs.validated()) {
          bool dup = std::any_of(context_union.begin(), context_union.end(),
                                 [&](const std::string& p) {
                                   return lowercase(p) == lowercase(v);
                                 });
          if (!dup) context_union.push_back(v);
        }
        entry["stage_iocs"].push_back(
            {{"stage", stage}, {"validated", stage_iocs.validated()}});
      }
      pool_add(context_union);

      // Summarize the context document into a context report, then merge.
      std::string prompt = render_prompt(
          prompts_.summarize_report,
          {{"doc_id", context_doc.doc_id},
           {"ioc_list", quote_list(context_union)}});
      std::string retrieval =
          retrieval_context(context_index, prompt, std::nullopt,
                            "Context from document " + context_doc.doc_id +
                                ":");
      std::vector<ChatMessage> history;
      history.push_back({"user", retrieval + "\n" + prompt});
      std::string context_report =
          chat_.chat(prompts_.investigator_instructions, history);
      auto [scrubbed_ctx, dropped_ctx] =
          scrub_ioc_tables(context_report, context_doc.text());
      record.context_report = scrubbed_ctx;

      std::string merge_prompt = render_prompt(
          prompts_.enrich_comprehensive,
          {{"comprehensive_report", body}, {"context_report", scrubbed_ctx}});
      std::vector<ChatMessage> merge_history;
      merge_history.push_back({"user", merge_prompt});
      body = chat_.chat(prompts_.investigator_instructions, merge_history);
      auto [scrubbed_body, dropped_body] =
          scrub_ioc_tables(body, grounded_union());
      body = scrubbed_body;
      for (const auto& d : dropped_ctx) entry["scrubbed"].push_back(d);
      for (const auto& d : dropped_body) entry["scrubbed"].push_back(d);
    } catch (const TransportError& e) {
      throw TransportError("enrichment (" + *selected + "): " + e.what());
    }
    audit_["enrichments"].push_back(entry);
    result.comprehensive.enrichments.push_back(std::move(record));
  }

  // Final assembly: LLM body, then the programmatic stage map and appendix.
  std::string assembled = body;
  if (!assembled.empty() && assembled.back() != '\n') assembled += '\n';
  assembled += "\n" + stage_map_table(result.comprehensive.stage_map);
  assembled += "\n## Enrichment Appendix\n";
  if (result.comprehensive.enrichments.empty()) {
    assembled += "\nNo indicators were selected for enrichment.\n";
  }
  for (const auto& record : result.comprehensive.enrichments) {
    assembled += "\n### " + record.node_type + ": '" + record.ioc + "'\n\n";
    if (record.no_context) {
      assembled += "No additional anomalous context was found for this "
                   "indicator.\n";
    } else {
      assembled += record.context_report;
      if (assembled.back() != '\n') assembled += '\n';
    }
  }
  result.comprehensive.markdown = assembled;
  result.audit = audit_;
  return result;
}

std::string answer_question(const std::string& question,
                            const VectorIndex& report_index,
                            ChatBackend& chat, const PromptSet& prompts,
                            std::size_t k) {
  auto hits = report_index.retrieve(question, k);
  std::string context = "Context from reports:\n";
  for (const auto& hit : hits) {
    context += hit.text;
    if (context.back() != '\n') context += '\n';
  }
  return chat.chat(prompts.investigator_instructions,
                   {{"user", context + "\nQuestion: " + question}});
}

}  // namespace provsentinel
