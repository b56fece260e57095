#include "provsentinel/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "provsentinel/rng.hpp"

namespace provsentinel {

namespace {

std::string pad4(std::size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04zu", n);
  return buf;
}

// Benign archetypes. Workers touch files, servers touch flows, daemons do
// both; a handful of daemons also run executables and clean up scratch
// files so every action the planted attack uses is part of the benign
// vocabulary (otherwise those actions would be dropped as unknown when a
// model trained on benign traffic scores the attack graph).
enum class Role { Worker = 0, Server = 1, Daemon = 2 };

Role role_of(std::size_t k) { return static_cast<Role>(k % 3); }

struct Generator {
  const ScenarioParams& p;
  Rng rng;
  Scenario out;

  std::vector<std::string> proc_ids, proc_images;
  std::vector<std::string> file_ids, file_paths;
  std::vector<std::string> flow_ids, flow_addrs, flow_ports;
  std::vector<double> clock_us;  // per-process wall clock

  explicit Generator(const ScenarioParams& params)
      : p(params), rng(params.rng_seed) {}

  double benign_gap_us() {
    return rng.uniform(p.min_benign_gap_s, p.max_benign_gap_s) * 1e6;
  }

  void emit(const std::string& subj, const std::string& subj_type,
            const AttrMap& subj_attrs, const std::string& action,
            const std::string& obj, const std::string& obj_type,
            const AttrMap& obj_attrs, double t_us) {
    Event e;
    e.subject_id = subj;
    e.subject_type = subj_type;
    e.action = action;
    e.object_id = obj;
    e.object_type = obj_type;
    e.timestamp_us = static_cast<std::int64_t>(t_us);
    e.subject_attrs = subj_attrs;
    e.object_attrs = obj_attrs;
    out.events.push_back(std::move(e));
  }

  void emit_file_op(std::size_t k, const std::string& action, std::size_t i) {
    clock_us[k] += benign_gap_us();
    emit(proc_ids[k], "PROCESS", {{"image", proc_images[k]}}, action,
         file_ids[i], "FILE", {{"path", file_paths[i]}}, clock_us[k]);
  }

  void emit_flow_op(std::size_t k, const std::string& action, std::size_t j) {
    clock_us[k] += benign_gap_us();
    emit(proc_ids[k], "PROCESS", {{"image", proc_images[k]}}, action,
         flow_ids[j], "FLOW",
         {{"remote_address", flow_addrs[j]}, {"remote_port", flow_ports[j]}},
         clock_us[k]);
  }

  std::string pick_file_action() {
    double u = rng.uniform();
    return u < 0.45 ? "read" : u < 0.80 ? "write" : "create";
  }

  std::string pick_flow_action() {
    double u = rng.uniform();
    return u < 0.30 ? "connect" : u < 0.65 ? "send" : "receive";
  }

  void generate_benign() {
    for (std::size_t k = 0; k < p.processes; ++k) {
      proc_ids.push_back("proc-" + pad4(k));
      proc_images.push_back("/usr/bin/app-" + std::to_string(k % 20));
      clock_us.push_back(rng.uniform(0.0, 10e6));
    }
    for (std::size_t i = 0; i < p.files; ++i) {
      file_ids.push_back("file-" + pad4(i));
      file_paths.push_back("/var/data/file-" + pad4(i) + ".dat");
    }
    static const char* kPorts[] = {"443", "80", "8080", "53", "5432"};
    for (std::size_t j = 0; j < p.flows; ++j) {
      flow_ids.push_back("flow-" + pad4(j));
      flow_addrs.push_back("10.0." + std::to_string(j / 256) + "." +
                           std::to_string(j % 256));
      flow_ports.push_back(kPorts[j % 5]);
    }

    std::vector<std::size_t> file_actors, flow_actors, daemons;
    for (std::size_t k = 0; k < p.processes; ++k) {
      if (role_of(k) != Role::Server) file_actors.push_back(k);
      if (role_of(k) != Role::Worker) flow_actors.push_back(k);
      if (role_of(k) == Role::Daemon) daemons.push_back(k);
    }

    // Coverage: every file and flow sees at least one event.
    for (std::size_t i = 0; i < p.files; ++i) {
      auto k = file_actors[rng.uniform_index(file_actors.size())];
      emit_file_op(k, pick_file_action(), i);
    }
    for (std::size_t j = 0; j < p.flows; ++j) {
      auto k = flow_actors[rng.uniform_index(flow_actors.size())];
      emit_flow_op(k, pick_flow_action(), j);
    }

    // Background churn: up to two extra role-appropriate events per process.
    for (std::size_t k = 0; k < p.processes; ++k) {
      auto extra = rng.uniform_index(3);
      for (std::uint64_t n = 0; n < extra; ++n) {
        bool do_file = role_of(k) == Role::Worker ||
                       (role_of(k) == Role::Daemon && rng.uniform() < 0.5);
        if (do_file) {
          emit_file_op(k, pick_file_action(), rng.uniform_index(p.files));
        } else {
          emit_flow_op(k, pick_flow_action(), rng.uniform_index(p.flows));
        }
      }
    }

    // Vocabulary completion: some daemons execute binaries and recycle
    // scratch files, so "execute" and "delete" occur in benign traffic.
    std::size_t recyclers = std::min<std::size_t>(12, daemons.size());
    for (std::size_t d = 0; d < recyclers; ++d) {
      auto k = daemons[d];
      emit_file_op(k, "execute", rng.uniform_index(p.files));
      std::string id = "scratch-" + pad4(k);
      std::string path = "/tmp/scratch-" + pad4(k) + ".tmp";
      for (const char* action : {"create", "delete"}) {
        clock_us[k] += benign_gap_us();
        emit(proc_ids[k], "PROCESS", {{"image", proc_images[k]}}, action, id,
             "FILE", {{"path", path}}, clock_us[k]);
      }
    }
  }

  void generate_attack() {
    const std::string payload = "proc-payload";
    const AttrMap payload_attrs = {{"image", "/tmp/.cache/payload"}};
    const std::string dropper = "file-dropper";
    const AttrMap dropper_attrs = {{"path", "/tmp/.cache/dropper.sh"}};
    const std::string c2 = "flow-c2";
    const AttrMap c2_attrs = {{"remote_address", "203.0.113.66"},
                              {"remote_port", "4443"}};
    const std::string persist = "file-persist";
    const AttrMap persist_attrs = {{"path", "/etc/cron.d/.sysupdate"}};
    const std::string dormant = "file-dormant";
    const AttrMap dormant_attrs = {{"path", "/usr/lib/.hidden/dormant.bin"}};

    // The payload acts on long, irregular delays; every gap dwarfs the
    // benign cadence, which is what the idle-time features key on.
    double t = 120e6;
    auto step = [&] {
      t += rng.uniform(p.min_attack_gap_s, p.max_attack_gap_s) * 1e6;
      return t;
    };
    auto act = [&](const std::string& action, const std::string& obj,
                   const std::string& obj_type, const AttrMap& obj_attrs) {
      emit(payload, "PROCESS", payload_attrs, action, obj, obj_type,
           obj_attrs, step());
    };

    std::vector<std::string> stage_ids, stage_attrs;
    for (std::size_t s = 0; s < p.staging_files; ++s) {
      stage_ids.push_back("file-stage-" + pad4(s));
      stage_attrs.push_back("/tmp/.stage/exfil-" + pad4(s) + ".tar");
    }

    act("read", dropper, "FILE", dropper_attrs);     // initial compromise
    act("execute", dropper, "FILE", dropper_attrs);
    act("connect", c2, "FLOW", c2_attrs);            // command and control
    act("receive", c2, "FLOW", c2_attrs);
    act("receive", c2, "FLOW", c2_attrs);
    for (std::size_t s = 0; s < p.staging_files; ++s) {  // staging
      act("write", stage_ids[s], "FILE", {{"path", stage_attrs[s]}});
    }
    for (int n = 0; n < 3; ++n) {                    // data exfiltration
      act("send", c2, "FLOW", c2_attrs);
    }
    act("write", persist, "FILE", persist_attrs);    // maintain persistence
    act("write", dormant, "FILE", dormant_attrs);    // dormant implant
    for (std::size_t s = 0; s < p.staging_files; ++s) {  // covering tracks
      act("delete", stage_ids[s], "FILE", {{"path", stage_attrs[s]}});
    }
    act("delete", dropper, "FILE", dropper_attrs);

    auto& mal = out.labels.malicious_node_ids;
    mal.insert(payload);
    mal.insert(dropper);
    mal.insert(c2);
    mal.insert(persist);
    mal.insert(dormant);
    mal.insert(stage_ids.begin(), stage_ids.end());

    out.payload_process_id = payload;
    out.dormant_file_id = dormant;
    out.expected_iocs = {"203.0.113.66:4443", "/tmp/.cache/payload",
                         "/tmp/.cache/dropper.sh", "/etc/cron.d/.sysupdate",
                         "/usr/lib/.hidden/dormant.bin"};
    out.expected_stages = {"Initial Compromise", "Command and Control",
                           "Data Exfiltration", "Maintain Persistence",
                           "Covering Tracks"};
  }

  Scenario run() {
    if (p.processes < 3 || p.files == 0 || p.flows == 0) {
      throw std::invalid_argument(
          "scenario needs at least 3 processes, 1 file and 1 flow");
    }
    generate_benign();
    if (p.plant_attack) generate_attack();
    std::stable_sort(out.events.begin(), out.events.end(),
                     [](const Event& a, const Event& b) {
                       return a.timestamp_us < b.timestamp_us;
                     });
    return std::move(out);
  }
};

}  // namespace

Scenario generate_scenario(const ScenarioParams& params) {
  return Generator(params).run();
}

ProvenanceGraph build_graph(const std::vector<Event>& events) {
  ProvenanceGraph graph;
  std::string error;
  for (const auto& e : events) {
    if (!ingest_event(graph, e, &error)) {
      throw std::runtime_error("event rejected: " + error);
    }
  }
  return graph;
}

void write_events_jsonl(const std::vector<Event>& events,
                        const std::string& path) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& e : events) {
    nlohmann::json j{{"subject_id", e.subject_id},
                     {"subject_type", e.subject_type},
                     {"action", e.action},
                     {"object_id", e.object_id},
                     {"object_type", e.object_type},
                     {"timestamp_us", e.timestamp_us}};
    if (!e.subject_attrs.empty()) j["subject_attrs"] = e.subject_attrs;
    if (!e.object_attrs.empty()) j["object_attrs"] = e.object_attrs;
    file << j.dump() << '\n';
  }
}

void write_labels_json(const GroundTruthLabels& labels,
                       const std::string& path) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  nlohmann::json j{
      {"malicious_node_ids", std::vector<std::string>(
                                 labels.malicious_node_ids.begin(),
                                 labels.malicious_node_ids.end())}};
  file << j.dump(2) << '\n';
}

}  // namespace provsentinel
