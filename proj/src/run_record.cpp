#include <sstream>

#include "scalebench/sim.hpp"

namespace scalebench {

namespace {

Json opt(const std::optional<std::string>& s) { return s ? Json(*s) : Json(nullptr); }

}  // namespace

std::string to_ndjson(const RunRecord& r) {
  std::string out;
  auto line = [&out](const Json& j) {
    out += canonical_dump(j);
    out += '\n';
  };
  line(Json{{"type", "header"},
            {"schema", "scalebench.runrecord"},
            {"version", kRunRecordSchemaVersion},
            {"run_id", r.run_id},
            {"policy", r.policy},
            {"seed", r.seed},
            {"cluster", r.cluster.to_json()},
            {"initial_target", r.initial_target}});
  for (const auto& j : r.jobs) {
    line(Json{{"type", "job"},
              {"index", j.index},
              {"job_id", j.job_id},
              {"subclass", j.subclass_id},
              {"submit_time", j.submit_time},
              {"sla_deadline", j.sla_deadline},
              {"finish_time", j.finish_time},
              {"deadline_met", j.deadline_met},
              {"vcpu_seconds", j.vcpu_seconds}});
  }
  for (const auto& p : r.series) {
    line(Json{{"type", "sample"},
              {"t", p.time},
              {"demand", p.demand_slots},
              {"target", p.target_executors},
              {"running", p.running_executors}});
  }
  for (const auto& t : r.ticks) {
    line(Json{{"type", "tick"},
              {"index", t.index},
              {"t", t.time},
              {"demand", t.demand_slots},
              {"running", t.running_executors},
              {"requested", t.requested_target ? Json(*t.requested_target) : Json(nullptr)},
              {"applied", t.applied_target},
              {"clamped", t.clamped},
              {"faulted", t.faulted},
              {"digest", t.observation_digest},
              {"justification", opt(t.justification)},
              {"dominant_subclass", t.dominant_subclass},
              {"shuffled_bytes", t.shuffled_bytes}});
  }
  for (const auto& l : r.ledger) {
    line(Json{{"type", "ledger"},
              {"tick", l.tick},
              {"tokens_in", l.tokens_in},
              {"tokens_out", l.tokens_out},
              {"wall_latency", l.wall_latency},
              {"monetary_cost", l.monetary_cost}});
  }
  for (const auto& f : r.faults) {
    line(Json{{"type", "fault"}, {"tick", f.tick}, {"t", f.time}, {"kind", f.kind}, {"detail", f.detail}});
  }
  for (const auto& e : r.executors) {
    line(Json{{"type", "executor"},
              {"id", e.id},
              {"requested_at", e.requested_at},
              {"ready_at", e.ready_at},
              {"drain_at", e.drain_at},
              {"end_at", e.end_at}});
  }
  for (const auto& t : r.tasks) {
    line(Json{{"type", "task"},
              {"job", t.job},
              {"stage", t.stage},
              {"task", t.task},
              {"executor", t.executor},
              {"start", t.start},
              {"end", t.end}});
  }
  line(Json{{"type", "summary"},
            {"end_time", r.end_time},
            {"vcpu_seconds", r.vcpu_seconds},
            {"unattributed_vcpu_seconds", r.unattributed_vcpu_seconds},
            {"complete", r.complete}});
  return out;
}

RunRecord run_record_from_ndjson(std::string_view text) {
  RunRecord r;
  std::istringstream in{std::string(text)};
  std::string raw;
  bool header = false;
  bool summary = false;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.empty()) continue;
    Json j;
    try {
      j = Json::parse(raw);
    } catch (const Json::exception& e) {
      throw InvalidInput("run record line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        if (j.at("schema").get<std::string>() != "scalebench.runrecord" ||
            j.at("version").get<int>() != kRunRecordSchemaVersion) {
          throw InvalidInput("unsupported run record schema");
        }
        r.run_id = j.at("run_id").get<std::string>();
        r.policy = j.at("policy").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.cluster = ClusterConfig::from_json(j.at("cluster"));
        r.initial_target = j.at("initial_target").get<int>();
        header = true;
      } else if (!header) {
        throw InvalidInput("run record does not start with a header");
      } else if (type == "job") {
        JobOutcome o;
        o.index = j.at("index").get<int>();
        o.job_id = j.at("job_id").get<std::string>();
        o.subclass_id = j.at("subclass").get<std::string>();
        o.submit_time = j.at("submit_time").get<double>();
        o.sla_deadline = j.at("sla_deadline").get<double>();
        o.finish_time = j.at("finish_time").get<double>();
        o.deadline_met = j.at("deadline_met").get<bool>();
        o.vcpu_seconds = j.at("vcpu_seconds").get<double>();
        r.jobs.push_back(std::move(o));
      } else if (type == "sample") {
        r.series.push_back({j.at("t").get<double>(), j.at("demand").get<int>(), j.at("target").get<int>(),
                            j.at("running").get<int>()});
      } else if (type == "tick") {
        TickRecord t;
        t.index = j.at("index").get<int>();
        t.time = j.at("t").get<double>();
        t.demand_slots = j.at("demand").get<int>();
        t.running_executors = j.at("running").get<int>();
        if (!j.at("requested").is_null()) t.requested_target = j.at("requested").get<int>();
        t.applied_target = j.at("applied").get<int>();
        t.clamped = j.at("clamped").get<bool>();
        t.faulted = j.at("faulted").get<bool>();
        t.observation_digest = j.at("digest").get<std::string>();
        if (!j.at("justification").is_null()) t.justification = j.at("justification").get<std::string>();
        t.dominant_subclass = j.at("dominant_subclass").get<std::string>();
        t.shuffled_bytes = j.at("shuffled_bytes").get<std::uint64_t>();
        r.ticks.push_back(std::move(t));
      } else if (type == "ledger") {
        r.ledger.push_back({j.at("tick").get<int>(), j.at("tokens_in").get<std::int64_t>(),
                            j.at("tokens_out").get<std::int64_t>(), j.at("wall_latency").get<double>(),
                            j.at("monetary_cost").get<double>()});
      } else if (type == "fault") {
        r.faults.push_back({j.at("tick").get<int>(), j.at("t").get<double>(), j.at("kind").get<std::string>(),
                            j.at("detail").get<std::string>()});
      } else if (type == "executor") {
        r.executors.push_back({j.at("id").get<int>(), j.at("requested_at").get<double>(),
                               j.at("ready_at").get<double>(), j.at("drain_at").get<double>(),
                               j.at("end_at").get<double>()});
      } else if (type == "task") {
        r.tasks.push_back({j.at("job").get<int>(), j.at("stage").get<int>(), j.at("task").get<int>(),
                           j.at("executor").get<int>(), j.at("start").get<double>(), j.at("end").get<double>()});
      } else if (type == "summary") {
        r.end_time = j.at("end_time").get<double>();
        r.vcpu_seconds = j.at("vcpu_seconds").get<double>();
        r.unattributed_vcpu_seconds = j.at("unattributed_vcpu_seconds").get<double>();
        r.complete = j.at("complete").get<bool>();
        summary = true;
      } else {
        throw InvalidInput("unknown run record line type: " + type);
      }
    } catch (const Json::exception& e) {
      throw InvalidInput("run record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header || !summary) throw InvalidInput("run record is truncated");
  return r;
}

}  // namespace scalebench
