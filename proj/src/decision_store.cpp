#include "scalebench/decision_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scalebench/errors.hpp"
#include "scalebench/sim.hpp"

namespace scalebench {

FeatureVector decision_features(int demand_slots, int capacity_slots, bool high_skew,
                                std::uint64_t shuffled_bytes) {
  const double demand = capacity_slots > 0 ? static_cast<double>(demand_slots) / capacity_slots : 0.0;
  const double gib = static_cast<double>(shuffled_bytes) / kGiB;
  return {std::clamp(demand, 0.0, 1.0), high_skew ? 1.0 : 0.0, std::log10(1.0 + gib) / 4.0};
}

Json to_json(const DecisionEntry& e) {
  return Json{{"type", "entry"},
              {"id", e.id},
              {"subclass", e.subclass_id},
              {"features", e.features},
              {"target_executors", e.target_executors},
              {"cost_delta", e.cost_delta},
              {"sla_ok", e.sla_ok},
              {"source_run", e.source_run}};
}

DecisionEntry decision_from_json(const Json& j) {
  DecisionEntry e;
  e.id = j.at("id").get<std::string>();
  e.subclass_id = j.at("subclass").get<std::string>();
  const auto f = j.at("features").get<std::vector<double>>();
  if (f.size() != kFeatureDim) throw InvalidInput("decision entry has wrong feature dimension");
  std::copy(f.begin(), f.end(), e.features.begin());
  e.target_executors = j.at("target_executors").get<int>();
  e.cost_delta = j.at("cost_delta").get<double>();
  e.sla_ok = j.at("sla_ok").get<bool>();
  e.source_run = j.at("source_run").get<std::string>();
  return e;
}

DecisionStore::DecisionStore(std::filesystem::path path) : path_(std::move(path)) { load(); }

void DecisionStore::load() {
  std::ifstream in(*path_);
  if (!in) return;  // created on first ingest
  std::string raw;
  std::vector<DecisionEntry> pending;
  bool header = false;
  while (std::getline(in, raw)) {
    if (raw.empty()) continue;
    Json j;
    try {
      j = Json::parse(raw);
    } catch (const Json::exception&) {
      break;  // torn tail from an interrupted append
    }
    const auto type = j.value("type", std::string());
    if (type == "header") {
      if (j.value("schema", std::string()) != "scalebench.decisions" ||
          j.value("version", 0) != kDecisionStoreVersion ||
          j.value("features", 0) != static_cast<int>(kFeatureDim)) {
        throw InvalidInput("decision store has an unsupported schema: " + path_->string());
      }
      header = true;
    } else if (!header) {
      throw InvalidInput("decision store is missing its header: " + path_->string());
    } else if (type == "entry") {
      pending.push_back(decision_from_json(j));
    } else if (type == "run") {
      // Entries become visible only once their run marker is on disk.
      const auto run_id = j.at("run_id").get<std::string>();
      for (auto& e : pending) {
        ids_.insert(e.id);
        entries_.push_back(std::move(e));
      }
      pending.clear();
      runs_.insert(run_id);
    }
  }
}

void DecisionStore::append_to_file(const std::vector<Json>& lines) const {
  if (!path_) return;
  const bool fresh = !std::filesystem::exists(*path_) || std::filesystem::file_size(*path_) == 0;
  std::string blob;
  if (fresh) {
    blob += canonical_dump(Json{{"type", "header"},
                                {"schema", "scalebench.decisions"},
                                {"version", kDecisionStoreVersion},
                                {"features", kFeatureDim}});
    blob += '\n';
  }
  for (const auto& l : lines) {
    blob += canonical_dump(l);
    blob += '\n';
  }
  std::ofstream out(*path_, std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot open decision store for append: " + path_->string());
  out << blob;
  out.flush();
  if (!out) throw Error("failed writing decision store: " + path_->string());
}

std::size_t DecisionStore::ingest(const RunRecord& record) {
  if (record.run_id.empty()) throw InvalidInput("run record has no run id");
  if (runs_.count(record.run_id)) return 0;
  // Validate the whole record before touching the store.
  for (std::size_t i = 0; i < record.ticks.size(); ++i) {
    const auto& t = record.ticks[i];
    if (t.applied_target < 0) throw InvalidInput("tick with negative target in run " + record.run_id);
    if (t.observation_digest.empty()) throw InvalidInput("tick without observation digest in run " + record.run_id);
    if (i > 0 && !(t.time > record.ticks[i - 1].time)) {
      throw InvalidInput("tick times not increasing in run " + record.run_id);
    }
  }
  for (std::size_t i = 1; i < record.series.size(); ++i) {
    if (!(record.series[i].time > record.series[i - 1].time)) {
      throw InvalidInput("series not increasing in run " + record.run_id);
    }
  }

  const auto& cfg = record.cluster;
  const int capacity = cfg.max_executors * cfg.slots_per_executor;
  auto accrued_between = [&](double from, double to) {
    double vcpu = 0.0;
    for (std::size_t i = 0; i + 1 < record.series.size(); ++i) {
      const double lo = std::max(from, record.series[i].time);
      const double hi = std::min(to, record.series[i + 1].time);
      if (hi > lo) vcpu += record.series[i].running_executors * (hi - lo);
    }
    return vcpu * cfg.vcpus_per_executor / 3600.0 * cfg.rate_per_vcpu_hour;
  };

  std::vector<DecisionEntry> fresh;
  std::vector<Json> lines;
  for (std::size_t i = 0; i < record.ticks.size(); ++i) {
    const auto& t = record.ticks[i];
    DecisionEntry e;
    e.id = record.run_id + ":" + std::to_string(t.index);
    if (ids_.count(e.id)) throw InvalidInput("duplicate decision id " + e.id);
    e.subclass_id = t.dominant_subclass;
    const auto sub = find_subclass(t.dominant_subclass);
    e.features = decision_features(t.demand_slots, capacity, sub && sub->skew_level == SkewLevel::High,
                                   t.shuffled_bytes);
    e.target_executors = t.applied_target;
    const double next = i + 1 < record.ticks.size() ? record.ticks[i + 1].time : record.end_time;
    e.cost_delta = accrued_between(t.time, next);
    e.sla_ok = std::all_of(record.jobs.begin(), record.jobs.end(), [&](const JobOutcome& j) {
      const bool active = j.submit_time <= t.time && (j.finish_time < 0.0 || j.finish_time > t.time);
      return !active || j.deadline_met;
    });
    e.source_run = record.run_id;
    lines.push_back(to_json(e));
    fresh.push_back(std::move(e));
  }
  lines.push_back(Json{{"type", "run"}, {"run_id", record.run_id}, {"entries", fresh.size()}});
  append_to_file(lines);

  for (auto& e : fresh) {
    ids_.insert(e.id);
    entries_.push_back(std::move(e));
  }
  runs_.insert(record.run_id);
  return fresh.size();
}

std::vector<DecisionEntry> DecisionStore::query(const HistoryQuery& q, int k) const {
  if (k <= 0 || entries_.empty()) return {};
  struct Ranked {
    double distance;
    bool other_subclass;
    const DecisionEntry* entry;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(entries_.size());
  for (const auto& e : entries_) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
      const double diff = e.features[i] - q.features[i];
      d2 += diff * diff;
    }
    ranked.push_back({std::sqrt(d2), e.subclass_id != q.subclass_id, &e});
  }
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n), ranked.end(),
                    [](const Ranked& a, const Ranked& b) {
                      if (a.distance != b.distance) return a.distance < b.distance;
                      if (a.other_subclass != b.other_subclass) return !a.other_subclass;
                      return a.entry->id < b.entry->id;
                    });
  std::vector<DecisionEntry> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(*ranked[i].entry);
  return out;
}

std::string DecisionStore::export_ndjson() const {
  std::string out;
  for (const auto& e : entries_) {
    out += canonical_dump(to_json(e));
    out += '\n';
  }
  return out;
}

}  // namespace scalebench
