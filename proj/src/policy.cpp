#include "scalebench/policy.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

namespace scalebench {

ScalingAction reactive_policy(const Observation& obs, double headroom) {
  const int slots = std::max(1, obs.slots_per_executor);
  const int executors = (obs.demand_slots + slots - 1) / slots;
  const double scaled = std::ceil(static_cast<double>(executors) * headroom);
  const double clamped = std::clamp(scaled, static_cast<double>(obs.min_executors),
                                    static_cast<double>(obs.max_executors));
  return ScalingAction{static_cast<int>(clamped), std::nullopt};
}

ScalingAction fingerprint_policy(const Observation& obs, const FingerprintTable& table, double headroom) {
  if (table.empty()) throw ConfigError("fingerprint policy: lookup table is empty");
  // Dominant subclass: most runnable tasks, ties to the lower ordinal.
  std::map<std::pair<int, std::string>, long> tasks;
  for (const auto& d : obs.jobs) tasks[{d.subclass_ordinal, d.subclass_id}] += d.runnable_tasks;
  const std::string* dominant = nullptr;
  long best = -1;
  for (const auto& [key, n] : tasks) {
    if (n > best) {
      best = n;
      dominant = &key.second;
    }
  }
  if (dominant != nullptr) {
    if (auto it = table.find(*dominant); it != table.end()) {
      return ScalingAction{std::clamp(it->second, obs.min_executors, obs.max_executors), std::nullopt};
    }
  }
  return reactive_policy(obs, headroom);
}

FingerprintPolicy::FingerprintPolicy(FingerprintTable table, double headroom)
    : table_(std::move(table)), headroom_(headroom) {
  if (table_.empty()) throw ConfigError("fingerprint policy: lookup table is empty");
}

namespace {

SweepPoint run_static(const std::vector<JobSpec>& workload, const ClusterConfig& config, int executors) {
  SweepPoint point;
  point.executors = executors;
  try {
    StaticPolicy policy(executors);
    const auto record = simulate(workload, policy, config, 0);
    int met = 0;
    for (const auto& j : record.jobs) met += j.deadline_met ? 1 : 0;
    point.vcpu_seconds = record.vcpu_seconds;
    point.sla_attainment = static_cast<double>(met) / static_cast<double>(record.jobs.size());
  } catch (const Error&) {
    point.failed = true;
  }
  return point;
}

}  // namespace

std::vector<SweepPoint> sweep_static_counts(const std::vector<JobSpec>& workload, const ClusterConfig& config,
                                            bool parallel) {
  config.validate();
  const int lo = std::max(1, config.min_executors);
  const int hi = config.max_executors;
  std::vector<SweepPoint> sweep(static_cast<std::size_t>(std::max(0, hi - lo + 1)));
  const int n = static_cast<int>(sweep.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < n; ++i) sweep[i] = run_static(workload, config, lo + i);
  return sweep;
}

OracleChoice choose_oracle(const std::vector<SweepPoint>& sweep, const ClusterConfig& config) {
  OracleChoice choice;
  choice.sweep = sweep;
  const SweepPoint* best = nullptr;
  for (const auto& p : sweep) {
    if (p.failed || p.sla_attainment < 1.0) continue;
    if (best == nullptr || p.vcpu_seconds < best->vcpu_seconds) best = &p;
  }
  if (best == nullptr) {
    choice.executors = config.max_executors;
    choice.infeasible = true;
    for (const auto& p : sweep) {
      if (p.executors == config.max_executors) choice.vcpu_seconds = p.vcpu_seconds;
    }
    return choice;
  }
  choice.executors = best->executors;
  choice.vcpu_seconds = best->vcpu_seconds;
  return choice;
}

std::map<std::string, OracleChoice> oracle_policy(const std::vector<JobSpec>& workload,
                                                  const ClusterConfig& config, bool parallel) {
  std::map<std::string, std::vector<JobSpec>> by_subclass;
  for (const auto& job : workload) by_subclass[job.subclass.id()].push_back(job);
  std::map<std::string, OracleChoice> out;
  for (const auto& [id, jobs] : by_subclass) {
    out[id] = choose_oracle(sweep_static_counts(jobs, config, parallel), config);
  }
  return out;
}

std::vector<DecisionEntry> tool_lookup_history(const DecisionStore& store, const HistoryQuery& query, int k) {
  return store.query(query, k);
}

}  // namespace scalebench
