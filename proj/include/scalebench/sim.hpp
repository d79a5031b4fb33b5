#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalebench/canonical.hpp"
#include "scalebench/errors.hpp"
#include "scalebench/observation.hpp"
#include "scalebench/workload.hpp"

namespace scalebench {

struct ClusterConfig {
  int min_executors = 1;
  int max_executors = 64;
  std::optional<int> initial_executors;  // defaults to min_executors
  int slots_per_executor = 4;
  int vcpus_per_executor = 4;
  double provisioning_latency = 60.0;
  double decision_interval = 30.0;
  double shuffle_bandwidth = kGiB;  // bytes per second per executor
  double broadcast_latency = 5.0;
  double straggler_factor = 1.0;    // duration = base * (1 + k * n * share)
  double rate_per_vcpu_hour = 0.048;
  int recent_actions = 5;
  std::int64_t observation_token_bound = kDefaultTokenBound;

  void validate() const;
  Json to_json() const;
  static ClusterConfig from_json(const Json& j);
};

struct LedgerEntry {
  int tick = 0;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  double wall_latency = 0.0;  // seconds
  double monetary_cost = 0.0;
};

struct PolicyFaultInfo {
  std::string kind;  // "timeout", "malformed", "error_frame"
  std::string detail;
};

struct PolicyReply {
  std::optional<ScalingAction> action;
  std::optional<LedgerEntry> ledger;
  std::optional<PolicyFaultInfo> fault;
};

// The only surface through which the simulator talks to any policy family.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual PolicyReply decide(const Observation& obs) = 0;
  // Static policies start the cluster at their count instead of min_executors.
  virtual std::optional<int> initial_executors() const { return std::nullopt; }
};

// Thrown by a policy when it can no longer answer at all (process gone).
class PolicyUnavailable : public Error {
 public:
  using Error::Error;
};

enum class EventKind { TaskFinish, DrainComplete, JobArrival, StageRelease, DecisionTick, ExecutorReady };

struct JobOutcome {
  int index = 0;
  std::string job_id;
  std::string subclass_id;
  double submit_time = 0.0;
  double sla_deadline = 0.0;
  double finish_time = -1.0;
  bool deadline_met = false;
  double vcpu_seconds = 0.0;  // attributed share of cluster cost
};

struct SeriesPoint {
  double time = 0.0;
  int demand_slots = 0;
  int target_executors = 0;
  int running_executors = 0;  // billed: ready executors including draining ones
};

struct TickRecord {
  int index = 0;
  double time = 0.0;
  int demand_slots = 0;
  int running_executors = 0;
  std::optional<int> requested_target;  // absent on fault
  int applied_target = 0;
  bool clamped = false;
  bool faulted = false;
  std::string observation_digest;
  std::optional<std::string> justification;
  std::string dominant_subclass;  // empty when no job is active
  std::uint64_t shuffled_bytes = 0;  // cumulative over the run
};

struct FaultRecord {
  int tick = 0;
  double time = 0.0;
  std::string kind;
  std::string detail;
};

struct ExecutorRecord {
  int id = 0;
  double requested_at = 0.0;
  double ready_at = -1.0;  // -1: cancelled before ready
  double drain_at = -1.0;
  double end_at = -1.0;
};

struct TaskRecord {
  int job = 0;
  int stage = 0;
  int task = 0;
  int executor = 0;
  double start = 0.0;
  double end = 0.0;
};

struct RunRecord {
  std::string run_id;
  std::string policy;
  std::uint64_t seed = 0;
  ClusterConfig cluster;
  int initial_target = 0;
  std::vector<JobOutcome> jobs;
  std::vector<SeriesPoint> series;
  std::vector<TickRecord> ticks;
  std::vector<LedgerEntry> ledger;
  std::vector<FaultRecord> faults;
  std::vector<ExecutorRecord> executors;
  std::vector<TaskRecord> tasks;  // only with SimOptions::record_tasks
  double end_time = 0.0;
  double vcpu_seconds = 0.0;
  double unattributed_vcpu_seconds = 0.0;
  bool complete = false;
};

// Rectangular integral of running_executors * vcpus over the series.
double integrate_vcpu_seconds(const RunRecord& record);

struct SimOptions {
  std::string run_id;
  bool record_tasks = false;
  double max_sim_time = 1.0e8;
};

// Carries the partial record of a run whose policy stopped answering.
class PolicyFaultError : public Error {
 public:
  PolicyFaultError(const std::string& what, RunRecord partial)
      : Error(what), partial_(std::move(partial)) {}
  const RunRecord& partial() const { return partial_; }

 private:
  RunRecord partial_;
};

RunRecord simulate(const std::vector<JobSpec>& workload, Policy& policy, const ClusterConfig& config,
                   std::uint64_t seed, const SimOptions& options = {});

// Runnable-but-unstarted tasks across stages, capped at cluster capacity.
int step_demand(const ClusterConfig& config, std::span<const int> unstarted_per_stage);

constexpr int kRunRecordSchemaVersion = 1;
// Newline-delimited records: header, jobs, series, ticks, ledger, faults,
// executors, optional tasks, summary.
std::string to_ndjson(const RunRecord& record);
RunRecord run_record_from_ndjson(std::string_view text);

}  // namespace scalebench
