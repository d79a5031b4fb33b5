#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scalebench/canonical.hpp"
#include "scalebench/sim.hpp"

namespace scalebench {

struct CostBreakdown {
  double vcpu_hours = 0.0;
  double compute_dollars = 0.0;
  double inference_dollars = 0.0;
  double dollars = 0.0;  // compute + inference
};

// vcpu_hours from the executor series; the ledger's monetary total is added on top.
CostBreakdown cost(const RunRecord& record, double rate_per_vcpu_hour, const std::vector<LedgerEntry>& ledger);
CostBreakdown cost(const RunRecord& record);

// met / total; a job finishing exactly at submit + deadline is met.
double sla_attainment(const RunRecord& record);

struct ResponsivenessResult {
  std::optional<double> median;  // nullopt: no phase transition (Undefined)
  std::vector<double> delays;
  int unanswered = 0;
};

constexpr double kDefaultTransitionThreshold = 0.5;

// A transition is a tick (after the first) whose demand moved by at least
// `threshold` relative to the previous tick, or rose from zero. Its delay runs
// to the first tick at or after it whose applied target moved in the demand's
// direction; unanswered transitions count until the end of the run.
ResponsivenessResult responsiveness(const RunRecord& record, double threshold = kDefaultTransitionThreshold);

int target_changes(const RunRecord& record);
double job_minutes(const RunRecord& record);
// Applied-target changes per job-minute.
double thrash(const RunRecord& record);

struct ConsistencyResult {
  double sigma = 0.0;
  std::size_t aligned_ticks = 0;
  bool misaligned = false;  // sequences differed in length; the common prefix was used
};

// Mean over tick index of the population standard deviation across seeds.
ConsistencyResult consistency(const std::vector<std::vector<int>>& targets_by_seed);

struct JobMetric {
  std::string job_id;
  std::string subclass_id;
  double runtime = -1.0;  // -1 when unfinished
  bool deadline_met = false;
  double vcpu_seconds = 0.0;
  double dollars = 0.0;
};

struct MetricRecord {
  std::string policy;
  std::string subclass_id;
  std::string environment = "simulated";
  std::uint64_t seed = 0;
  double vcpu_hours = 0.0;
  double compute_dollars = 0.0;
  double inference_dollars = 0.0;
  double dollars = 0.0;
  double sla_attainment = 0.0;
  int jobs_met = 0;
  int jobs_total = 0;
  std::optional<double> responsiveness_median;
  int transitions = 0;
  double thrash = 0.0;
  int target_changes = 0;
  double job_minutes = 0.0;
  std::optional<double> consistency_sigma;  // filled by the harness across seeds
  int faults = 0;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  std::vector<JobMetric> jobs;

  Json to_json() const;
  static MetricRecord from_json(const Json& j);
};

MetricRecord compute_metrics(const RunRecord& record, const std::string& subclass_id,
                             double transition_threshold = kDefaultTransitionThreshold);

}  // namespace scalebench
