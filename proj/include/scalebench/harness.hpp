#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scalebench/config.hpp"
#include "scalebench/metrics.hpp"
#include "scalebench/policy.hpp"
#include "scalebench/stats.hpp"

namespace scalebench {

struct CalibrationResult {
  std::string config_hash;
  std::map<std::string, double> sla_medians;
  std::map<std::string, OracleChoice> oracle;  // sweep points are not cached
  FingerprintTable fingerprint;
  int simulations = 0;
  bool cache_hit = false;

  Json to_json() const;
  static CalibrationResult from_json(const Json& j);
};

constexpr int kUnconstrainedExecutors = 1024;

// Median runtime of `jobs`, each run alone on a cluster of at least
// kUnconstrainedExecutors static executors.
double unconstrained_median(const std::vector<JobSpec>& jobs, const ClusterConfig& cluster, bool parallel = true);

// Medians, oracle sweep and fingerprint table for every plan subclass. A cache
// file whose hash matches the plan is reused without simulating anything.
CalibrationResult calibrate(const ExperimentPlan& plan, const std::optional<std::filesystem::path>& cache_path,
                            bool parallel = true);

// Workload params with calibrated SLA medians folded in.
WorkloadParams calibrated_params(const ExperimentPlan& plan, const CalibrationResult& calibration);

// The shared workload of a (subclass, seed) cell; every policy sees the same jobs.
std::vector<JobSpec> cell_workload(const ExperimentPlan& plan, const WorkloadParams& params, const Subclass& subclass,
                                   std::uint64_t seed);

struct CellKey {
  std::string policy;
  std::string subclass_id;
  std::uint64_t seed = 0;
  std::string run_id() const;  // "policy|subclass|seed"
};

struct CellResult {
  CellKey key;
  bool denominator = false;  // oracle-static run used only as the cost-ratio base
  bool ok = false;
  std::string error;
  std::optional<RunRecord> record;  // partial when a policy became unavailable
};

std::unique_ptr<Policy> make_policy(const PolicyDescriptor& descriptor, const ExperimentPlan& plan,
                                    const CalibrationResult& calibration, const Subclass& subclass,
                                    const DecisionStore* history = nullptr);

CellResult run_cell(const PolicyDescriptor& descriptor, const ExperimentPlan& plan, const CalibrationResult& calibration,
                    const Subclass& subclass, std::uint64_t seed, const DecisionStore* history = nullptr);

struct PolicyAggregate {
  std::string policy;
  int cells = 0;
  double mean_vcpu_hours = 0.0;
  double mean_dollars = 0.0;
  double mean_sla_attainment = 0.0;
  std::optional<double> in_distribution_mean_ratio;
  std::optional<double> held_out_mean_ratio;
  std::optional<double> generalization_gap;  // held-out minus in-distribution
};

struct PairwiseComparison {
  std::string policy_a;
  std::string policy_b;
  int pairs = 0;
  WilcoxonResult wilcoxon;
  std::optional<double> median_cost_ratio;  // median of cost_a / cost_b
  std::optional<BcaInterval> interval;
  bool reject = false;  // Holm-corrected
};

struct CellFailure {
  CellKey key;
  std::string error;
};

struct ExperimentReport {
  std::string calibration_hash;
  std::string generated_at;  // the only wall-clock field
  double alpha = 0.05;
  int holm_family_size = 0;
  std::vector<MetricRecord> cells;
  std::vector<CellFailure> failures;
  std::vector<PolicyAggregate> aggregates;
  std::vector<PairwiseComparison> comparisons;

  Json to_json() const;
  std::string summary_table() const;
};

// Aggregation over finished cells: metrics, consistency across seeds, per-job
// cost ratios against the oracle-static denominator, pairwise tests with Holm.
ExperimentReport build_report(const ExperimentPlan& plan, const CalibrationResult& calibration,
                              const std::vector<CellResult>& cells, bool parallel = true);

struct RunOptions {
  std::string stamp;  // defaults to the current UTC time
  bool parallel = true;
  bool write_outputs = true;
};

struct RunOutcome {
  ExperimentReport report;
  CalibrationResult calibration;
  std::vector<CellResult> cells;
  std::filesystem::path run_dir;
};

RunOutcome run_plan(const ExperimentPlan& plan, const RunOptions& options = {});

// Recomputes the report from a run directory's stored plan and RunRecords.
ExperimentReport report_from_run_dir(const std::filesystem::path& run_dir, bool parallel = true);

std::string utc_stamp();

}  // namespace scalebench
