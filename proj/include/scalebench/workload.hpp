#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scalebench/canonical.hpp"

namespace scalebench {

constexpr double kGiB = 1024.0 * 1024.0 * 1024.0;
constexpr double kMiB = 1024.0 * 1024.0;

enum class WorkloadClassId {
  ShuffleHeavyEtl,
  SkewedMultiWayJoin,
  IterativeMlPrep,
  TimeWindowedAgg,
  BroadcastBoundedLookup,
  BurstySlaReporting,
};
constexpr int kWorkloadClassCount = 6;

enum class StructuralTemplate { LinearWide, JoinTree, IterativeLoop, WindowAgg, BroadcastJoin, BurstyBatch };
enum class ArrivalPattern { Poisson, Periodic, Bursty };
enum class ScaleLevel { Small, Large };
enum class SkewLevel { Low, High };
enum class DistributionRole { InDistribution, HeldOut };
enum class DependencyKind { Narrow, Wide, Broadcast };

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct IntRange {
  int lo = 1;
  int hi = 1;
};

struct WorkloadClass {
  WorkloadClassId id = WorkloadClassId::ShuffleHeavyEtl;
  Interval shuffle_to_input_ratio;
  // Exponent of the class's default skew level, and of the flipped level used
  // by the large-scale variant.
  double zipf_exponent = 0.3;
  double flipped_zipf_exponent = 1.4;
  SkewLevel default_skew = SkewLevel::Low;
  IntRange stage_count;
  StructuralTemplate structural_template = StructuralTemplate::LinearWide;
  ArrivalPattern arrival = ArrivalPattern::Poisson;
};

std::string_view class_key(WorkloadClassId id);
std::optional<WorkloadClassId> parse_class_key(std::string_view key);
std::string_view to_string(ScaleLevel level);
std::string_view to_string(SkewLevel level);
std::string_view to_string(DistributionRole role);
std::string_view to_string(DependencyKind kind);
std::string_view to_string(StructuralTemplate tmpl);

struct Subclass {
  WorkloadClassId base = WorkloadClassId::ShuffleHeavyEtl;
  ScaleLevel scale_level = ScaleLevel::Small;
  SkewLevel skew_level = SkewLevel::Low;
  DistributionRole distribution_role = DistributionRole::InDistribution;

  // "<class>/<scale>/<skew>", e.g. "shuffle_heavy_etl/small/low".
  std::string id() const;

  friend bool operator==(const Subclass&, const Subclass&) = default;
};

// The 12 shipped subclasses in ordinal order.
const std::array<Subclass, 12>& default_subclasses();
int subclass_ordinal(const Subclass& subclass);
std::optional<Subclass> find_subclass(std::string_view id);

// True iff the split has 6 in-distribution and 6 held-out entries and no
// in-distribution subclass shares (base, skew_level) with a held-out one.
// Throws ValidationError on duplicate subclass ids.
bool validate_split(const std::vector<Subclass>& subclasses);

// p_k = k^-s / sum_{j=1..n} j^-s, k = 1..n.
std::vector<double> zipf_shares(int n, double s);

struct StageSpec {
  int stage_id = 0;
  std::vector<int> parent_ids;
  int task_count = 1;
  double task_base_duration = 1.0;  // seconds
  std::vector<double> task_skew_shares;
  std::uint64_t input_bytes = 0;
  std::uint64_t shuffle_write_bytes = 0;
  DependencyKind dependency_kind = DependencyKind::Narrow;

  friend bool operator==(const StageSpec&, const StageSpec&) = default;
};

struct JobSpec {
  std::string job_id;
  Subclass subclass;
  std::uint64_t seed = 0;
  std::vector<StageSpec> stages;
  double submit_time = 0.0;
  double sla_deadline = 1.0;  // seconds after submit

  std::uint64_t source_input_bytes() const;
  std::uint64_t total_shuffle_bytes() const;
  // Bytes a stage reads through Wide dependencies.
  std::uint64_t shuffle_read_bytes(int stage_id) const;

  friend bool operator==(const JobSpec&, const JobSpec&) = default;
};

// Parameters for every class plus the shared generator knobs. Every field is
// overridable from the config file.
struct WorkloadParams {
  std::array<WorkloadClass, kWorkloadClassCount> classes;
  double zipf_low = 0.3;
  double zipf_high = 1.4;
  Interval small_input_bytes{1.0 * kGiB, 64.0 * kGiB};
  Interval large_input_bytes{64.0 * kGiB, 512.0 * kGiB};
  double partition_bytes = 1.0 * kGiB;
  int min_tasks = 8;
  int max_tasks = 1024;
  double task_throughput = 64.0 * kMiB;  // bytes per second per slot
  double min_task_duration = 0.5;
  IntRange join_participants{3, 4};
  IntRange loop_iterations{4, 8};
  // Arrival processes.
  double poisson_mean_gap = 120.0;
  double periodic_gap = 300.0;
  double periodic_jitter = 0.1;  // fraction of the period
  double burst_mean_size = 5.0;
  double burst_intra_gap_max = 10.0;
  double burst_mean_quiet_gap = 1800.0;
  // Deadline = 2 x median unconstrained runtime; medians come from calibration.
  double sla_multiplier = 2.0;
  double default_sla_median = 600.0;
  std::map<std::string, double> sla_medians;

  static WorkloadParams defaults();
  const WorkloadClass& klass(WorkloadClassId id) const {
    return classes[static_cast<std::size_t>(id)];
  }
  double effective_exponent(const Subclass& subclass) const;
  double sla_median(const Subclass& subclass) const;
};

JobSpec generate_job(const WorkloadParams& params, const Subclass& subclass, std::uint64_t seed,
                     double submit_time);

std::vector<JobSpec> generate_workload(const WorkloadParams& params, const Subclass& subclass,
                                       int job_count, std::uint64_t seed);

// Structural checks shared by tests and the CLI: topological numbering, single
// sink, connectivity, share normalization, shuffle-write placement.
// Returns an empty string when valid, otherwise the first violation.
std::string check_job(const JobSpec& job);

constexpr int kJobSchemaVersion = 1;
Json to_json(const JobSpec& job);
JobSpec job_from_json(const Json& j);
Json to_json(const Subclass& subclass);
Subclass subclass_from_json(const Json& j);

}  // namespace scalebench
