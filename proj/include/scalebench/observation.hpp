#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scalebench/canonical.hpp"
#include "scalebench/errors.hpp"

namespace scalebench {

constexpr int kObservationSchemaVersion = 1;
constexpr int kDefaultTokenBound = 4096;

struct JobDigest {
  std::string job_id;
  std::string subclass_id;
  int subclass_ordinal = -1;
  double submit_time = 0.0;
  int stages_done = 0;
  int stages_total = 0;
  int runnable_tasks = 0;
  std::uint64_t bytes_shuffled = 0;
  double time_to_deadline = 0.0;

  friend bool operator==(const JobDigest&, const JobDigest&) = default;
};

struct ActionDigest {
  double time = 0.0;
  int target_executors = 0;

  friend bool operator==(const ActionDigest&, const ActionDigest&) = default;
};

// Per-interval policy input. Jobs are ordered oldest submission first.
struct Observation {
  int schema_version = kObservationSchemaVersion;
  double sim_time = 0.0;
  int running_executors = 0;
  int provisioning_executors = 0;
  int draining_executors = 0;
  int current_target = 0;
  int demand_slots = 0;
  int min_executors = 0;
  int max_executors = 0;
  int slots_per_executor = 1;
  int vcpus_per_executor = 1;
  double rate_per_vcpu_hour = 0.0;
  double accrued_dollars = 0.0;
  std::vector<JobDigest> jobs;
  std::vector<ActionDigest> recent_actions;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct ScalingAction {
  int target_executors = 0;
  std::optional<std::string> justification;

  friend bool operator==(const ScalingAction&, const ScalingAction&) = default;
};

// Reference token count: every maximal run of [A-Za-z0-9_] is one token and
// every other non-whitespace byte is one token.
std::int64_t count_tokens(std::string_view text);

struct SerializedObservation {
  std::string text;
  std::int64_t tokens = 0;
  bool truncated = false;
  int dropped_jobs = 0;
};

// Canonical single-line JSON. When the full form exceeds token_bound, job
// digests are dropped oldest-first until it fits and the output carries
// "truncated": true.
SerializedObservation serialize_observation(const Observation& obs,
                                            std::int64_t token_bound = kDefaultTokenBound);

Json observation_to_json(const Observation& obs, std::size_t first_job = 0);
Observation observation_from_json(const Json& j);

}  // namespace scalebench
