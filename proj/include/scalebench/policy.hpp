#pragma once

#include <map>
#include <string>
#include <vector>

#include "scalebench/decision_store.hpp"
#include "scalebench/sim.hpp"

namespace scalebench {

// Spark-dynamic-allocation analog: executors for the pending demand, scaled by
// a headroom factor and clamped to the configured bounds.
ScalingAction reactive_policy(const Observation& obs, double headroom = 1.0);

// subclass id -> executor count.
using FingerprintTable = std::map<std::string, int>;

// Looks up the dominant active subclass (most runnable tasks, ties to the lower
// ordinal); unseen subclasses fall back to reactive_policy.
ScalingAction fingerprint_policy(const Observation& obs, const FingerprintTable& table,
                                 double headroom = 1.0);

class ReactivePolicy final : public Policy {
 public:
  explicit ReactivePolicy(double headroom = 1.0) : headroom_(headroom) {}
  std::string name() const override { return "reactive"; }
  PolicyReply decide(const Observation& obs) override { return {reactive_policy(obs, headroom_), {}, {}}; }

 private:
  double headroom_;
};

class FingerprintPolicy final : public Policy {
 public:
  explicit FingerprintPolicy(FingerprintTable table, double headroom = 1.0);
  std::string name() const override { return "fingerprint"; }
  PolicyReply decide(const Observation& obs) override {
    return {fingerprint_policy(obs, table_, headroom_), {}, {}};
  }

 private:
  FingerprintTable table_;
  double headroom_;
};

// Holds a fixed executor count from the first instant of the run.
class StaticPolicy final : public Policy {
 public:
  explicit StaticPolicy(int executors, std::string name = "static")
      : executors_(executors), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  PolicyReply decide(const Observation&) override { return {ScalingAction{executors_, {}}, {}, {}}; }
  std::optional<int> initial_executors() const override { return executors_; }

 private:
  int executors_;
  std::string name_;
};

struct SweepPoint {
  int executors = 0;
  double vcpu_seconds = 0.0;
  double sla_attainment = 0.0;
  bool failed = false;
};

struct OracleChoice {
  int executors = 0;
  bool infeasible = false;
  double vcpu_seconds = 0.0;
  std::vector<SweepPoint> sweep;
};

// Runs the workload under every static count in [min, max]. The parallel and
// serial paths produce identical results; the serial one is the reference.
std::vector<SweepPoint> sweep_static_counts(const std::vector<JobSpec>& workload, const ClusterConfig& config,
                                            bool parallel = true);

// Cheapest static count with full SLA attainment, ties to fewer executors;
// max_executors flagged infeasible when no count attains every deadline.
OracleChoice choose_oracle(const std::vector<SweepPoint>& sweep, const ClusterConfig& config);

// Per-subclass oracle over a workload (jobs grouped by subclass id).
std::map<std::string, OracleChoice> oracle_policy(const std::vector<JobSpec>& workload,
                                                  const ClusterConfig& config, bool parallel = true);

// k nearest historical decisions for the retrieval tool exposed to agents.
std::vector<DecisionEntry> tool_lookup_history(const DecisionStore& store, const HistoryQuery& query, int k);

}  // namespace scalebench
