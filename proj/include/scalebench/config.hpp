#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scalebench/canonical.hpp"
#include "scalebench/external_policy.hpp"
#include "scalebench/sim.hpp"
#include "scalebench/workload.hpp"

namespace scalebench {

enum class PolicyKind { Reactive, Fingerprint, OracleStatic, Static, External };
std::string_view to_string(PolicyKind kind);

struct PolicyDescriptor {
  std::string name;
  PolicyKind kind = PolicyKind::Reactive;
  double headroom = 1.0;      // reactive, fingerprint
  int static_count = 1;       // static
  std::string command;        // external
  double timeout = 10.0;      // external, seconds per decision
};

struct StatsConfig {
  int bootstrap_replicates = 10000;
  double alpha = 0.05;
  double transition_threshold = 0.5;
  std::uint64_t bootstrap_seed = 0;
};

struct CalibrationConfig {
  int jobs = 31;
  std::uint64_t seed = 0;
  std::string cache = "calibration.json";  // relative paths resolve against output_dir
};

struct ExperimentPlan {
  std::vector<PolicyDescriptor> policies;
  std::vector<Subclass> subclasses;
  std::vector<std::uint64_t> seeds;
  int jobs_per_cell = 20;
  ClusterConfig cluster;
  WorkloadParams workload = WorkloadParams::defaults();
  StatsConfig stats;
  CalibrationConfig calibration;
  TokenPricing pricing;
  std::string output_dir = "runs";

  void validate() const;
  // Same layout as the YAML file, so the output parses back with parse_plan.
  Json to_json() const;
};

// Plan and config in one YAML document. Unknown keys are rejected so typos
// fail loudly instead of silently falling back to defaults.
ExperimentPlan load_plan(const std::filesystem::path& path);
ExperimentPlan parse_plan(const std::string& yaml_text);

// Hash over everything calibration depends on: cluster, workload parameters,
// calibration settings and the subclass list.
std::string calibration_hash(const ExperimentPlan& plan);

Json workload_params_to_json(const WorkloadParams& params);

}  // namespace scalebench
