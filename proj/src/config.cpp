#include "scalebench/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "scalebench/errors.hpp"
#include "scalebench/rng.hpp"

namespace scalebench {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Reactive: return "reactive";
    case PolicyKind::Fingerprint: return "fingerprint";
    case PolicyKind::OracleStatic: return "oracle_static";
    case PolicyKind::Static: return "static";
    case PolicyKind::External: return "external";
  }
  return "?";
}

namespace {

std::optional<PolicyKind> parse_kind(const std::string& s) {
  for (auto k : {PolicyKind::Reactive, PolicyKind::Fingerprint, PolicyKind::OracleStatic, PolicyKind::Static,
                 PolicyKind::External}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  if (!node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

void read_interval(const YAML::Node& node, const char* key, Interval& out, const std::string& where) {
  if (!node[key]) return;
  const auto v = node[key];
  if (!v.IsSequence() || v.size() != 2) throw ConfigError(where + "." + key + ": expected [lo, hi]");
  out = {v[0].as<double>(), v[1].as<double>()};
  if (out.lo > out.hi) throw ConfigError(where + "." + key + ": lo > hi");
}

void read_range(const YAML::Node& node, const char* key, IntRange& out, const std::string& where) {
  if (!node[key]) return;
  const auto v = node[key];
  if (!v.IsSequence() || v.size() != 2) throw ConfigError(where + "." + key + ": expected [lo, hi]");
  out = {v[0].as<int>(), v[1].as<int>()};
  if (out.lo > out.hi || out.lo < 1) throw ConfigError(where + "." + key + ": invalid range");
}

ClusterConfig parse_cluster(const YAML::Node& node) {
  const std::string w = "cluster";
  check_keys(node, w,
             {"min_executors", "max_executors", "initial_executors", "slots_per_executor", "vcpus_per_executor",
              "provisioning_latency", "decision_interval", "shuffle_bandwidth", "broadcast_latency",
              "straggler_factor", "rate_per_vcpu_hour", "recent_actions", "observation_token_bound"});
  ClusterConfig c;
  read(node, "min_executors", c.min_executors, w);
  read(node, "max_executors", c.max_executors, w);
  if (node["initial_executors"] && !node["initial_executors"].IsNull()) {
    int v = 0;
    read(node, "initial_executors", v, w);
    c.initial_executors = v;
  }
  read(node, "slots_per_executor", c.slots_per_executor, w);
  read(node, "vcpus_per_executor", c.vcpus_per_executor, w);
  read(node, "provisioning_latency", c.provisioning_latency, w);
  read(node, "decision_interval", c.decision_interval, w);
  read(node, "shuffle_bandwidth", c.shuffle_bandwidth, w);
  read(node, "broadcast_latency", c.broadcast_latency, w);
  read(node, "straggler_factor", c.straggler_factor, w);
  read(node, "rate_per_vcpu_hour", c.rate_per_vcpu_hour, w);
  read(node, "recent_actions", c.recent_actions, w);
  read(node, "observation_token_bound", c.observation_token_bound, w);
  try {
    c.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("cluster: ") + e.what());
  }
  return c;
}

void parse_workload(const YAML::Node& node, WorkloadParams& p) {
  const std::string w = "workload";
  check_keys(node, w,
             {"zipf_low", "zipf_high", "small_input_bytes", "large_input_bytes", "partition_bytes", "min_tasks",
              "max_tasks", "task_throughput", "min_task_duration", "join_participants", "loop_iterations",
              "poisson_mean_gap", "periodic_gap", "periodic_jitter", "burst_mean_size", "burst_intra_gap_max",
              "burst_mean_quiet_gap", "sla_multiplier", "default_sla_median", "sla_medians", "classes"});
  read(node, "zipf_low", p.zipf_low, w);
  read(node, "zipf_high", p.zipf_high, w);
  read_interval(node, "small_input_bytes", p.small_input_bytes, w);
  read_interval(node, "large_input_bytes", p.large_input_bytes, w);
  read(node, "partition_bytes", p.partition_bytes, w);
  read(node, "min_tasks", p.min_tasks, w);
  read(node, "max_tasks", p.max_tasks, w);
  read(node, "task_throughput", p.task_throughput, w);
  read(node, "min_task_duration", p.min_task_duration, w);
  read_range(node, "join_participants", p.join_participants, w);
  read_range(node, "loop_iterations", p.loop_iterations, w);
  read(node, "poisson_mean_gap", p.poisson_mean_gap, w);
  read(node, "periodic_gap", p.periodic_gap, w);
  read(node, "periodic_jitter", p.periodic_jitter, w);
  read(node, "burst_mean_size", p.burst_mean_size, w);
  read(node, "burst_intra_gap_max", p.burst_intra_gap_max, w);
  read(node, "burst_mean_quiet_gap", p.burst_mean_quiet_gap, w);
  read(node, "sla_multiplier", p.sla_multiplier, w);
  read(node, "default_sla_median", p.default_sla_median, w);
  if (node["sla_medians"]) {
    for (const auto& kv : node["sla_medians"]) {
      const auto id = kv.first.as<std::string>();
      if (!find_subclass(id)) throw ConfigError("workload.sla_medians: unknown subclass '" + id + "'");
      p.sla_medians[id] = kv.second.as<double>();
    }
  }
  if (node["classes"]) {
    for (const auto& kv : node["classes"]) {
      const auto key = kv.first.as<std::string>();
      const auto id = parse_class_key(key);
      if (!id) throw ConfigError("workload.classes: unknown class '" + key + "'");
      auto& klass = p.classes[static_cast<std::size_t>(*id)];
      const std::string cw = "workload.classes." + key;
      check_keys(kv.second, cw, {"shuffle_to_input_ratio", "stage_count", "zipf_exponent", "flipped_zipf_exponent"});
      read_interval(kv.second, "shuffle_to_input_ratio", klass.shuffle_to_input_ratio, cw);
      read_range(kv.second, "stage_count", klass.stage_count, cw);
      read(kv.second, "zipf_exponent", klass.zipf_exponent, cw);
      read(kv.second, "flipped_zipf_exponent", klass.flipped_zipf_exponent, cw);
    }
  }
  if (p.min_tasks < 1 || p.max_tasks < p.min_tasks) throw ConfigError("workload: invalid task bounds");
  if (!(p.partition_bytes > 0.0) || !(p.task_throughput > 0.0)) throw ConfigError("workload: sizes must be positive");
}

PolicyDescriptor parse_policy(const YAML::Node& node, std::size_t index) {
  const std::string w = "plan.policies[" + std::to_string(index) + "]";
  PolicyDescriptor d;
  std::string kind;
  if (node.IsScalar()) {
    kind = node.as<std::string>();
    d.name = kind;
  } else {
    check_keys(node, w, {"name", "kind", "headroom", "count", "command", "timeout"});
    read(node, "kind", kind, w);
    read(node, "name", d.name, w);
    read(node, "headroom", d.headroom, w);
    read(node, "count", d.static_count, w);
    read(node, "command", d.command, w);
    read(node, "timeout", d.timeout, w);
    if (kind.empty()) kind = d.command.empty() ? d.name : "external";
    if (d.name.empty()) d.name = kind;
  }
  const auto k = parse_kind(kind);
  if (!k) throw ConfigError(w + ": unknown policy kind '" + kind + "'");
  d.kind = *k;
  return d;
}

}  // namespace

void ExperimentPlan::validate() const {
  if (policies.empty()) throw ConfigError("plan: no policies");
  if (subclasses.empty()) throw ConfigError("plan: no subclasses");
  if (seeds.empty()) throw ConfigError("plan: at least one seed is required");
  if (jobs_per_cell < 1) throw ConfigError("plan: jobs_per_cell must be >= 1");
  std::set<std::string> names;
  for (const auto& p : policies) {
    if (!names.insert(p.name).second) throw ConfigError("plan: duplicate policy name '" + p.name + "'");
    if (p.kind == PolicyKind::External && p.command.empty()) {
      throw ConfigError("plan: external policy '" + p.name + "' has no command");
    }
    if (p.kind == PolicyKind::External && !(p.timeout > 0.0)) {
      throw ConfigError("plan: external policy '" + p.name + "' needs a positive timeout");
    }
    if (p.kind == PolicyKind::Static &&
        (p.static_count < cluster.min_executors || p.static_count > cluster.max_executors)) {
      throw ConfigError("plan: static policy '" + p.name + "' count outside cluster bounds");
    }
    if (!(p.headroom > 0.0)) throw ConfigError("plan: policy '" + p.name + "' headroom must be positive");
  }
  std::set<std::string> ids;
  for (const auto& s : subclasses) {
    if (!ids.insert(s.id()).second) throw ConfigError("plan: duplicate subclass '" + s.id() + "'");
  }
  if (stats.bootstrap_replicates < 100) throw ConfigError("stats: bootstrap_replicates must be >= 100");
  if (!(stats.alpha > 0.0 && stats.alpha < 1.0)) throw ConfigError("stats: alpha must be in (0, 1)");
  if (!(stats.transition_threshold > 0.0)) throw ConfigError("stats: transition_threshold must be positive");
  if (calibration.jobs < 1) throw ConfigError("calibration: jobs must be >= 1");
}

Json workload_params_to_json(const WorkloadParams& p) {
  Json classes = Json::object();
  for (const auto& c : p.classes) {
    classes[std::string(class_key(c.id))] =
        Json{{"shuffle_to_input_ratio", {c.shuffle_to_input_ratio.lo, c.shuffle_to_input_ratio.hi}},
             {"stage_count", {c.stage_count.lo, c.stage_count.hi}},
             {"zipf_exponent", c.zipf_exponent},
             {"flipped_zipf_exponent", c.flipped_zipf_exponent}};
  }
  return Json{{"zipf_low", p.zipf_low},
              {"zipf_high", p.zipf_high},
              {"small_input_bytes", {p.small_input_bytes.lo, p.small_input_bytes.hi}},
              {"large_input_bytes", {p.large_input_bytes.lo, p.large_input_bytes.hi}},
              {"partition_bytes", p.partition_bytes},
              {"min_tasks", p.min_tasks},
              {"max_tasks", p.max_tasks},
              {"task_throughput", p.task_throughput},
              {"min_task_duration", p.min_task_duration},
              {"join_participants", {p.join_participants.lo, p.join_participants.hi}},
              {"loop_iterations", {p.loop_iterations.lo, p.loop_iterations.hi}},
              {"poisson_mean_gap", p.poisson_mean_gap},
              {"periodic_gap", p.periodic_gap},
              {"periodic_jitter", p.periodic_jitter},
              {"burst_mean_size", p.burst_mean_size},
              {"burst_intra_gap_max", p.burst_intra_gap_max},
              {"burst_mean_quiet_gap", p.burst_mean_quiet_gap},
              {"sla_multiplier", p.sla_multiplier},
              {"default_sla_median", p.default_sla_median},
              {"sla_medians", p.sla_medians},
              {"classes", std::move(classes)}};
}

Json ExperimentPlan::to_json() const {
  Json pols = Json::array();
  for (const auto& p : policies) {
    Json j{{"name", p.name}, {"kind", std::string(to_string(p.kind))}};
    if (p.kind == PolicyKind::Reactive || p.kind == PolicyKind::Fingerprint) j["headroom"] = p.headroom;
    if (p.kind == PolicyKind::Static) j["count"] = p.static_count;
    if (p.kind == PolicyKind::External) {
      j["command"] = p.command;
      j["timeout"] = p.timeout;
    }
    pols.push_back(std::move(j));
  }
  Json subs = Json::array();
  for (const auto& s : subclasses) subs.push_back(s.id());
  return Json{{"plan",
               {{"policies", std::move(pols)},
                {"subclasses", std::move(subs)},
                {"seeds", seeds},
                {"jobs_per_cell", jobs_per_cell},
                {"output_dir", output_dir}}},
              {"cluster", cluster.to_json()},
              {"workload", workload_params_to_json(workload)},
              {"stats",
               {{"bootstrap_replicates", stats.bootstrap_replicates},
                {"alpha", stats.alpha},
                {"transition_threshold", stats.transition_threshold},
                {"bootstrap_seed", stats.bootstrap_seed}}},
              {"calibration", {{"jobs", calibration.jobs}, {"seed", calibration.seed}, {"cache", calibration.cache}}},
              {"pricing", {{"input_per_token", pricing.input_per_token}, {"output_per_token", pricing.output_per_token}}}};
}

ExperimentPlan parse_plan(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("plan file is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("plan file must be a mapping");
  check_keys(root, "<root>", {"cluster", "workload", "plan", "stats", "calibration", "pricing"});

  ExperimentPlan plan;
  try {
    if (root["cluster"]) plan.cluster = parse_cluster(root["cluster"]);
    if (root["workload"]) parse_workload(root["workload"], plan.workload);

    if (!root["plan"]) throw ConfigError("missing 'plan' section");
    const auto p = root["plan"];
    check_keys(p, "plan", {"policies", "subclasses", "seeds", "seed_count", "master_seed", "jobs_per_cell", "output_dir"});
    if (!p["policies"] || !p["policies"].IsSequence()) throw ConfigError("plan.policies: expected a list");
    for (std::size_t i = 0; i < p["policies"].size(); ++i) plan.policies.push_back(parse_policy(p["policies"][i], i));

    if (!p["subclasses"] || (p["subclasses"].IsScalar() && p["subclasses"].as<std::string>() == "all")) {
      plan.subclasses.assign(default_subclasses().begin(), default_subclasses().end());
    } else {
      for (const auto& s : p["subclasses"]) {
        const auto id = s.as<std::string>();
        const auto sub = find_subclass(id);
        if (!sub) throw ConfigError("plan.subclasses: unknown subclass '" + id + "'");
        plan.subclasses.push_back(*sub);
      }
    }

    if (p["seeds"] && p["seed_count"]) throw ConfigError("plan: give either seeds or seed_count, not both");
    if (p["seeds"]) {
      for (const auto& s : p["seeds"]) plan.seeds.push_back(s.as<std::uint64_t>());
    } else {
      int count = 5;
      std::uint64_t master = 0;
      read(p, "seed_count", count, "plan");
      read(p, "master_seed", master, "plan");
      if (count < 1) throw ConfigError("plan.seed_count must be >= 1");
      for (int i = 0; i < count; ++i) plan.seeds.push_back(derive_seed(master, static_cast<std::uint64_t>(i)));
    }
    read(p, "jobs_per_cell", plan.jobs_per_cell, "plan");
    read(p, "output_dir", plan.output_dir, "plan");

    if (root["stats"]) {
      const auto s = root["stats"];
      check_keys(s, "stats", {"bootstrap_replicates", "alpha", "transition_threshold", "bootstrap_seed"});
      read(s, "bootstrap_replicates", plan.stats.bootstrap_replicates, "stats");
      read(s, "alpha", plan.stats.alpha, "stats");
      read(s, "transition_threshold", plan.stats.transition_threshold, "stats");
      read(s, "bootstrap_seed", plan.stats.bootstrap_seed, "stats");
    }
    if (root["calibration"]) {
      const auto c = root["calibration"];
      check_keys(c, "calibration", {"jobs", "seed", "cache"});
      read(c, "jobs", plan.calibration.jobs, "calibration");
      read(c, "seed", plan.calibration.seed, "calibration");
      read(c, "cache", plan.calibration.cache, "calibration");
    }
    if (root["pricing"]) {
      const auto c = root["pricing"];
      check_keys(c, "pricing", {"input_per_token", "output_per_token"});
      read(c, "input_per_token", plan.pricing.input_per_token, "pricing");
      read(c, "output_per_token", plan.pricing.output_per_token, "pricing");
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("plan file: ") + e.what());
  }
  plan.validate();
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plan file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str());
}

std::string calibration_hash(const ExperimentPlan& plan) {
  auto params = workload_params_to_json(plan.workload);
  params.erase("sla_medians");  // calibration output, not input
  Json subs = Json::array();
  for (const auto& s : plan.subclasses) subs.push_back(s.id());
  const Json key{{"cluster", plan.cluster.to_json()},
                 {"workload", std::move(params)},
                 {"calibration", {{"jobs", plan.calibration.jobs}, {"seed", plan.calibration.seed}}},
                 {"subclasses", std::move(subs)}};
  return hex64(fnv1a64(canonical_dump(key)));
}

}  // namespace scalebench
