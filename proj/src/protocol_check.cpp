#include <chrono>

#include "scalebench/external_policy.hpp"

namespace scalebench {

namespace {

Observation sample_observation(int jobs) {
  Observation obs;
  obs.sim_time = 120.0;
  obs.running_executors = 4;
  obs.provisioning_executors = 2;
  obs.current_target = 6;
  obs.demand_slots = 40;
  obs.min_executors = 1;
  obs.max_executors = 64;
  obs.slots_per_executor = 4;
  obs.vcpus_per_executor = 4;
  obs.rate_per_vcpu_hour = 0.048;
  obs.accrued_dollars = 0.25;
  for (int i = 0; i < jobs; ++i) {
    JobDigest d;
    d.job_id = "probe-" + std::to_string(i);
    d.subclass_id = "shuffle_heavy_etl/small/low";
    d.subclass_ordinal = 0;
    d.submit_time = static_cast<double>(i);
    d.stages_done = 1;
    d.stages_total = 5;
    d.runnable_tasks = 20;
    d.bytes_shuffled = 1ULL << 30;
    d.time_to_deadline = 900.0 - i;
    obs.jobs.push_back(d);
  }
  obs.recent_actions = {{60.0, 4}, {90.0, 6}};
  return obs;
}

std::vector<JobSpec> probe_workload() {
  std::vector<JobSpec> jobs;
  for (int j = 0; j < 2; ++j) {
    JobSpec job;
    job.job_id = "probe-job-" + std::to_string(j);
    job.subclass = default_subclasses()[0];
    job.submit_time = 60.0 * j;
    job.sla_deadline = 600.0;
    StageSpec st;
    st.task_count = 16;
    st.task_base_duration = 10.0;
    st.task_skew_shares.assign(16, 1.0 / 16.0);
    job.stages.push_back(st);
    jobs.push_back(job);
  }
  return jobs;
}

template <typename Fn>
ConformanceCase run_case(std::string name, Fn&& fn) {
  ConformanceCase c;
  c.name = std::move(name);
  try {
    c.detail = fn();
    c.passed = c.detail.empty();
    if (c.passed) c.detail = "ok";
  } catch (const std::exception& e) {
    c.passed = false;
    c.detail = e.what();
  }
  return c;
}

std::string check_reply(const PolicyReply& reply) {
  if (reply.fault) return reply.fault->kind + ": " + reply.fault->detail;
  if (!reply.action) return "no action";
  if (reply.action->target_executors < 0) return "negative target";
  return {};
}

}  // namespace

bool ConformanceReport::all_passed() const {
  for (const auto& c : cases) {
    if (!c.passed) return false;
  }
  return true;
}

Json ConformanceReport::to_json() const {
  Json list = Json::array();
  for (const auto& c : cases) list.push_back(Json{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return Json{{"cases", std::move(list)},
              {"faults", faults},
              {"held_previous_target", held_previous_target},
              {"all_passed", all_passed()}};
}

ConformanceReport protocol_check(const ExternalPolicyOptions& options) {
  ConformanceReport report;
  std::unique_ptr<ExternalPolicy> policy;
  report.cases.push_back(run_case("handshake", [&]() -> std::string {
    policy = std::make_unique<ExternalPolicy>(options);
    return {};
  }));
  if (!policy) return report;

  auto count_fault = [&](const PolicyReply& r) {
    if (r.fault) ++report.faults;
  };

  report.cases.push_back(run_case("single_decision", [&] {
    const auto r = policy->call(sample_observation(2), options.timeout).reply;
    count_fault(r);
    return check_reply(r);
  }));
  report.cases.push_back(run_case("empty_observation", [&] {
    const auto r = policy->call(sample_observation(0), options.timeout).reply;
    count_fault(r);
    return check_reply(r);
  }));
  report.cases.push_back(run_case("oversized_observation", [&] {
    const auto obs = sample_observation(1000);
    if (!serialize_observation(obs, options.token_bound).truncated) return std::string("fixture not truncated");
    const auto r = policy->call(obs, options.timeout).reply;
    count_fault(r);
    return check_reply(r);
  }));
  report.cases.push_back(run_case("deterministic", [&] {
    const auto obs = sample_observation(3);
    const auto a = policy->call(obs, options.timeout).reply;
    const auto b = policy->call(obs, options.timeout).reply;
    count_fault(a);
    count_fault(b);
    if (auto e = check_reply(a); !e.empty()) return e;
    if (auto e = check_reply(b); !e.empty()) return e;
    return a.action == b.action ? std::string() : std::string("different actions for identical observations");
  }));
  report.cases.push_back(run_case("frame_discipline", [&] {
    int answered = 0;
    constexpr int kFrames = 20;
    for (int i = 0; i < kFrames; ++i) {
      auto obs = sample_observation(i % 4);
      obs.sim_time = 30.0 * i;
      const auto r = policy->call(obs, options.timeout).reply;
      count_fault(r);
      if (!r.fault && r.action) ++answered;
    }
    return answered == kFrames ? std::string()
                               : std::to_string(answered) + " of " + std::to_string(kFrames) + " frames answered";
  }));
  report.cases.push_back(run_case("shutdown", [&] {
    const bool exited = policy->shutdown(std::max(1.0, options.timeout));
    policy.reset();
    return exited ? std::string() : std::string("process did not exit after bye");
  }));

  // A short simulation through a fresh process: faults must hold the previous
  // target and every tick must carry a ledger entry.
  report.cases.push_back(run_case("simulation_run", [&]() -> std::string {
    ExternalPolicy sim_policy(options);
    ClusterConfig cluster;
    cluster.max_executors = 16;
    RunRecord record;
    try {
      record = simulate(probe_workload(), sim_policy, cluster, 0);
    } catch (const PolicyFaultError& e) {
      record = e.partial();
      report.faults += static_cast<int>(record.faults.size());
      return std::string("policy became unavailable: ") + e.what();
    }
    report.faults += static_cast<int>(record.faults.size());
    int previous = record.initial_target;
    for (const auto& t : record.ticks) {
      if (t.faulted && t.applied_target != previous) report.held_previous_target = false;
      previous = t.applied_target;
    }
    if (record.ledger.size() != record.ticks.size()) return std::string("ledger entries != decision ticks");
    if (!record.faults.empty()) return std::to_string(record.faults.size()) + " faulted decisions";
    return std::string();
  }));
  return report;
}

}  // namespace scalebench
