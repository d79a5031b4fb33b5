#include "scalebench/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <set>

namespace scalebench {

void ClusterConfig::validate() const {
  if (min_executors < 0) throw ConfigError("min_executors must be >= 0");
  if (max_executors < min_executors) throw ConfigError("min_executors must be <= max_executors");
  if (max_executors < 1) throw ConfigError("max_executors must be >= 1");
  if (slots_per_executor < 1) throw ConfigError("slots_per_executor must be >= 1");
  if (vcpus_per_executor < 1) throw ConfigError("vcpus_per_executor must be >= 1");
  if (!(decision_interval > 0.0)) throw ConfigError("decision_interval must be > 0");
  if (provisioning_latency < 0.0) throw ConfigError("provisioning_latency must be >= 0");
  if (!(shuffle_bandwidth > 0.0)) throw ConfigError("shuffle_bandwidth must be > 0");
  if (broadcast_latency < 0.0) throw ConfigError("broadcast_latency must be >= 0");
  if (straggler_factor < 0.0) throw ConfigError("straggler_factor must be >= 0");
  if (recent_actions < 0) throw ConfigError("recent_actions must be >= 0");
}

Json ClusterConfig::to_json() const {
  Json j{{"min_executors", min_executors},
         {"max_executors", max_executors},
         {"slots_per_executor", slots_per_executor},
         {"vcpus_per_executor", vcpus_per_executor},
         {"provisioning_latency", provisioning_latency},
         {"decision_interval", decision_interval},
         {"shuffle_bandwidth", shuffle_bandwidth},
         {"broadcast_latency", broadcast_latency},
         {"straggler_factor", straggler_factor},
         {"rate_per_vcpu_hour", rate_per_vcpu_hour},
         {"recent_actions", recent_actions},
         {"observation_token_bound", observation_token_bound}};
  j["initial_executors"] = initial_executors ? Json(*initial_executors) : Json(nullptr);
  return j;
}

ClusterConfig ClusterConfig::from_json(const Json& j) {
  ClusterConfig c;
  c.min_executors = j.value("min_executors", c.min_executors);
  c.max_executors = j.value("max_executors", c.max_executors);
  c.slots_per_executor = j.value("slots_per_executor", c.slots_per_executor);
  c.vcpus_per_executor = j.value("vcpus_per_executor", c.vcpus_per_executor);
  c.provisioning_latency = j.value("provisioning_latency", c.provisioning_latency);
  c.decision_interval = j.value("decision_interval", c.decision_interval);
  c.shuffle_bandwidth = j.value("shuffle_bandwidth", c.shuffle_bandwidth);
  c.broadcast_latency = j.value("broadcast_latency", c.broadcast_latency);
  c.straggler_factor = j.value("straggler_factor", c.straggler_factor);
  c.rate_per_vcpu_hour = j.value("rate_per_vcpu_hour", c.rate_per_vcpu_hour);
  c.recent_actions = j.value("recent_actions", c.recent_actions);
  c.observation_token_bound = j.value("observation_token_bound", c.observation_token_bound);
  if (j.contains("initial_executors") && !j["initial_executors"].is_null()) {
    c.initial_executors = j["initial_executors"].get<int>();
  }
  return c;
}

int step_demand(const ClusterConfig& config, std::span<const int> unstarted_per_stage) {
  const std::int64_t cap =
      static_cast<std::int64_t>(config.max_executors) * config.slots_per_executor;
  std::int64_t total = 0;
  for (int n : unstarted_per_stage) total += std::max(0, n);
  return static_cast<int>(std::min(total, cap));
}

double integrate_vcpu_seconds(const RunRecord& record) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < record.series.size(); ++i) {
    total += static_cast<double>(record.series[i].running_executors) *
             (record.series[i + 1].time - record.series[i].time);
  }
  return total * record.cluster.vcpus_per_executor;
}

namespace {

int kind_rank(EventKind kind) {
  // Completed work is visible to the decision; new executors join afterwards.
  switch (kind) {
    case EventKind::TaskFinish: return 0;
    case EventKind::DrainComplete: return 1;
    case EventKind::JobArrival: return 2;
    case EventKind::StageRelease: return 3;
    case EventKind::DecisionTick: return 4;
    case EventKind::ExecutorReady: return 5;
  }
  return 6;
}

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::TaskFinish;
  std::uint64_t seq = 0;
  int a = 0;
  int b = 0;
  int c = 0;

  auto key() const { return std::make_tuple(time, kind_rank(kind), seq); }
  bool operator>(const Event& other) const { return key() > other.key(); }
};

enum class ExecState { Provisioning, Running, Draining, Gone };

struct Executor {
  ExecState state = ExecState::Provisioning;
  int busy = 0;
};

struct StageState {
  int remaining_parents = 0;
  int next_task = 0;
  int finished = 0;
  bool runnable = false;  // parents complete
  std::uint64_t shuffle_read = 0;
  std::vector<int> children;
};

struct JobState {
  bool arrived = false;
  bool finished = false;
  int stages_done = 0;
  int busy_slots = 0;
  int unstarted_runnable = 0;
  std::uint64_t shuffled_bytes = 0;
  double slot_seconds = 0.0;
  std::vector<StageState> stages;
};

class Simulation {
 public:
  Simulation(const std::vector<JobSpec>& workload, Policy& policy, const ClusterConfig& config,
             std::uint64_t seed, const SimOptions& options)
      : workload_(workload), policy_(policy), cfg_(config), options_(options) {
    record_.run_id = options.run_id;
    record_.policy = policy.name();
    record_.seed = seed;
    record_.cluster = config;
  }

  RunRecord run() {
    init();
    while (!queue_.empty() && finished_jobs_ < static_cast<int>(workload_.size())) {
      const Event ev = queue_.top();
      queue_.pop();
      if (ev.time > options_.max_sim_time) throw Error("simulation exceeded max_sim_time");
      advance(ev.time);
      handle(ev);
      schedule_tasks();
      sample();
    }
    if (finished_jobs_ < static_cast<int>(workload_.size())) throw Error("simulation stalled with unfinished jobs");
    finish();
    return std::move(record_);
  }

 private:
  void push(double time, EventKind kind, int a = 0, int b = 0, int c = 0) {
    queue_.push(Event{time, kind, seq_++, a, b, c});
  }

  void init() {
    cfg_.validate();
    if (workload_.empty()) throw InvalidInput("simulate: workload is empty");
    jobs_.resize(workload_.size());
    std::vector<int> order(workload_.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
      return workload_[x].submit_time < workload_[y].submit_time;
    });
    job_rank_.assign(workload_.size(), 0);
    for (std::size_t r = 0; r < order.size(); ++r) job_rank_[order[r]] = static_cast<int>(r);
    rank_job_ = order;

    for (std::size_t j = 0; j < workload_.size(); ++j) {
      const auto& spec = workload_[j];
      if (const auto err = check_job(spec); !err.empty()) {
        throw InvalidInput("job " + spec.job_id + ": " + err);
      }
      auto& js = jobs_[j];
      js.stages.resize(spec.stages.size());
      for (std::size_t s = 0; s < spec.stages.size(); ++s) {
        js.stages[s].remaining_parents = static_cast<int>(spec.stages[s].parent_ids.size());
        js.stages[s].shuffle_read = spec.shuffle_read_bytes(static_cast<int>(s));
        for (int p : spec.stages[s].parent_ids) js.stages[p].children.push_back(static_cast<int>(s));
      }
      push(spec.submit_time, EventKind::JobArrival, static_cast<int>(j));
      JobOutcome outcome;
      outcome.index = static_cast<int>(j);
      outcome.job_id = spec.job_id;
      outcome.subclass_id = spec.subclass.id();
      outcome.submit_time = spec.submit_time;
      outcome.sla_deadline = spec.sla_deadline;
      record_.jobs.push_back(outcome);
    }

    int initial = cfg_.initial_executors.value_or(cfg_.min_executors);
    if (auto p = policy_.initial_executors()) initial = *p;
    initial = std::clamp(initial, cfg_.min_executors, cfg_.max_executors);
    for (int i = 0; i < initial; ++i) {
      const int id = new_executor();
      make_ready(id);
    }
    target_ = initial;
    record_.initial_target = initial;
    push(0.0, EventKind::DecisionTick, 0);
    sample();
  }

  int new_executor() {
    const int id = static_cast<int>(executors_.size());
    executors_.push_back(Executor{});
    ExecutorRecord rec;
    rec.id = id;
    rec.requested_at = now_;
    record_.executors.push_back(rec);
    ++provisioning_;
    return id;
  }

  void make_ready(int id) {
    auto& ex = executors_[id];
    ex.state = ExecState::Running;
    --provisioning_;
    ++running_;
    free_.insert(id);
    record_.executors[id].ready_at = now_;
  }

  void advance(double t) {
    const double dt = t - now_;
    if (dt > 0.0) {
      const int alive = running_ + draining_;
      const double slots = static_cast<double>(alive) * cfg_.slots_per_executor;
      if (!active_.empty()) {
        double busy_total = 0.0;
        for (int j : active_) busy_total += jobs_[j].busy_slots;
        const double idle_share = (slots - busy_total) / static_cast<double>(active_.size());
        for (int j : active_) jobs_[j].slot_seconds += (jobs_[j].busy_slots + idle_share) * dt;
      } else {
        unattributed_slot_seconds_ += slots * dt;
      }
      accrued_vcpu_seconds_ += static_cast<double>(alive) * cfg_.vcpus_per_executor * dt;
    }
    now_ = t;
  }

  void handle(const Event& ev) {
    switch (ev.kind) {
      case EventKind::JobArrival: on_arrival(ev.a); break;
      case EventKind::TaskFinish: on_task_finish(ev.a, ev.b, ev.c); break;
      case EventKind::ExecutorReady:
        if (executors_[ev.a].state == ExecState::Provisioning) make_ready(ev.a);
        break;
      case EventKind::DrainComplete: on_drain_complete(ev.a); break;
      case EventKind::StageRelease: release(ev.a, ev.b); break;
      case EventKind::DecisionTick: on_tick(ev.a); break;
    }
  }

  void on_arrival(int j) {
    auto& js = jobs_[j];
    js.arrived = true;
    active_.insert(j);
    const auto& spec = workload_[j];
    for (std::size_t s = 0; s < spec.stages.size(); ++s) {
      if (spec.stages[s].parent_ids.empty()) make_runnable(j, static_cast<int>(s));
    }
  }

  void make_runnable(int j, int s) {
    auto& st = jobs_[j].stages[s];
    st.runnable = true;
    const int tasks = workload_[j].stages[s].task_count;
    jobs_[j].unstarted_runnable += tasks;
    unstarted_total_ += tasks;
    if (workload_[j].stages[s].dependency_kind == DependencyKind::Broadcast && cfg_.broadcast_latency > 0.0) {
      push(now_ + cfg_.broadcast_latency, EventKind::StageRelease, j, s);
    } else {
      release(j, s);
    }
  }

  void release(int j, int s) { ready_.emplace(job_rank_[j], s); }

  double task_duration(int j, int s, int k) const {
    const auto& spec = workload_[j].stages[s];
    const double share = spec.task_skew_shares[k];
    const double straggle = 1.0 + cfg_.straggler_factor * spec.task_count * share;
    const double read = static_cast<double>(jobs_[j].stages[s].shuffle_read) * share;
    const double shuffle = 1.0 + read / (cfg_.shuffle_bandwidth * std::max(1, running_));
    return spec.task_base_duration * straggle * shuffle;
  }

  void schedule_tasks() {
    while (!free_.empty() && !ready_.empty()) {
      const auto [rank, s] = *ready_.begin();
      const int j = rank_job_[rank];
      auto& st = jobs_[j].stages[s];
      const int k = st.next_task++;
      if (st.next_task >= workload_[j].stages[s].task_count) ready_.erase(ready_.begin());
      const int e = *free_.begin();
      auto& ex = executors_[e];
      if (++ex.busy >= cfg_.slots_per_executor) free_.erase(free_.begin());
      ++jobs_[j].busy_slots;
      --jobs_[j].unstarted_runnable;
      --unstarted_total_;
      const double end = now_ + task_duration(j, s, k);
      if (options_.record_tasks) record_.tasks.push_back(TaskRecord{j, s, k, e, now_, end});
      push(end, EventKind::TaskFinish, j, s, e);
    }
  }

  void on_task_finish(int j, int s, int e) {
    auto& ex = executors_[e];
    --ex.busy;
    if (ex.state == ExecState::Running) {
      free_.insert(e);
    } else if (ex.state == ExecState::Draining && ex.busy == 0) {
      push(now_, EventKind::DrainComplete, e);
    }
    auto& js = jobs_[j];
    --js.busy_slots;
    auto& st = js.stages[s];
    const auto& spec = workload_[j];
    if (++st.finished < spec.stages[s].task_count) return;
    ++js.stages_done;
    js.shuffled_bytes += spec.stages[s].shuffle_write_bytes;
    shuffled_total_ += spec.stages[s].shuffle_write_bytes;
    for (int c : st.children) {
      if (--js.stages[c].remaining_parents == 0) make_runnable(j, c);
    }
    if (js.stages_done == static_cast<int>(spec.stages.size())) {
      js.finished = true;
      active_.erase(j);
      ++finished_jobs_;
      auto& out = record_.jobs[j];
      out.finish_time = now_;
      out.deadline_met = now_ <= spec.submit_time + spec.sla_deadline;
    }
  }

  void on_drain_complete(int e) {
    auto& ex = executors_[e];
    if (ex.state != ExecState::Draining) return;
    ex.state = ExecState::Gone;
    --draining_;
    record_.executors[e].end_at = now_;
  }

  Observation observe() const {
    Observation obs;
    obs.sim_time = now_;
    obs.running_executors = running_;
    obs.provisioning_executors = provisioning_;
    obs.draining_executors = draining_;
    obs.current_target = target_;
    obs.demand_slots = demand();
    obs.min_executors = cfg_.min_executors;
    obs.max_executors = cfg_.max_executors;
    obs.slots_per_executor = cfg_.slots_per_executor;
    obs.vcpus_per_executor = cfg_.vcpus_per_executor;
    obs.rate_per_vcpu_hour = cfg_.rate_per_vcpu_hour;
    obs.accrued_dollars = accrued_vcpu_seconds_ / 3600.0 * cfg_.rate_per_vcpu_hour;
    for (int rank = 0; rank < static_cast<int>(rank_job_.size()); ++rank) {
      const int j = rank_job_[rank];
      if (!active_.count(j)) continue;
      const auto& spec = workload_[j];
      const auto& js = jobs_[j];
      JobDigest d;
      d.job_id = spec.job_id;
      d.subclass_id = spec.subclass.id();
      d.subclass_ordinal = subclass_ordinal(spec.subclass);
      d.submit_time = spec.submit_time;
      d.stages_done = js.stages_done;
      d.stages_total = static_cast<int>(spec.stages.size());
      d.runnable_tasks = js.unstarted_runnable;
      d.bytes_shuffled = js.shuffled_bytes;
      d.time_to_deadline = spec.submit_time + spec.sla_deadline - now_;
      obs.jobs.push_back(std::move(d));
    }
    const auto& recent = recent_;
    const std::size_t keep = std::min<std::size_t>(recent.size(), static_cast<std::size_t>(cfg_.recent_actions));
    obs.recent_actions.assign(recent.end() - static_cast<std::ptrdiff_t>(keep), recent.end());
    return obs;
  }

  int demand() const {
    const int one[] = {unstarted_total_};
    return step_demand(cfg_, one);
  }

  std::string dominant_subclass(const Observation& obs) const {
    std::map<std::pair<int, std::string>, int> by_subclass;
    for (const auto& d : obs.jobs) by_subclass[{d.subclass_ordinal, d.subclass_id}] += d.runnable_tasks;
    std::string best;
    int best_tasks = -1;
    for (const auto& [key, tasks] : by_subclass) {
      if (tasks > best_tasks) {
        best_tasks = tasks;
        best = key.second;
      }
    }
    return best;
  }

  void on_tick(int index) {
    const Observation obs = observe();
    const auto serialized = serialize_observation(obs, cfg_.observation_token_bound);
    TickRecord tick;
    tick.index = index;
    tick.time = now_;
    tick.demand_slots = obs.demand_slots;
    tick.running_executors = running_;
    tick.observation_digest = hex64(fnv1a64(serialized.text));
    tick.dominant_subclass = dominant_subclass(obs);
    tick.shuffled_bytes = shuffled_total_;

    PolicyReply reply;
    try {
      reply = policy_.decide(obs);
    } catch (const PolicyUnavailable& e) {
      record_.faults.push_back(FaultRecord{index, now_, "unavailable", e.what()});
      finish();
      throw PolicyFaultError(std::string("policy unavailable: ") + e.what(), std::move(record_));
    }
    if (reply.ledger) {
      reply.ledger->tick = index;
      record_.ledger.push_back(*reply.ledger);
    }
    if (reply.fault || !reply.action) {
      tick.faulted = true;
      tick.applied_target = target_;
      const auto fault = reply.fault.value_or(PolicyFaultInfo{"missing_action", ""});
      record_.faults.push_back(FaultRecord{index, now_, fault.kind, fault.detail});
    } else {
      tick.requested_target = reply.action->target_executors;
      tick.justification = reply.action->justification;
      tick.applied_target =
          std::clamp(reply.action->target_executors, cfg_.min_executors, cfg_.max_executors);
      tick.clamped = tick.applied_target != reply.action->target_executors;
    }
    apply_target(tick.applied_target);
    recent_.push_back(ActionDigest{now_, tick.applied_target});
    record_.ticks.push_back(std::move(tick));
    push(now_ + cfg_.decision_interval, EventKind::DecisionTick, index + 1);
  }

  void apply_target(int target) {
    target_ = target;
    int effective = running_ + provisioning_;
    for (; effective < target; ++effective) {
      const int id = new_executor();
      push(now_ + cfg_.provisioning_latency, EventKind::ExecutorReady, id);
    }
    if (effective <= target) return;
    int excess = effective - target;
    // Cancel the most recently requested provisioning first.
    for (int id = static_cast<int>(executors_.size()) - 1; id >= 0 && excess > 0; --id) {
      if (executors_[id].state != ExecState::Provisioning) continue;
      executors_[id].state = ExecState::Gone;
      --provisioning_;
      record_.executors[id].end_at = now_;
      --excess;
    }
    if (excess == 0) return;
    // Drain the least busy executors, newest first among equals.
    std::vector<int> candidates;
    for (int id = 0; id < static_cast<int>(executors_.size()); ++id) {
      if (executors_[id].state == ExecState::Running) candidates.push_back(id);
    }
    std::sort(candidates.begin(), candidates.end(), [&](int x, int y) {
      if (executors_[x].busy != executors_[y].busy) return executors_[x].busy < executors_[y].busy;
      return x > y;
    });
    for (int k = 0; k < excess && k < static_cast<int>(candidates.size()); ++k) {
      const int id = candidates[k];
      auto& ex = executors_[id];
      ex.state = ExecState::Draining;
      free_.erase(id);
      --running_;
      ++draining_;
      record_.executors[id].drain_at = now_;
      if (ex.busy == 0) push(now_, EventKind::DrainComplete, id);
    }
  }

  void sample() {
    SeriesPoint p{now_, demand(), target_, running_ + draining_};
    auto& series = record_.series;
    if (!series.empty() && series.back().time == now_) {
      series.back() = p;
      // Collapse a point that no longer differs from its predecessor.
      if (series.size() >= 2) {
        const auto& prev = series[series.size() - 2];
        if (prev.demand_slots == p.demand_slots && prev.target_executors == p.target_executors &&
            prev.running_executors == p.running_executors) {
          series.pop_back();
        }
      }
      return;
    }
    if (!series.empty()) {
      const auto& last = series.back();
      if (last.demand_slots == p.demand_slots && last.target_executors == p.target_executors &&
          last.running_executors == p.running_executors) {
        return;
      }
    }
    series.push_back(p);
  }

  void finish() {
    record_.end_time = now_;
    auto& series = record_.series;
    if (series.empty() || series.back().time < now_) {
      SeriesPoint p{now_, demand(), target_, running_ + draining_};
      series.push_back(p);
    }
    for (auto& rec : record_.executors) {
      if (rec.end_at < 0.0 && rec.ready_at >= 0.0) rec.end_at = now_;
    }
    const double per_slot = static_cast<double>(cfg_.vcpus_per_executor) / cfg_.slots_per_executor;
    for (std::size_t j = 0; j < jobs_.size(); ++j) record_.jobs[j].vcpu_seconds = jobs_[j].slot_seconds * per_slot;
    record_.unattributed_vcpu_seconds = unattributed_slot_seconds_ * per_slot;
    record_.vcpu_seconds = integrate_vcpu_seconds(record_);
    record_.complete = finished_jobs_ == static_cast<int>(workload_.size());
  }

  const std::vector<JobSpec>& workload_;
  Policy& policy_;
  ClusterConfig cfg_;
  SimOptions options_;
  RunRecord record_;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;

  std::vector<Executor> executors_;
  std::set<int> free_;
  int running_ = 0;
  int provisioning_ = 0;
  int draining_ = 0;
  int target_ = 0;

  std::vector<JobState> jobs_;
  std::vector<int> job_rank_;
  std::vector<int> rank_job_;
  std::set<int> active_;
  std::set<std::pair<int, int>> ready_;
  int unstarted_total_ = 0;
  int finished_jobs_ = 0;
  std::uint64_t shuffled_total_ = 0;
  std::vector<ActionDigest> recent_;

  double unattributed_slot_seconds_ = 0.0;
  double accrued_vcpu_seconds_ = 0.0;
};

}  // namespace

RunRecord simulate(const std::vector<JobSpec>& workload, Policy& policy, const ClusterConfig& config,
                   std::uint64_t seed, const SimOptions& options) {
  Simulation sim(workload, policy, config, seed, options);
  return sim.run();
}

}  // namespace scalebench
