#include "scalebench/observation.hpp"

#include <cctype>

namespace scalebench {

std::int64_t count_tokens(std::string_view text) {
  std::int64_t tokens = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool word = std::isalnum(c) != 0 || c == '_';
    if (word) {
      if (!in_word) ++tokens;
      in_word = true;
      continue;
    }
    in_word = false;
    if (std::isspace(c) == 0) ++tokens;
  }
  return tokens;
}

Json observation_to_json(const Observation& obs, std::size_t first_job) {
  Json jobs = Json::array();
  for (std::size_t i = first_job; i < obs.jobs.size(); ++i) {
    const auto& d = obs.jobs[i];
    jobs.push_back(Json{{"job_id", d.job_id},
                        {"subclass", d.subclass_id},
                        {"subclass_ordinal", d.subclass_ordinal},
                        {"submit_time", d.submit_time},
                        {"stages_done", d.stages_done},
                        {"stages_total", d.stages_total},
                        {"runnable_tasks", d.runnable_tasks},
                        {"bytes_shuffled", d.bytes_shuffled},
                        {"time_to_deadline", d.time_to_deadline}});
  }
  Json actions = Json::array();
  for (const auto& a : obs.recent_actions) {
    actions.push_back(Json{{"time", a.time}, {"target_executors", a.target_executors}});
  }
  return Json{
      {"schema_version", obs.schema_version},
      {"sim_time", obs.sim_time},
      {"cluster",
       {{"running", obs.running_executors},
        {"provisioning", obs.provisioning_executors},
        {"draining", obs.draining_executors},
        {"target", obs.current_target},
        {"min_executors", obs.min_executors},
        {"max_executors", obs.max_executors},
        {"slots_per_executor", obs.slots_per_executor},
        {"vcpus_per_executor", obs.vcpus_per_executor}}},
      {"demand_slots", obs.demand_slots},
      {"cost_model", {{"rate_per_vcpu_hour", obs.rate_per_vcpu_hour}, {"accrued_dollars", obs.accrued_dollars}}},
      {"jobs", std::move(jobs)},
      {"recent_actions", std::move(actions)},
      {"truncated", first_job > 0},
      {"dropped_jobs", first_job},
  };
}

SerializedObservation serialize_observation(const Observation& obs, std::int64_t token_bound) {
  auto render = [&](std::size_t dropped) {
    SerializedObservation out;
    out.text = canonical_dump(observation_to_json(obs, dropped));
    out.tokens = count_tokens(out.text);
    out.truncated = dropped > 0;
    out.dropped_jobs = static_cast<int>(dropped);
    return out;
  };
  auto full = render(0);
  if (full.tokens <= token_bound || obs.jobs.empty()) return full;
  // Smallest number of dropped digests that fits; token count is monotone in it.
  std::size_t lo = 1;
  std::size_t hi = obs.jobs.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (render(mid).tokens <= token_bound) hi = mid;
    else lo = mid + 1;
  }
  return render(lo);
}

Observation observation_from_json(const Json& j) {
  Observation obs;
  obs.schema_version = j.at("schema_version").get<int>();
  if (obs.schema_version != kObservationSchemaVersion) {
    throw InvalidInput("unsupported observation schema_version");
  }
  obs.sim_time = j.at("sim_time").get<double>();
  const auto& c = j.at("cluster");
  obs.running_executors = c.at("running").get<int>();
  obs.provisioning_executors = c.at("provisioning").get<int>();
  obs.draining_executors = c.at("draining").get<int>();
  obs.current_target = c.at("target").get<int>();
  obs.min_executors = c.at("min_executors").get<int>();
  obs.max_executors = c.at("max_executors").get<int>();
  obs.slots_per_executor = c.at("slots_per_executor").get<int>();
  obs.vcpus_per_executor = c.at("vcpus_per_executor").get<int>();
  obs.demand_slots = j.at("demand_slots").get<int>();
  obs.rate_per_vcpu_hour = j.at("cost_model").at("rate_per_vcpu_hour").get<double>();
  obs.accrued_dollars = j.at("cost_model").at("accrued_dollars").get<double>();
  for (const auto& d : j.at("jobs")) {
    JobDigest digest;
    digest.job_id = d.at("job_id").get<std::string>();
    digest.subclass_id = d.at("subclass").get<std::string>();
    digest.subclass_ordinal = d.at("subclass_ordinal").get<int>();
    digest.submit_time = d.at("submit_time").get<double>();
    digest.stages_done = d.at("stages_done").get<int>();
    digest.stages_total = d.at("stages_total").get<int>();
    digest.runnable_tasks = d.at("runnable_tasks").get<int>();
    digest.bytes_shuffled = d.at("bytes_shuffled").get<std::uint64_t>();
    digest.time_to_deadline = d.at("time_to_deadline").get<double>();
    obs.jobs.push_back(std::move(digest));
  }
  for (const auto& a : j.at("recent_actions")) {
    obs.recent_actions.push_back({a.at("time").get<double>(), a.at("target_executors").get<int>()});
  }
  return obs;
}

}  // namespace scalebench
