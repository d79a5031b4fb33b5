#include "scalebench/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "scalebench/errors.hpp"
#include "scalebench/stats.hpp"

namespace scalebench {

CostBreakdown cost(const RunRecord& record, double rate_per_vcpu_hour, const std::vector<LedgerEntry>& ledger) {
  CostBreakdown c;
  c.vcpu_hours = integrate_vcpu_seconds(record) / 3600.0;
  c.compute_dollars = c.vcpu_hours * rate_per_vcpu_hour;
  for (const auto& e : ledger) c.inference_dollars += e.monetary_cost;
  c.dollars = c.compute_dollars + c.inference_dollars;
  return c;
}

CostBreakdown cost(const RunRecord& record) { return cost(record, record.cluster.rate_per_vcpu_hour, record.ledger); }

namespace {

bool met(const JobOutcome& j) { return j.finish_time >= 0.0 && j.finish_time <= j.submit_time + j.sla_deadline; }

int sign(int v) { return (v > 0) - (v < 0); }

}  // namespace

double sla_attainment(const RunRecord& record) {
  if (record.jobs.empty()) throw InvalidInput("sla_attainment: run has no jobs");
  const auto n_met = std::count_if(record.jobs.begin(), record.jobs.end(), met);
  return static_cast<double>(n_met) / static_cast<double>(record.jobs.size());
}

ResponsivenessResult responsiveness(const RunRecord& record, double threshold) {
  ResponsivenessResult out;
  const auto& ticks = record.ticks;
  for (std::size_t i = 1; i < ticks.size(); ++i) {
    const int before = ticks[i - 1].demand_slots;
    const int after = ticks[i].demand_slots;
    if (before == after) continue;
    const bool transition =
        before == 0 || std::abs(after - before) >= threshold * static_cast<double>(before);
    if (!transition) continue;
    const int direction = sign(after - before);
    std::optional<double> delay;
    for (std::size_t j = i; j < ticks.size(); ++j) {
      const int prev = j == 0 ? record.initial_target : ticks[j - 1].applied_target;
      if (sign(ticks[j].applied_target - prev) == direction) {
        delay = ticks[j].time - ticks[i].time;
        break;
      }
    }
    if (!delay) {
      ++out.unanswered;
      delay = std::max(0.0, record.end_time - ticks[i].time);
    }
    out.delays.push_back(*delay);
  }
  if (!out.delays.empty()) out.median = median_of(out.delays);
  return out;
}

int target_changes(const RunRecord& record) {
  int changes = 0;
  int prev = record.initial_target;
  for (const auto& t : record.ticks) {
    if (t.applied_target != prev) ++changes;
    prev = t.applied_target;
  }
  return changes;
}

double job_minutes(const RunRecord& record) {
  double total = 0.0;
  for (const auto& j : record.jobs) {
    const double end = j.finish_time >= 0.0 ? j.finish_time : record.end_time;
    total += std::max(0.0, end - j.submit_time);
  }
  return total / 60.0;
}

double thrash(const RunRecord& record) {
  const double minutes = job_minutes(record);
  if (!(minutes > 0.0)) throw InvalidInput("thrash: run has zero job-minutes");
  return static_cast<double>(target_changes(record)) / minutes;
}

ConsistencyResult consistency(const std::vector<std::vector<int>>& targets_by_seed) {
  if (targets_by_seed.size() < 2) throw InvalidInput("consistency needs at least two seeds");
  ConsistencyResult out;
  std::size_t len = targets_by_seed.front().size();
  for (const auto& seq : targets_by_seed) {
    if (seq.size() != len) out.misaligned = true;
    len = std::min(len, seq.size());
  }
  out.aligned_ticks = len;
  if (len == 0) return out;
  const double k = static_cast<double>(targets_by_seed.size());
  double total = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    double mean = 0.0;
    for (const auto& seq : targets_by_seed) mean += seq[t];
    mean /= k;
    double var = 0.0;
    for (const auto& seq : targets_by_seed) var += (seq[t] - mean) * (seq[t] - mean);
    total += std::sqrt(var / k);
  }
  out.sigma = total / static_cast<double>(len);
  return out;
}

namespace {

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> optional_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

Json MetricRecord::to_json() const {
  Json job_list = Json::array();
  for (const auto& j : jobs) {
    job_list.push_back(Json{{"job_id", j.job_id},
                            {"subclass", j.subclass_id},
                            {"runtime", j.runtime},
                            {"deadline_met", j.deadline_met},
                            {"vcpu_seconds", j.vcpu_seconds},
                            {"dollars", j.dollars}});
  }
  return Json{{"policy", policy},
              {"subclass", subclass_id},
              {"environment", environment},
              {"seed", seed},
              {"vcpu_hours", vcpu_hours},
              {"compute_dollars", compute_dollars},
              {"inference_dollars", inference_dollars},
              {"dollars", dollars},
              {"sla_attainment", sla_attainment},
              {"jobs_met", jobs_met},
              {"jobs_total", jobs_total},
              {"responsiveness_median", optional_json(responsiveness_median)},
              {"transitions", transitions},
              {"thrash", thrash},
              {"target_changes", target_changes},
              {"job_minutes", job_minutes},
              {"consistency_sigma", optional_json(consistency_sigma)},
              {"faults", faults},
              {"tokens_in", tokens_in},
              {"tokens_out", tokens_out},
              {"jobs", std::move(job_list)}};
}

MetricRecord MetricRecord::from_json(const Json& j) {
  try {
    MetricRecord m;
    m.policy = j.at("policy").get<std::string>();
    m.subclass_id = j.at("subclass").get<std::string>();
    m.environment = j.at("environment").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.vcpu_hours = j.at("vcpu_hours").get<double>();
    m.compute_dollars = j.at("compute_dollars").get<double>();
    m.inference_dollars = j.at("inference_dollars").get<double>();
    m.dollars = j.at("dollars").get<double>();
    m.sla_attainment = j.at("sla_attainment").get<double>();
    m.jobs_met = j.at("jobs_met").get<int>();
    m.jobs_total = j.at("jobs_total").get<int>();
    m.responsiveness_median = optional_from(j, "responsiveness_median");
    m.transitions = j.at("transitions").get<int>();
    m.thrash = j.at("thrash").get<double>();
    m.target_changes = j.at("target_changes").get<int>();
    m.job_minutes = j.at("job_minutes").get<double>();
    m.consistency_sigma = optional_from(j, "consistency_sigma");
    m.faults = j.at("faults").get<int>();
    m.tokens_in = j.at("tokens_in").get<std::int64_t>();
    m.tokens_out = j.at("tokens_out").get<std::int64_t>();
    for (const auto& e : j.at("jobs")) {
      JobMetric jm;
      jm.job_id = e.at("job_id").get<std::string>();
      jm.subclass_id = e.at("subclass").get<std::string>();
      jm.runtime = e.at("runtime").get<double>();
      jm.deadline_met = e.at("deadline_met").get<bool>();
      jm.vcpu_seconds = e.at("vcpu_seconds").get<double>();
      jm.dollars = e.at("dollars").get<double>();
      m.jobs.push_back(std::move(jm));
    }
    return m;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed metric record: ") + e.what());
  }
}

MetricRecord compute_metrics(const RunRecord& record, const std::string& subclass_id, double transition_threshold) {
  MetricRecord m;
  m.policy = record.policy;
  m.subclass_id = subclass_id;
  m.seed = record.seed;
  const auto c = cost(record);
  m.vcpu_hours = c.vcpu_hours;
  m.compute_dollars = c.compute_dollars;
  m.inference_dollars = c.inference_dollars;
  m.dollars = c.dollars;
  m.jobs_total = static_cast<int>(record.jobs.size());
  m.jobs_met = static_cast<int>(std::count_if(record.jobs.begin(), record.jobs.end(), met));
  m.sla_attainment = sla_attainment(record);
  const auto resp = responsiveness(record, transition_threshold);
  m.responsiveness_median = resp.median;
  m.transitions = static_cast<int>(resp.delays.size());
  m.target_changes = target_changes(record);
  m.job_minutes = job_minutes(record);
  m.thrash = m.job_minutes > 0.0 ? m.target_changes / m.job_minutes : 0.0;
  m.faults = static_cast<int>(record.faults.size());
  for (const auto& e : record.ledger) {
    m.tokens_in += e.tokens_in;
    m.tokens_out += e.tokens_out;
  }
  const double per_vcpu_second = record.cluster.rate_per_vcpu_hour / 3600.0;
  // Inference spend has no per-job owner; every job carries an equal share.
  const double inference_share = record.jobs.empty() ? 0.0 : m.inference_dollars / m.jobs_total;
  for (const auto& j : record.jobs) {
    JobMetric jm;
    jm.job_id = j.job_id;
    jm.subclass_id = j.subclass_id;
    jm.runtime = j.finish_time >= 0.0 ? j.finish_time - j.submit_time : -1.0;
    jm.deadline_met = met(j);
    jm.vcpu_seconds = j.vcpu_seconds;
    jm.dollars = j.vcpu_seconds * per_vcpu_second + inference_share;
    m.jobs.push_back(std::move(jm));
  }
  return m;
}

}  // namespace scalebench
