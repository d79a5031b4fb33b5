#include <doctest.h>

#include "scalebench/errors.hpp"
#include "scalebench/metrics.hpp"
#include "scalebench/policy.hpp"

using namespace scalebench;

namespace {

RunRecord rectangle(std::vector<std::pair<double, int>> steps, double end, int vcpus) {
  RunRecord r;
  r.cluster.vcpus_per_executor = vcpus;
  r.cluster.rate_per_vcpu_hour = 0.05;
  for (const auto& [t, n] : steps) r.series.push_back({t, 0, n, n});
  r.series.push_back({end, 0, steps.back().second, steps.back().second});
  r.end_time = end;
  r.vcpu_seconds = integrate_vcpu_seconds(r);
  return r;
}

JobOutcome job(double submit, double deadline, double finish) {
  JobOutcome j;
  j.submit_time = submit;
  j.sla_deadline = deadline;
  j.finish_time = finish;
  j.deadline_met = finish >= 0.0 && finish <= submit + deadline;
  return j;
}

TickRecord tick(int i, double time, int demand, int target) {
  TickRecord t;
  t.index = i;
  t.time = time;
  t.demand_slots = demand;
  t.applied_target = target;
  return t;
}

}  // namespace

TEST_CASE("cost rectangles") {
  CHECK(cost(rectangle({{0.0, 4}}, 1800.0, 2)).vcpu_hours == 4.0);
  CHECK(cost(rectangle({{0.0, 4}}, 0.0, 2)).vcpu_hours == 0.0);
  CHECK(cost(rectangle({{0.0, 2}, {600.0, 6}}, 1200.0, 1)).vcpu_hours == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("cost additivity and rate equivariance") {
  const auto r = rectangle({{0.0, 3}, {100.0, 5}, {250.0, 1}}, 400.0, 4);
  std::vector<LedgerEntry> ledger{{0, 10, 2, 0.1, 0.25}, {1, 5, 1, 0.1, 0.5}};
  const auto base = cost(r, 0.05, ledger);
  CHECK(base.inference_dollars == 0.75);
  CHECK(base.dollars == base.compute_dollars + 0.75);
  CHECK(base.dollars >= base.vcpu_hours * 0.05);
  const auto doubled = cost(r, 0.10, {});
  CHECK(doubled.vcpu_hours == base.vcpu_hours);
  CHECK(doubled.compute_dollars == 2.0 * base.compute_dollars);

  const auto first = rectangle({{0.0, 3}, {100.0, 5}}, 250.0, 4);
  const auto second = rectangle({{250.0, 1}}, 400.0, 4);
  const double parts = cost(first, 0.05, {ledger[0]}).dollars + cost(second, 0.05, {ledger[1]}).dollars;
  CHECK(parts == doctest::Approx(base.dollars).epsilon(1e-12));
}

TEST_CASE("sla attainment") {
  RunRecord r;
  for (int i = 0; i < 10; ++i) r.jobs.push_back(job(0, 100, i < 8 ? 50 : 150));
  CHECK(sla_attainment(r) == 0.8);
  for (auto& j : r.jobs) j = job(0, 100, 10);
  CHECK(sla_attainment(r) == 1.0);
  r.jobs = {job(10, 100, 110), job(0, 100, -1)};
  CHECK(sla_attainment(r) == 0.5);
}

TEST_CASE("finish exactly at the deadline is met in a simulated run") {
  JobSpec j;
  j.job_id = "edge";
  j.subclass = default_subclasses()[0];
  j.submit_time = 5.0;
  j.sla_deadline = 10.0;
  StageSpec st;
  st.task_count = 4;
  st.task_base_duration = 10.0;
  st.task_skew_shares.assign(4, 0.25);
  j.stages.push_back(st);
  ClusterConfig c;
  c.straggler_factor = 0.0;
  StaticPolicy p(1);
  const auto r = simulate({j}, p, c, 0);
  REQUIRE(r.jobs[0].finish_time == 15.0);
  CHECK(r.jobs[0].deadline_met);
  CHECK(sla_attainment(r) == 1.0);
}

TEST_CASE("responsiveness") {
  RunRecord r;
  r.end_time = 300.0;
  r.initial_target = 2;
  SUBCASE("constant demand is undefined") {
    for (int i = 0; i < 5; ++i) r.ticks.push_back(tick(i, 30.0 * i, 8, 2));
    CHECK_FALSE(responsiveness(r).median);
  }
  SUBCASE("single transition answered 30 s later") {
    r.ticks = {tick(0, 0, 4, 2), tick(1, 30, 4, 2), tick(2, 60, 12, 2), tick(3, 90, 12, 3), tick(4, 120, 12, 3)};
    const auto res = responsiveness(r);
    REQUIRE(res.median);
    CHECK(*res.median == 30.0);
  }
  SUBCASE("delays 30, 60, 90 have median 60") {
    r.ticks = {tick(0, 0, 4, 2),     tick(1, 30, 12, 2),  tick(2, 60, 12, 5),  tick(3, 90, 2, 5),
               tick(4, 120, 2, 5),   tick(5, 150, 2, 3),  tick(6, 180, 20, 3), tick(7, 210, 20, 3),
               tick(8, 240, 20, 3),  tick(9, 270, 20, 9)};
    const auto res = responsiveness(r);
    REQUIRE(res.median);
    CHECK(res.delays == std::vector<double>{30, 60, 90});
    CHECK(*res.median == 60.0);
  }
  SUBCASE("unanswered transitions count to the end of the run") {
    r.ticks = {tick(0, 0, 4, 2), tick(1, 30, 40, 2), tick(2, 60, 40, 2)};
    const auto res = responsiveness(r);
    CHECK(res.unanswered == 1);
    CHECK(*res.median == 270.0);
  }
}

TEST_CASE("thrash") {
  RunRecord r;
  r.initial_target = 2;
  r.end_time = 360.0;
  // Two jobs of 3 minutes each: 6 job-minutes.
  r.jobs = {job(0, 1000, 180), job(180, 1000, 360)};
  r.ticks = {tick(0, 0, 0, 2), tick(1, 30, 0, 2)};
  CHECK(thrash(r) == 0.0);
  r.ticks = {tick(0, 0, 0, 3), tick(1, 30, 0, 4), tick(2, 60, 0, 4), tick(3, 90, 0, 2)};
  CHECK(job_minutes(r) == 6.0);
  CHECK(thrash(r) == 0.5);

  SUBCASE("clamped no-op is not counted") {
    auto t = tick(4, 120, 0, 2);
    t.requested_target = 99;
    t.clamped = true;
    r.ticks.push_back(t);
    CHECK(target_changes(r) == 3);
  }
}

TEST_CASE("static policies never thrash") {
  for (int i = 0; i < 12; ++i) {
    const auto jobs = generate_workload(WorkloadParams::defaults(), default_subclasses()[i], 4, i);
    StaticPolicy p(1 + i % 5);
    const auto r = simulate(jobs, p, ClusterConfig{}, 0);
    CHECK(thrash(r) == 0.0);
  }
}

TEST_CASE("consistency") {
  CHECK(consistency({{1, 2, 3}, {1, 2, 3}}).sigma == 0.0);
  CHECK(consistency({{4, 4, 4}, {6, 6, 6}}).sigma == 1.0);
  CHECK_THROWS_AS(consistency({{1, 2}}), InvalidInput);
  const auto m = consistency({{4, 4, 4}, {6, 6}});
  CHECK(m.misaligned);
  CHECK(m.aligned_ticks == 2);
}

TEST_CASE("metric record fields") {
  const auto jobs = generate_workload(WorkloadParams::defaults(), default_subclasses()[0], 3, 5);
  ReactivePolicy p;
  const auto r = simulate(jobs, p, ClusterConfig{}, 0);
  const auto m = compute_metrics(r, default_subclasses()[0].id());
  CHECK(m.jobs_total == 3);
  CHECK(m.sla_attainment == static_cast<double>(m.jobs_met) / 3.0);
  CHECK(m.thrash >= 0.0);
  CHECK(m.environment == "simulated");
  double job_dollars = 0.0;
  for (const auto& j : m.jobs) job_dollars += j.dollars;
  CHECK(job_dollars <= m.dollars + 1e-12);
  CHECK(MetricRecord::from_json(m.to_json()).to_json() == m.to_json());
}
