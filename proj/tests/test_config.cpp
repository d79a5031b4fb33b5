#include <doctest.h>

#include "scalebench/config.hpp"
#include "scalebench/errors.hpp"
#include "scalebench/rng.hpp"

using namespace scalebench;

namespace {

const char* kMinimal = R"(
plan:
  policies: [reactive]
  subclasses: [shuffle_heavy_etl/small/low]
  seeds: [1]
)";

}  // namespace

TEST_CASE("minimal plan takes defaults") {
  const auto plan = parse_plan(kMinimal);
  REQUIRE(plan.policies.size() == 1);
  CHECK(plan.policies[0].kind == PolicyKind::Reactive);
  CHECK(plan.cluster.max_executors == 64);
  CHECK(plan.stats.bootstrap_replicates == 10000);
  CHECK(plan.calibration.jobs == 31);
  CHECK(plan.jobs_per_cell == 20);
}

TEST_CASE("full policy descriptors and derived seeds") {
  const auto plan = parse_plan(R"(
cluster:
  max_executors: 32
  provisioning_latency: 30
plan:
  policies:
    - reactive
    - {name: eager, kind: reactive, headroom: 1.5}
    - {name: fixed8, kind: static, count: 8}
    - {name: agent, command: "python3 agent.py", timeout: 4}
  subclasses: all
  seed_count: 3
  master_seed: 77
stats:
  bootstrap_seed: 5
workload:
  classes:
    shuffle_heavy_etl: {zipf_exponent: 0.5}
  sla_medians:
    shuffle_heavy_etl/small/low: 300
)");
  CHECK(plan.cluster.max_executors == 32);
  CHECK(plan.cluster.provisioning_latency == 30.0);
  REQUIRE(plan.policies.size() == 4);
  CHECK(plan.policies[1].headroom == 1.5);
  CHECK(plan.policies[2].kind == PolicyKind::Static);
  CHECK(plan.policies[2].static_count == 8);
  CHECK(plan.policies[3].kind == PolicyKind::External);
  CHECK(plan.policies[3].timeout == 4.0);
  CHECK(plan.subclasses.size() == 12);
  CHECK(plan.seeds == std::vector<std::uint64_t>{derive_seed(77, 0), derive_seed(77, 1), derive_seed(77, 2)});
  CHECK(plan.workload.klass(WorkloadClassId::ShuffleHeavyEtl).zipf_exponent == 0.5);
  CHECK(plan.workload.sla_medians.at("shuffle_heavy_etl/small/low") == 300.0);
}

TEST_CASE("plan json parses back to the same plan") {
  const auto plan = parse_plan(R"(
plan:
  policies: [reactive, fingerprint, {name: o, kind: oracle_static}]
  subclasses: [broadcast_lookup/small/low]
  seeds: [3, 4]
)");
  const auto again = parse_plan(plan.to_json().dump());
  CHECK(canonical_dump(again.to_json()) == canonical_dump(plan.to_json()));
  CHECK(calibration_hash(again) == calibration_hash(plan));
}

TEST_CASE("calibration hash tracks what calibration depends on") {
  const auto base = parse_plan(kMinimal);
  auto other_policy = base;
  other_policy.policies[0].headroom = 2.0;
  CHECK(calibration_hash(other_policy) == calibration_hash(base));
  auto other_cluster = base;
  other_cluster.cluster.max_executors = 9;
  CHECK(calibration_hash(other_cluster) != calibration_hash(base));
  auto other_jobs = base;
  other_jobs.calibration.jobs = 5;
  CHECK(calibration_hash(other_jobs) != calibration_hash(base));
}

TEST_CASE("bad configs are rejected") {
  CHECK_THROWS_AS(parse_plan("plan: {policies: [reactive], seeds: [1]}\nbogus: 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan("plan: {policies: [reactive], seeds: [1], typo: 2}\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan("plan: {policies: [nonsense], seeds: [1]}\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan("plan: {policies: [reactive], seeds: []}\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan("plan: {policies: [reactive, reactive], seeds: [1]}\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan("plan: {policies: [{kind: external}], seeds: [1]}\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan("plan: {policies: [reactive], subclasses: [x/y/z], seeds: [1]}\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan("cluster: {max_executors: abc}\nplan: {policies: [reactive], seeds: [1]}\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_plan("[1, 2"), ConfigError);
  CHECK_THROWS_AS(load_plan("/nonexistent/plan.yaml"), ConfigError);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"default.yaml", "smoke.yaml"}) {
    const auto plan = load_plan(std::string(SCALEBENCH_SOURCE_DIR) + "/configs/" + name);
    CHECK_NOTHROW(plan.validate());
  }
}
