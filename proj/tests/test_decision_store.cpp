#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "scalebench/decision_store.hpp"
#include "scalebench/errors.hpp"
#include "scalebench/policy.hpp"
#include "scalebench/sim.hpp"

using namespace scalebench;
namespace fs = std::filesystem;

namespace {

RunRecord run_with_ticks(const std::string& run_id, int ticks) {
  RunRecord r;
  r.run_id = run_id;
  r.cluster.max_executors = 8;
  r.end_time = 30.0 * ticks;
  for (int i = 0; i < ticks; ++i) {
    TickRecord t;
    t.index = i;
    t.time = 30.0 * i;
    t.demand_slots = i;
    t.applied_target = 1 + i % 3;
    t.observation_digest = "d" + std::to_string(i);
    t.dominant_subclass = default_subclasses()[static_cast<std::size_t>(i % 12)].id();
    r.ticks.push_back(t);
  }
  r.series = {{0.0, 0, 1, 1}, {r.end_time, 0, 1, 1}};
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double distance(const FeatureVector& a, const FeatureVector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < kFeatureDim; ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(d);
}

}  // namespace

TEST_CASE("ingest counts and idempotence") {
  DecisionStore store;
  CHECK(store.ingest(run_with_ticks("a", 12)) == 12);
  CHECK(store.ingest(run_with_ticks("a", 12)) == 0);
  CHECK(store.ingest(run_with_ticks("b", 12)) == 12);
  CHECK(store.size() == 24);
  CHECK(store.has_run("a"));
}

TEST_CASE("corrupt records are rejected before writing") {
  const auto dir = fresh_dir("scalebench_store_corrupt");
  DecisionStore store(dir / "d.store");
  auto bad = run_with_ticks("bad", 4);
  bad.ticks[2].time = bad.ticks[1].time;
  CHECK_THROWS_AS(store.ingest(bad), InvalidInput);
  CHECK(store.size() == 0);
  CHECK_FALSE(fs::exists(dir / "d.store"));
  fs::remove_all(dir);
}

TEST_CASE("persisted store round-trips") {
  const auto dir = fresh_dir("scalebench_store_roundtrip");
  const auto path = dir / "d.store";
  std::string exported;
  {
    DecisionStore store(path);
    store.ingest(run_with_ticks("a", 5));
    store.ingest(run_with_ticks("b", 3));
    exported = store.export_ndjson();
  }
  DecisionStore reopened(path);
  CHECK(reopened.size() == 8);
  CHECK(reopened.export_ndjson() == exported);
  CHECK(reopened.ingest(run_with_ticks("a", 5)) == 0);

  // A torn tail (interrupted append) is ignored on reopen.
  { std::ofstream(path, std::ios::app) << "{\"type\":\"entry\",\"id\":"; }
  CHECK(DecisionStore(path).size() == 8);
  fs::remove_all(dir);
}

TEST_CASE("query matches an exhaustive sort") {
  DecisionStore store;
  store.ingest(run_with_ticks("a", 5));
  REQUIRE(store.size() == 5);

  SUBCASE("single record") {
    DecisionStore one;
    one.ingest(run_with_ticks("x", 1));
    const auto r = one.query(HistoryQuery{"", {0.9, 0.9, 0.9}}, 1);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == one.entries()[0]);
  }
  SUBCASE("exact match first") {
    const auto target = store.entries()[3];
    const auto r = store.query(HistoryQuery{target.subclass_id, target.features}, 2);
    CHECK(r[0] == target);
  }
  SUBCASE("k = 3 of 5") {
    const FeatureVector q{0.3, 0.5, 0.0};
    auto all = store.entries();
    std::stable_sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
      const double da = distance(a.features, q);
      const double db = distance(b.features, q);
      return da != db ? da < db : a.id < b.id;
    });
    const auto r = store.query(HistoryQuery{"none", q}, 3);
    REQUIRE(r.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(r[i] == all[i]);
    CHECK(store.query(HistoryQuery{"none", q}, 3) == r);
  }
}

TEST_CASE("simulated runs feed the store") {
  const auto jobs = generate_workload(WorkloadParams::defaults(), default_subclasses()[0], 3, 1);
  ReactivePolicy p;
  const auto record = simulate(jobs, p, ClusterConfig{}, 0, {"run-1", false, 1e8});
  DecisionStore store;
  CHECK(store.ingest(record) == record.ticks.size());
  for (const auto& e : store.entries()) {
    CHECK(e.features[0] >= 0.0);
    CHECK(e.features[0] <= 1.0);
    CHECK(e.cost_delta >= 0.0);
  }
}
