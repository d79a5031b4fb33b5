#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "scalebench/harness.hpp"

using namespace scalebench;
namespace fs = std::filesystem;

namespace {

ExperimentPlan small_plan(const std::string& dir, std::vector<std::string> policies) {
  std::string list;
  for (const auto& p : policies) list += (list.empty() ? "" : ", ") + p;
  auto plan = parse_plan("cluster: {max_executors: 8}\n"
                         "plan:\n"
                         "  policies: [" + list + "]\n"
                         "  subclasses: [time_windowed_agg/small/low, broadcast_lookup/small/low]\n"
                         "  seeds: [1, 2]\n"
                         "  jobs_per_cell: 4\n"
                         "stats: {bootstrap_replicates: 500}\n"
                         "calibration: {jobs: 3}\n");
  const auto out = fs::temp_directory_path() / dir;
  fs::remove_all(out);
  plan.output_dir = out.string();
  return plan;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("one policy, one cell") {
  auto plan = small_plan("scalebench_h1", {"reactive"});
  plan.subclasses.resize(1);
  plan.seeds = {1};
  const auto out = run_plan(plan, {"s", true, false});
  CHECK(out.report.cells.size() == 1);
  CHECK(out.report.comparisons.empty());
  CHECK(out.report.holm_family_size == 0);
  CHECK(out.report.failures.empty());
}

TEST_CASE("two policies give one comparison") {
  const auto plan = small_plan("scalebench_h2", {"reactive", "fingerprint"});
  const auto out = run_plan(plan, {"s", true, false});
  CHECK(out.report.comparisons.size() == 1);
  CHECK(out.report.holm_family_size == 1);
  CHECK(out.report.cells.size() == 8);
  // Without an oracle_static policy the denominator cells run hidden.
  int hidden = 0;
  for (const auto& c : out.cells) hidden += c.denominator ? 1 : 0;
  CHECK(hidden == 4);
}

TEST_CASE("calibration cache") {
  const auto plan = small_plan("scalebench_h3", {"reactive"});
  fs::create_directories(plan.output_dir);
  const auto cache = fs::path(plan.output_dir) / "cal.json";
  const auto first = calibrate(plan, cache);
  CHECK_FALSE(first.cache_hit);
  CHECK(first.simulations > 0);
  const auto second = calibrate(plan, cache);
  CHECK(second.cache_hit);
  CHECK(second.simulations == 0);
  CHECK(second.sla_medians == first.sla_medians);
  CHECK(second.fingerprint == first.fingerprint);

  auto changed = plan;
  changed.cluster.max_executors = 6;
  CHECK_FALSE(calibrate(changed, cache).cache_hit);
  fs::remove_all(plan.output_dir);
}

TEST_CASE("median of identical jobs is their runtime") {
  JobSpec job;
  job.job_id = "same";
  job.subclass = default_subclasses()[0];
  StageSpec st;
  st.task_count = 16;
  st.task_base_duration = 12.0;
  st.task_skew_shares.assign(16, 1.0 / 16);
  job.stages.push_back(st);
  ClusterConfig c;
  c.straggler_factor = 0.0;
  CHECK(unconstrained_median({job, job, job}, c, false) == 12.0);
}

TEST_CASE("full run writes a reproducible directory") {
  auto plan = small_plan("scalebench_h4", {"reactive", "fingerprint", "oracle_static"});
  const auto a = run_plan(plan, {"A", true, true});
  const auto b = run_plan(plan, {"B", false, true});
  CHECK(a.report.holm_family_size == 3);
  for (const char* f : {"plan.json", "calibration.json", "cells.json", "metrics.ndjson", "report.json", "summary.txt"}) {
    CHECK(fs::exists(a.run_dir / f));
  }
  auto ja = a.report.to_json();
  auto jb = b.report.to_json();
  ja.erase("generated_at");
  jb.erase("generated_at");
  CHECK(canonical_dump(ja) == canonical_dump(jb));
  CHECK(slurp(a.run_dir / "metrics.ndjson") == slurp(b.run_dir / "metrics.ndjson"));

  // Every metric field appears for every cell.
  const auto fields = MetricRecord{}.to_json();
  for (const auto& cell : ja.at("cells")) {
    for (const auto& [key, _] : fields.items()) CHECK(cell.contains(key));
  }

  const auto rebuilt = report_from_run_dir(a.run_dir);
  auto jr = rebuilt.to_json();
  jr.erase("generated_at");
  CHECK(canonical_dump(jr) == canonical_dump(ja));
  CHECK(fs::exists(fs::path(plan.output_dir) / "decisions.store"));
  fs::remove_all(plan.output_dir);
}

TEST_CASE("a crashing external policy is isolated") {
  auto with = small_plan("scalebench_h5", {"reactive", "oracle_static"});
  PolicyDescriptor crasher;
  crasher.name = "crasher";
  crasher.kind = PolicyKind::External;
  crasher.command = std::string(STUB_POLICY_PATH) + " --mode crash --crash-on 2";
  crasher.timeout = 2.0;
  with.policies.push_back(crasher);
  const auto without = small_plan("scalebench_h6", {"reactive", "oracle_static"});

  const auto a = run_plan(with, {"x", true, false});
  const auto b = run_plan(without, {"x", true, false});
  CHECK(a.report.failures.size() == 4);
  for (const auto& f : a.report.failures) CHECK(f.key.policy == "crasher");

  std::vector<std::string> kept;
  for (const auto& m : a.report.cells) {
    if (m.policy != "crasher") kept.push_back(canonical_dump(m.to_json()));
  }
  std::vector<std::string> base;
  for (const auto& m : b.report.cells) base.push_back(canonical_dump(m.to_json()));
  CHECK(kept == base);
  fs::remove_all(with.output_dir);
  fs::remove_all(without.output_dir);
}
