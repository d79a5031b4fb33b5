// One pass/fail line per primary acceptance criterion. Exit status is the
// number of failed criteria, so ctest fails if any line fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "scalebench/external_policy.hpp"
#include "scalebench/genval.hpp"
#include "scalebench/harness.hpp"
#include "scalebench/metrics.hpp"
#include "scalebench/policy.hpp"
#include "scalebench/rng.hpp"
#include "scalebench/stats.hpp"

using namespace scalebench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;  // 0: no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

Outcome generator_conformance() {
  const auto params = WorkloadParams::defaults();
  constexpr int kJobs = 200;
  int invalid = 0;
  int etl_in_band = 0;
  std::map<std::string, double> mean_max_share;
  for (int c = 0; c < kWorkloadClassCount; ++c) {
    for (int variant = 0; variant < 2; ++variant) {
      const auto& sub = default_subclasses()[static_cast<std::size_t>(2 * c + variant)];
      double sum = 0.0;
      for (int i = 0; i < kJobs; ++i) {
        const auto job = generate_job(params, sub, derive_seed(2 * c + variant, static_cast<std::uint64_t>(i)), 0.0);
        if (!check_job(job).empty()) ++invalid;
        double max_share = 0.0;
        for (const auto& st : job.stages) {
          max_share = std::max(max_share, *std::max_element(st.task_skew_shares.begin(), st.task_skew_shares.end()));
        }
        sum += max_share;
        if (sub.base == WorkloadClassId::ShuffleHeavyEtl && variant == 0) {
          const double ratio =
              static_cast<double>(job.total_shuffle_bytes()) / static_cast<double>(job.source_input_bytes());
          if (ratio >= 2.0 && ratio <= 3.0) ++etl_in_band;
        }
      }
      mean_max_share[sub.id()] = sum / kJobs;
    }
  }
  // Skewed join at its default (high) skew against every low-skew subclass.
  const double join = mean_max_share.at("skewed_multiway_join/small/high");
  double worst_low = 0.0;
  std::string worst_id;
  for (const auto& s : default_subclasses()) {
    if (s.skew_level != SkewLevel::Low) continue;
    if (mean_max_share.at(s.id()) > worst_low) {
      worst_low = mean_max_share.at(s.id());
      worst_id = s.id();
    }
  }
  const double band_rate = static_cast<double>(etl_in_band) / kJobs;
  const bool pass = invalid == 0 && band_rate >= 0.95 && join > worst_low;
  return {pass, "class-1 ratio in [2,3]: " + fmt(100 * band_rate) + "% (need >= 95%); mean max-share join " +
                    fmt(join) + " > max low-skew " + fmt(worst_low) + " (" + worst_id + "); invalid DAGs " +
                    std::to_string(invalid)};
}

Outcome generator_determinism() {
  const auto params = WorkloadParams::defaults();
  int mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    const auto& sub = default_subclasses()[static_cast<std::size_t>(i % 12)];
    const auto seed = derive_seed(12345, static_cast<std::uint64_t>(i));
    std::string a;
    std::string b;
    for (const auto& j : generate_workload(params, sub, 5, seed)) a += canonical_dump(to_json(j)) + "\n";
    for (const auto& j : generate_workload(params, sub, 5, seed)) b += canonical_dump(to_json(j)) + "\n";
    if (a != b) ++mismatches;
  }
  return {mismatches == 0, std::to_string(100 - mismatches) + "/100 (subclass, seed) pairs byte-identical"};
}

Outcome distance_oracles() {
  Rng rng(31337);
  double worst_ks = 0.0;
  double worst_emd = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    Sample a;
    Sample b;
    a.values.resize(static_cast<std::size_t>(rng.uniform_int(1, 20)));
    b.values.resize(static_cast<std::size_t>(rng.uniform_int(1, 20)));
    const bool discrete = rng.bernoulli(0.5);
    for (auto* s : {&a, &b}) {
      for (auto& x : s->values) x = discrete ? static_cast<double>(rng.uniform_int(0, 6)) : rng.uniform(-3.0, 3.0);
    }
    worst_ks = std::max(worst_ks, std::abs(ks_two_sample(a, b).statistic - oracle::ks_statistic(a.values, b.values)));

    std::vector<double> edges{rng.uniform(-5.0, 5.0)};
    const int bins = static_cast<int>(rng.uniform_int(1, 8));
    for (int i = 0; i < bins; ++i) edges.push_back(edges.back() + rng.uniform(0.05, 3.0));
    auto masses = [&] {
      std::vector<double> m(static_cast<std::size_t>(bins));
      double total = 0.0;
      for (auto& x : m) total += (x = rng.bernoulli(0.25) ? 0.0 : rng.uniform01());
      if (total == 0.0) m[0] = total = 1.0;
      for (auto& x : m) x /= total;
      return m;
    };
    const Histogram ha{edges, masses()};
    const Histogram hb{edges, masses()};
    worst_emd = std::max(worst_emd, std::abs(emd_1d(ha, hb) - oracle::transport_emd(edges, ha.masses, hb.masses)));
  }
  const bool pass = worst_ks <= 1e-9 && worst_emd <= 1e-9;
  return {pass, "500 cases; max |KS - CDF-sup| = " + fmt(worst_ks) + ", max |EMD - transport| = " + fmt(worst_emd) +
                    " (tol 1e-9)"};
}

JobSpec wave_job() {
  JobSpec job;
  job.job_id = "wave";
  job.subclass = default_subclasses()[0];
  job.sla_deadline = 100.0;
  StageSpec st;
  st.task_count = 8;
  st.task_base_duration = 10.0;
  st.task_skew_shares.assign(8, 0.125);
  job.stages.push_back(st);
  return job;
}

Outcome simulator_oracle() {
  int exact = 0;
  std::string first_bad;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto inst = oracle::random_small_instance(derive_seed(4242, i));
    StaticPolicy policy(inst.executors);
    const auto r = simulate(inst.jobs, policy, inst.cluster, i);
    const auto ref = oracle::reference_schedule(inst.jobs, inst.cluster, inst.executors);
    if (r.end_time == ref.makespan && r.vcpu_seconds == ref.vcpu_seconds) {
      ++exact;
    } else if (first_bad.empty()) {
      first_bad = "; first mismatch instance " + std::to_string(i) + ": makespan " + fmt(r.end_time, 17) + " vs " +
                  fmt(ref.makespan, 17);
    }
  }
  ClusterConfig c;
  c.straggler_factor = 0.0;
  c.slots_per_executor = 4;
  StaticPolicy two(2);
  StaticPolicy one(1);
  const auto r2 = simulate({wave_job()}, two, c, 0);
  const auto r1 = simulate({wave_job()}, one, c, 0);
  const bool hand = r2.end_time == 10.0 && r2.vcpu_seconds == 2.0 * c.vcpus_per_executor * 10.0 &&
                    r1.end_time == 20.0 && r1.vcpu_seconds == 1.0 * c.vcpus_per_executor * 20.0;
  return {exact == 100 && hand, std::to_string(exact) + "/100 random instances exact; 8 tasks on 2x4 slots -> " +
                                    fmt(r2.end_time) + " s, on 1x4 -> " + fmt(r1.end_time) + " s" + first_bad};
}

Outcome wilcoxon_exact() {
  Rng rng(2718);
  int matched = 0;
  constexpr int kTrials = 3000;
  for (int trial = 0; trial < kTrials; ++trial) {
    const int n = 1 + trial % 10;
    std::vector<double> d(static_cast<std::size_t>(n));
    for (auto& x : d) x = rng.bernoulli(0.5) ? static_cast<double>(rng.uniform_int(-5, 5)) : rng.uniform(-2.0, 2.0);
    if (wilcoxon_signed_rank(d).p_value == oracle::wilcoxon_enumerate(d).p_value) ++matched;
  }
  const bool holm_a = holm_bonferroni(std::vector<double>{0.01, 0.02, 0.04}) == std::vector<bool>{true, true, true};
  const bool holm_b =
      holm_bonferroni(std::vector<double>{0.03, 0.03, 0.03}) == std::vector<bool>{false, false, false};
  return {matched == kTrials && holm_a && holm_b,
          std::to_string(matched) + "/" + std::to_string(kTrials) + " samples (n <= 10) equal to 2^n enumeration; " +
              "Holm {0.01,0.02,0.04} all reject: " + (holm_a ? "yes" : "no") +
              ", {0.03,0.03,0.03} none: " + (holm_b ? "yes" : "no")};
}

Outcome bca_coverage() {
  constexpr int kDatasets = 2000;
  constexpr int kN = 30;
  constexpr double kMu = 3.0;
  constexpr double kSigma = 2.0;
  int covered = 0;
  for (int d = 0; d < kDatasets; ++d) {
    Rng rng(derive_seed(77, static_cast<std::uint64_t>(d)));
    std::vector<double> v(kN);
    for (int i = 0; i < kN; i += 2) {
      // Box-Muller on the shared uniform stream.
      const double u1 = 1.0 - rng.uniform01();
      const double u2 = rng.uniform01();
      const double r = std::sqrt(-2.0 * std::log(u1));
      v[i] = kMu + kSigma * r * std::cos(2.0 * std::numbers::pi * u2);
      if (i + 1 < kN) v[i + 1] = kMu + kSigma * r * std::sin(2.0 * std::numbers::pi * u2);
    }
    const auto ci = bootstrap_bca(v, mean_of, {2000, 0.05, derive_seed(78, static_cast<std::uint64_t>(d)), true});
    if (ci.lo <= kMu && kMu <= ci.hi) ++covered;
  }
  const double rate = static_cast<double>(covered) / kDatasets;
  return {rate >= 0.92 && rate <= 0.97, "coverage " + fmt(rate) + " over 2000 datasets (n=30, B=2000), need [0.92, 0.97]"};
}

Outcome metrics_identities() {
  std::vector<std::string> failed;
  // Static policies never thrash.
  for (int i = 0; i < 12; ++i) {
    for (int k : {1, 4, 9}) {
      const auto jobs = generate_workload(WorkloadParams::defaults(), default_subclasses()[i], 5, 100 + i);
      StaticPolicy p(k);
      ClusterConfig c;
      c.max_executors = 16;
      if (thrash(simulate(jobs, p, c, 0)) != 0.0) failed.push_back("static thrash");
    }
  }
  // Constant demand: no transition.
  RunRecord flat;
  flat.end_time = 300.0;
  for (int i = 0; i < 10; ++i) {
    TickRecord t;
    t.index = i;
    t.time = 30.0 * i;
    t.demand_slots = 12;
    t.applied_target = 3;
    flat.ticks.push_back(t);
  }
  if (responsiveness(flat).median) failed.push_back("constant demand not Undefined");
  // Rectangles.
  auto rect = [](std::vector<std::pair<double, int>> steps, double end, int vcpus) {
    RunRecord r;
    r.cluster.vcpus_per_executor = vcpus;
    for (const auto& [t, n] : steps) r.series.push_back({t, 0, n, n});
    r.series.push_back({end, 0, 0, 0});
    r.end_time = end;
    return cost(r).vcpu_hours;
  };
  if (rect({{0.0, 4}}, 1800.0, 2) != 4.0) failed.push_back("4x2 vcpu for 1800 s");
  if (rect({{0.0, 4}}, 0.0, 2) != 0.0) failed.push_back("zero-length run");
  if (rect({{0.0, 2}, {600.0, 6}}, 1200.0, 1) != 4.0 / 3.0) failed.push_back("step profile");
  // Boundary: finish exactly at submit + deadline.
  auto edge = wave_job();
  edge.submit_time = 5.0;
  edge.sla_deadline = 10.0;
  ClusterConfig c;
  c.straggler_factor = 0.0;
  StaticPolicy two(2);
  const auto r = simulate({edge}, two, c, 0);
  if (r.jobs[0].finish_time != 15.0 || !r.jobs[0].deadline_met || sla_attainment(r) != 1.0) {
    failed.push_back("finish at deadline not met");
  }
  std::string detail = failed.empty() ? "static thrash 0 on 36 runs; constant demand Undefined; rectangles exact; "
                                        "finish at deadline met"
                                      : "failed:";
  for (const auto& f : failed) detail += " [" + f + "]";
  return {failed.empty(), detail};
}

std::string report_without_timestamp(const fs::path& run_dir) {
  std::ifstream in(run_dir / "report.json", std::ios::binary);
  auto j = Json::parse(in);
  j.erase("generated_at");
  return canonical_dump(j);
}

std::string all_run_records(const fs::path& run_dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(run_dir / "runs")) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    out += f.filename().string() + "\n";
    out.append(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return out;
}

Outcome end_to_end_smoke() {
  auto plan = load_plan(fs::path(SCALEBENCH_SOURCE_DIR) / "configs" / "smoke.yaml");
  const auto root = fs::temp_directory_path() / "scalebench_acceptance_smoke";
  fs::remove_all(root);
  plan.output_dir = (root / "first").string();
  const auto a = run_plan(plan, {"run", true, true});
  plan.output_dir = (root / "second").string();
  const auto b = run_plan(plan, {"run", false, true});

  const auto& rep = a.report;
  const bool shape = plan.policies.size() == 3 && plan.subclasses.size() == 2 && plan.seeds.size() == 5 &&
                     rep.cells.size() == 30 && rep.failures.empty() && rep.holm_family_size == 3 &&
                     rep.comparisons.size() == 3 && rep.aggregates.size() == 3;
  const bool identical = report_without_timestamp(a.run_dir) == report_without_timestamp(b.run_dir) &&
                         all_run_records(a.run_dir) == all_run_records(b.run_dir);
  fs::remove_all(root);
  return {shape && identical, std::to_string(rep.cells.size()) + " cells, " + std::to_string(rep.failures.size()) +
                                  " failures, Holm family " + std::to_string(rep.holm_family_size) + ", " +
                                  std::to_string(rep.comparisons.size()) + " comparisons; parallel vs serial rerun " +
                                  (identical ? "byte-identical" : "DIFFERENT") + " modulo generated_at"};
}

// Independent statement of the split rule.
bool split_violates(const std::vector<Subclass>& split) {
  std::set<std::string> ids;
  int in = 0;
  for (const auto& s : split) {
    if (!ids.insert(s.id()).second) return true;
    in += s.distribution_role == DistributionRole::InDistribution ? 1 : 0;
  }
  if (split.size() != 12 || in != 6) return true;
  for (const auto& x : split) {
    for (const auto& y : split) {
      if (x.distribution_role != y.distribution_role && x.base == y.base && x.skew_level == y.skew_level) return true;
    }
  }
  return false;
}

bool split_accepted(const std::vector<Subclass>& split) {
  try {
    return validate_split(split);
  } catch (const ValidationError&) {
    return false;
  }
}

Outcome split_constraint() {
  const std::vector<Subclass> shipped(default_subclasses().begin(), default_subclasses().end());
  const bool shipped_ok = split_accepted(shipped) && !split_violates(shipped);
  std::vector<std::vector<Subclass>> mutants;
  for (std::size_t i = 0; i < shipped.size(); ++i) {
    auto flip_role = shipped;
    flip_role[i].distribution_role = flip_role[i].distribution_role == DistributionRole::InDistribution
                                         ? DistributionRole::HeldOut
                                         : DistributionRole::InDistribution;
    mutants.push_back(flip_role);
    auto flip_skew = shipped;
    flip_skew[i].skew_level = flip_skew[i].skew_level == SkewLevel::Low ? SkewLevel::High : SkewLevel::Low;
    mutants.push_back(flip_skew);
    auto flip_scale = shipped;
    flip_scale[i].scale_level = flip_scale[i].scale_level == ScaleLevel::Small ? ScaleLevel::Large : ScaleLevel::Small;
    mutants.push_back(flip_scale);
    auto dropped = shipped;
    dropped.erase(dropped.begin() + static_cast<std::ptrdiff_t>(i));
    mutants.push_back(dropped);
    for (std::size_t j = i + 1; j < shipped.size(); ++j) {
      auto swapped = shipped;
      std::swap(swapped[i].distribution_role, swapped[j].distribution_role);
      mutants.push_back(swapped);
    }
  }
  int violating = 0;
  int rejected = 0;
  int wrongly_rejected = 0;
  for (const auto& m : mutants) {
    if (split_violates(m)) {
      ++violating;
      if (!split_accepted(m)) ++rejected;
    } else if (!split_accepted(m)) {
      ++wrongly_rejected;
    }
  }
  return {shipped_ok && violating > 0 && rejected == violating && wrongly_rejected == 0,
          std::string("shipped split ") + (shipped_ok ? "valid" : "INVALID") + "; " + std::to_string(rejected) + "/" +
              std::to_string(violating) + " violating mutants rejected; " + std::to_string(wrongly_rejected) +
              " valid mutants wrongly rejected (" + std::to_string(mutants.size()) + " mutants)"};
}

Outcome protocol_robustness() {
  ExternalPolicyOptions o;
  o.command = std::string(STUB_POLICY_PATH) + " --mode misbehave --timeout-on 2 --malformed-on 4 --sleep 1";
  o.timeout = 0.3;
  o.handshake_timeout = 2.0;
  const auto start = std::chrono::steady_clock::now();
  const auto report = protocol_check(o);

  // Same stub driving a simulation directly, to inspect the fault kinds.
  ExternalPolicy policy(o);
  ClusterConfig c;
  c.max_executors = 16;
  c.initial_executors = 2;
  const auto jobs = generate_workload(WorkloadParams::defaults(), default_subclasses()[0], 3, 1);
  const auto r = simulate(jobs, policy, c, 0);
  policy.shutdown(1.0);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::set<std::string> kinds;
  for (const auto& f : r.faults) kinds.insert(f.kind);
  bool held = true;
  int previous = r.initial_target;
  for (const auto& t : r.ticks) {
    if (t.faulted && t.applied_target != previous) held = false;
    previous = t.applied_target;
  }
  const bool pass = report.held_previous_target && held && report.faults > 0 && kinds.count("timeout") &&
                    kinds.count("malformed") && r.complete && elapsed < 60.0;
  std::string kind_list;
  for (const auto& k : kinds) kind_list += (kind_list.empty() ? "" : ",") + k;
  return {pass, "protocol-check faults " + std::to_string(report.faults) + ", held previous target: " +
                    (report.held_previous_target && held ? "yes" : "no") + "; simulated run fault kinds {" +
                    kind_list + "}, run completed: " + (r.complete ? "yes" : "no") + "; wall " + fmt(elapsed, 3) +
                    " s"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"generator-conformance", 30.0, generator_conformance},
      {"generator-determinism", 10.0, generator_determinism},
      {"ks-emd-oracles", 0.0, distance_oracles},
      {"simulator-oracle", 0.0, simulator_oracle},
      {"wilcoxon-exact-holm", 0.0, wilcoxon_exact},
      {"bca-coverage", 120.0, bca_coverage},
      {"metrics-identities", 0.0, metrics_identities},
      {"end-to-end-smoke", 300.0, end_to_end_smoke},
      {"split-constraint", 0.0, split_constraint},
      {"protocol-robustness", 0.0, protocol_robustness},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt(seconds, 3) + " s";
    if (c.budget_seconds > 0.0) {
      timing += " of " + fmt(c.budget_seconds, 3) + " s budget";
      if (seconds >= c.budget_seconds) {
        o.pass = false;
        timing += ", OVER BUDGET";
      }
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " [" << timing << "]" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
