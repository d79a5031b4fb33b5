#include "scalebench/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "scalebench/errors.hpp"
#include "scalebench/external_policy.hpp"
#include "scalebench/rng.hpp"

namespace fs = std::filesystem;

namespace scalebench {

namespace {

Json oracle_to_json(const OracleChoice& c) {
  return Json{{"executors", c.executors}, {"infeasible", c.infeasible}, {"vcpu_seconds", c.vcpu_seconds}};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::string file_safe(std::string s) {
  for (auto& ch : s) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
  }
  return s;
}

const Subclass& subclass_by_id(const ExperimentPlan& plan, const std::string& id) {
  for (const auto& s : plan.subclasses) {
    if (s.id() == id) return s;
  }
  throw InvalidInput("subclass '" + id + "' is not part of the plan");
}

}  // namespace

Json CalibrationResult::to_json() const {
  Json oracle_json = Json::object();
  for (const auto& [id, c] : oracle) oracle_json[id] = oracle_to_json(c);
  return Json{{"schema", "scalebench.calibration"},
              {"version", 1},
              {"config_hash", config_hash},
              {"sla_medians", sla_medians},
              {"oracle", std::move(oracle_json)},
              {"fingerprint", fingerprint}};
}

CalibrationResult CalibrationResult::from_json(const Json& j) {
  try {
    if (j.at("schema") != "scalebench.calibration") throw InvalidInput("not a calibration file");
    CalibrationResult r;
    r.config_hash = j.at("config_hash").get<std::string>();
    r.sla_medians = j.at("sla_medians").get<std::map<std::string, double>>();
    for (const auto& [id, c] : j.at("oracle").items()) {
      OracleChoice o;
      o.executors = c.at("executors").get<int>();
      o.infeasible = c.at("infeasible").get<bool>();
      o.vcpu_seconds = c.at("vcpu_seconds").get<double>();
      r.oracle[id] = o;
    }
    r.fingerprint = j.at("fingerprint").get<FingerprintTable>();
    return r;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed calibration file: ") + e.what());
  }
}

double unconstrained_median(const std::vector<JobSpec>& jobs, const ClusterConfig& cluster, bool parallel) {
  if (jobs.empty()) throw InvalidParameter("unconstrained_median needs at least one job");
  ClusterConfig unbounded = cluster;
  unbounded.max_executors = std::max(cluster.max_executors, kUnconstrainedExecutors);
  unbounded.initial_executors.reset();
  std::vector<double> runtimes(jobs.size());
  const int n = static_cast<int>(jobs.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < n; ++i) {
    JobSpec job = jobs[static_cast<std::size_t>(i)];
    job.submit_time = 0.0;
    job.sla_deadline = 1.0e12;
    StaticPolicy policy(unbounded.max_executors);
    const auto record = simulate({job}, policy, unbounded, job.seed);
    runtimes[static_cast<std::size_t>(i)] = record.jobs.front().finish_time;
  }
  return median_of(runtimes);
}

CalibrationResult calibrate(const ExperimentPlan& plan, const std::optional<fs::path>& cache_path, bool parallel) {
  const auto hash = calibration_hash(plan);
  if (cache_path && fs::exists(*cache_path)) {
    try {
      auto cached = CalibrationResult::from_json(Json::parse(read_file(*cache_path)));
      const bool covers = std::all_of(plan.subclasses.begin(), plan.subclasses.end(), [&](const Subclass& s) {
        return cached.oracle.count(s.id()) && cached.sla_medians.count(s.id());
      });
      if (cached.config_hash == hash && covers) {
        cached.cache_hit = true;
        return cached;
      }
    } catch (const std::exception&) {
      // Unreadable caches are recomputed like stale ones.
    }
  }

  CalibrationResult result;
  result.config_hash = hash;
  WorkloadParams params = plan.workload;
  for (const auto& sub : plan.subclasses) {
    const auto seed = derive_seed(plan.calibration.seed, static_cast<std::uint64_t>(subclass_ordinal(sub)));
    const auto jobs = generate_workload(params, sub, plan.calibration.jobs, seed);
    const double median = unconstrained_median(jobs, plan.cluster, parallel);
    result.sla_medians[sub.id()] = median;
    params.sla_medians[sub.id()] = median;
    result.simulations += plan.calibration.jobs;

    const auto deadlined = generate_workload(params, sub, plan.calibration.jobs, seed);
    auto choice = choose_oracle(sweep_static_counts(deadlined, plan.cluster, parallel), plan.cluster);
    result.simulations += static_cast<int>(choice.sweep.size());
    result.fingerprint[sub.id()] = choice.executors;
    result.oracle[sub.id()] = std::move(choice);
  }
  if (cache_path) {
    if (cache_path->has_parent_path()) fs::create_directories(cache_path->parent_path());
    write_file(*cache_path, canonical_dump(result.to_json()) + "\n");
  }
  return result;
}

WorkloadParams calibrated_params(const ExperimentPlan& plan, const CalibrationResult& calibration) {
  WorkloadParams params = plan.workload;
  for (const auto& [id, m] : calibration.sla_medians) params.sla_medians[id] = m;
  return params;
}

std::vector<JobSpec> cell_workload(const ExperimentPlan& plan, const WorkloadParams& params, const Subclass& subclass,
                                   std::uint64_t seed) {
  return generate_workload(params, subclass, plan.jobs_per_cell,
                           derive_seed(seed, static_cast<std::uint64_t>(subclass_ordinal(subclass))));
}

std::string CellKey::run_id() const { return policy + "|" + subclass_id + "|" + std::to_string(seed); }

std::unique_ptr<Policy> make_policy(const PolicyDescriptor& d, const ExperimentPlan& plan,
                                    const CalibrationResult& calibration, const Subclass& subclass,
                                    const DecisionStore* history) {
  switch (d.kind) {
    case PolicyKind::Reactive: return std::make_unique<ReactivePolicy>(d.headroom);
    case PolicyKind::Fingerprint: return std::make_unique<FingerprintPolicy>(calibration.fingerprint, d.headroom);
    case PolicyKind::Static: return std::make_unique<StaticPolicy>(d.static_count, d.name);
    case PolicyKind::OracleStatic: {
      const auto it = calibration.oracle.find(subclass.id());
      if (it == calibration.oracle.end()) throw ConfigError("no oracle calibration for " + subclass.id());
      return std::make_unique<StaticPolicy>(it->second.executors, d.name);
    }
    case PolicyKind::External: {
      ExternalPolicyOptions o;
      o.command = d.command;
      o.name = d.name;
      o.timeout = d.timeout;
      o.handshake_timeout = std::max(d.timeout, 10.0);
      o.pricing = plan.pricing;
      o.token_bound = plan.cluster.observation_token_bound;
      o.history = history;
      return std::make_unique<ExternalPolicy>(std::move(o));
    }
  }
  throw ConfigError("unknown policy kind");
}

CellResult run_cell(const PolicyDescriptor& descriptor, const ExperimentPlan& plan, const CalibrationResult& calibration,
                    const Subclass& subclass, std::uint64_t seed, const DecisionStore* history) {
  CellResult cell;
  cell.key = CellKey{descriptor.name, subclass.id(), seed};
  try {
    const auto jobs = cell_workload(plan, calibrated_params(plan, calibration), subclass, seed);
    auto policy = make_policy(descriptor, plan, calibration, subclass, history);
    SimOptions options;
    options.run_id = cell.key.run_id();
    try {
      cell.record = simulate(jobs, *policy, plan.cluster, seed, options);
    } catch (const PolicyFaultError& e) {
      cell.record = e.partial();
      throw;
    }
    // The name in the record must match the plan even if a policy reports another.
    cell.record->policy = descriptor.name;
    if (!cell.record->complete) throw Error("run did not complete within the simulation time limit");
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

namespace {

using JobKey = std::tuple<std::string, std::uint64_t, std::string>;  // subclass, seed, job id

std::optional<double> mean_or_null(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return mean_of(v);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

ExperimentReport build_report(const ExperimentPlan& plan, const CalibrationResult& calibration,
                              const std::vector<CellResult>& cells, bool parallel) {
  ExperimentReport report;
  report.calibration_hash = calibration.config_hash;
  report.alpha = plan.stats.alpha;

  std::string denominator_policy;
  for (const auto& p : plan.policies) {
    if (p.kind == PolicyKind::OracleStatic) {
      denominator_policy = p.name;
      break;
    }
  }

  // Per-job oracle dollars by (subclass, seed, job id).
  std::map<JobKey, double> oracle_dollars;
  for (const auto& c : cells) {
    const bool is_denominator = c.denominator || (!denominator_policy.empty() && c.key.policy == denominator_policy);
    if (!is_denominator || !c.ok) continue;
    const auto m = compute_metrics(*c.record, c.key.subclass_id, plan.stats.transition_threshold);
    for (const auto& j : m.jobs) oracle_dollars[{c.key.subclass_id, c.key.seed, j.job_id}] = j.dollars;
  }

  std::map<std::string, std::map<JobKey, double>> ratios;  // policy -> job -> cost ratio
  std::map<std::pair<std::string, std::string>, std::vector<std::vector<int>>> targets;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> cell_index;
  for (const auto& c : cells) {
    if (c.denominator) continue;
    if (!c.ok) {
      report.failures.push_back(CellFailure{c.key, c.error});
      continue;
    }
    MetricRecord m;
    try {
      m = compute_metrics(*c.record, c.key.subclass_id, plan.stats.transition_threshold);
    } catch (const std::exception& e) {
      report.failures.push_back(CellFailure{c.key, std::string("metrics: ") + e.what()});
      continue;
    }
    m.policy = c.key.policy;
    for (const auto& j : m.jobs) {
      const auto it = oracle_dollars.find({c.key.subclass_id, c.key.seed, j.job_id});
      if (it != oracle_dollars.end() && it->second > 0.0) {
        ratios[c.key.policy][it->first] = j.dollars / it->second;
      }
    }
    std::vector<int> seq;
    for (const auto& t : c.record->ticks) seq.push_back(t.applied_target);
    const auto group = std::make_pair(c.key.policy, c.key.subclass_id);
    targets[group].push_back(std::move(seq));
    cell_index[group].push_back(report.cells.size());
    report.cells.push_back(std::move(m));
  }
  for (const auto& [group, seqs] : targets) {
    if (seqs.size() < 2) continue;
    const double sigma = consistency(seqs).sigma;
    for (auto i : cell_index[group]) report.cells[i].consistency_sigma = sigma;
  }

  for (const auto& p : plan.policies) {
    PolicyAggregate agg;
    agg.policy = p.name;
    std::vector<double> vcpu;
    std::vector<double> dollars;
    std::vector<double> sla;
    for (const auto& m : report.cells) {
      if (m.policy != p.name) continue;
      vcpu.push_back(m.vcpu_hours);
      dollars.push_back(m.dollars);
      sla.push_back(m.sla_attainment);
    }
    agg.cells = static_cast<int>(vcpu.size());
    if (agg.cells > 0) {
      agg.mean_vcpu_hours = mean_of(vcpu);
      agg.mean_dollars = mean_of(dollars);
      agg.mean_sla_attainment = mean_of(sla);
    }
    std::vector<double> in_dist;
    std::vector<double> held_out;
    for (const auto& [key, r] : ratios[p.name]) {
      const auto sub = find_subclass(std::get<0>(key));
      (sub && sub->distribution_role == DistributionRole::HeldOut ? held_out : in_dist).push_back(r);
    }
    agg.in_distribution_mean_ratio = mean_or_null(in_dist);
    agg.held_out_mean_ratio = mean_or_null(held_out);
    if (agg.in_distribution_mean_ratio && agg.held_out_mean_ratio) {
      agg.generalization_gap = *agg.held_out_mean_ratio - *agg.in_distribution_mean_ratio;
    }
    report.aggregates.push_back(std::move(agg));
  }

  std::vector<double> p_values;
  for (std::size_t a = 0; a < plan.policies.size(); ++a) {
    for (std::size_t b = a + 1; b < plan.policies.size(); ++b) {
      PairwiseComparison cmp;
      cmp.policy_a = plan.policies[a].name;
      cmp.policy_b = plan.policies[b].name;
      PairedSample sample;
      std::vector<double> quotient;
      const auto& ra = ratios[cmp.policy_a];
      const auto& rb = ratios[cmp.policy_b];
      for (const auto& [key, x] : ra) {
        const auto it = rb.find(key);
        if (it == rb.end()) continue;
        sample.pairs.emplace_back(x, it->second);
        quotient.push_back(x / it->second);
      }
      cmp.pairs = static_cast<int>(sample.pairs.size());
      if (!sample.pairs.empty()) {
        cmp.wilcoxon = wilcoxon_signed_rank(sample);
        cmp.median_cost_ratio = median_of(quotient);
      } else {
        cmp.wilcoxon.degenerate = true;
      }
      if (quotient.size() >= 2) {
        BcaOptions o;
        o.replicates = plan.stats.bootstrap_replicates;
        o.alpha = plan.stats.alpha;
        o.seed = derive_seed(plan.stats.bootstrap_seed, p_values.size());
        o.parallel = parallel;
        cmp.interval = bootstrap_bca(quotient, [](std::span<const double> v) { return median_of(v); }, o);
      }
      p_values.push_back(cmp.wilcoxon.p_value);
      report.comparisons.push_back(std::move(cmp));
    }
  }
  const auto reject = holm_bonferroni(p_values, plan.stats.alpha);
  for (std::size_t i = 0; i < reject.size(); ++i) report.comparisons[i].reject = reject[i];
  report.holm_family_size = static_cast<int>(p_values.size());
  return report;
}

Json ExperimentReport::to_json() const {
  Json cell_list = Json::array();
  for (const auto& m : cells) cell_list.push_back(m.to_json());
  Json fail_list = Json::array();
  for (const auto& f : failures) {
    fail_list.push_back(
        Json{{"policy", f.key.policy}, {"subclass", f.key.subclass_id}, {"seed", f.key.seed}, {"error", f.error}});
  }
  Json agg_list = Json::array();
  for (const auto& a : aggregates) {
    agg_list.push_back(Json{{"policy", a.policy},
                            {"cells", a.cells},
                            {"mean_vcpu_hours", a.mean_vcpu_hours},
                            {"mean_dollars", a.mean_dollars},
                            {"mean_sla_attainment", a.mean_sla_attainment},
                            {"in_distribution_mean_cost_ratio", optional_json(a.in_distribution_mean_ratio)},
                            {"held_out_mean_cost_ratio", optional_json(a.held_out_mean_ratio)},
                            {"generalization_gap", optional_json(a.generalization_gap)}});
  }
  Json cmp_list = Json::array();
  for (const auto& c : comparisons) {
    Json interval = nullptr;
    if (c.interval) {
      interval = Json{{"lo", c.interval->lo},
                      {"hi", c.interval->hi},
                      {"degenerate", c.interval->degenerate},
                      {"percentile_fallback", c.interval->percentile_fallback}};
    }
    cmp_list.push_back(Json{{"policy_a", c.policy_a},
                            {"policy_b", c.policy_b},
                            {"pairs", c.pairs},
                            {"wilcoxon_w", c.wilcoxon.w},
                            {"wilcoxon_p", c.wilcoxon.p_value},
                            {"wilcoxon_exact", c.wilcoxon.exact},
                            {"wilcoxon_degenerate", c.wilcoxon.degenerate},
                            {"median_cost_ratio", optional_json(c.median_cost_ratio)},
                            {"bca_interval", std::move(interval)},
                            {"holm_reject", c.reject}});
  }
  return Json{{"schema", "scalebench.report"},
              {"version", 1},
              {"generated_at", generated_at},
              {"calibration_hash", calibration_hash},
              {"cost_ratio_denominator", "oracle_static"},
              {"holm", {{"alpha", alpha}, {"family_size", holm_family_size}}},
              {"cells", std::move(cell_list)},
              {"failures", std::move(fail_list)},
              {"aggregates", std::move(agg_list)},
              {"comparisons", std::move(cmp_list)}};
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt("%.4f", *v) : "-"; }

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

}  // namespace

std::string ExperimentReport::summary_table() const {
  std::ostringstream out;
  out << pad("policy", 20) << pad("cells", 7) << pad("vcpu_h", 12) << pad("dollars", 12) << pad("sla", 8)
      << pad("ratio_in", 10) << pad("ratio_held", 12) << "gap\n";
  for (const auto& a : aggregates) {
    out << pad(a.policy, 20) << pad(std::to_string(a.cells), 7) << pad(fmt("%.3f", a.mean_vcpu_hours), 12)
        << pad(fmt("%.4f", a.mean_dollars), 12) << pad(fmt("%.3f", a.mean_sla_attainment), 8)
        << pad(fmt_opt(a.in_distribution_mean_ratio), 10) << pad(fmt_opt(a.held_out_mean_ratio), 12)
        << fmt_opt(a.generalization_gap) << "\n";
  }
  out << "\npairwise (Holm family " << holm_family_size << ", alpha " << fmt("%.3g", alpha) << ")\n";
  out << pad("a", 20) << pad("b", 20) << pad("pairs", 7) << pad("p", 12) << pad("median a/b", 12)
      << pad("bca", 22) << "reject\n";
  for (const auto& c : comparisons) {
    const std::string ci = c.interval ? "[" + fmt("%.4f", c.interval->lo) + ", " + fmt("%.4f", c.interval->hi) + "]"
                                      : std::string("-");
    out << pad(c.policy_a, 20) << pad(c.policy_b, 20) << pad(std::to_string(c.pairs), 7)
        << pad(fmt("%.4g", c.wilcoxon.p_value), 12) << pad(fmt_opt(c.median_cost_ratio), 12) << pad(ci, 22)
        << (c.reject ? "yes" : "no") << "\n";
  }
  if (!failures.empty()) {
    out << "\nfailed cells\n";
    for (const auto& f : failures) out << "  " << f.key.run_id() << ": " << f.error << "\n";
  }
  return out.str();
}

std::string utc_stamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

namespace {

fs::path cache_path_for(const ExperimentPlan& plan) {
  fs::path p = plan.calibration.cache;
  return p.is_absolute() ? p : fs::path(plan.output_dir) / p;
}

void write_outputs(const fs::path& run_dir, const ExperimentPlan& plan, const CalibrationResult& calibration,
                   const std::vector<CellResult>& cells, const ExperimentReport& report) {
  fs::create_directories(run_dir / "runs");
  write_file(run_dir / "plan.json", plan.to_json().dump(2) + "\n");
  write_file(run_dir / "calibration.json", canonical_dump(calibration.to_json()) + "\n");
  Json manifest = Json::array();
  for (const auto& c : cells) {
    Json entry{{"policy", c.key.policy},
               {"subclass", c.key.subclass_id},
               {"seed", c.key.seed},
               {"denominator", c.denominator},
               {"ok", c.ok},
               {"error", c.error}};
    if (c.record) {
      const auto file = "runs/" + file_safe(c.key.run_id()) + ".ndjson";
      write_file(run_dir / file, to_ndjson(*c.record));
      entry["record"] = file;
    } else {
      entry["record"] = nullptr;
    }
    manifest.push_back(std::move(entry));
  }
  write_file(run_dir / "cells.json", manifest.dump(2) + "\n");
  std::string metrics;
  for (const auto& m : report.cells) metrics += canonical_dump(m.to_json()) + "\n";
  write_file(run_dir / "metrics.ndjson", metrics);
  write_file(run_dir / "report.json", report.to_json().dump(2) + "\n");
  write_file(run_dir / "summary.txt", report.summary_table());
}

}  // namespace

RunOutcome run_plan(const ExperimentPlan& plan, const RunOptions& options) {
  plan.validate();
  RunOutcome outcome;
  const std::string stamp = options.stamp.empty() ? utc_stamp() : options.stamp;
  if (options.write_outputs) {
    outcome.run_dir = fs::path(plan.output_dir) / stamp;
    std::error_code ec;
    fs::create_directories(outcome.run_dir, ec);
    if (ec || !fs::is_directory(outcome.run_dir)) {
      throw Error("cannot create output directory " + outcome.run_dir.string() + ": " + ec.message());
    }
    const auto probe = outcome.run_dir / ".write-probe";
    if (!std::ofstream(probe)) throw Error("output directory is not writable: " + outcome.run_dir.string());
    fs::remove(probe, ec);
  }

  outcome.calibration =
      calibrate(plan, options.write_outputs ? std::optional<fs::path>(cache_path_for(plan)) : std::nullopt,
                options.parallel);

  // History for the retrieval tool is whatever earlier runs left behind; this
  // run's decisions are ingested only after every cell has finished.
  std::unique_ptr<DecisionStore> store;
  if (options.write_outputs) store = std::make_unique<DecisionStore>(fs::path(plan.output_dir) / "decisions.store");

  struct Job {
    PolicyDescriptor descriptor;
    const Subclass* subclass;
    std::uint64_t seed;
    bool denominator;
  };
  std::vector<Job> work;
  const bool has_oracle = std::any_of(plan.policies.begin(), plan.policies.end(),
                                      [](const PolicyDescriptor& p) { return p.kind == PolicyKind::OracleStatic; });
  for (const auto& p : plan.policies) {
    for (const auto& s : plan.subclasses) {
      for (auto seed : plan.seeds) work.push_back({p, &s, seed, false});
    }
  }
  if (!has_oracle) {
    PolicyDescriptor oracle;
    oracle.name = "oracle_static";
    oracle.kind = PolicyKind::OracleStatic;
    for (const auto& s : plan.subclasses) {
      for (auto seed : plan.seeds) work.push_back({oracle, &s, seed, true});
    }
  }

  outcome.cells.resize(work.size());
  const int n = static_cast<int>(work.size());
#pragma omp parallel for schedule(dynamic) if (options.parallel)
  for (int i = 0; i < n; ++i) {
    const auto& w = work[static_cast<std::size_t>(i)];
    auto cell = run_cell(w.descriptor, plan, outcome.calibration, *w.subclass, w.seed, store.get());
    cell.denominator = w.denominator;
    outcome.cells[static_cast<std::size_t>(i)] = std::move(cell);
  }

  outcome.report = build_report(plan, outcome.calibration, outcome.cells, options.parallel);
  outcome.report.generated_at = stamp;
  if (options.write_outputs) {
    write_outputs(outcome.run_dir, plan, outcome.calibration, outcome.cells, outcome.report);
    for (const auto& c : outcome.cells) {
      if (c.ok && !c.denominator) store->ingest(*c.record);
    }
  }
  return outcome;
}

ExperimentReport report_from_run_dir(const fs::path& run_dir, bool parallel) {
  const auto plan = parse_plan(read_file(run_dir / "plan.json"));
  const auto calibration = CalibrationResult::from_json(Json::parse(read_file(run_dir / "calibration.json")));
  Json manifest;
  try {
    manifest = Json::parse(read_file(run_dir / "cells.json"));
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed cells.json: ") + e.what());
  }
  std::vector<CellResult> cells;
  for (const auto& entry : manifest) {
    CellResult c;
    c.key = CellKey{entry.at("policy").get<std::string>(), entry.at("subclass").get<std::string>(),
                    entry.at("seed").get<std::uint64_t>()};
    subclass_by_id(plan, c.key.subclass_id);
    c.denominator = entry.at("denominator").get<bool>();
    c.ok = entry.at("ok").get<bool>();
    c.error = entry.at("error").get<std::string>();
    if (!entry.at("record").is_null()) {
      c.record = run_record_from_ndjson(read_file(run_dir / entry.at("record").get<std::string>()));
    }
    if (c.ok && !c.record) throw InvalidInput("cell " + c.key.run_id() + " is marked ok but has no record");
    cells.push_back(std::move(c));
  }
  auto report = build_report(plan, calibration, cells, parallel);
  report.generated_at = utc_stamp();
  return report;
}

}  // namespace scalebench
