#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "scalebench/config.hpp"
#include "scalebench/decision_store.hpp"
#include "scalebench/errors.hpp"
#include "scalebench/external_policy.hpp"
#include "scalebench/genval.hpp"
#include "scalebench/harness.hpp"
#include "scalebench/rng.hpp"
#include "scalebench/stats.hpp"

namespace fs = std::filesystem;
using namespace scalebench;

namespace {

// Exit codes: 0 success, 1 a check failed, 2 usage or input error.
constexpr int kCheckFailed = 1;
constexpr int kBadInput = 2;

ExperimentPlan plan_or_default(const std::string& path) {
  if (!path.empty()) return load_plan(path);
  ExperimentPlan plan;
  plan.policies.push_back(PolicyDescriptor{});
  plan.subclasses.assign(default_subclasses().begin(), default_subclasses().end());
  plan.seeds = {0};
  return plan;
}

std::vector<Subclass> pick_subclasses(const std::string& id) {
  if (id == "all") return {default_subclasses().begin(), default_subclasses().end()};
  const auto sub = find_subclass(id);
  if (!sub) throw ConfigError("unknown subclass '" + id + "'");
  return {*sub};
}

std::ostream& output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("cannot write " + path);
  return file;
}

int cmd_generate(const std::string& config, const std::string& subclass, int jobs, std::uint64_t seed,
                 const std::string& out_path) {
  const auto plan = plan_or_default(config);
  std::ofstream file;
  auto& out = output(out_path, file);
  for (const auto& sub : pick_subclasses(subclass)) {
    for (const auto& job :
         generate_workload(plan.workload, sub, jobs, derive_seed(seed, static_cast<std::uint64_t>(subclass_ordinal(sub))))) {
      if (const auto err = check_job(job); !err.empty()) throw ValidationError(job.job_id + ": " + err);
      out << canonical_dump(to_json(job)) << '\n';
    }
  }
  return 0;
}

struct ValidateArgs {
  std::string config;
  std::string subclass;
  int jobs = 500;
  std::uint64_t seed = 0;
  std::string input_bytes;
  std::string shuffle_bytes;
  std::string key_frequency;
  double ks_max = 0.1;
  double emd_max = 0.05;
};

int cmd_validate(const ValidateArgs& a) {
  const auto plan = plan_or_default(a.config);
  const auto sub = pick_subclasses(a.subclass).front();
  const auto jobs =
      generate_workload(plan.workload, sub, a.jobs, derive_seed(a.seed, static_cast<std::uint64_t>(subclass_ordinal(sub))));
  const auto gen = generated_channels(jobs);
  ValidationChannels generated;
  ValidationChannels reference;
  if (!a.input_bytes.empty()) {
    reference.input_bytes = read_sample_file(a.input_bytes);
    generated.input_bytes = gen.input_bytes;
  }
  if (!a.shuffle_bytes.empty()) {
    reference.shuffle_bytes = read_sample_file(a.shuffle_bytes);
    generated.shuffle_bytes = gen.shuffle_bytes;
  }
  if (!a.key_frequency.empty()) {
    reference.key_frequency = read_histogram_file(a.key_frequency);
    generated.key_frequency = histogram_on(gen.relative_task_load, reference.key_frequency->bin_edges);
  }
  const auto verdict = validate_class(generated, reference, ValidationThresholds{a.ks_max, a.emd_max});
  auto j = verdict.to_json();
  j["subclass"] = sub.id();
  std::cout << j.dump(2) << '\n';
  return verdict.passed() ? 0 : kCheckFailed;
}

int cmd_calibrate(const std::string& config, bool no_cache) {
  const auto plan = load_plan(config);
  std::optional<fs::path> cache;
  if (!no_cache) {
    fs::path p = plan.calibration.cache;
    cache = p.is_absolute() ? p : fs::path(plan.output_dir) / p;
  }
  const auto result = calibrate(plan, cache);
  auto j = result.to_json();
  j["cache_hit"] = result.cache_hit;
  j["simulations"] = result.simulations;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_run(const std::string& config, const std::string& stamp, bool serial) {
  const auto plan = load_plan(config);
  RunOptions options;
  options.stamp = stamp;
  options.parallel = !serial;
  const auto outcome = run_plan(plan, options);
  std::cout << "run directory: " << outcome.run_dir.string() << "\n"
            << "calibration: " << (outcome.calibration.cache_hit ? "cache hit" : "computed") << "\n\n"
            << outcome.report.summary_table();
  return outcome.report.failures.empty() ? 0 : kCheckFailed;
}

int cmd_report(const std::string& run_dir, bool json) {
  const auto report = report_from_run_dir(run_dir);
  if (json) {
    std::cout << report.to_json().dump(2) << '\n';
  } else {
    std::cout << report.summary_table();
  }
  return 0;
}

int cmd_protocol_check(const std::string& command, double timeout) {
  ExternalPolicyOptions o;
  o.command = command;
  o.timeout = timeout;
  o.handshake_timeout = std::max(timeout, 1.0);
  const auto report = protocol_check(o);
  std::cout << report.to_json().dump(2) << '\n';
  return report.all_passed() ? 0 : kCheckFailed;
}

int cmd_export(const std::string& what, const std::string& store_path, const std::string& run_dir) {
  if (what == "decisions") {
    if (store_path.empty()) throw ConfigError("export decisions needs --store");
    std::cout << DecisionStore(store_path).export_ndjson();
    return 0;
  }
  // Justifications for human review, one line per decision tick.
  if (run_dir.empty()) throw ConfigError("export justifications needs --run-dir");
  for (const auto& entry : fs::directory_iterator(fs::path(run_dir) / "runs")) {
    if (entry.path().extension() != ".ndjson") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto record = run_record_from_ndjson(text);
    for (const auto& t : record.ticks) {
      if (!t.justification) continue;
      std::cout << canonical_dump(Json{{"run_id", record.run_id},
                                       {"policy", record.policy},
                                       {"tick", t.index},
                                       {"time", t.time},
                                       {"applied_target", t.applied_target},
                                       {"justification", *t.justification}})
                << '\n';
    }
  }
  return 0;
}

int cmd_kappa(const std::string& path) {
  const auto [a, b] = read_reviewer_file(path);
  const auto k = cohens_kappa(a, b);
  std::cout << canonical_dump(Json{{"kappa", k.kappa}, {"items", a.size()}, {"perfect_expected", k.perfect_expected}})
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scalebench: autoscaling policy benchmark"};
  app.require_subcommand(1);

  std::string config;
  std::string subclass = "all";
  int jobs = 20;
  std::uint64_t seed = 0;
  std::string out_path;
  auto* gen = app.add_subcommand("generate", "emit workloads as one JSON job per line");
  gen->add_option("--config", config, "plan file (for workload parameters)");
  gen->add_option("--subclass", subclass, "subclass id or 'all'");
  gen->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed);
  gen->add_option("-o,--out", out_path);

  ValidateArgs va;
  auto* val = app.add_subcommand("validate", "compare generated channels with reference files");
  val->add_option("--config", va.config);
  val->add_option("--subclass", va.subclass)->required();
  val->add_option("--jobs", va.jobs)->check(CLI::PositiveNumber);
  val->add_option("--seed", va.seed);
  val->add_option("--input-bytes", va.input_bytes, "sample file");
  val->add_option("--shuffle-bytes", va.shuffle_bytes, "sample file");
  val->add_option("--key-frequency", va.key_frequency, "histogram file with columns lo, hi, mass");
  val->add_option("--ks-max", va.ks_max);
  val->add_option("--emd-max", va.emd_max, "fraction of the histogram range");

  bool no_cache = false;
  auto* cal = app.add_subcommand("calibrate", "SLA medians, oracle sweep and fingerprint table");
  cal->add_option("--config", config)->required();
  cal->add_flag("--no-cache", no_cache);

  std::string stamp;
  bool serial = false;
  auto* run = app.add_subcommand("run", "execute an experiment plan");
  run->add_option("--config", config)->required();
  run->add_option("--stamp", stamp, "run directory name (default: UTC time)");
  run->add_flag("--serial", serial, "run cells one at a time");

  std::string run_dir;
  bool json = false;
  auto* rep = app.add_subcommand("report", "recompute statistics from a run directory");
  rep->add_option("--run-dir", run_dir)->required();
  rep->add_flag("--json", json);

  std::string command;
  double timeout = 10.0;
  auto* pc = app.add_subcommand("protocol-check", "conformance-test an external policy command");
  pc->add_option("--command", command)->required();
  pc->add_option("--timeout", timeout, "seconds per decision")->check(CLI::PositiveNumber);

  std::string what;
  std::string store_path;
  auto* exp = app.add_subcommand("export", "dump decisions or justifications as JSON lines");
  exp->add_option("what", what)->required()->check(CLI::IsMember({"decisions", "justifications"}));
  exp->add_option("--store", store_path);
  exp->add_option("--run-dir", run_dir);

  std::string reviewer_file;
  auto* kap = app.add_subcommand("kappa", "Cohen's kappa for a two-column reviewer score file");
  kap->add_option("file", reviewer_file)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(config, subclass, jobs, seed, out_path);
    if (*val) return cmd_validate(va);
    if (*cal) return cmd_calibrate(config, no_cache);
    if (*run) return cmd_run(config, stamp, serial);
    if (*rep) return cmd_report(run_dir, json);
    if (*pc) return cmd_protocol_check(command, timeout);
    if (*exp) return cmd_export(what, store_path, run_dir);
    if (*kap) return cmd_kappa(reviewer_file);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kBadInput;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return 0;
}
