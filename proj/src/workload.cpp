#include "scalebench/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "scalebench/errors.hpp"
#include "scalebench/rng.hpp"

namespace scalebench {

namespace {

constexpr std::array<std::string_view, kWorkloadClassCount> kClassKeys = {
    "shuffle_heavy_etl",    "skewed_multiway_join", "iterative_ml_prep",
    "time_windowed_agg",    "broadcast_lookup",     "bursty_sla_reporting",
};

SkewLevel flip(SkewLevel level) {
  return level == SkewLevel::Low ? SkewLevel::High : SkewLevel::Low;
}

std::array<Subclass, 12> build_default_subclasses() {
  std::array<Subclass, 12> out{};
  const auto params = WorkloadParams::defaults();
  for (int c = 0; c < kWorkloadClassCount; ++c) {
    const auto& klass = params.classes[static_cast<std::size_t>(c)];
    const bool even = c % 2 == 0;
    out[2 * c] = Subclass{klass.id, ScaleLevel::Small, klass.default_skew,
                          even ? DistributionRole::InDistribution : DistributionRole::HeldOut};
    out[2 * c + 1] = Subclass{klass.id, ScaleLevel::Large, flip(klass.default_skew),
                              even ? DistributionRole::HeldOut : DistributionRole::InDistribution};
  }
  return out;
}

struct StageShape {
  std::vector<int> parents;
  DependencyKind kind = DependencyKind::Narrow;
};

std::vector<StageShape> chain(int n, auto kind_of_edge) {
  std::vector<StageShape> stages(static_cast<std::size_t>(n));
  for (int i = 1; i < n; ++i) {
    stages[i].parents = {i - 1};
    stages[i].kind = kind_of_edge(i);
  }
  return stages;
}

std::vector<StageShape> build_shape(const WorkloadParams& params, const WorkloadClass& klass,
                                    Rng& rng) {
  const auto& range = klass.stage_count;
  switch (klass.structural_template) {
    case StructuralTemplate::LinearWide: {
      const int n = static_cast<int>(rng.uniform_int(range.lo, range.hi));
      return chain(n, [](int) { return DependencyKind::Wide; });
    }
    case StructuralTemplate::JoinTree: {
      const int n = static_cast<int>(rng.uniform_int(range.lo, range.hi));
      // Left-deep join over m participants needs 2m - 1 stages.
      int max_m = std::min(params.join_participants.hi, (n + 1) / 2);
      int m = static_cast<int>(
          rng.uniform_int(std::min(params.join_participants.lo, max_m), std::max(2, max_m)));
      std::vector<StageShape> stages(static_cast<std::size_t>(n));
      int prev = 0;
      for (int j = 1; j < m; ++j) {
        const int id = m + j - 1;
        stages[id].parents = {prev, j};
        stages[id].kind = DependencyKind::Wide;
        prev = id;
      }
      for (int id = 2 * m - 1; id < n; ++id) {
        stages[id].parents = {id - 1};
        stages[id].kind = DependencyKind::Wide;
      }
      return stages;
    }
    case StructuralTemplate::IterativeLoop: {
      const int iterations =
          static_cast<int>(rng.uniform_int(params.loop_iterations.lo, params.loop_iterations.hi));
      std::vector<StageShape> stages(static_cast<std::size_t>(3 * iterations));
      for (int it = 0; it < iterations; ++it) {
        const int map = 3 * it;
        if (it > 0) {
          stages[map].parents = {0, map - 1};
          stages[map].kind = DependencyKind::Narrow;
        }
        stages[map + 1].parents = {map};
        stages[map + 1].kind = DependencyKind::Wide;
        stages[map + 2].parents = {map + 1};
        stages[map + 2].kind = DependencyKind::Narrow;
      }
      return stages;
    }
    case StructuralTemplate::WindowAgg: {
      const int n = static_cast<int>(rng.uniform_int(range.lo, range.hi));
      // scan, narrow projections, groupBy, sort-and-rank.
      return chain(n, [n](int i) { return i >= n - 2 ? DependencyKind::Wide : DependencyKind::Narrow; });
    }
    case StructuralTemplate::BroadcastJoin: {
      const int n = static_cast<int>(rng.uniform_int(range.lo, range.hi));
      // 0: dimension scan, 1: fact scan, 2: broadcast hash join, 3: aggregation.
      std::vector<StageShape> stages(static_cast<std::size_t>(n));
      stages[2].parents = {0, 1};
      stages[2].kind = DependencyKind::Broadcast;
      for (int id = 3; id < n; ++id) {
        stages[id].parents = {id - 1};
        stages[id].kind = DependencyKind::Wide;
      }
      return stages;
    }
    case StructuralTemplate::BurstyBatch: {
      const int n = static_cast<int>(rng.uniform_int(range.lo, range.hi));
      return chain(n, [](int i) { return i % 2 == 1 ? DependencyKind::Wide : DependencyKind::Narrow; });
    }
  }
  throw ConfigError("unknown structural template");
}

std::uint64_t to_bytes(double x) { return static_cast<std::uint64_t>(std::floor(x)); }

double quantize_ms(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

std::vector<double> arrival_times(const WorkloadParams& params, const WorkloadClass& klass,
                                  int job_count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xA441'0000ULL));
  std::vector<double> times(static_cast<std::size_t>(job_count), 0.0);
  double t = 0.0;
  int burst_left = 0;
  for (int i = 1; i < job_count; ++i) {
    double gap = 0.0;
    switch (klass.arrival) {
      case ArrivalPattern::Poisson:
        gap = rng.exponential(params.poisson_mean_gap);
        break;
      case ArrivalPattern::Periodic:
        gap = params.periodic_gap *
              (1.0 + rng.uniform(-params.periodic_jitter, params.periodic_jitter));
        break;
      case ArrivalPattern::Bursty:
        if (burst_left > 0) {
          gap = rng.uniform(0.0, params.burst_intra_gap_max);
          --burst_left;
        } else {
          gap = rng.exponential(params.burst_mean_quiet_gap);
          // Geometric burst length with the configured mean.
          burst_left = 0;
          const double p_continue = 1.0 - 1.0 / std::max(1.0, params.burst_mean_size);
          while (rng.bernoulli(p_continue)) ++burst_left;
        }
        break;
    }
    t += gap;
    times[i] = quantize_ms(t);
  }
  return times;
}

}  // namespace

std::string_view class_key(WorkloadClassId id) { return kClassKeys[static_cast<std::size_t>(id)]; }

std::optional<WorkloadClassId> parse_class_key(std::string_view key) {
  for (std::size_t i = 0; i < kClassKeys.size(); ++i) {
    if (kClassKeys[i] == key) return static_cast<WorkloadClassId>(i);
  }
  return std::nullopt;
}

std::string_view to_string(ScaleLevel level) { return level == ScaleLevel::Small ? "small" : "large"; }
std::string_view to_string(SkewLevel level) { return level == SkewLevel::Low ? "low" : "high"; }
std::string_view to_string(DistributionRole role) {
  return role == DistributionRole::InDistribution ? "in_distribution" : "held_out";
}
std::string_view to_string(DependencyKind kind) {
  switch (kind) {
    case DependencyKind::Narrow: return "narrow";
    case DependencyKind::Wide: return "wide";
    case DependencyKind::Broadcast: return "broadcast";
  }
  return "?";
}
std::string_view to_string(StructuralTemplate tmpl) {
  switch (tmpl) {
    case StructuralTemplate::LinearWide: return "linear-wide";
    case StructuralTemplate::JoinTree: return "join-tree";
    case StructuralTemplate::IterativeLoop: return "iterative-loop";
    case StructuralTemplate::WindowAgg: return "window-agg";
    case StructuralTemplate::BroadcastJoin: return "broadcast-join";
    case StructuralTemplate::BurstyBatch: return "bursty-batch";
  }
  return "?";
}

std::string Subclass::id() const {
  std::string out(class_key(base));
  out += '/';
  out += to_string(scale_level);
  out += '/';
  out += to_string(skew_level);
  return out;
}

const std::array<Subclass, 12>& default_subclasses() {
  static const auto subclasses = build_default_subclasses();
  return subclasses;
}

int subclass_ordinal(const Subclass& subclass) {
  const auto& all = default_subclasses();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].base == subclass.base && all[i].scale_level == subclass.scale_level &&
        all[i].skew_level == subclass.skew_level) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

std::optional<Subclass> find_subclass(std::string_view id) {
  for (const auto& s : default_subclasses()) {
    if (s.id() == id) return s;
  }
  return std::nullopt;
}

bool validate_split(const std::vector<Subclass>& subclasses) {
  std::set<std::string> seen;
  for (const auto& s : subclasses) {
    if (!seen.insert(s.id()).second) throw ValidationError("duplicate subclass id: " + s.id());
  }
  if (subclasses.size() != 12) return false;
  std::set<std::pair<WorkloadClassId, SkewLevel>> in_dist;
  std::set<std::pair<WorkloadClassId, SkewLevel>> held_out;
  for (const auto& s : subclasses) {
    auto& bucket = s.distribution_role == DistributionRole::InDistribution ? in_dist : held_out;
    bucket.emplace(s.base, s.skew_level);
  }
  const auto in_count = std::count_if(subclasses.begin(), subclasses.end(), [](const Subclass& s) {
    return s.distribution_role == DistributionRole::InDistribution;
  });
  if (in_count != 6) return false;
  for (const auto& key : in_dist) {
    if (held_out.count(key) != 0) return false;
  }
  return true;
}

std::vector<double> zipf_shares(int n, double s) {
  if (n < 1) throw InvalidParameter("zipf_shares: n must be >= 1");
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidParameter("zipf_shares: s must be > 0");
  std::vector<double> shares(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) shares[k - 1] = std::pow(static_cast<double>(k), -s);
  // Sum smallest-first for accuracy.
  double h = 0.0;
  for (auto it = shares.rbegin(); it != shares.rend(); ++it) h += *it;
  for (auto& p : shares) p /= h;
  return shares;
}

WorkloadParams WorkloadParams::defaults() {
  WorkloadParams p;
  using enum WorkloadClassId;
  p.classes = {{
      {ShuffleHeavyEtl, {2.0, 3.0}, 0.3, 1.4, SkewLevel::Low, {4, 8},
       StructuralTemplate::LinearWide, ArrivalPattern::Poisson},
      {SkewedMultiWayJoin, {0.8, 1.5}, 1.4, 0.3, SkewLevel::High, {5, 9},
       StructuralTemplate::JoinTree, ArrivalPattern::Poisson},
      {IterativeMlPrep, {0.3, 0.8}, 0.3, 1.4, SkewLevel::Low, {12, 24},
       StructuralTemplate::IterativeLoop, ArrivalPattern::Poisson},
      {TimeWindowedAgg, {0.8, 1.5}, 0.3, 1.4, SkewLevel::Low, {3, 5},
       StructuralTemplate::WindowAgg, ArrivalPattern::Periodic},
      {BroadcastBoundedLookup, {0.0, 0.3}, 0.3, 1.4, SkewLevel::Low, {3, 4},
       StructuralTemplate::BroadcastJoin, ArrivalPattern::Poisson},
      {BurstySlaReporting, {0.8, 1.5}, 0.3, 1.4, SkewLevel::Low, {3, 6},
       StructuralTemplate::BurstyBatch, ArrivalPattern::Bursty},
  }};
  return p;
}

double WorkloadParams::effective_exponent(const Subclass& subclass) const {
  const auto& c = klass(subclass.base);
  return subclass.skew_level == c.default_skew ? c.zipf_exponent : c.flipped_zipf_exponent;
}

double WorkloadParams::sla_median(const Subclass& subclass) const {
  auto it = sla_medians.find(subclass.id());
  return it == sla_medians.end() ? default_sla_median : it->second;
}

std::uint64_t JobSpec::source_input_bytes() const {
  std::uint64_t total = 0;
  for (const auto& st : stages) {
    if (st.parent_ids.empty()) total += st.input_bytes;
  }
  return total;
}

std::uint64_t JobSpec::total_shuffle_bytes() const {
  std::uint64_t total = 0;
  for (const auto& st : stages) total += st.shuffle_write_bytes;
  return total;
}

std::uint64_t JobSpec::shuffle_read_bytes(int stage_id) const {
  const auto& st = stages.at(static_cast<std::size_t>(stage_id));
  if (st.dependency_kind != DependencyKind::Wide) return 0;
  std::uint64_t total = 0;
  for (int p : st.parent_ids) total += stages[p].shuffle_write_bytes;
  return total;
}

JobSpec generate_job(const WorkloadParams& params, const Subclass& subclass, std::uint64_t seed,
                     double submit_time) {
  const auto& registry = default_subclasses();
  if (std::find(registry.begin(), registry.end(), subclass) == registry.end()) {
    throw ConfigError("unknown subclass: " + subclass.id());
  }
  const auto& klass = params.klass(subclass.base);
  Rng rng(seed);

  JobSpec job;
  job.subclass = subclass;
  job.seed = seed;
  job.submit_time = submit_time;
  job.job_id = subclass.id() + "#" + hex64(seed);

  const auto shape = build_shape(params, klass, rng);
  const int n = static_cast<int>(shape.size());

  std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int p : shape[i].parents) children[p].push_back(i);
  }
  auto has_wide_child = [&](int i) {
    return std::any_of(children[i].begin(), children[i].end(),
                       [&](int c) { return shape[c].kind == DependencyKind::Wide; });
  };

  // Source input: total drawn per scale level, split across sources. The
  // broadcast template's first source is a small dimension table.
  const auto& range =
      subclass.scale_level == ScaleLevel::Small ? params.small_input_bytes : params.large_input_bytes;
  const double total_input = rng.log_uniform(range.lo, range.hi);
  std::vector<int> sources;
  for (int i = 0; i < n; ++i) {
    if (shape[i].parents.empty()) sources.push_back(i);
  }
  std::vector<double> source_weight(sources.size());
  for (std::size_t k = 0; k < sources.size(); ++k) source_weight[k] = rng.uniform(0.5, 1.5);
  if (klass.structural_template == StructuralTemplate::BroadcastJoin) {
    source_weight[0] = rng.uniform(0.005, 0.02);
    source_weight[1] = 1.0 - source_weight[0];
  }
  const double weight_sum = std::accumulate(source_weight.begin(), source_weight.end(), 0.0);

  std::vector<StageSpec> stages(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    stages[i].stage_id = i;
    stages[i].parent_ids = shape[i].parents;
    stages[i].dependency_kind = shape[i].kind;
  }
  for (std::size_t k = 0; k < sources.size(); ++k) {
    stages[sources[k]].input_bytes = std::max<std::uint64_t>(1, to_bytes(total_input * source_weight[k] / weight_sum));
  }
  std::uint64_t source_total = 0;
  for (int s : sources) source_total += stages[s].input_bytes;

  // Shuffle volume: ratio drawn strictly inside the class band, split across
  // stages that feed a Wide child.
  std::vector<int> writers;
  for (int i = 0; i < n; ++i) {
    if (has_wide_child(i)) writers.push_back(i);
  }
  if (!writers.empty()) {
    Interval band = klass.shuffle_to_input_ratio;
    if (klass.structural_template == StructuralTemplate::BroadcastJoin) band.lo = std::max(band.lo, 0.05);
    const double eps = 1e-6 * (band.hi - band.lo);
    const double ratio = rng.uniform(band.lo + eps, band.hi - eps);
    const std::uint64_t shuffle_total = to_bytes(ratio * static_cast<double>(source_total));
    std::vector<double> w(writers.size());
    for (auto& x : w) x = rng.uniform(0.5, 1.5);
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    std::uint64_t assigned = 0;
    for (std::size_t k = 0; k + 1 < writers.size(); ++k) {
      const auto bytes = to_bytes(static_cast<double>(shuffle_total) * w[k] / wsum);
      stages[writers[k]].shuffle_write_bytes = bytes;
      assigned += bytes;
    }
    stages[writers.back()].shuffle_write_bytes = shuffle_total - assigned;
  }

  // Data processed by non-source stages: shuffle read for Wide edges, the
  // parent's processed volume for Narrow and Broadcast edges.
  for (int i = 0; i < n; ++i) {
    if (shape[i].parents.empty()) continue;
    std::uint64_t in = 0;
    for (int p : shape[i].parents) {
      if (shape[i].kind == DependencyKind::Wide) {
        const auto wide_children = std::count_if(children[p].begin(), children[p].end(),
                                                 [&](int c) { return shape[c].kind == DependencyKind::Wide; });
        in += stages[p].shuffle_write_bytes / static_cast<std::uint64_t>(std::max<long>(1, wide_children));
      } else {
        in += stages[p].input_bytes;
      }
    }
    stages[i].input_bytes = std::max<std::uint64_t>(1, in);
  }

  const double exponent = params.effective_exponent(subclass);
  for (auto& st : stages) {
    const double wanted = std::ceil(static_cast<double>(st.input_bytes) / params.partition_bytes);
    st.task_count = static_cast<int>(std::clamp(wanted, static_cast<double>(params.min_tasks),
                                                static_cast<double>(params.max_tasks)));
    const double per_task = static_cast<double>(st.input_bytes) / st.task_count;
    st.task_base_duration =
        std::max(params.min_task_duration, quantize_ms(per_task / params.task_throughput));
    st.task_skew_shares = zipf_shares(st.task_count, exponent);
    // Which partition receives the hot key is random.
    for (std::size_t k = st.task_skew_shares.size(); k > 1; --k) {
      std::swap(st.task_skew_shares[k - 1], st.task_skew_shares[rng.index(k)]);
    }
  }

  job.stages = std::move(stages);
  job.sla_deadline = params.sla_multiplier * params.sla_median(subclass);
  return job;
}

std::vector<JobSpec> generate_workload(const WorkloadParams& params, const Subclass& subclass,
                                       int job_count, std::uint64_t seed) {
  if (job_count < 1) throw InvalidParameter("generate_workload: job_count must be >= 1");
  const auto times = arrival_times(params, params.klass(subclass.base), job_count, seed);
  std::vector<JobSpec> jobs;
  jobs.reserve(static_cast<std::size_t>(job_count));
  for (int i = 0; i < job_count; ++i) {
    jobs.push_back(generate_job(params, subclass, derive_seed(seed, static_cast<std::uint64_t>(i)), times[i]));
  }
  return jobs;
}

std::string check_job(const JobSpec& job) {
  const int n = static_cast<int>(job.stages.size());
  if (n == 0) return "job has no stages";
  if (!(job.sla_deadline > 0.0)) return "sla_deadline must be positive";
  std::vector<int> child_count(static_cast<std::size_t>(n), 0);
  std::vector<bool> wide_child(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i) {
    const auto& st = job.stages[i];
    if (st.stage_id != i) return "stage ids are not dense";
    if (st.task_count < 1) return "task_count < 1";
    if (static_cast<int>(st.task_skew_shares.size()) != st.task_count) return "share count mismatch";
    double sum = 0.0;
    for (double s : st.task_skew_shares) {
      if (!(s > 0.0)) return "non-positive share";
      sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-9) return "shares do not sum to 1";
    for (int p : st.parent_ids) {
      if (p < 0 || p >= i) return "parent id not lower than stage id";
      ++child_count[p];
      if (st.dependency_kind == DependencyKind::Wide) wide_child[p] = true;
    }
  }
  int sinks = 0;
  for (int i = 0; i < n; ++i) {
    if (child_count[i] == 0) ++sinks;
    if (!wide_child[i] && job.stages[i].shuffle_write_bytes != 0) return "shuffle written without a wide child";
  }
  if (sinks != 1) return "job must have exactly one sink";
  // Every stage reaches the sink, so the DAG is connected.
  std::vector<bool> reach(static_cast<std::size_t>(n), false);
  reach[n - 1] = true;
  for (int i = n - 1; i >= 0; --i) {
    if (!reach[i]) return "stage does not reach the sink";
    for (int p : job.stages[i].parent_ids) reach[p] = true;
  }
  return {};
}

Json to_json(const Subclass& subclass) {
  return Json{{"id", subclass.id()}, {"role", std::string(to_string(subclass.distribution_role))}};
}

Subclass subclass_from_json(const Json& j) {
  const auto id = j.at("id").get<std::string>();
  const auto first = id.find('/');
  const auto second = id.find('/', first + 1);
  if (first == std::string::npos || second == std::string::npos) throw InvalidInput("bad subclass id: " + id);
  Subclass s;
  auto base = parse_class_key(id.substr(0, first));
  if (!base) throw InvalidInput("bad subclass id: " + id);
  s.base = *base;
  const auto scale = id.substr(first + 1, second - first - 1);
  const auto skew = id.substr(second + 1);
  if (scale != "small" && scale != "large") throw InvalidInput("bad subclass id: " + id);
  if (skew != "low" && skew != "high") throw InvalidInput("bad subclass id: " + id);
  s.scale_level = scale == "small" ? ScaleLevel::Small : ScaleLevel::Large;
  s.skew_level = skew == "low" ? SkewLevel::Low : SkewLevel::High;
  const auto role = j.value("role", std::string("in_distribution"));
  s.distribution_role = role == "held_out" ? DistributionRole::HeldOut : DistributionRole::InDistribution;
  return s;
}

Json to_json(const JobSpec& job) {
  Json stages = Json::array();
  for (const auto& st : job.stages) {
    stages.push_back(Json{
        {"stage_id", st.stage_id},
        {"parent_ids", st.parent_ids},
        {"task_count", st.task_count},
        {"task_base_duration", st.task_base_duration},
        {"task_skew_shares", st.task_skew_shares},
        {"input_bytes", st.input_bytes},
        {"shuffle_write_bytes", st.shuffle_write_bytes},
        {"dependency_kind", std::string(to_string(st.dependency_kind))},
    });
  }
  return Json{{"schema", "scalebench.job"},
              {"version", kJobSchemaVersion},
              {"job_id", job.job_id},
              {"subclass", to_json(job.subclass)},
              {"seed", job.seed},
              {"submit_time", job.submit_time},
              {"sla_deadline", job.sla_deadline},
              {"stages", std::move(stages)}};
}

JobSpec job_from_json(const Json& j) {
  if (j.value("schema", std::string()) != "scalebench.job") throw InvalidInput("not a job record");
  if (j.value("version", 0) != kJobSchemaVersion) throw InvalidInput("unsupported job record version");
  JobSpec job;
  job.job_id = j.at("job_id").get<std::string>();
  job.subclass = subclass_from_json(j.at("subclass"));
  job.seed = j.at("seed").get<std::uint64_t>();
  job.submit_time = j.at("submit_time").get<double>();
  job.sla_deadline = j.at("sla_deadline").get<double>();
  for (const auto& s : j.at("stages")) {
    StageSpec st;
    st.stage_id = s.at("stage_id").get<int>();
    st.parent_ids = s.at("parent_ids").get<std::vector<int>>();
    st.task_count = s.at("task_count").get<int>();
    st.task_base_duration = s.at("task_base_duration").get<double>();
    st.task_skew_shares = s.at("task_skew_shares").get<std::vector<double>>();
    st.input_bytes = s.at("input_bytes").get<std::uint64_t>();
    st.shuffle_write_bytes = s.at("shuffle_write_bytes").get<std::uint64_t>();
    const auto kind = s.at("dependency_kind").get<std::string>();
    if (kind == "narrow") st.dependency_kind = DependencyKind::Narrow;
    else if (kind == "wide") st.dependency_kind = DependencyKind::Wide;
    else if (kind == "broadcast") st.dependency_kind = DependencyKind::Broadcast;
    else throw InvalidInput("bad dependency kind: " + kind);
    job.stages.push_back(std::move(st));
  }
  return job;
}

}  // namespace scalebench
