#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace scalebench {

struct PairedSample {
  std::vector<std::pair<double, double>> pairs;
  std::vector<double> differences() const;  // x - y
};

struct WilcoxonResult {
  double w = 0.0;       // min(W+, W-)
  double w_plus = 0.0;
  double p_value = 1.0;  // two-sided
  int n = 0;             // pairs left after dropping zero differences
  bool exact = false;
  bool degenerate = false;
};

constexpr int kWilcoxonExactMax = 20;

// Zero differences are dropped; ties get mid-ranks.
WilcoxonResult wilcoxon_signed_rank(const PairedSample& sample);
WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences);

// Mid-ranks of |d| over the non-zero differences, in input order.
std::vector<double> signed_rank_magnitudes(std::span<const double> nonzero);

// Two-sided exact p for observed W+ given the (possibly tied) rank set.
double wilcoxon_exact_p(std::span<const double> ranks, double w_plus);
// Normal approximation with tie-corrected variance and continuity correction.
double wilcoxon_normal_p(std::span<const double> ranks, double w_plus);

using Statistic = std::function<double(std::span<const double>)>;

double mean_of(std::span<const double> values);
double median_of(std::span<const double> values);
// Type-7 sample quantile of already sorted values.
double quantile_sorted(std::span<const double> sorted, double q);

double normal_cdf(double z);
double normal_quantile(double p);

struct BcaInterval {
  double lo = 0.0;
  double hi = 0.0;
  double point = 0.0;
  double z0 = 0.0;
  double acceleration = 0.0;
  bool degenerate = false;            // constant input
  bool percentile_fallback = false;   // z0 undefined
};

struct BcaOptions {
  int replicates = 10000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  bool parallel = true;
};

// Replicate b resamples with its own generator seeded from (seed, b), so the
// parallel and serial paths draw identical replicates.
BcaInterval bootstrap_bca(std::span<const double> values, const Statistic& statistic, const BcaOptions& options);

// Reject flags in the original order.
std::vector<bool> holm_bonferroni(std::span<const double> p_values, double alpha = 0.05);

struct KappaResult {
  double kappa = 0.0;
  bool perfect_expected = false;  // p_e == 1, kappa set to 1 by convention
};

KappaResult cohens_kappa(std::span<const int> ratings_a, std::span<const int> ratings_b);

// Two columns of 0..3 categories with a header line.
std::pair<std::vector<int>, std::vector<int>> read_reviewer_file(const std::filesystem::path& path);

}  // namespace scalebench
