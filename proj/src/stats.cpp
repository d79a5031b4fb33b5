#include "scalebench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "scalebench/errors.hpp"
#include "scalebench/rng.hpp"

namespace scalebench {

std::vector<double> PairedSample::differences() const {
  std::vector<double> d;
  d.reserve(pairs.size());
  for (const auto& [x, y] : pairs) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw InvalidInput("paired sample has a non-finite value");
    d.push_back(x - y);
  }
  return d;
}

std::vector<double> signed_rank_magnitudes(std::span<const double> nonzero) {
  const std::size_t n = nonzero.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(nonzero[a]) < std::abs(nonzero[b]); });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(nonzero[order[j + 1]]) == std::abs(nonzero[order[i]])) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

double wilcoxon_exact_p(std::span<const double> ranks, double w_plus) {
  // Mid-ranks are multiples of 1/2, so doubled ranks are integers and the null
  // distribution of 2*W+ is a subset-sum count.
  std::vector<long> doubled;
  long total = 0;
  for (double r : ranks) {
    doubled.push_back(std::lround(2.0 * r));
    total += doubled.back();
  }
  std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
  count[0] = 1.0;
  long reach = 0;
  for (long r : doubled) {
    for (long s = reach; s >= 0; --s) count[static_cast<std::size_t>(s + r)] += count[static_cast<std::size_t>(s)];
    reach += r;
  }
  const long obs = std::lround(2.0 * w_plus);
  const long dev = std::abs(2 * obs - total);  // doubled distance from the null mean total / 2
  double hits = 0.0;
  for (long s = 0; s <= total; ++s) {
    if (std::abs(2 * s - total) >= dev) hits += count[static_cast<std::size_t>(s)];
  }
  return std::min(1.0, hits / std::ldexp(1.0, static_cast<int>(ranks.size())));
}

double wilcoxon_normal_p(std::span<const double> ranks, double w_plus) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double r : ranks) {
    sum += r;
    sum_sq += r * r;
  }
  // Var(W+) = sum r^2 / 4 equals the textbook tie-corrected variance.
  const double mu = sum / 2.0;
  const double sigma = std::sqrt(sum_sq / 4.0);
  if (sigma == 0.0) return 1.0;
  const double z = std::max(0.0, std::abs(w_plus - mu) - 0.5) / sigma;
  return std::min(1.0, 2.0 * (1.0 - normal_cdf(z)));
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences) {
  std::vector<double> nonzero;
  for (double d : differences) {
    if (!std::isfinite(d)) throw InvalidInput("wilcoxon: non-finite difference");
    if (d != 0.0) nonzero.push_back(d);
  }
  WilcoxonResult result;
  result.n = static_cast<int>(nonzero.size());
  if (nonzero.empty()) {
    result.degenerate = true;
    return result;
  }
  const auto ranks = signed_rank_magnitudes(nonzero);
  double w_plus = 0.0;
  double w_minus = 0.0;
  for (std::size_t i = 0; i < nonzero.size(); ++i) (nonzero[i] > 0 ? w_plus : w_minus) += ranks[i];
  result.w_plus = w_plus;
  result.w = std::min(w_plus, w_minus);
  result.exact = result.n <= kWilcoxonExactMax;
  result.p_value = result.exact ? wilcoxon_exact_p(ranks, w_plus) : wilcoxon_normal_p(ranks, w_plus);
  return result;
}

WilcoxonResult wilcoxon_signed_rank(const PairedSample& sample) {
  if (sample.pairs.empty()) throw InvalidInput("wilcoxon: empty paired sample");
  const auto d = sample.differences();
  return wilcoxon_signed_rank(std::span<const double>(d));
}

double mean_of(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("mean of empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidInput("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double median_of(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -INFINITY;
    if (p == 1.0) return INFINITY;
    throw InvalidParameter("normal_quantile: p outside [0, 1]");
  }
  // Acklam's rational approximation, then one Halley step against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

BcaInterval bootstrap_bca(std::span<const double> values, const Statistic& statistic, const BcaOptions& options) {
  const std::size_t n = values.size();
  if (n < 2) throw InvalidInput("bootstrap_bca needs at least 2 values");
  if (options.replicates < 100) throw InvalidParameter("bootstrap_bca needs at least 100 replicates");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw InvalidParameter("alpha must be in (0, 1)");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInput("bootstrap_bca: non-finite value");
  }

  BcaInterval out;
  out.point = statistic(values);
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) {
    out.lo = out.hi = values[0];
    out.degenerate = true;
    return out;
  }

  const int B = options.replicates;
  std::vector<double> reps(static_cast<std::size_t>(B));
#pragma omp parallel if (options.parallel)
  {
    std::vector<double> resample(n);
#pragma omp for schedule(static)
    for (int b = 0; b < B; ++b) {
      Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(b)));
      for (auto& x : resample) x = values[rng.index(n)];
      reps[static_cast<std::size_t>(b)] = statistic(resample);
    }
  }
  std::sort(reps.begin(), reps.end());

  // Replicates equal to the point estimate count half, which keeps z0 sane for
  // discrete statistics such as the median.
  const auto below = std::lower_bound(reps.begin(), reps.end(), out.point) - reps.begin();
  const auto equal = std::upper_bound(reps.begin(), reps.end(), out.point) - reps.begin() - below;
  const double frac = (static_cast<double>(below) + 0.5 * static_cast<double>(equal)) / B;

  const double z_lo = normal_quantile(options.alpha / 2.0);
  const double z_hi = normal_quantile(1.0 - options.alpha / 2.0);
  if (frac <= 0.0 || frac >= 1.0) {
    out.percentile_fallback = true;
    out.lo = quantile_sorted(reps, options.alpha / 2.0);
    out.hi = quantile_sorted(reps, 1.0 - options.alpha / 2.0);
    return out;
  }
  out.z0 = normal_quantile(frac);

  std::vector<double> jack(n);
  std::vector<double> loo(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) loo[k++] = values[j];
    }
    jack[i] = statistic(loo);
  }
  const double jbar = mean_of(jack);
  double num = 0.0;
  double den = 0.0;
  for (double t : jack) {
    const double dlt = jbar - t;
    num += dlt * dlt * dlt;
    den += dlt * dlt;
  }
  out.acceleration = den > 0.0 ? num / (6.0 * std::pow(den, 1.5)) : 0.0;

  auto adjusted = [&](double z) {
    const double s = out.z0 + z;
    return normal_cdf(out.z0 + s / (1.0 - out.acceleration * s));
  };
  out.lo = quantile_sorted(reps, adjusted(z_lo));
  out.hi = quantile_sorted(reps, adjusted(z_hi));
  return out;
}

std::vector<bool> holm_bonferroni(std::span<const double> p_values, double alpha) {
  const std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("holm_bonferroni: p-value outside [0, 1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    if (p_values[order[i]] > alpha / static_cast<double>(m - i)) break;
    reject[order[i]] = true;
  }
  return reject;
}

KappaResult cohens_kappa(std::span<const int> ratings_a, std::span<const int> ratings_b) {
  if (ratings_a.size() != ratings_b.size()) throw InvalidInput("cohens_kappa: rating lists differ in length");
  if (ratings_a.empty()) throw InvalidInput("cohens_kappa: no ratings");
  constexpr int kCategories = 4;
  double agree = 0.0;
  double pa[kCategories] = {};
  double pb[kCategories] = {};
  for (std::size_t i = 0; i < ratings_a.size(); ++i) {
    const int a = ratings_a[i];
    const int b = ratings_b[i];
    if (a < 0 || a >= kCategories || b < 0 || b >= kCategories) {
      throw InvalidInput("cohens_kappa: categories must be on the 0-3 scale");
    }
    if (a == b) agree += 1.0;
    pa[a] += 1.0;
    pb[b] += 1.0;
  }
  const double n = static_cast<double>(ratings_a.size());
  const double po = agree / n;
  double pe = 0.0;
  for (int k = 0; k < kCategories; ++k) pe += (pa[k] / n) * (pb[k] / n);
  KappaResult r;
  if (pe >= 1.0) {
    r.kappa = 1.0;
    r.perfect_expected = true;
    return r;
  }
  r.kappa = (po - pe) / (1.0 - pe);
  return r;
}

std::pair<std::vector<int>, std::vector<int>> read_reviewer_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path.string() + " has no header line");
  std::pair<std::vector<int>, std::vector<int>> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    for (auto& ch : line) {
      if (ch == ',' || ch == '\t') ch = ' ';
    }
    std::istringstream ss(line);
    int a = 0;
    int b = 0;
    std::string rest;
    if (!(ss >> a >> b) || (ss >> rest)) {
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": expected two integer columns");
    }
    out.first.push_back(a);
    out.second.push_back(b);
  }
  return out;
}

}  // namespace scalebench
