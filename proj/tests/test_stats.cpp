#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "scalebench/errors.hpp"
#include "scalebench/rng.hpp"
#include "scalebench/stats.hpp"

using namespace scalebench;

namespace {

std::vector<double> random_differences(Rng& rng, int n) {
  std::vector<double> d(static_cast<std::size_t>(n));
  // Small integer magnitudes so ties and zeros are common.
  for (auto& x : d) x = static_cast<double>(rng.uniform_int(-4, 4));
  return d;
}

}  // namespace

TEST_CASE("wilcoxon examples") {
  const std::vector<double> all_positive{1, 2, 3, 4, 5};
  const auto r = wilcoxon_signed_rank(all_positive);
  CHECK(r.w == 0.0);
  CHECK(r.exact);
  CHECK(r.p_value == 2.0 / 32.0);

  const std::vector<double> symmetric{-1, 1};
  CHECK(wilcoxon_signed_rank(symmetric).p_value == 1.0);

  const std::vector<double> zeros{0, 0, 0};
  const auto z = wilcoxon_signed_rank(zeros);
  CHECK(z.degenerate);
  CHECK(z.p_value == 1.0);

  PairedSample paired;
  paired.pairs = {{3, 1}, {5, 2}, {4, 4}};
  CHECK(paired.differences() == std::vector<double>{2, 3, 0});
  CHECK(wilcoxon_signed_rank(paired).n == 2);
}

TEST_CASE("exact wilcoxon matches enumeration bit for bit") {
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto d = random_differences(rng, static_cast<int>(rng.uniform_int(1, 10)));
    const auto lib = wilcoxon_signed_rank(d);
    const auto ref = oracle::wilcoxon_enumerate(d);
    CHECK(lib.p_value == ref.p_value);
    if (!lib.degenerate) CHECK(lib.w_plus == ref.w_plus);
  }
}

TEST_CASE("wilcoxon is scale invariant") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    auto d = random_differences(rng, static_cast<int>(rng.uniform_int(1, 30)));
    const double p = wilcoxon_signed_rank(d).p_value;
    for (auto& x : d) x *= 3.75;
    CHECK(wilcoxon_signed_rank(d).p_value == p);
  }
}

TEST_CASE("normal approximation is close to exact at n = 20") {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d(20);
    for (auto& x : d) x = rng.uniform(-1.0, 1.5);
    std::vector<double> nonzero;
    for (double x : d) {
      if (x != 0.0) nonzero.push_back(x);
    }
    const auto ranks = signed_rank_magnitudes(nonzero);
    double w_plus = 0.0;
    for (std::size_t i = 0; i < nonzero.size(); ++i) w_plus += nonzero[i] > 0 ? ranks[i] : 0.0;
    CHECK(std::abs(wilcoxon_exact_p(ranks, w_plus) - wilcoxon_normal_p(ranks, w_plus)) <= 0.02);
  }
}

TEST_CASE("large samples use the normal path") {
  std::vector<double> d(40);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(i) - 10.5;
  const auto r = wilcoxon_signed_rank(d);
  CHECK_FALSE(r.exact);
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value < 1.0);
}

TEST_CASE("normal quantile and cdf") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
  for (double p : {1e-10, 0.001, 0.2, 0.7, 0.999999}) CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  CHECK(quantile_sorted(std::vector<double>{1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(median_of(std::vector<double>{3, 1, 2}) == 2.0);
}

TEST_CASE("bca") {
  SUBCASE("constant input is degenerate") {
    const std::vector<double> v(10, 4.2);
    const auto b = bootstrap_bca(v, mean_of, {500, 0.05, 1, true});
    CHECK(b.degenerate);
    CHECK(b.lo == 4.2);
    CHECK(b.hi == 4.2);
  }
  SUBCASE("symmetric data contains the sample mean") {
    const std::vector<double> v{-3, -2, -1, 0, 1, 2, 3};
    const auto b = bootstrap_bca(v, mean_of, {2000, 0.05, 9, true});
    CHECK(b.lo <= 0.0);
    CHECK(b.hi >= 0.0);
  }
  SUBCASE("matches an independent implementation on n = 8") {
    const std::vector<double> v{2.3, 0.4, 5.1, 3.3, 1.9, 7.7, 2.8, 4.0};
    for (std::uint64_t seed : {1ULL, 42ULL, 2024ULL}) {
      const auto b = bootstrap_bca(v, mean_of, {4000, 0.05, seed, true});
      const auto ref = oracle::bca_reference(v, [](const std::vector<double>& x) { return mean_of(x); }, 4000, 0.05, seed);
      CHECK(std::abs(b.lo - ref.lo) <= 1e-9);
      CHECK(std::abs(b.hi - ref.hi) <= 1e-9);
    }
  }
  SUBCASE("parallel and serial agree") {
    const std::vector<double> v{1, 4, 2, 8, 5, 7, 3, 9, 6, 0};
    const auto a = bootstrap_bca(v, median_of, {3000, 0.05, 7, true});
    const auto s = bootstrap_bca(v, median_of, {3000, 0.05, 7, false});
    CHECK(a.lo == s.lo);
    CHECK(a.hi == s.hi);
  }
  SUBCASE("all replicates on one side falls back to percentiles") {
    // The minimum of a resample is never below the sample minimum.
    const std::vector<double> v{1, 2, 3, 4, 5, 6};
    const auto min_of = [](std::span<const double> x) { return *std::min_element(x.begin(), x.end()); };
    const auto b = bootstrap_bca(v, min_of, {1000, 0.05, 3, true});
    CHECK(b.lo >= 1.0);
  }
  CHECK_THROWS_AS(bootstrap_bca(std::vector<double>{}, mean_of, {}), InvalidInput);
}

TEST_CASE("holm") {
  CHECK(holm_bonferroni(std::vector<double>{0.01, 0.02, 0.04}) == std::vector<bool>{true, true, true});
  CHECK(holm_bonferroni(std::vector<double>{0.03, 0.03, 0.03}) == std::vector<bool>{false, false, false});
  CHECK(holm_bonferroni(std::vector<double>{}).empty());
  CHECK(holm_bonferroni(std::vector<double>{0.04, 0.001, 0.5}) == std::vector<bool>{false, true, false});

  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> p(static_cast<std::size_t>(rng.uniform_int(1, 8)));
    for (auto& x : p) x = rng.uniform01() * 0.1;
    const auto flags = holm_bonferroni(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[i] <= p[j] && flags[j]) CHECK(flags[i]);
      }
    }
  }
}

TEST_CASE("cohen's kappa") {
  CHECK(cohens_kappa(std::vector<int>{0, 1, 2, 3}, std::vector<int>{0, 1, 2, 3}).kappa == 1.0);
  CHECK(cohens_kappa(std::vector<int>{0, 0, 1, 1}, std::vector<int>{1, 1, 0, 0}).kappa == -1.0);
  CHECK(cohens_kappa(std::vector<int>{0, 1, 0, 1}, std::vector<int>{0, 0, 1, 1}).kappa == 0.0);
  const auto same = cohens_kappa(std::vector<int>{2, 2}, std::vector<int>{2, 2});
  CHECK(same.perfect_expected);
  CHECK(same.kappa == 1.0);
  CHECK_THROWS_AS(cohens_kappa(std::vector<int>{0}, std::vector<int>{0, 1}), InvalidInput);
  CHECK_THROWS_AS(cohens_kappa(std::vector<int>{4}, std::vector<int>{0}), InvalidInput);

  const auto path = std::filesystem::temp_directory_path() / "scalebench_kappa.csv";
  { std::ofstream(path) << "a,b\n0,1\n2,2\n3,3\n"; }
  const auto [a, b] = read_reviewer_file(path);
  CHECK(a == std::vector<int>{0, 2, 3});
  CHECK(b == std::vector<int>{1, 2, 3});
  std::filesystem::remove(path);
}
