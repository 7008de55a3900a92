#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "generators.hpp"
#include "oracles.hpp"
#include "odrop/error.hpp"
#include "odrop/stats.hpp"

namespace odrop::stats {
namespace {

// Two-sided tail of Student's t by composite Simpson integration of the
// density over [0, |t|].
double t_tail_by_integration(double t, double nu) {
  const double c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(nu * std::numbers::pi);
  auto f = [&](double x) { return c * std::pow(1 + x * x / nu, -(nu + 1) / 2); };
  const int n = 200000;
  const double a = 0, b = std::abs(t), h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return 1 - 2 * (s * h / 3);
}


TEST(SpecialFunctions, IncompleteBetaMatchesBoost) {
  Rng rng(1);
  for (int i = 0; i < 300; ++i) {
    const double a = rng.uniform(0.2, 40), b = rng.uniform(0.2, 40), x = rng.uniform();
    EXPECT_NEAR(regularized_incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-10) << a << " " << b << " " << x;
  }
  EXPECT_EQ(regularized_incomplete_beta(2, 3, 0), 0.0);
  EXPECT_EQ(regularized_incomplete_beta(2, 3, 1), 1.0);
}

TEST(SpecialFunctions, IncompleteGammaMatchesBoost) {
  Rng rng(2);
  for (int i = 0; i < 300; ++i) {
    const double a = rng.uniform(0.1, 60), x = rng.uniform(0, 120);
    EXPECT_NEAR(regularized_gamma_p(a, x), boost::math::gamma_p(a, x), 1e-10);
    EXPECT_NEAR(regularized_gamma_q(a, x), boost::math::gamma_q(a, x), 1e-10);
  }
}

TEST(SpecialFunctions, DistributionTails) {
  for (double nu : {1.0, 2.5, 7.0, 30.0}) {
    for (double t : {0.0, 0.3, 1.0, 2.2, 6.0}) {
      boost::math::students_t dist(nu);
      EXPECT_NEAR(student_t_two_sided_p(t, nu), 2 * boost::math::cdf(boost::math::complement(dist, t)), 1e-10);
    }
  }
  for (double k : {1.0, 2.0, 5.0, 19.0}) {
    for (double x : {0.0, 0.5, 3.0, 12.0, 40.0}) {
      EXPECT_NEAR(chi_square_sf(x, k), boost::math::cdf(boost::math::complement(boost::math::chi_squared(k), x)), 1e-10);
    }
  }
}

TEST(Welch, IdenticalSamples) {
  const std::vector<double> a{1, 2, 4, 8};
  const auto r = welch_t(a, a);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0);
}

TEST(Welch, ShiftedSampleAgainstIntegratedDensity) {
  const std::vector<double> a{0, 1, 2}, b{10, 11, 12};
  const auto r = welch_t(a, b);
  EXPECT_LT(r.p_value, 0.01);
  // equal variances: t = -10 / sqrt(2/3), dof = 4
  EXPECT_NEAR(r.statistic, -10 / std::sqrt(2.0 / 3.0), 1e-12);
  EXPECT_NEAR(r.dof, 4.0, 1e-12);
  EXPECT_NEAR(r.p_value, t_tail_by_integration(r.statistic, r.dof), 1e-9);
}

TEST(Welch, RandomSamplesAgainstIntegratedDensity) {
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    auto a = odrop::testing::random_matrix(rng, 3 + rng.below(20), 1).storage();
    auto b = odrop::testing::random_matrix(rng, 3 + rng.below(20), 1, 2.0).storage();
    for (auto& v : b) v += 0.5;
    const auto r = welch_t(a, b);
    EXPECT_NEAR(r.p_value, t_tail_by_integration(r.statistic, r.dof), 1e-8);
  }
}

TEST(Welch, PermutationAndSwapProperties) {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    auto a = odrop::testing::random_matrix(rng, 2 + rng.below(30), 1).storage();
    auto b = odrop::testing::random_matrix(rng, 2 + rng.below(30), 1).storage();
    const auto r = welch_t(a, b);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
    EXPECT_GT(r.dof, 0.0);
    const auto swapped = welch_t(b, a);
    EXPECT_NEAR(swapped.statistic, -r.statistic, 1e-12 * (1 + std::abs(r.statistic)));
    EXPECT_NEAR(swapped.p_value, r.p_value, 1e-14);
    auto shuffled = a;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled.front(), shuffled.back());
    // reversing changes summation order; sort both to compare the same multiset order
    auto s1 = a, s2 = shuffled;
    std::sort(s1.begin(), s1.end());
    std::sort(s2.begin(), s2.end());
    EXPECT_EQ(welch_t(s1, b), welch_t(s2, b));
  }
}

TEST(Welch, ReorderedSampleGivesIdenticalResult) {
  const std::vector<double> a{0.5, 1.25, 2.0, 3.5}, b{1.0, 2.0, 3.0};
  const std::vector<double> a2{3.5, 0.5, 2.0, 1.25};
  EXPECT_EQ(welch_t(a, b), welch_t(a2, b));
}

TEST(Welch, ZeroVarianceCases) {
  const std::vector<double> a{2, 2, 2}, b{2, 2}, c{3, 3};
  const auto same = welch_t(a, b);
  EXPECT_EQ(same.p_value, 1.0);
  EXPECT_EQ(same.statistic, 0.0);
  const auto diff = welch_t(a, c);
  EXPECT_EQ(diff.p_value, 0.0);
  EXPECT_TRUE(diff.degenerate);
}

TEST(ChiSquare, IndependentTable) {
  const auto r = chi_square_test(ContingencyTable::two_by_two(10, 10, 10, 10));
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0);
  EXPECT_EQ(r.dof, 1.0);
}

TEST(ChiSquare, HandComputedTwoByThree) {
  ContingencyTable t{3, {10, 20, 30, 20, 20, 20}};
  // expected: row totals 60/60, column totals 30/40/50, n 120
  double stat = 0;
  const double obs[6] = {10, 20, 30, 20, 20, 20};
  const double exp_[6] = {15, 20, 25, 15, 20, 25};
  for (int i = 0; i < 6; ++i) stat += (obs[i] - exp_[i]) * (obs[i] - exp_[i]) / exp_[i];
  const auto r = chi_square_test(t);
  EXPECT_NEAR(r.statistic, stat, 1e-12);
  EXPECT_EQ(r.dof, 2.0);
  EXPECT_NEAR(r.p_value, std::exp(-stat / 2), 1e-12);  // chi-square sf with 2 dof
}

TEST(ChiSquare, PValueDecreasesWithStatistic) {
  double prev = 1.0;
  for (double x = 0; x < 50; x += 0.5) {
    const double p = chi_square_sf(x, 3);
    EXPECT_LE(p, prev);
    EXPECT_GE(p, 0.0);
    prev = p;
  }
}

TEST(Fisher, WorkedExampleAgainstEnumeration) {
  const auto r = fisher_exact_2x2(ContingencyTable::two_by_two(1, 9, 9, 1));
  EXPECT_NEAR(r.p_value, oracle::fisher_enumeration(1, 9, 9, 1), 1e-12);
  // Enumeration gives 1.0933e-3.
  EXPECT_NEAR(r.p_value, 1.0933e-3, 1e-6);
}

TEST(Fisher, RandomTablesAgainstEnumerationAndTransposition) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const long a = rng.below(15), b = rng.below(15), c = rng.below(15), d = rng.below(15);
    if (a + b == 0 || c + d == 0 || a + c == 0 || b + d == 0) continue;
    const double p = fisher_exact_2x2(ContingencyTable::two_by_two(a, b, c, d)).p_value;
    EXPECT_NEAR(p, oracle::fisher_enumeration(a, b, c, d), 1e-10);
    EXPECT_NEAR(fisher_exact_2x2(ContingencyTable::two_by_two(c, d, a, b)).p_value, p, 1e-12);
    EXPECT_NEAR(fisher_exact_2x2(ContingencyTable::two_by_two(b, a, d, c)).p_value, p, 1e-12);
    EXPECT_NEAR(fisher_exact_2x2(ContingencyTable::two_by_two(a, c, b, d)).p_value, p, 1e-12);
  }
}

TEST(Fisher, RejectsLargerTables) {
  EXPECT_THROW(fisher_exact_2x2(ContingencyTable{3, {1, 2, 3, 4, 5, 6}}), InvalidArgument);
}

TEST(Cochran, Routing) {
  // margins 2/40 x 21/21: two expected cells of 1.0
  const auto small = ContingencyTable::two_by_two(0, 2, 21, 19);
  EXPECT_FALSE(cochran_rule_holds(small));
  // expected 0.5 in the first cell
  const auto half = ContingencyTable::two_by_two(1, 0, 19, 20);
  EXPECT_NEAR(half.expected()[0], 0.5, 1e-12);
  EXPECT_EQ(choose_test(half).kind, TestKind::fisher_exact);
  EXPECT_EQ(choose_test(ContingencyTable::two_by_two(30, 20, 25, 25)).kind, TestKind::chi_square);
  const auto big = choose_test(ContingencyTable{3, {0, 5, 9, 1, 6, 8}});
  EXPECT_EQ(big.kind, TestKind::chi_square);
  EXPECT_TRUE(big.fallback);
}

double trapezoid(const KdeCurve& k) {
  double s = 0;
  for (std::size_t i = 1; i < k.grid.size(); ++i) s += (k.grid[i] - k.grid[i - 1]) * (k.density[i] + k.density[i - 1]) / 2;
  return s;
}

TEST(Kde, SymmetricSample) {
  const std::vector<double> s{-1, 1};
  const auto k = kde(s, 101);
  for (std::size_t i = 0; i < k.grid.size(); ++i) {
    EXPECT_NEAR(k.grid[i], -k.grid[k.grid.size() - 1 - i], 1e-12);
    EXPECT_NEAR(k.density[i], k.density[k.grid.size() - 1 - i], 1e-12);
  }
}

TEST(Kde, StandardNormalMonteCarlo) {
  Rng rng(17);
  std::vector<double> s(10000);
  for (auto& v : s) v = rng.normal();
  const auto k = kde(s, 512);
  double worst = 0;
  for (std::size_t i = 0; i < k.grid.size(); ++i) {
    const double truth = std::exp(-k.grid[i] * k.grid[i] / 2) / std::sqrt(2 * std::numbers::pi);
    worst = std::max(worst, std::abs(k.density[i] - truth));
  }
  EXPECT_LT(worst, 0.05);
  // Silverman bandwidth from the sample itself
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
  double var = 0;
  for (double v : s) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (s.size() - 1));
  const double iqr = quantile(s, 0.75) - quantile(s, 0.25);
  EXPECT_NEAR(k.bandwidth, 0.9 * std::min(sd, iqr / 1.34) * std::pow(10000.0, -0.2), 1e-3 * k.bandwidth);
}

TEST(Kde, IntegralProperty) {
  Rng rng(18);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> s(2 + rng.below(300));
    for (auto& v : s) v = rng.bernoulli(0.3) ? 5 + rng.normal() : rng.normal() * 0.5;
    const auto k = kde(s, 512);
    const double area = trapezoid(k);
    EXPECT_GE(area, 0.97);
    EXPECT_LE(area, 1.0 + 1e-9);
    EXPECT_TRUE(std::is_sorted(k.grid.begin(), k.grid.end()));
    for (double d : k.density) EXPECT_GE(d, 0.0);
  }
}

TEST(Kde, DegenerateSampleFails) {
  const std::vector<double> s{3, 3, 3};
  EXPECT_THROW(kde(s), InvalidArgument);
}

TEST(Quantile, Type7) {
  const std::vector<double> s{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(quantile(s, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(s, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(s, 0.99), 3.97);
}

}  // namespace
}  // namespace odrop::stats
