#pragma once

// Shift-confirmation statistics: Welch's t-test, chi-square and Fisher's
// exact test selected by Cochran's rule, and Gaussian kernel density
// estimates for distribution plots.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace odrop::stats {

// Regularized incomplete beta I_x(a, b), continued fraction by modified Lentz.
double regularized_incomplete_beta(double a, double b, double x);
// Regularized lower / upper incomplete gamma P(a, x), Q(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Two-sided tail probability P(|T| >= |t|) of Student's t with `dof` degrees.
double student_t_two_sided_p(double t, double dof);
// Upper tail P(X >= x) of the chi-square distribution.
double chi_square_sf(double x, double dof);

enum class TestKind { welch_t, chi_square, fisher_exact };
std::string_view to_string(TestKind kind);

struct TestResult {
  TestKind kind = TestKind::welch_t;
  double statistic = 0.0;
  double dof = 0.0;  // Welch and chi-square only
  double p_value = 1.0;
  // Welch with both variances zero and different means.
  bool degenerate = false;
  // choose_test wanted Fisher on a table larger than 2x2 and fell back to
  // chi-square.
  bool fallback = false;

  friend bool operator==(const TestResult&, const TestResult&) = default;
};

TestResult welch_t(std::span<const double> a, std::span<const double> b);

// Counts for a 2 x K contingency table, row-major.
struct ContingencyTable {
  std::size_t cols = 0;
  std::vector<std::uint64_t> counts;  // 2 * cols

  std::uint64_t at(std::size_t r, std::size_t c) const { return counts[r * cols + c]; }
  static ContingencyTable two_by_two(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d);
  // Expected counts under independence, row-major.
  std::vector<double> expected() const;
};

// Pearson chi-square without continuity correction.
TestResult chi_square_test(const ContingencyTable& table);
// Two-sided: sum of hypergeometric probabilities not exceeding the observed
// table's probability. Throws InvalidArgument unless the table is 2 x 2.
TestResult fisher_exact_2x2(const ContingencyTable& table);
// Cochran's rule: chi-square when every expected count is >= 1 and at least
// 80% are >= 5, otherwise Fisher for 2 x 2 tables and chi-square (flagged as
// a fallback) for larger ones.
TestResult choose_test(const ContingencyTable& table);
bool cochran_rule_holds(const ContingencyTable& table);

struct KdeCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

// Gaussian KDE with Silverman's bandwidth 0.9 * min(sd, IQR / 1.34) * n^(-1/5)
// on `grid_size` points spanning the data range +- 4 bandwidths.
KdeCurve kde(std::span<const double> sample, std::size_t grid_size = 512);

// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::span<const double> sample, double q);

}  // namespace odrop::stats
