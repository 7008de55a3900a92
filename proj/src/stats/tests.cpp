#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "odrop/error.hpp"
#include "odrop/stats.hpp"

namespace odrop::stats {

std::string_view to_string(TestKind kind) {
  switch (kind) {
    case TestKind::welch_t:
      return "welch_t";
    case TestKind::chi_square:
      return "chi_square";
    case TestKind::fisher_exact:
      return "fisher_exact";
  }
  return "welch_t";
}

namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
};

Moments moments(std::span<const double> x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (double v : x) m.variance += (v - m.mean) * (v - m.mean);
  m.variance /= static_cast<double>(x.size() - 1);
  return m;
}

double log_choose(std::uint64_t n, std::uint64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

void check_margins(const ContingencyTable& t) {
  if (t.counts.size() != 2 * t.cols || t.cols < 2) {
    throw InvalidArgument("contingency table must be 2 x K with K >= 2");
  }
  for (std::size_t r = 0; r < 2; ++r) {
    std::uint64_t s = 0;
    for (std::size_t c = 0; c < t.cols; ++c) s += t.at(r, c);
    if (s == 0) throw InvalidArgument("contingency table has an all-zero row");
  }
  for (std::size_t c = 0; c < t.cols; ++c) {
    if (t.at(0, c) + t.at(1, c) == 0) throw InvalidArgument("contingency table has an all-zero column");
  }
}

}  // namespace

TestResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("Welch's t-test needs at least two values per sample");
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  TestResult r;
  r.kind = TestKind::welch_t;
  const double sa = ma.variance / na;
  const double sb = mb.variance / nb;
  const double se2 = sa + sb;
  if (se2 == 0.0) {
    r.dof = na + nb - 2.0;
    if (ma.mean == mb.mean) {
      r.statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.statistic = ma.mean > mb.mean ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
      r.degenerate = true;
    }
    return r;
  }
  r.statistic = (ma.mean - mb.mean) / std::sqrt(se2);
  r.dof = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  r.p_value = std::clamp(student_t_two_sided_p(r.statistic, r.dof), 0.0, 1.0);
  return r;
}

ContingencyTable ContingencyTable::two_by_two(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  return ContingencyTable{2, {a, b, c, d}};
}

std::vector<double> ContingencyTable::expected() const {
  std::vector<double> rows(2, 0.0), col(cols, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = static_cast<double>(at(r, c));
      rows[r] += v;
      col[c] += v;
      total += v;
    }
  }
  std::vector<double> e(2 * cols);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < cols; ++c) e[r * cols + c] = total > 0.0 ? rows[r] * col[c] / total : 0.0;
  }
  return e;
}

TestResult chi_square_test(const ContingencyTable& table) {
  check_margins(table);
  const auto e = table.expected();
  double stat = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double diff = static_cast<double>(table.counts[i]) - e[i];
    stat += diff * diff / e[i];
  }
  TestResult r;
  r.kind = TestKind::chi_square;
  r.statistic = stat;
  r.dof = static_cast<double>(table.cols - 1);
  r.p_value = std::clamp(chi_square_sf(stat, r.dof), 0.0, 1.0);
  return r;
}

TestResult fisher_exact_2x2(const ContingencyTable& table) {
  if (table.cols != 2 || table.counts.size() != 4) {
    throw InvalidArgument("Fisher's exact test is only supported for 2 x 2 tables");
  }
  check_margins(table);
  const std::uint64_t a = table.at(0, 0), b = table.at(0, 1), c = table.at(1, 0), d = table.at(1, 1);
  const std::uint64_t row0 = a + b, col0 = a + c, n = a + b + c + d;
  auto log_p = [&](std::uint64_t x) {
    return log_choose(col0, x) + log_choose(n - col0, row0 - x) - log_choose(n, row0);
  };
  const std::uint64_t lo = row0 > n - col0 ? row0 - (n - col0) : 0;
  const std::uint64_t hi = std::min(row0, col0);
  const double observed = log_p(a);
  // relative slack so tables tied with the observed one are counted
  const double cutoff = observed + 1e-7;
  double p = 0.0;
  for (std::uint64_t x = lo; x <= hi; ++x) {
    const double lp = log_p(x);
    if (lp <= cutoff) p += std::exp(lp);
  }
  TestResult r;
  r.kind = TestKind::fisher_exact;
  const double bc = static_cast<double>(b) * static_cast<double>(c);
  r.statistic = bc == 0.0 ? std::numeric_limits<double>::infinity()
                          : static_cast<double>(a) * static_cast<double>(d) / bc;
  r.p_value = std::clamp(p, 0.0, 1.0);
  return r;
}

bool cochran_rule_holds(const ContingencyTable& table) {
  const auto e = table.expected();
  std::size_t at_least_five = 0;
  for (double v : e) {
    if (v < 1.0) return false;
    if (v >= 5.0) ++at_least_five;
  }
  return static_cast<double>(at_least_five) >= 0.8 * static_cast<double>(e.size());
}

TestResult choose_test(const ContingencyTable& table) {
  check_margins(table);
  if (cochran_rule_holds(table)) return chi_square_test(table);
  if (table.cols == 2) return fisher_exact_2x2(table);
  TestResult r = chi_square_test(table);
  r.fallback = true;
  return r;
}

}  // namespace odrop::stats
