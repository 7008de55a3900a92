#include <algorithm>
#include <cmath>
#include <numeric>

#include "odrop/error.hpp"
#include "odrop/rejection.hpp"

namespace odrop::rejection {
namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels, std::size_t& positives) {
  if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
  positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("labels must be 0 or 1");
    if (std::isnan(scores[i])) throw InvalidArgument("score is NaN");
    positives += static_cast<std::size_t>(labels[i]);
  }
  if (positives == 0 || positives == labels.size()) {
    throw UndefinedMetric("metric needs both classes, got " + std::to_string(positives) + " positives among " +
                          std::to_string(labels.size()) + " rows");
  }
}

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return order;
}

}  // namespace

std::string_view to_string(MetricKind kind) { return kind == MetricKind::auroc ? "auroc" : "prauc"; }

MetricKind metric_kind_from_string(std::string_view text) {
  if (text == "auroc") return MetricKind::auroc;
  if (text == "prauc") return MetricKind::prauc;
  throw InvalidArgument("unknown metric '" + std::string(text) + "'");
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t positives = 0;
  check_inputs(scores, labels, positives);
  const auto order = order_by_score(scores, false);
  // Sum of positive midranks (1-based).
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t group_pos = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      group_pos += static_cast<std::size_t>(labels[order[j]]);
      ++j;
    }
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += midrank * static_cast<double>(group_pos);
    i = j;
  }
  const double np = static_cast<double>(positives);
  const double nn = static_cast<double>(labels.size() - positives);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double prauc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t positives = 0;
  check_inputs(scores, labels, positives);
  const auto order = order_by_score(scores, true);
  double ap = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t group_pos = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      group_pos += static_cast<std::size_t>(labels[order[j]]);
      ++j;
    }
    tp += group_pos;
    seen = j;
    if (group_pos > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(seen);
      ap += precision * static_cast<double>(group_pos) / static_cast<double>(positives);
    }
    i = j;
  }
  return ap;
}

double metric(MetricKind kind, std::span<const double> scores, std::span<const int> labels) {
  return kind == MetricKind::auroc ? auroc(scores, labels) : prauc(scores, labels);
}

TauResult kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("kendall_tau_b inputs differ in length");
  if (x.size() < 2) throw InvalidArgument("kendall_tau_b needs at least two points");
  const std::size_t n = x.size();
  long long concordant_minus_discordant = 0;
  long long tied_x = 0, tied_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int sx = (x[i] < x[j]) - (x[i] > x[j]);
      const int sy = (y[i] < y[j]) - (y[i] > y[j]);
      if (sx == 0) ++tied_x;
      if (sy == 0) ++tied_y;
      concordant_minus_discordant += sx * sy;
    }
  }
  const long long pairs = static_cast<long long>(n * (n - 1) / 2);
  if (tied_x == pairs || tied_y == pairs) return {0.0, false};
  const double denom = std::sqrt(static_cast<double>(pairs - tied_x) * static_cast<double>(pairs - tied_y));
  return {static_cast<double>(concordant_minus_discordant) / denom, true};
}

}  // namespace odrop::rejection
