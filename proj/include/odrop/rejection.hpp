#pragma once

// Evaluation of OOD-score rejection: ranking metrics, thresholds at a target
// rejection rate, rejection curves with Kendall tau-b stability, and the
// cross-validated predictor baseline.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "odrop/gbt.hpp"
#include "odrop/matrix.hpp"

namespace odrop::rejection {

enum class MetricKind { auroc, prauc };
std::string_view to_string(MetricKind kind);
MetricKind metric_kind_from_string(std::string_view text);

// Probability that a random positive outscores a random negative, ties
// counted one half. Throws UndefinedMetric unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);
// Average precision; rows sharing a score enter the ranking together.
double prauc(std::span<const double> scores, std::span<const int> labels);
double metric(MetricKind kind, std::span<const double> scores, std::span<const int> labels);

struct TauResult {
  double tau = 0.0;
  bool defined = true;  // false when either input is constant (tau reported as 0)
};

// Tie-corrected Kendall rank correlation, O(n^2).
TauResult kendall_tau_b(std::span<const double> x, std::span<const double> y);

// Smallest t with #{score > t} <= floor(rate * n). Rates must lie in [0, 1].
double threshold_for_rate(std::span<const double> scores, double rate);

struct Partition {
  std::vector<std::uint8_t> retained;  // 1 for rows kept (score <= threshold)
  std::size_t n_rejected = 0;
  double rejection_rate = 0.0;  // rejected / total
};

Partition partition(std::span<const double> scores, double threshold);

// 0, 0.01, ..., 0.40.
std::vector<double> default_rate_grid();

struct CurvePoint {
  double rate = 0.0;           // requested
  double achieved_rate = 0.0;  // after ties
  double threshold = 0.0;
  double metric = 0.0;
  std::size_t n_retained = 0;
};

struct RejectionCurve {
  MetricKind kind = MetricKind::auroc;
  std::vector<CurvePoint> points;
  // Grid rates whose retained rows held a single class.
  std::vector<double> dropped_rates;
  double baseline = 0.0;
  double peak_rate = 0.0;
  double peak_metric = 0.0;
  TauResult tau_b;

  double improvement() const { return peak_metric - baseline; }
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// The grid must be strictly increasing within [0, 0.4] and start at 0.
// Thresholds come from `threshold_source` when it is non-empty (deployment
// mode, e.g. training-set scores) and from `ood_scores` otherwise.
RejectionCurve rejection_curve(std::span<const double> ood_scores, std::span<const double> predictor_scores,
                               std::span<const int> labels, MetricKind kind,
                               std::span<const double> rate_grid = {},
                               std::span<const double> threshold_source = {});

struct MethodReport {
  std::string method;
  RejectionCurve auroc;
  RejectionCurve prauc;
};

nlohmann::json report_json(std::span<const MethodReport> methods);

struct BaselineResult {
  std::vector<double> fold_auroc;
  std::vector<double> fold_prauc;
  double auroc_mean = 0.0;
  double auroc_std = 0.0;  // population std across folds
  double prauc_mean = 0.0;
  double prauc_std = 0.0;

  nlohmann::json to_json() const;
};

BaselineResult cv_baseline(const Matrix& features, std::span<const int> labels, std::size_t k, std::uint64_t seed,
                           const gbt::BoostConfig& config = {});

}  // namespace odrop::rejection
