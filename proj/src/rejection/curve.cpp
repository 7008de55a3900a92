#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "odrop/error.hpp"
#include "odrop/rejection.hpp"
#include "odrop/text.hpp"

namespace odrop::rejection {

double threshold_for_rate(std::span<const double> scores, double rate) {
  if (scores.empty()) throw InvalidArgument("threshold_for_rate needs at least one score");
  if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidArgument("rejection rate must lie in [0, 1]");
  std::vector<double> sorted(scores.begin(), scores.end());
  for (double s : sorted) {
    if (std::isnan(s)) throw InvalidArgument("score is NaN");
  }
  const auto n = sorted.size();
  // The 1e-9 absorbs grid rates such as 0.07 that are not exact in binary.
  const auto max_rejected = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
  if (max_rejected >= n) return -std::numeric_limits<double>::infinity();
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(max_rejected), sorted.end(),
                   std::greater<>());
  return sorted[max_rejected];
}

Partition partition(std::span<const double> scores, double threshold) {
  Partition out;
  out.retained.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool reject = scores[i] > threshold;
    out.retained[i] = reject ? 0 : 1;
    out.n_rejected += reject ? 1 : 0;
  }
  out.rejection_rate =
      scores.empty() ? 0.0 : static_cast<double>(out.n_rejected) / static_cast<double>(scores.size());
  return out;
}

std::vector<double> default_rate_grid() {
  std::vector<double> grid(41);
  for (int i = 0; i <= 40; ++i) grid[i] = i / 100.0;
  return grid;
}

RejectionCurve rejection_curve(std::span<const double> ood_scores, std::span<const double> predictor_scores,
                               std::span<const int> labels, MetricKind kind, std::span<const double> rate_grid,
                               std::span<const double> threshold_source) {
  const std::size_t n = ood_scores.size();
  if (predictor_scores.size() != n || labels.size() != n) {
    throw InvalidArgument("ood scores, predictor scores and labels differ in length");
  }
  if (n == 0) throw InvalidArgument("rejection_curve needs at least one row");
  std::vector<double> default_grid;
  if (rate_grid.empty()) {
    default_grid = default_rate_grid();
    rate_grid = default_grid;
  }
  if (rate_grid.front() != 0.0) throw InvalidArgument("rate grid must start at 0");
  for (std::size_t i = 0; i < rate_grid.size(); ++i) {
    if (!(rate_grid[i] >= 0.0 && rate_grid[i] <= 0.4 + 1e-12)) {
      throw InvalidArgument("rate grid values must lie in [0, 0.4]");
    }
    if (i > 0 && !(rate_grid[i] > rate_grid[i - 1])) throw InvalidArgument("rate grid must be strictly increasing");
  }
  const auto source = threshold_source.empty() ? ood_scores : threshold_source;

  RejectionCurve curve;
  curve.kind = kind;
  std::vector<double> kept_scores;
  std::vector<int> kept_labels;
  for (double rate : rate_grid) {
    const double t = threshold_for_rate(source, rate);
    const Partition part = partition(ood_scores, t);
    kept_scores.clear();
    kept_labels.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (part.retained[i]) {
        kept_scores.push_back(predictor_scores[i]);
        kept_labels.push_back(labels[i]);
      }
    }
    double value = 0.0;
    try {
      value = metric(kind, kept_scores, kept_labels);
    } catch (const UndefinedMetric&) {
      if (rate == 0.0) throw;
      curve.dropped_rates.push_back(rate);
      continue;
    }
    curve.points.push_back({rate, part.rejection_rate, t, value, kept_scores.size()});
  }

  curve.baseline = curve.points.front().metric;
  auto peak = curve.points.begin();
  for (auto it = curve.points.begin(); it != curve.points.end(); ++it) {
    if (it->metric > peak->metric) peak = it;
  }
  curve.peak_rate = peak->rate;
  curve.peak_metric = peak->metric;
  if (curve.points.size() >= 2) {
    std::vector<double> rates, values;
    for (const auto& p : curve.points) {
      rates.push_back(p.rate);
      values.push_back(p.metric);
    }
    curve.tau_b = kendall_tau_b(rates, values);
  } else {
    curve.tau_b = {0.0, false};
  }
  return curve;
}

nlohmann::json RejectionCurve::to_json() const {
  nlohmann::json doc;
  doc["metric"] = std::string(to_string(kind));
  doc["baseline"] = baseline;
  doc["peak"] = {{"rate", peak_rate}, {"metric", peak_metric}};
  doc["improvement"] = improvement();
  doc["rejection_rate_at_peak"] = peak_rate;
  doc["tau_b"] = tau_b.tau;
  doc["tau_b_defined"] = tau_b.defined;
  doc["dropped_rates"] = dropped_rates;
  auto& pts = doc["points"] = nlohmann::json::array();
  for (const auto& p : points) {
    pts.push_back({{"rate", p.rate},
                   {"achieved_rate", p.achieved_rate},
                   {"threshold", p.threshold},
                   {"metric", p.metric},
                   {"n_retained", p.n_retained}});
  }
  return doc;
}

std::string RejectionCurve::to_csv() const {
  std::ostringstream out;
  out << "rate," << to_string(kind) << ",n_retained,achieved_rate,threshold\n";
  for (const auto& p : points) {
    out << format_number(p.rate) << ',' << format_number(p.metric) << ',' << p.n_retained << ','
        << format_number(p.achieved_rate) << ',' << format_number(p.threshold) << '\n';
  }
  return out.str();
}

nlohmann::json report_json(std::span<const MethodReport> methods) {
  nlohmann::json doc;
  doc["format"] = "odrop.report";
  doc["version"] = 1;
  auto& list = doc["methods"] = nlohmann::json::array();
  for (const auto& m : methods) {
    list.push_back({{"method", m.method}, {"auroc", m.auroc.to_json()}, {"prauc", m.prauc.to_json()}});
  }
  return doc;
}

}  // namespace odrop::rejection
