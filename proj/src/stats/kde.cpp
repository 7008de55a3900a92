#include <algorithm>
#include <cmath>
#include <numbers>

#include "odrop/error.hpp"
#include "odrop/stats.hpp"

namespace odrop::stats {

double quantile(std::span<const double> sample, double q) {
  if (sample.empty()) throw InvalidArgument("quantile of an empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

KdeCurve kde(std::span<const double> sample, std::size_t grid_size) {
  if (grid_size < 2) throw InvalidArgument("kde needs at least two grid points");
  for (double v : sample) {
    if (!std::isfinite(v)) throw InvalidArgument("kde sample contains a non-finite value");
  }
  const auto [min_it, max_it] = std::minmax_element(sample.begin(), sample.end());
  if (sample.size() < 2 || *min_it == *max_it) {
    throw InvalidArgument("kde needs at least two distinct values");
  }
  const double n = static_cast<double>(sample.size());
  double mean = 0.0;
  for (double v : sample) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : sample) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double iqr = quantile(sample, 0.75) - quantile(sample, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  KdeCurve curve;
  curve.bandwidth = 0.9 * spread * std::pow(n, -0.2);
  const double h = curve.bandwidth;
  const double lo = *min_it - 4.0 * h;
  const double hi = *max_it + 4.0 * h;
  curve.grid.resize(grid_size);
  curve.density.resize(grid_size);
  const double step = (hi - lo) / static_cast<double>(grid_size - 1);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t k = 0; k < grid_size; ++k) {
    const double g = k + 1 == grid_size ? hi : lo + step * static_cast<double>(k);
    double acc = 0.0;
    for (double v : sample) {
      const double u = (g - v) / h;
      acc += std::exp(-0.5 * u * u);
    }
    curve.grid[k] = g;
    curve.density[k] = acc * norm;
  }
  return curve;
}

}  // namespace odrop::stats
