#include <cmath>
#include <map>

#include "odrop/error.hpp"
#include "odrop/tabular.hpp"

namespace odrop::tabular {
namespace {

void require_same_schema(const Table& a, const Table& b) {
  if (a.cols() != b.cols()) throw SchemaError("tables have different column counts");
  for (std::size_t c = 0; c < a.cols(); ++c) {
    if (a.column(c).name != b.column(c).name || a.column(c).kind != b.column(c).kind) {
      throw SchemaError("column " + std::to_string(c) + " differs: '" + a.column(c).name + "' vs '" +
                        b.column(c).name + "'");
    }
  }
}

}  // namespace

Table filter_columns_by_missingness(const Table& table, double max_missing_fraction) {
  if (!(max_missing_fraction >= 0.0 && max_missing_fraction <= 1.0)) {
    throw InvalidArgument("max_missing_fraction must lie in [0, 1]");
  }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (max_missing_fraction == 1.0) {
      keep.push_back(c);
      continue;
    }
    const double fraction = table.rows() == 0
                                ? 0.0
                                : static_cast<double>(table.missing_count(c)) / static_cast<double>(table.rows());
    if (fraction < max_missing_fraction) keep.push_back(c);
  }
  return table.select_columns(keep);
}

std::vector<double> imputation_values(const Table& source) {
  std::vector<double> fill(source.cols(), 0.0);
  for (std::size_t c = 0; c < source.cols(); ++c) {
    const bool continuous = source.column(c).kind == ColumnKind::continuous;
    double sum = 0.0;
    std::size_t count = 0;
    std::map<double, std::size_t> freq;
    for (std::size_t r = 0; r < source.rows(); ++r) {
      if (source.is_missing(r, c)) continue;
      ++count;
      if (continuous) {
        sum += source.value(r, c);
      } else {
        ++freq[source.value(r, c)];
      }
    }
    if (count == 0) {
      throw InvalidArgument("column '" + source.column(c).name + "' is entirely missing in the source table");
    }
    if (continuous) {
      fill[c] = sum / static_cast<double>(count);
    } else {
      // std::map iterates codes ascending, so ties keep the smallest code
      std::size_t best = 0;
      for (const auto& [code, n] : freq) {
        if (n > best) {
          best = n;
          fill[c] = code;
        }
      }
    }
  }
  return fill;
}

Table impute_mean(const Table& table, const Table& source) {
  require_same_schema(table, source);
  const std::vector<double> fill = imputation_values(source);
  Matrix values = table.values();
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      if (table.is_missing(r, c)) values(r, c) = fill[c];
    }
  }
  return Table(table.columns(), std::move(values), std::vector<std::uint8_t>(table.rows() * table.cols(), 0));
}

Standardizer standardize_fit(const Table& table) {
  if (table.rows() < 2) throw InvalidArgument("standardize_fit needs at least two rows");
  Standardizer s;
  s.column_names = table.column_names();
  s.applies.assign(table.cols(), false);
  s.mean.assign(table.cols(), 0.0);
  s.stddev.assign(table.cols(), 1.0);
  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (table.column(c).kind != ColumnKind::continuous) continue;
    s.applies[c] = true;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (table.is_missing(r, c)) continue;
      sum += table.value(r, c);
      ++n;
    }
    if (n == 0) continue;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (table.is_missing(r, c)) continue;
      const double d = table.value(r, c) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    s.mean[c] = mean;
    // constant columns: substitute 1 so apply() maps them to zero
    s.stddev[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

namespace {

Table map_continuous(const Standardizer& s, const Table& table, bool forward) {
  if (table.column_names() != s.column_names) {
    throw SchemaError("standardizer was fitted on a different column set");
  }
  Matrix values = table.values();
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      if (!s.applies[c] || table.is_missing(r, c)) continue;
      values(r, c) = forward ? (values(r, c) - s.mean[c]) / s.stddev[c] : values(r, c) * s.stddev[c] + s.mean[c];
    }
  }
  return Table(table.columns(), std::move(values),
               std::vector<std::uint8_t>(table.missing_mask().begin(), table.missing_mask().end()));
}

}  // namespace

Table Standardizer::apply(const Table& table) const { return map_continuous(*this, table, true); }
Table Standardizer::invert(const Table& table) const { return map_continuous(*this, table, false); }

}  // namespace odrop::tabular
