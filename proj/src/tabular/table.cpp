#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "odrop/error.hpp"
#include "odrop/tabular.hpp"

namespace odrop::tabular {

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::continuous:
      return "continuous";
    case ColumnKind::categorical:
      return "categorical";
    case ColumnKind::boolean:
      return "boolean";
  }
  return "continuous";
}

ColumnKind column_kind_from_string(std::string_view text) {
  if (text == "continuous") return ColumnKind::continuous;
  if (text == "categorical") return ColumnKind::categorical;
  if (text == "boolean") return ColumnKind::boolean;
  throw InvalidArgument("unknown column kind '" + std::string(text) + "'");
}

Table::Table(std::vector<Column> columns, Matrix values, std::vector<std::uint8_t> missing)
    : columns_(std::move(columns)), values_(std::move(values)), missing_(std::move(missing)) {
  if (values_.cols() != columns_.size() && !(values_.rows() == 0 && values_.cols() == 0)) {
    throw SchemaError("value matrix width does not match the column count");
  }
  if (values_.rows() == 0 && values_.cols() == 0 && !columns_.empty()) {
    values_ = Matrix(0, columns_.size());
  }
  if (missing_.size() != values_.rows() * columns_.size()) {
    throw SchemaError("missing mask does not match the value matrix");
  }
  for (std::size_t r = 0; r < values_.rows(); ++r) {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const double v = values_(r, c);
      if (missing_[r * columns_.size() + c]) {
        values_(r, c) = kMissing;
        continue;
      }
      if (!std::isfinite(v)) {
        throw InvalidArgument("non-finite value in column '" + columns_[c].name +
                              "' is not marked missing");
      }
      if (columns_[c].kind == ColumnKind::categorical) {
        if (v < 0 || v != std::floor(v) ||
            (!columns_[c].categories.empty() && v >= static_cast<double>(columns_[c].categories.size()))) {
          throw InvalidArgument("column '" + columns_[c].name + "' holds an invalid category code");
        }
      }
    }
  }
  std::set<std::string, std::less<>> seen;
  for (const auto& col : columns_) {
    if (!seen.insert(col.name).second) throw SchemaError("duplicate column '" + col.name + "'");
  }
}

Table Table::from_matrix(std::vector<Column> columns, Matrix values) {
  std::vector<std::uint8_t> missing(values.rows() * values.cols());
  for (std::size_t i = 0; i < missing.size(); ++i) missing[i] = std::isnan(values.data()[i]) ? 1 : 0;
  return Table(std::move(columns), std::move(values), std::move(missing));
}

std::vector<std::string> Table::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const auto& c : columns_) names.push_back(c.name);
  return names;
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].name == name) return c;
  }
  return std::nullopt;
}

std::size_t Table::column_index(std::string_view name) const {
  if (auto c = find_column(name)) return *c;
  throw SchemaError("column '" + std::string(name) + "' not found");
}

std::size_t Table::missing_count(std::size_t c) const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < rows(); ++r) n += is_missing(r, c) ? 1 : 0;
  return n;
}

std::string Table::cell_text(std::size_t r, std::size_t c) const {
  if (is_missing(r, c)) return {};
  const double v = value(r, c);
  const Column& col = columns_[c];
  if (col.kind == ColumnKind::categorical && !col.categories.empty()) {
    return col.categories[static_cast<std::size_t>(v)];
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Table Table::select_columns(std::span<const std::size_t> cols) const {
  std::vector<Column> columns;
  columns.reserve(cols.size());
  for (auto c : cols) columns.push_back(columns_.at(c));
  std::vector<std::uint8_t> missing(rows() * cols.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) missing[r * cols.size() + j] = missing_[r * this->cols() + cols[j]];
  }
  return Table(std::move(columns), values_.select_cols(cols), std::move(missing));
}

Table Table::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::uint8_t> missing(rows.size() * cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(missing_.begin() + static_cast<std::ptrdiff_t>(rows[i] * cols()), cols(),
                missing.begin() + static_cast<std::ptrdiff_t>(i * cols()));
  }
  return Table(columns_, values_.select_rows(rows), std::move(missing));
}

Table Table::drop_columns(std::span<const std::string> names) const {
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < cols(); ++c) {
    if (std::find(names.begin(), names.end(), columns_[c].name) == names.end()) keep.push_back(c);
  }
  return select_columns(keep);
}

LabeledTable split_label(const Table& table, std::string_view label_column) {
  const std::size_t lc = table.column_index(label_column);
  LabeledTable out;
  out.labels.resize(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const double v = table.value(r, lc);
    if (table.is_missing(r, lc) || (v != 0.0 && v != 1.0)) {
      throw InvalidArgument("label column '" + std::string(label_column) + "' row " +
                            std::to_string(r + 1) + " is not 0 or 1");
    }
    out.labels[r] = static_cast<int>(v);
  }
  const std::string name(label_column);
  out.features = table.drop_columns(std::span<const std::string>(&name, 1));
  return out;
}

}  // namespace odrop::tabular
