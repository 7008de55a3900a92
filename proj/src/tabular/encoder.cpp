#include <algorithm>
#include <cmath>

#include "odrop/error.hpp"
#include "odrop/tabular.hpp"

namespace odrop::tabular {

NeuralEncoder NeuralEncoder::fit(const Table& train) {
  NeuralEncoder enc;
  enc.columns_ = train.columns();
  enc.fill_ = imputation_values(train);
  const Standardizer s = standardize_fit(impute_mean(train, train));
  enc.mean_ = s.mean;
  enc.stddev_ = s.stddev;
  return enc;
}

std::size_t NeuralEncoder::output_width() const {
  std::size_t w = 0;
  for (const auto& c : columns_) {
    w += c.kind == ColumnKind::categorical ? std::max<std::size_t>(c.categories.size(), 1) : 1;
  }
  return w;
}

Matrix NeuralEncoder::transform(const Table& table) const {
  if (table.cols() != columns_.size()) throw SchemaError("encoder fitted on a different column count");
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (table.column(c).name != columns_[c].name || table.column(c).kind != columns_[c].kind) {
      throw SchemaError("encoder column " + std::to_string(c) + " is '" + columns_[c].name + "', table has '" +
                        table.column(c).name + "'");
    }
  }
  Matrix out(table.rows(), output_width(), 0.0);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    std::size_t j = 0;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const Column& col = columns_[c];
      if (col.kind == ColumnKind::categorical) {
        const std::size_t width = std::max<std::size_t>(col.categories.size(), 1);
        std::size_t code = static_cast<std::size_t>(fill_[c]);
        bool known = true;
        if (!table.is_missing(r, c)) {
          const std::string token = table.cell_text(r, c);
          auto it = std::find(col.categories.begin(), col.categories.end(), token);
          known = it != col.categories.end();
          code = static_cast<std::size_t>(it - col.categories.begin());
        }
        // unseen categories encode as all zeros
        if (known && code < width) out(r, j + code) = 1.0;
        j += width;
      } else {
        const double v = table.is_missing(r, c) ? fill_[c] : table.value(r, c);
        out(r, j++) = col.kind == ColumnKind::continuous ? (v - mean_[c]) / stddev_[c] : v;
      }
    }
  }
  return out;
}

nlohmann::json NeuralEncoder::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    nlohmann::json col{{"name", columns_[c].name},
                       {"kind", std::string(to_string(columns_[c].kind))},
                       {"fill", fill_[c]},
                       {"mean", mean_[c]},
                       {"std", stddev_[c]}};
    if (columns_[c].kind == ColumnKind::categorical) col["categories"] = columns_[c].categories;
    cols.push_back(std::move(col));
  }
  return {{"format", "odrop.encoder"}, {"version", 1}, {"columns", std::move(cols)}};
}

NeuralEncoder NeuralEncoder::from_json(const nlohmann::json& doc) {
  NeuralEncoder enc;
  try {
    for (const auto& col : doc.at("columns")) {
      Column c;
      c.name = col.at("name").get<std::string>();
      c.kind = column_kind_from_string(col.at("kind").get<std::string>());
      if (col.contains("categories")) c.categories = col.at("categories").get<std::vector<std::string>>();
      enc.columns_.push_back(std::move(c));
      enc.fill_.push_back(col.at("fill").get<double>());
      enc.mean_.push_back(col.at("mean").get<double>());
      enc.stddev_.push_back(col.at("std").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("encoder document: ") + e.what());
  }
  return enc;
}

}  // namespace odrop::tabular
