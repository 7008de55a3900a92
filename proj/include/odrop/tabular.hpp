#pragma once

// Column-typed tabular datasets: CSV ingestion, column filtering,
// imputation, standardization, diagnostic labeling and stratified folds.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "odrop/matrix.hpp"

namespace odrop::tabular {

enum class ColumnKind { continuous, categorical, boolean };

std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view text);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  // Token for each integer code, in first-appearance order. Empty unless the
  // column is categorical.
  std::vector<std::string> categories;

  friend bool operator==(const Column&, const Column&) = default;
};

// Immutable after construction. Missing cells hold NaN in `values` and are
// flagged in the mask; non-missing cells are always finite numbers.
class Table {
 public:
  Table() = default;
  Table(std::vector<Column> columns, Matrix values, std::vector<std::uint8_t> missing);
  // Builds a table from a dense matrix; NaN cells become missing.
  static Table from_matrix(std::vector<Column> columns, Matrix values);

  std::size_t rows() const { return values_.rows(); }
  std::size_t cols() const { return columns_.size(); }

  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t c) const { return columns_[c]; }
  std::vector<std::string> column_names() const;
  std::optional<std::size_t> find_column(std::string_view name) const;
  // Throws SchemaError when the column does not exist.
  std::size_t column_index(std::string_view name) const;

  const Matrix& values() const { return values_; }
  double value(std::size_t r, std::size_t c) const { return values_(r, c); }
  bool is_missing(std::size_t r, std::size_t c) const { return missing_[r * cols() + c] != 0; }
  std::span<const std::uint8_t> missing_mask() const { return missing_; }
  std::size_t missing_count(std::size_t c) const;

  // Textual key of a cell: the category token for categorical columns, the
  // shortest round-trip number otherwise, empty when missing.
  std::string cell_text(std::size_t r, std::size_t c) const;

  Table select_columns(std::span<const std::size_t> cols) const;
  Table select_rows(std::span<const std::size_t> rows) const;
  // Copy of the table without the named columns (names that are absent are
  // ignored).
  Table drop_columns(std::span<const std::string> names) const;

 private:
  std::vector<Column> columns_;
  Matrix values_;
  std::vector<std::uint8_t> missing_;
};

// Column-kind overrides keyed by column name.
using KindOverrides = std::map<std::string, ColumnKind, std::less<>>;

// Parses an RFC-4180 style CSV file with a mandatory header. Empty cells are
// missing. Columns without an override are continuous when every non-empty
// cell parses as a number, boolean when every cell is a true/false token and
// categorical otherwise. When `<path>.meta.json` exists its column kinds and
// category maps are applied before the overrides.
Table load_csv(const std::filesystem::path& path, const KindOverrides& kind_overrides = {});
Table parse_csv(std::string_view text, const KindOverrides& kind_overrides = {});

// Writes the CSV and the `<path>.meta.json` sidecar describing column kinds
// and category code maps. Returns the sidecar path.
std::filesystem::path save_csv(const Table& table, const std::filesystem::path& path);
std::string to_csv(const Table& table);
std::string metadata_json(const Table& table);

// Keeps the columns whose missing fraction is strictly below the threshold.
Table filter_columns_by_missingness(const Table& table, double max_missing_fraction);

// Fills missing cells from statistics of `source`: the column mean for
// continuous columns, the mode (smallest code on ties) otherwise.
Table impute_mean(const Table& table, const Table& source);
// The per-column fill values impute_mean uses; throws InvalidArgument for a
// column with no observed cell.
std::vector<double> imputation_values(const Table& source);

struct Standardizer {
  std::vector<std::string> column_names;
  std::vector<bool> applies;  // true for continuous columns
  std::vector<double> mean;
  std::vector<double> stddev;  // population std; 1 for constant columns

  Table apply(const Table& table) const;
  Table invert(const Table& table) const;
};

Standardizer standardize_fit(const Table& table);

enum class Disease { diabetes, dyslipidemia, hypertension };
std::string_view to_string(Disease disease);
Disease disease_from_string(std::string_view text);

struct DiagnosticCriteria {
  struct Diabetes {
    std::string hba1c_column = "HbA1c";
    std::string glucose_column = "fasting_glucose";
    std::string medication_column = "diabetes_medication";
    double hba1c_min = 6.5;     // %
    double glucose_min = 126.0;  // mg/dL
  } diabetes;
  struct Dyslipidemia {
    std::string ldl_column = "LDL";
    std::string hdl_column = "HDL";
    std::string tg_column = "TG";
    std::string medication_column = "dyslipidemia_medication";
    double ldl_min = 120.0;           // mg/dL
    double hdl_max_exclusive = 40.0;  // mg/dL
    double tg_min = 150.0;            // mg/dL
  } dyslipidemia;
  struct Hypertension {
    std::string sbp_column = "SBP";
    std::string dbp_column = "DBP";
    std::string medication_column = "hypertension_medication";
    double sbp_min = 140.0;  // mmHg
    double dbp_min = 90.0;   // mmHg
  } hypertension;

  // 130/80 mmHg blood-pressure thresholds instead of 140/90.
  static DiagnosticCriteria acc_aha_2017();

  std::vector<std::string> columns_for(Disease disease) const;
  // Throws InvalidArgument for non-positive thresholds and SchemaError when
  // a referenced column is absent from `table`.
  void validate(const Table& table, Disease disease) const;
};

enum class Diagnosis : std::uint8_t { healthy, diseased, unlabelable };

std::vector<Diagnosis> diagnose(const Table& table, const DiagnosticCriteria& criteria,
                                Disease disease);

enum class OnsetLabel : std::uint8_t { negative, positive, excluded };

struct OnsetResult {
  std::vector<OnsetLabel> labels;  // one per row of the year-t table
  std::size_t prevalent = 0;       // diseased at year t
  std::size_t unlabelable = 0;     // missing criterion cells in either year
  std::size_t lost_to_followup = 0;  // subject absent at year t+1
};

OnsetResult onset_labels(const Table& year_t, const Table& year_t1,
                         const DiagnosticCriteria& criteria, Disease disease,
                         std::string_view subject_column);

struct FoldAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> fold;  // fold index per row

  std::vector<std::size_t> train_rows(std::size_t f) const;
  std::vector<std::size_t> test_rows(std::size_t f) const;
};

FoldAssignment stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed);

// Extracts a 0/1 label column (non-missing, values 0 or 1) and returns the
// remaining columns as features.
struct LabeledTable {
  Table features;
  std::vector<int> labels;
};
LabeledTable split_label(const Table& table, std::string_view label_column);

// Preprocessing for the neural consumers: imputation, standardization of
// continuous columns and one-hot expansion of categorical ones. Categories
// are matched by token, so tables loaded from different files agree.
class NeuralEncoder {
 public:
  NeuralEncoder() = default;
  static NeuralEncoder fit(const Table& train);

  Matrix transform(const Table& table) const;
  std::size_t output_width() const;
  const std::vector<Column>& columns() const { return columns_; }

  // JSON round trip (used inside scorer artifacts).
  nlohmann::json to_json() const;
  static NeuralEncoder from_json(const nlohmann::json& doc);

  friend bool operator==(const NeuralEncoder&, const NeuralEncoder&) = default;

 private:
  std::vector<Column> columns_;
  std::vector<double> fill_;    // imputation value (code for categorical)
  std::vector<double> mean_;    // continuous only
  std::vector<double> stddev_;  // continuous only
};

}  // namespace odrop::tabular
