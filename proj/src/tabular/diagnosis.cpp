#include <unordered_map>

#include "odrop/error.hpp"
#include "odrop/tabular.hpp"

namespace odrop::tabular {

std::string_view to_string(Disease disease) {
  switch (disease) {
    case Disease::diabetes:
      return "diabetes";
    case Disease::dyslipidemia:
      return "dyslipidemia";
    case Disease::hypertension:
      return "hypertension";
  }
  return "diabetes";
}

Disease disease_from_string(std::string_view text) {
  if (text == "diabetes") return Disease::diabetes;
  if (text == "dyslipidemia") return Disease::dyslipidemia;
  if (text == "hypertension") return Disease::hypertension;
  throw InvalidArgument("unknown disease '" + std::string(text) + "'");
}

DiagnosticCriteria DiagnosticCriteria::acc_aha_2017() {
  DiagnosticCriteria c;
  c.hypertension.sbp_min = 130.0;
  c.hypertension.dbp_min = 80.0;
  return c;
}

std::vector<std::string> DiagnosticCriteria::columns_for(Disease disease) const {
  switch (disease) {
    case Disease::diabetes:
      return {diabetes.hba1c_column, diabetes.glucose_column, diabetes.medication_column};
    case Disease::dyslipidemia:
      return {dyslipidemia.ldl_column, dyslipidemia.hdl_column, dyslipidemia.tg_column,
              dyslipidemia.medication_column};
    case Disease::hypertension:
      return {hypertension.sbp_column, hypertension.dbp_column, hypertension.medication_column};
  }
  return {};
}

void DiagnosticCriteria::validate(const Table& table, Disease disease) const {
  const std::vector<double> thresholds =
      disease == Disease::diabetes       ? std::vector<double>{diabetes.hba1c_min, diabetes.glucose_min}
      : disease == Disease::dyslipidemia ? std::vector<double>{dyslipidemia.ldl_min,
                                                               dyslipidemia.hdl_max_exclusive,
                                                               dyslipidemia.tg_min}
                                         : std::vector<double>{hypertension.sbp_min, hypertension.dbp_min};
  for (double t : thresholds) {
    if (!(t > 0.0)) throw InvalidArgument("diagnostic thresholds must be strictly positive");
  }
  for (const auto& name : columns_for(disease)) table.column_index(name);
}

std::vector<Diagnosis> diagnose(const Table& table, const DiagnosticCriteria& criteria, Disease disease) {
  criteria.validate(table, disease);
  std::vector<std::size_t> cols;
  for (const auto& name : criteria.columns_for(disease)) cols.push_back(table.column_index(name));
  std::vector<Diagnosis> out(table.rows(), Diagnosis::healthy);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    bool complete = true;
    for (auto c : cols) complete = complete && !table.is_missing(r, c);
    if (!complete) {
      out[r] = Diagnosis::unlabelable;
      continue;
    }
    auto v = [&](std::size_t i) { return table.value(r, cols[i]); };
    bool sick = false;
    switch (disease) {
      case Disease::diabetes:
        sick = v(0) >= criteria.diabetes.hba1c_min || v(1) >= criteria.diabetes.glucose_min || v(2) != 0.0;
        break;
      case Disease::dyslipidemia:
        sick = v(0) >= criteria.dyslipidemia.ldl_min || v(1) < criteria.dyslipidemia.hdl_max_exclusive ||
               v(2) >= criteria.dyslipidemia.tg_min || v(3) != 0.0;
        break;
      case Disease::hypertension:
        sick = v(0) >= criteria.hypertension.sbp_min || v(1) >= criteria.hypertension.dbp_min || v(2) != 0.0;
        break;
    }
    out[r] = sick ? Diagnosis::diseased : Diagnosis::healthy;
  }
  return out;
}

OnsetResult onset_labels(const Table& year_t, const Table& year_t1, const DiagnosticCriteria& criteria,
                         Disease disease, std::string_view subject_column) {
  const std::size_t id_t = year_t.column_index(subject_column);
  const std::size_t id_t1 = year_t1.column_index(subject_column);
  const auto dx_t = diagnose(year_t, criteria, disease);
  const auto dx_t1 = diagnose(year_t1, criteria, disease);

  std::unordered_map<std::string, std::size_t> next_row;
  for (std::size_t r = 0; r < year_t1.rows(); ++r) {
    const std::string key = year_t1.cell_text(r, id_t1);
    if (key.empty()) continue;
    if (!next_row.emplace(key, r).second) {
      throw InvalidArgument("subject '" + key + "' appears more than once in the follow-up year");
    }
  }
  std::unordered_map<std::string, std::size_t> seen;
  OnsetResult result;
  result.labels.assign(year_t.rows(), OnsetLabel::excluded);
  for (std::size_t r = 0; r < year_t.rows(); ++r) {
    const std::string key = year_t.cell_text(r, id_t);
    if (!key.empty() && !seen.emplace(key, r).second) {
      throw InvalidArgument("subject '" + key + "' appears more than once in the baseline year");
    }
    if (dx_t[r] == Diagnosis::unlabelable) {
      ++result.unlabelable;
      continue;
    }
    if (dx_t[r] == Diagnosis::diseased) {
      ++result.prevalent;
      continue;
    }
    auto it = key.empty() ? next_row.end() : next_row.find(key);
    if (it == next_row.end()) {
      ++result.lost_to_followup;
      continue;
    }
    switch (dx_t1[it->second]) {
      case Diagnosis::unlabelable:
        ++result.unlabelable;
        break;
      case Diagnosis::diseased:
        result.labels[r] = OnsetLabel::positive;
        break;
      case Diagnosis::healthy:
        result.labels[r] = OnsetLabel::negative;
        break;
    }
  }
  return result;
}

}  // namespace odrop::tabular
