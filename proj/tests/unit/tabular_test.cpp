#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "generators.hpp"
#include "odrop/error.hpp"
#include "odrop/tabular.hpp"

namespace odrop::tabular {
namespace {

using odrop::testing::TempDir;

TEST(Csv, CleanRows) {
  const auto t = parse_csv("a,b,c\n1,2,3\n4,5,6\n");
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  for (auto m : t.missing_mask()) EXPECT_EQ(m, 0);
  EXPECT_DOUBLE_EQ(t.value(1, 2), 6.0);
}

TEST(Csv, EmptyCellIsMissingOnlyThere) {
  const auto t = parse_csv("HbA1c,glucose\n5.1,90\n,101\n6.0,88\n");
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(t.is_missing(r, c), r == 1 && c == 0);
  }
  EXPECT_EQ(t.missing_count(0), 1u);
}

TEST(Csv, ShortRowCitesRow) {
  try {
    parse_csv("a,b,c\n1,2,3\n4,5,6\n7,8\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
}

TEST(Csv, KindsAndQuoting) {
  const auto t = parse_csv("id,sex,smoker,x\n\"a,1\",M,true,1.5\nb,F,false,\nc,M,,2\n");
  EXPECT_EQ(t.column(0).kind, ColumnKind::categorical);
  EXPECT_EQ(t.cell_text(0, 0), "a,1");
  EXPECT_EQ(t.column(1).kind, ColumnKind::categorical);
  EXPECT_EQ(t.column(2).kind, ColumnKind::boolean);
  EXPECT_TRUE(t.is_missing(2, 2));
  EXPECT_EQ(t.column(3).kind, ColumnKind::continuous);
}

TEST(Csv, SaveLoadRoundTripKeepsCategoryCodes) {
  TempDir dir("csv");
  const auto t = parse_csv("site,v\nB,1\nA,2\nB,\n");
  save_csv(t, dir.path() / "t.csv");
  const auto back = load_csv(dir.path() / "t.csv");
  EXPECT_EQ(back.column(0).categories, t.column(0).categories);
  EXPECT_EQ(back.values().column(0), t.values().column(0));
  EXPECT_TRUE(back.is_missing(2, 1));
}

TEST(Missingness, StrictThreshold) {
  const auto t = parse_csv("full,half,most\n1,1,\n2,,\n3,3,\n4,,4\n");
  auto kept = filter_columns_by_missingness(t, 0.5);
  EXPECT_EQ(kept.column_names(), (std::vector<std::string>{"full"}));
  EXPECT_EQ(filter_columns_by_missingness(t, 1.0).cols(), 3u);
  // idempotent
  EXPECT_EQ(filter_columns_by_missingness(kept, 0.5).column_names(), kept.column_names());
}

TEST(Imputation, MeanFill) {
  const auto t = parse_csv("v,w\n1,0\n3,0\n,0\n");
  const auto out = impute_mean(t, t);
  EXPECT_DOUBLE_EQ(out.value(2, 0), 2.0);
  EXPECT_FALSE(out.is_missing(2, 0));
  const auto clean = parse_csv("a,b\n1,2\n3,4\n");
  const auto same = impute_mean(clean, clean);
  EXPECT_EQ(same.values(), clean.values());
}

TEST(Imputation, FullyMissingSourceColumnFails) {
  const auto t = parse_csv("a,b\n1,\n2,\n");
  EXPECT_THROW(impute_mean(t, t), InvalidArgument);
}

TEST(Standardize, ConstantColumnAndHandExample) {
  const auto t = parse_csv("c,v\n2,0\n2,2\n2,0\n2,2\n");
  const auto s = standardize_fit(t);
  EXPECT_DOUBLE_EQ(s.stddev[0], 1.0);
  EXPECT_DOUBLE_EQ(s.mean[1], 1.0);
  EXPECT_DOUBLE_EQ(s.stddev[1], 1.0);
  const auto z = s.apply(t);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_DOUBLE_EQ(z.value(r, 0), 0.0);
    EXPECT_DOUBLE_EQ(z.value(r, 1), r % 2 ? 1.0 : -1.0);
  }
}

TEST(Standardize, RoundTripProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = odrop::testing::random_matrix(rng, 2 + rng.below(30), 1 + rng.below(6), rng.uniform(0.1, 100));
    const auto t = odrop::testing::continuous_table(x);
    const auto s = standardize_fit(t);
    const auto back = s.invert(s.apply(t));
    for (std::size_t i = 0; i < x.values().size(); ++i) {
      EXPECT_NEAR(back.values().values()[i], x.values()[i], 1e-9 * (1 + std::abs(x.values()[i])));
    }
  }
}

// Table 3 criteria, one row per case.
Table criteria_table(const std::vector<std::vector<double>>& rows, const std::vector<std::string>& names) {
  std::vector<Column> cols;
  for (const auto& n : names) cols.push_back({n, ColumnKind::continuous, {}});
  Matrix m(rows.size(), names.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < names.size(); ++c) m(r, c) = rows[r][c];
  return Table::from_matrix(cols, m);
}

TEST(Diagnosis, DiabetesBoundaries) {
  const DiagnosticCriteria c;
  const auto t = criteria_table({{6.5, 100, 0}, {6.4, 125, 0}, {6.4, 126, 0}, {5.0, 90, 1}, {6.49999, 125.9999, 0}},
                                {"HbA1c", "fasting_glucose", "diabetes_medication"});
  const auto dx = diagnose(t, c, Disease::diabetes);
  EXPECT_EQ(dx, (std::vector<Diagnosis>{Diagnosis::diseased, Diagnosis::healthy, Diagnosis::diseased,
                                        Diagnosis::diseased, Diagnosis::healthy}));
}

TEST(Diagnosis, DyslipidemiaBoundaries) {
  const DiagnosticCriteria c;
  const auto t = criteria_table({{119, 40, 149, 1},
                                 {119, 40, 149, 0},
                                 {120, 40, 149, 0},
                                 {119, 39.9, 149, 0},
                                 {119, 40, 150, 0}},
                                {"LDL", "HDL", "TG", "dyslipidemia_medication"});
  const auto dx = diagnose(t, c, Disease::dyslipidemia);
  EXPECT_EQ(dx, (std::vector<Diagnosis>{Diagnosis::diseased, Diagnosis::healthy, Diagnosis::diseased,
                                        Diagnosis::diseased, Diagnosis::diseased}));
}

TEST(Diagnosis, HypertensionBoundariesAndGuidelineVariant) {
  const auto t = criteria_table({{139, 89, 0}, {140, 60, 0}, {120, 90, 0}, {110, 70, 1}, {130, 79, 0}, {129, 80, 0}},
                                {"SBP", "DBP", "hypertension_medication"});
  EXPECT_EQ(diagnose(t, DiagnosticCriteria{}, Disease::hypertension),
            (std::vector<Diagnosis>{Diagnosis::healthy, Diagnosis::diseased, Diagnosis::diseased, Diagnosis::diseased,
                                    Diagnosis::healthy, Diagnosis::healthy}));
  EXPECT_EQ(diagnose(t, DiagnosticCriteria::acc_aha_2017(), Disease::hypertension),
            (std::vector<Diagnosis>{Diagnosis::diseased, Diagnosis::diseased, Diagnosis::diseased,
                                    Diagnosis::diseased, Diagnosis::diseased, Diagnosis::diseased}));
}

TEST(Diagnosis, MissingCriterionIsUnlabelable) {
  const auto t = parse_csv("HbA1c,fasting_glucose,diabetes_medication\n,90,false\n5,90,false\n");
  const auto dx = diagnose(t, DiagnosticCriteria{}, Disease::diabetes);
  EXPECT_EQ(dx[0], Diagnosis::unlabelable);
  EXPECT_EQ(dx[1], Diagnosis::healthy);
}

TEST(Diagnosis, MonotoneInHbA1c) {
  Rng rng(5);
  const DiagnosticCriteria c;
  for (int i = 0; i < 200; ++i) {
    const double h = rng.uniform(4, 9), g = rng.uniform(70, 140), bump = rng.uniform(0, 3);
    const auto t = criteria_table({{h, g, 0}, {h + bump, g, 0}}, {"HbA1c", "fasting_glucose", "diabetes_medication"});
    const auto dx = diagnose(t, c, Disease::diabetes);
    if (dx[0] == Diagnosis::diseased) { EXPECT_EQ(dx[1], Diagnosis::diseased); }
  }
}

TEST(Onset, LabelsAndExclusions) {
  const auto t0 = parse_csv(
      "id,HbA1c,fasting_glucose,diabetes_medication\n"
      "a,5.0,90,false\n"   // onset
      "b,5.0,90,false\n"   // stays healthy
      "c,7.0,90,false\n"   // prevalent
      "d,5.0,90,false\n"   // lost
      "e,,90,false\n");    // unlabelable at t
  const auto t1 = parse_csv(
      "id,HbA1c,fasting_glucose,diabetes_medication\n"
      "b,5.2,92,false\n"
      "a,6.6,95,false\n"
      "c,7.1,90,true\n"
      "e,5.0,90,false\n");
  const auto r = onset_labels(t0, t1, DiagnosticCriteria{}, Disease::diabetes, "id");
  EXPECT_EQ(r.labels, (std::vector<OnsetLabel>{OnsetLabel::positive, OnsetLabel::negative, OnsetLabel::excluded,
                                               OnsetLabel::excluded, OnsetLabel::excluded}));
  EXPECT_EQ(r.prevalent, 1u);
  EXPECT_EQ(r.lost_to_followup, 1u);
  EXPECT_EQ(r.unlabelable, 1u);
}

TEST(Onset, SameYearTwiceNeverPositive) {
  Rng rng(9);
  std::string csv = "id,HbA1c,fasting_glucose,diabetes_medication\n";
  for (int i = 0; i < 300; ++i) {
    csv += "s" + std::to_string(i) + "," + std::to_string(rng.uniform(4.5, 7.5)) + "," +
           std::to_string(rng.uniform(70, 140)) + "," + (rng.bernoulli(0.1) ? "true" : "false") + "\n";
  }
  const auto t = parse_csv(csv);
  for (auto l : onset_labels(t, t, DiagnosticCriteria{}, Disease::diabetes, "id").labels) {
    EXPECT_NE(l, OnsetLabel::positive);
  }
}

TEST(Folds, StratifiedExample) {
  std::vector<int> y{1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  const auto f = stratified_folds(y, 5, 42);
  for (std::size_t k = 0; k < 5; ++k) {
    int pos = 0;
    for (auto r : f.test_rows(k)) pos += y[r];
    EXPECT_EQ(pos, 1);
  }
  EXPECT_EQ(stratified_folds(y, 5, 42).fold, f.fold);
  std::vector<int> few{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_THROW(stratified_folds(few, 5, 1), InvalidArgument);
}

TEST(Folds, PartitionProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 2 + rng.below(5);
    const std::size_t n = 4 * k + rng.below(100);
    auto y = odrop::testing::random_labels(rng, n, 0.5);
    std::size_t pos = std::count(y.begin(), y.end(), 1);
    if (pos < k || n - pos < k) continue;
    const auto f = stratified_folds(y, k, trial);
    std::vector<int> seen(n, 0);
    for (std::size_t i = 0; i < k; ++i) {
      for (auto r : f.test_rows(i)) ++seen[r];
      EXPECT_EQ(f.train_rows(i).size() + f.test_rows(i).size(), n);
    }
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(Encoder, OneHotByTokenAcrossFiles) {
  const auto train = parse_csv("sex,x\nM,1\nF,3\nM,\n");
  const auto test = parse_csv("sex,x\nF,2\nX,2\n");
  const auto enc = NeuralEncoder::fit(train);
  EXPECT_EQ(enc.output_width(), 3u);
  const auto m = enc.transform(test);
  // Category order follows the training table, so F maps to the same slot.
  const auto mt = enc.transform(train);
  EXPECT_EQ(m(0, 1), mt(1, 1));
  EXPECT_EQ(m(0, 0), mt(1, 0));
  EXPECT_EQ(NeuralEncoder::from_json(enc.to_json()), enc);
}

TEST(SplitLabel, RejectsNonBinary) {
  EXPECT_THROW(split_label(parse_csv("x,label\n1,0\n2,2\n"), "label"), InvalidArgument);
  const auto s = split_label(parse_csv("x,label\n1,0\n2,1\n"), "label");
  EXPECT_EQ(s.labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(s.features.cols(), 1u);
}

}  // namespace
}  // namespace odrop::tabular
