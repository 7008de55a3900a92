// Acceptance checks AC1-AC9. Prints one PASS/FAIL line per criterion and
// exits nonzero when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cli/common.hpp"
#include "generators.hpp"
#include "odrop/cli.hpp"
#include "odrop/explain.hpp"
#include "odrop/gbt.hpp"
#include "odrop/nn.hpp"
#include "odrop/ood.hpp"
#include "odrop/rejection.hpp"
#include "odrop/stats.hpp"
#include "odrop/synth.hpp"
#include "odrop/tabular.hpp"
#include "oracles.hpp"

namespace {

using namespace odrop;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  std::vector<std::string> failures;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      failures.push_back(what);
      pass = false;
    }
  }

  std::string summary() const {
    std::string out = detail.str();
    for (std::size_t i = 0; i < failures.size(); ++i) out += (i == 0 ? " | failed: " : "; ") + failures[i];
    return out;
  }
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

// ---- AC1

void ac1(Verdict& v) {
  const double tol = 1e-9;
  v.require(near(ood::energy(std::vector<double>{0, 0}), -std::numbers::ln2, tol), "energy of zero logits");
  v.require(near(ood::ensemble_std(std::vector<double>{0.2, 0.8}), 0.3, tol), "ensemble std");
  v.require(near(ood::ensemble_epistemic(std::vector<double>{1.0, 0.0}), 1.0, tol), "epistemic bits");
  v.require(near(ood::ensemble_epistemic(std::vector<double>{0.5, 0.5, 0.5}), 0.0, tol), "epistemic of agreement");

  ood::GemParams g;
  g.means = Matrix(2, 2);
  g.means(0, 0) = g.means(0, 1) = 1.0;
  g.means(1, 0) = 4.0;
  g.means(1, 1) = 5.0;
  g.covariance = Matrix(2, 2);
  g.precision = Matrix(2, 2);
  for (std::size_t j = 0; j < 2; ++j) g.covariance(j, j) = g.precision(j, j) = 1.0;
  // Distance 5 to the second mean.
  v.require(near(ood::gem_raw(g, std::vector<double>{1.0, 1.0}), std::log1p(std::exp(-12.5)), tol), "GEM two means");
  ood::GemParams one = g;
  one.means = Matrix(1, 2);
  one.means(0, 0) = 0.3;
  one.means(0, 1) = -1.2;
  v.require(near(ood::gem_raw(one, std::vector<double>{0.3, -1.2}), 0.0, tol), "GEM at the mean");
  v.require(near(ood::gem_raw(one, std::vector<double>{1.3, -1.2}), -0.5, tol), "GEM unit distance");

  std::vector<double> s(100);
  for (std::size_t i = 0; i < 100; ++i) s[i] = static_cast<double>(i);
  const auto p = rejection::partition(s, rejection::threshold_for_rate(s, 0.25));
  v.require(p.n_rejected == 25 && near(p.rejection_rate, 0.25, tol), "rejection rate arithmetic");
  v.require(near(rejection::partition(s, 1e9).rejection_rate, 0.0, tol), "zero rejection");

  v.require(near(rejection::auroc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}), 0.75, tol),
            "AUROC pair example");
  v.require(near(rejection::kendall_tau_b(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}).tau, 1.0 / 3.0, tol),
            "Kendall example");
  v.require(near(stats::fisher_exact_2x2(stats::ContingencyTable::two_by_two(1, 9, 9, 1)).p_value, 1.0933e-3, 1e-6),
            "Fisher example");
}

// ---- AC2

std::vector<double> normals(Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto& e : out) e = rng.normal();
  return out;
}

void ac2(Verdict& v) {
  Rng rng(101);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(499);
    const auto y = testing::random_labels(rng, n, rng.uniform(0.1, 0.9));
    const auto s = rng.bernoulli(0.5) ? testing::tied_values(rng, n, 1 + static_cast<int>(rng.below(10)))
                                      : normals(rng, n);
    worst = std::max(worst, std::abs(rejection::auroc(s, y) - oracle::auroc_pairs(s, y)));
  }
  v.detail << "auroc " << worst;
  v.require(worst <= 1e-9, "AUROC oracle");

  worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(200);
    const auto x = testing::tied_values(rng, n, 2 + static_cast<int>(rng.below(20)));
    const auto y = testing::tied_values(rng, n, 2 + static_cast<int>(rng.below(20)));
    const auto t = rejection::kendall_tau_b(x, y);
    const double want = oracle::tau_b_pairs(x, y);
    if (std::isnan(want)) {
      v.require(!t.defined, "Kendall undefined case");
      continue;
    }
    worst = std::max(worst, std::abs(t.tau - want));
  }
  v.detail << ", kendall " << worst;
  v.require(worst <= 1e-9, "Kendall oracle");

  worst = 0;
  bool ward_ids = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    const auto x = testing::random_matrix(rng, n, 1 + rng.below(4));
    const auto d = explain::ward_cluster(x);
    const auto want = oracle::ward_brute_force(x);
    ward_ids = ward_ids && d.merges.size() == want.size();
    for (std::size_t s = 0; ward_ids && s < want.size(); ++s) {
      ward_ids = d.merges[s].a == want[s].a && d.merges[s].b == want[s].b && d.merges[s].size == want[s].size;
      worst = std::max(worst, std::abs(d.merges[s].distance - want[s].distance));
    }
  }
  v.detail << ", ward " << worst;
  v.require(ward_ids && worst <= 1e-9, "Ward oracle");

  worst = 0;
  for (int forest_i = 0; forest_i < 25; ++forest_i) {
    const std::size_t d = 1 + rng.below(10);
    const auto f = testing::random_forest(rng, d, 1 + rng.below(4), 1 + static_cast<int>(rng.below(5)));
    for (int row = 0; row < 4; ++row) {
      std::vector<double> x(d);
      for (auto& e : x) e = rng.bernoulli(0.1) ? kMissing : rng.normal();
      const auto s = explain::tree_shap(f, x);
      const auto phi = oracle::shapley_exhaustive(f, x);
      for (std::size_t j = 0; j < d; ++j) worst = std::max(worst, std::abs(s.values[j] - phi[j]));
    }
  }
  v.detail << ", shap " << worst;
  v.require(worst <= 1e-8, "TreeSHAP oracle");

  worst = 0;
  for (int i = 0; i < 200; ++i) {
    const long a = rng.below(15), b = rng.below(15), c = rng.below(15), d = rng.below(15);
    if (a + b == 0 || c + d == 0 || a + c == 0 || b + d == 0) continue;
    const double p = stats::fisher_exact_2x2(stats::ContingencyTable::two_by_two(a, b, c, d)).p_value;
    worst = std::max(worst, std::abs(p - oracle::fisher_enumeration(a, b, c, d)));
  }
  v.detail << ", fisher " << worst;
  v.require(worst <= 1e-9, "Fisher oracle");
}

// ---- AC3

void ac3(Verdict& v) {
  Rng rng(2);
  int ok_cls = 0, ok_vae = 0;
  double worst_cls = 0, worst_vae = 0;
  for (int point = 0; point < 100; ++point) {
    nn::Mlp m(4, {6, 5});
    Rng init(derive_seed(7, point));
    m.net().init_he_uniform(init, 1.0);
    for (auto& p : m.net().params()) p += 0.05 * rng.normal();
    const auto x = testing::random_matrix(rng, 7, 4);
    const auto y = testing::random_labels(rng, 7);
    std::vector<double> analytic(m.net().n_params());
    m.loss_and_gradient(x, y, analytic);
    const auto numeric = oracle::numeric_gradient(m.net().params(), [&] { return m.loss(x, y); });
    const double e = oracle::relative_error(analytic, numeric);
    worst_cls = std::max(worst_cls, e);
    ok_cls += e < 1e-4;
  }
  for (int point = 0; point < 100; ++point) {
    nn::Vae vae(5, 7, 3);
    Rng init(derive_seed(11, point));
    vae.encoder().init_he_uniform(init, 0.8);
    vae.decoder().init_he_uniform(init, 0.8);
    auto params = vae.flat_params();
    for (auto& p : params) p += 0.05 * rng.normal();
    vae.set_flat_params(params);
    const auto x = testing::random_matrix(rng, 6, 5);
    const auto noise = testing::random_matrix(rng, 6, 3);
    std::vector<double> analytic(vae.n_params());
    vae.loss_and_gradient(x, noise, analytic);
    const auto numeric = oracle::numeric_gradient(params, [&] {
      vae.set_flat_params(params);
      return vae.loss(x, noise);
    });
    const double e = oracle::relative_error(analytic, numeric);
    worst_vae = std::max(worst_vae, e);
    ok_vae += e < 1e-4;
  }
  v.detail << "classifier " << ok_cls << "/100 (max " << worst_cls << "), vae " << ok_vae << "/100 (max " << worst_vae
           << ")";
  v.require(ok_cls == 100 && ok_vae == 100, "relative error >= 1e-4");
}

// ---- AC4

void ac4(Verdict& v) {
  const std::size_t d = 8, dummy = 7;
  auto b = testing::blobs(4, 2000, d, 1.0);
  for (std::size_t i = 0; i < b.x.rows(); ++i) b.x(i, dummy) = 0.5;
  gbt::BoostConfig cfg;
  cfg.n_estimators = 100;
  cfg.max_depth = 4;
  const auto f = gbt::fit_gbt(b.x, b.y, cfg);
  Rng rng(9);
  double worst = 0;
  bool dummy_zero = true;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x(d);
    for (auto& e : x) e = rng.bernoulli(0.05) ? kMissing : 2.0 * rng.normal();
    x[dummy] = rng.normal();
    const auto s = explain::tree_shap(f, x);
    double total = s.base_value;
    for (double e : s.values) total += e;
    worst = std::max(worst, std::abs(total - f.margin(x)));
    dummy_zero = dummy_zero && s.values[dummy] == 0.0;
  }
  v.detail << "max |base + sum - margin| " << worst;
  v.require(worst <= 1e-6, "local accuracy");
  v.require(dummy_zero, "dummy attribution nonzero");
}

// ---- AC5 / AC6

const char* kAc5Config = R"({
  "scenario": {"n_train": 8000, "n_test": 4000, "d": 20, "ood_fraction": 0.3,
               "mean_shift_norm": 4, "label_noise_ood": 0.5, "seed": 2024},
  "seed": 7
})";

void ac5(Verdict& v, const fs::path& out_dir) {
  const auto config = cli::RunConfig::from_json(nlohmann::json::parse(kAc5Config));
  {
    cli::ArtifactWriter out(out_dir);
    cli::run_pipeline(config, out);
    out.commit("pipeline", config.to_json(), config.seeds_json());
  }
  const auto report = read_json(out_dir / "report.json");
  const double no_rejection = report["no_rejection"]["auroc"].get<double>();
  int precise = 0;
  for (const auto& m : report["methods"]) {
    const std::string name = m["method"];
    const auto& curve = m["auroc"];
    v.require(curve["points"][0]["rate"].get<double>() == 0.0 &&
                  curve["points"][0]["metric"].get<double>() == no_rejection &&
                  curve["baseline"].get<double>() == no_rejection,
              name + " rate-0 point differs from baseline");
    double fraction = -1;
    for (const auto& r : m["rejected_ood_fraction"]) {
      if (std::abs(r["rate"].get<double>() - 0.3) < 1e-9 && !r["fraction"].is_null()) fraction = r["fraction"];
    }
    precise += fraction >= 0.7;
    v.detail << name << " ood@0.3 " << fraction << ", ";
    if (name == "vae_reconstruction") {
      const double gain = curve["improvement"].get<double>();
      v.detail << "vae peak-baseline " << gain << " at " << curve["peak"]["rate"].get<double>() << ", tau "
               << curve["tau_b"].get<double>() << ", ";
      v.require(gain >= 0.04, "VAE improvement < 0.04");
      v.require(curve["tau_b_defined"].get<bool>() && curve["tau_b"].get<double>() > 0, "VAE tau_b <= 0");
    }
  }
  v.detail << "baseline " << no_rejection << ", methods >= 70% OOD: " << precise;
  v.require(precise >= 3, "fewer than 3 methods reject >= 70% OOD at 0.3");
}

void ac6(Verdict& v, const fs::path& ac5_dir) {
  if (!fs::exists(ac5_dir / "manifest.json")) {
    v.require(false, "no trained models from AC5");
    return;
  }
  // The training sample does not depend on the test composition, so the
  // models fitted for AC5 are exactly those a null-scenario run would fit.
  auto scenario = synth::ShiftScenario::from_json(nlohmann::json::parse(kAc5Config)["scenario"]);
  const auto shifted = synth::generate(scenario);
  scenario.ood_fraction = 0.0;
  const auto data = synth::generate(scenario);
  v.require(data.train.values() == shifted.train.values() && data.train_labels == shifted.train_labels,
            "training sample depends on the test composition");

  const auto predictor = cli::Predictor::from_json(read_json(ac5_dir / "predictor.json"));
  const auto prob = predictor.predict_proba(data.test);
  double worst = 0, worst_pr = 0;
  for (auto m : ood::all_methods()) {
    const auto scorer =
        ood::OodScorer::from_json(read_json(ac5_dir / ("scorer_" + std::string(ood::to_string(m)) + ".json")));
    const auto scores = scorer.score(data.test);
    double dev = 0;
    const auto curve = rejection::rejection_curve(scores, prob, data.test_labels, rejection::MetricKind::auroc);
    for (const auto& p : curve.points) dev = std::max(dev, std::abs(p.metric - curve.baseline));
    const auto pr = rejection::rejection_curve(scores, prob, data.test_labels, rejection::MetricKind::prauc);
    for (const auto& p : pr.points) worst_pr = std::max(worst_pr, std::abs(p.metric - pr.baseline));
    v.detail << ood::to_string(m) << " " << dev << ", ";
    worst = std::max(worst, dev);
    v.require(dev <= 0.03 && curve.points.size() + curve.dropped_rates.size() == 41, std::string(ood::to_string(m)));
  }
  v.detail << "max auroc deviation " << worst << " (prauc " << worst_pr << ")";
}

// ---- AC7

void ac7(Verdict& v) {
  const auto b = testing::blobs(77, 2000, 6, 3.0);
  const gbt::GridSpec grid;
  const auto candidates = grid.candidates({});
  bool verbatim = candidates.size() == 27;
  std::size_t i = 0;
  for (int n : {50, 100, 200})
    for (int d : {2, 4, 6})
      for (double w : {1.0, 2.0, 3.0}) {
        verbatim = verbatim && i < candidates.size() && candidates[i].n_estimators == n &&
                   candidates[i].max_depth == d && candidates[i].min_child_weight == w;
        ++i;
      }
  v.require(verbatim, "grid candidates");
  const auto result = gbt::grid_search(b.x, b.y, grid, 5, 13);
  double best = 0;
  for (const auto& p : result.points) best = std::max(best, p.mean_auroc);
  v.require(result.points.size() == 27, "grid points evaluated");
  v.detail << "best mean AUROC " << best << " (" << result.best.n_estimators << "/" << result.best.max_depth << "/"
           << result.best.min_child_weight << ")";
  v.require(best >= 0.95, "mean AUROC < 0.95");
}

// ---- AC8

tabular::Table criteria_table(const std::vector<std::vector<double>>& rows, const std::vector<std::string>& names) {
  std::vector<tabular::Column> cols;
  for (const auto& n : names) cols.push_back({n, tabular::ColumnKind::continuous, {}});
  Matrix m(rows.size(), names.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < names.size(); ++c) m(r, c) = rows[r][c];
  return tabular::Table::from_matrix(cols, m);
}

void ac8(Verdict& v) {
  using tabular::Diagnosis;
  using tabular::Disease;
  constexpr auto H = Diagnosis::healthy, D = Diagnosis::diseased;
  const tabular::DiagnosticCriteria c;
  std::size_t cases = 0;
  const auto check = [&](Disease disease, const tabular::DiagnosticCriteria& crit,
                         const std::vector<std::vector<double>>& rows, const std::vector<std::string>& names,
                         const std::vector<Diagnosis>& want) {
    const auto got = tabular::diagnose(criteria_table(rows, names), crit, disease);
    for (std::size_t i = 0; i < want.size(); ++i) {
      ++cases;
      if (got[i] != want[i]) v.require(false, std::string(tabular::to_string(disease)) + " row " + std::to_string(i));
    }
  };
  // HbA1c, glucose, medication
  check(Disease::diabetes, c,
        {{6.5, 100, 0}, {6.4999, 125.999, 0}, {6.4, 126, 0}, {5.0, 90, 1}, {7.0, 130, 1}, {6.5, 126, 0}},
        {"HbA1c", "fasting_glucose", "diabetes_medication"}, {D, H, D, D, D, D});
  // LDL, HDL, TG, medication
  check(Disease::dyslipidemia, c,
        {{119, 40, 149, 0}, {120, 40, 149, 0}, {119, 39.99, 149, 0}, {119, 40, 150, 0}, {119, 40, 149, 1},
         {119.99, 40.01, 149.99, 0}},
        {"LDL", "HDL", "TG", "dyslipidemia_medication"}, {H, D, D, D, D, H});
  // SBP, DBP, medication
  const std::vector<std::vector<double>> bp{{139, 89, 0}, {140, 60, 0}, {120, 90, 0}, {110, 70, 1},
                                            {130, 79, 0}, {129, 80, 0}, {129.9, 79.9, 0}};
  check(Disease::hypertension, c, bp, {"SBP", "DBP", "hypertension_medication"}, {H, D, D, D, H, H, H});
  check(Disease::hypertension, tabular::DiagnosticCriteria::acc_aha_2017(), bp,
        {"SBP", "DBP", "hypertension_medication"}, {D, D, D, D, D, D, H});
  // A missing criterion cell leaves the row unlabelable.
  const auto t = tabular::parse_csv("HbA1c,fasting_glucose,diabetes_medication\n,90,false\n5,90,false\n");
  const auto dx = tabular::diagnose(t, c, Disease::diabetes);
  ++cases;
  v.require(dx[0] == Diagnosis::unlabelable && dx[1] == H, "missing cell handling");
  v.detail << cases << " cases";
}

// ---- AC9

const char* kAc9Config = R"({
  "scenario": {"n_train": 600, "n_test": 300, "d": 6, "mean_shift_norm": 4, "seed": 5},
  "seed": 9,
  "predictor": {"search": true, "folds": 3},
  "ood": {"classifier": {"max_epochs": 5}, "vae": {"max_epochs": 10}, "ensemble_size": 3,
          "hidden": [16, 8], "vae_hidden": 16, "vae_latent": 3},
  "explain": {"enabled": true, "max_rows": 100}
})";

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "odrop");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

void ac9(Verdict& v, const fs::path& dir) {
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << kAc9Config;
  }
  const auto a = dir / "a", b = dir / "b";
  v.require(run_cli({"-o", a.string(), "pipeline", "--config", (dir / "cfg.json").string()}) == 0, "first run");
  v.require(run_cli({"-o", b.string(), "pipeline", "--config", (dir / "cfg.json").string()}) == 0, "second run");
  if (!v.pass) return;
  const auto ma = read_json(a / "manifest.json"), mb = read_json(b / "manifest.json");
  v.detail << ma["artifacts"].size() << " artifacts";
  v.require(ma == mb, "manifests differ");
  v.require(cli::sha256_hex(ma.dump()) == cli::sha256_hex(mb.dump()), "manifest checksums differ");
}

}  // namespace

int main() {
  testing::TempDir work("acceptance");
  const auto ac5_dir = work.path() / "ac5";
  fs::create_directories(work.path() / "ac9");

  struct Criterion {
    const char* id;
    double limit_seconds;  // 0: none
    std::function<void(Verdict&)> run;
  };
  const std::vector<Criterion> criteria{
      {"AC1", 5, ac1},
      {"AC2", 120, ac2},
      {"AC3", 0, ac3},
      {"AC4", 0, ac4},
      {"AC5", 600, [&](Verdict& v) { ac5(v, ac5_dir); }},
      {"AC6", 0, [&](Verdict& v) { ac6(v, ac5_dir); }},
      {"AC7", 0, ac7},
      {"AC8", 0, ac8},
      {"AC9", 0, [&](Verdict& v) { ac9(v, work.path() / "ac9"); }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Verdict v;
    const auto start = Clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (c.limit_seconds > 0 && seconds >= c.limit_seconds) v.require(false, "runtime limit exceeded");
    failures += !v.pass;
    std::printf("%s %s (%.1fs) %s\n", c.id, v.pass ? "PASS" : "FAIL", seconds, v.summary().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
