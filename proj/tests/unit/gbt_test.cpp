#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "generators.hpp"
#include "odrop/error.hpp"
#include "odrop/gbt.hpp"

namespace odrop::gbt {
namespace {

using odrop::testing::blobs;

BoostConfig small(int trees, int depth, double eta = 0.3, double lambda = 1.0) {
  BoostConfig c;
  c.n_estimators = trees;
  c.max_depth = depth;
  c.eta = eta;
  c.lambda = lambda;
  c.min_child_weight = 0.0;
  return c;
}

struct OneD {
  Matrix x;
  std::vector<int> y;
};

OneD separable_1d(std::size_t n) {
  OneD d{Matrix(n, 1), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    d.y[i] = i % 2;
    d.x(i, 0) = d.y[i] ? 1.0 + 0.1 * i : -1.0 - 0.1 * i;
  }
  return d;
}

TEST(Forest, EmptyForestIsHalf) {
  Forest f(3, 0.0, BoostConfig{});
  const auto p = f.predict_proba(Matrix(4, 3, 1.0));
  for (double v : p) EXPECT_EQ(v, 0.5);
}

TEST(Forest, LeafClippingKeepsProbabilitiesInsideBounds) {
  BoostConfig cfg;  // eta 0.3
  Forest f(1, 0.0, cfg);
  Tree t;
  t.nodes.push_back({});
  t.nodes[0].value = std::numeric_limits<double>::infinity();
  t.nodes[0].cover = 1;
  f.add_tree(t);
  EXPECT_EQ(f.trees()[0].nodes[0].value, kWeightClip);
  const double p = f.predict_proba(Matrix(1, 1))[0];
  EXPECT_GT(p, 1e-13);
  EXPECT_LT(p, 1 - 1e-13);
  Tree neg = t;
  neg.nodes[0].value = -1e300;
  Forest g(1, 0.0, cfg);
  g.add_tree(neg);
  EXPECT_GT(g.predict_proba(Matrix(1, 1))[0], 1e-13);
  Tree nan_leaf = t;
  nan_leaf.nodes[0].value = std::nan("");
  EXPECT_THROW(g.add_tree(nan_leaf), InvalidArgument);
}

TEST(Forest, PositiveLeavesRaiseEveryProbability) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = odrop::testing::random_forest(rng, 4, 3, 3);
    auto x = odrop::testing::random_matrix(rng, 50, 4);
    const auto before = f.predict_proba(x);
    auto extra = odrop::testing::random_forest(rng, 4, 1, 3).trees()[0];
    for (auto& n : extra.nodes)
      if (n.is_leaf()) n.value = rng.uniform(0.01, 2.0);
    f.add_tree(extra);
    const auto after = f.predict_proba(x);
    for (std::size_t i = 0; i < x.rows(); ++i) EXPECT_GT(after[i], before[i]);
  }
}

TEST(Forest, JsonRoundTrip) {
  const auto b = blobs(1, 200, 3, 2.0);
  const auto f = fit_gbt(b.x, b.y, small(5, 3), {"a", "b", "c"});
  const auto back = Forest::from_json(f.to_json());
  EXPECT_EQ(back.to_json(), f.to_json());
  EXPECT_EQ(back.predict_margin(b.x), f.predict_margin(b.x));
}

TEST(Fit, PerfectOneDimensionalSplit) {
  const auto d = separable_1d(40);
  const auto f = fit_gbt(d.x, d.y, small(1, 1));
  const auto& root = f.trees()[0].nodes[0];
  ASSERT_FALSE(root.is_leaf());
  EXPECT_EQ(root.feature, 0);
  // Between the largest negative (-1.1) and the smallest positive (1.1).
  EXPECT_GT(root.threshold, -1.1);
  EXPECT_LT(root.threshold, 1.1);
  EXPECT_EQ(root.cover, 40.0);
}

TEST(Fit, NewtonLeafWeightsOnDepthOneTree) {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 30 + rng.below(50);
    Matrix x(n, 1);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x(i, 0) = rng.normal();
      y[i] = rng.bernoulli(x(i, 0) > 0 ? 0.8 : 0.2) ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    const auto f = fit_gbt(x, y, small(1, 1, 0.3, 0.0));
    const auto& t = f.trees()[0];
    if (t.nodes[0].is_leaf()) continue;
    // Independent Newton step from the prior log-odds.
    const double pbar = std::count(y.begin(), y.end(), 1) / static_cast<double>(n);
    EXPECT_NEAR(f.base_score(), std::log(pbar / (1 - pbar)), 1e-12);
    double gl = 0, hl = 0, gr = 0, hr = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = pbar - y[i], h = pbar * (1 - pbar);
      (x(i, 0) < t.nodes[0].threshold ? gl : gr) += g;
      (x(i, 0) < t.nodes[0].threshold ? hl : hr) += h;
    }
    EXPECT_NEAR(t.nodes[t.nodes[0].left].value, -gl / hl, 1e-10);
    EXPECT_NEAR(t.nodes[t.nodes[0].right].value, -gr / hr, 1e-10);
  }
}

TEST(Fit, LeafWeightsShrinkOnceLabelsAreFit) {
  const auto d = separable_1d(20);
  // Full steps so the margins grow quickly enough for the gradients to vanish.
  const auto f = fit_gbt(d.x, d.y, small(2000, 1, 1.0));
  double last = 0;
  for (const auto& n : f.trees().back().nodes)
    if (n.is_leaf()) last = std::max(last, std::abs(n.value));
  EXPECT_LT(last, 1e-3);
  // Leaf weight is bounded by the gradient mass it sees: |w| <= |G| / lambda.
  const auto margins = f.predict_margin(d.x, f.trees().size() - 1);
  double g_pos = 0, g_neg = 0;
  for (std::size_t i = 0; i < d.y.size(); ++i) (d.y[i] ? g_pos : g_neg) += sigmoid(margins[i]) - d.y[i];
  EXPECT_LE(last, std::max(std::abs(g_pos), std::abs(g_neg)) + 1e-12);
}

TEST(Fit, TrainingLossNonIncreasing) {
  const auto b = blobs(4, 300, 4, 1.0);
  const auto f = fit_gbt(b.x, b.y, small(60, 3, 0.1));
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t <= f.trees().size(); ++t) {
    const double loss = log_loss(f.predict_proba(b.x, t), b.y);
    EXPECT_LE(loss, prev + 1e-12) << "round " << t;
    prev = loss;
  }
}

TEST(Fit, DeterministicSerialization) {
  const auto b = blobs(5, 300, 5, 1.0);
  auto cfg = small(20, 4);
  EXPECT_EQ(fit_gbt(b.x, b.y, cfg).to_json().dump(), fit_gbt(b.x, b.y, cfg).to_json().dump());
}

TEST(Fit, MissingRoutesLikeDefaultSideExtreme) {
  Rng rng(6);
  auto b = blobs(6, 400, 3, 1.5);
  for (std::size_t i = 0; i < b.x.rows(); ++i)
    if (rng.bernoulli(0.2)) b.x(i, rng.below(3)) = kMissing;
  const auto f = fit_gbt(b.x, b.y, small(15, 4));
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(3);
    for (auto& v : x) v = rng.normal();
    const std::size_t j = rng.below(3);
    for (const auto& tree : f.trees()) {
      auto missing = x;
      missing[j] = kMissing;
      // Walk the same path with the surrogate chosen per node.
      int id = 0;
      while (!tree.nodes[id].is_leaf()) {
        const auto& n = tree.nodes[id];
        double v = missing[n.feature];
        if (std::isnan(v)) v = n.default_left ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        id = v < n.threshold ? n.left : n.right;
      }
      EXPECT_EQ(tree.leaf_index(missing), id);
      // A single feature only appears with one default per node, so the
      // whole-tree extremes agree when every split on j shares a default.
      bool all_left = true, all_right = true;
      for (const auto& n : tree.nodes) {
        if (n.feature != static_cast<int>(j)) continue;
        all_left = all_left && n.default_left;
        all_right = all_right && !n.default_left;
      }
      if (all_left || all_right) {
        auto extreme = x;
        extreme[j] = all_left ? -1e300 : 1e300;
        EXPECT_EQ(tree.predict(missing), tree.predict(extreme));
      }
    }
  }
}

TEST(Fit, RejectsBadLabels) {
  Matrix x(4, 1, 1.0);
  EXPECT_THROW(fit_gbt(x, std::vector<int>{1, 1, 1, 1}, small(2, 2)), InvalidArgument);
  EXPECT_THROW(fit_gbt(x, std::vector<int>{0, 2, 1, 0}, small(2, 2)), InvalidArgument);
  EXPECT_THROW(fit_gbt(x, std::vector<int>{0, 1}, small(2, 2)), InvalidArgument);
}

TEST(Grid, ExactCandidateList) {
  const auto c = GridSpec{}.candidates(BoostConfig{});
  ASSERT_EQ(c.size(), 27u);
  std::set<std::tuple<int, int, double>> got;
  for (const auto& cfg : c) got.insert({cfg.n_estimators, cfg.max_depth, cfg.min_child_weight});
  std::set<std::tuple<int, int, double>> want;
  for (int n : {50, 100, 200})
    for (int d : {2, 4, 6})
      for (double w : {1.0, 2.0, 3.0}) want.insert({n, d, w});
  EXPECT_EQ(got, want);
}

TEST(Grid, SingleCandidate) {
  const auto b = blobs(7, 200, 3, 1.0);
  GridSpec g{{30}, {3}, {2.0}};
  const auto r = grid_search(b.x, b.y, g, 3, 1);
  EXPECT_EQ(r.best.n_estimators, 30);
  EXPECT_EQ(r.best.max_depth, 3);
  EXPECT_EQ(r.best.min_child_weight, 2.0);
  ASSERT_EQ(r.points.size(), 1u);
  EXPECT_EQ(r.points[0].fold_auroc.size(), 3u);
}

TEST(Grid, TiesPreferFewerShallowerMoreRegularized) {
  // Perfectly separable, so every candidate reaches AUROC 1.
  const auto b = blobs(8, 300, 2, 12.0);
  const auto r = grid_search(b.x, b.y, GridSpec{}, 5, 3);
  for (const auto& p : r.points) EXPECT_EQ(p.mean_auroc, 1.0);
  EXPECT_EQ(r.best.n_estimators, 50);
  EXPECT_EQ(r.best.max_depth, 2);
  EXPECT_EQ(r.best.min_child_weight, 3.0);
}

TEST(Grid, PrefixScoringMatchesSeparateFits) {
  const auto b = blobs(9, 240, 3, 1.0);
  GridSpec g{{5, 12}, {3}, {1.0}};
  const auto shared = grid_search(b.x, b.y, g, 3, 4);
  for (int n : {5, 12}) {
    const auto alone = grid_search(b.x, b.y, GridSpec{{n}, {3}, {1.0}}, 3, 4);
    const auto& p = shared.points[n == 5 ? 0 : 1];
    EXPECT_EQ(p.fold_auroc, alone.points[0].fold_auroc);
  }
}

TEST(Grid, ParallelMatchesSerial) {
  const auto b = blobs(10, 200, 3, 1.0);
  GridSpec g{{5, 10}, {2, 3}, {1.0, 2.0}};
  const auto a = grid_search(b.x, b.y, g, 3, 2, {}, 1);
  const auto c = grid_search(b.x, b.y, g, 3, 2, {}, 4);
  ASSERT_EQ(a.points.size(), c.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].fold_auroc, c.points[i].fold_auroc);
}

TEST(Rfe, SignalFeatureSurvives) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 300, d = 6;
    Matrix x(n, d);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(i % 2);
      for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.normal();
      x(i, 0) += y[i] ? 1.5 : -1.5;
    }
    EXPECT_EQ(rfe(x, y, 1, std::nullopt, small(10, 3)), (std::vector<std::size_t>{0})) << "seed " << seed;
  }
}

TEST(Rfe, IdentityAndClamping) {
  const auto b = blobs(11, 200, 5, 1.0);
  EXPECT_EQ(rfe(b.x, b.y, 5, std::nullopt, small(5, 2)), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(rfe(b.x, b.y, 2, 10, small(5, 2)).size(), 2u);
  EXPECT_EQ(rfe(b.x, b.y, 3, 2, small(5, 2)).size(), 3u);
  EXPECT_THROW(rfe(b.x, b.y, 0, std::nullopt, small(5, 2)), InvalidArgument);
}

TEST(Config, Validation) {
  BoostConfig c;
  c.n_estimators = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.eta = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_EQ(BoostConfig::from_json(BoostConfig{}.to_json()), BoostConfig{});
}

}  // namespace
}  // namespace odrop::gbt
