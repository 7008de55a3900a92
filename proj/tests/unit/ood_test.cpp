#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "odrop/error.hpp"
#include "odrop/ood.hpp"
#include "odrop/synth.hpp"

namespace odrop::ood {
namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TEST(Reconstruction, WorkedExamples) {
  const std::vector<double> x{1.5, -2.0}, zero{0, 0};
  EXPECT_EQ(reconstruction_loss(x, x), 0.0);
  EXPECT_EQ(reconstruction_loss(std::vector<double>{1, 0}, zero), 1.0);
  EXPECT_EQ(reconstruction_loss(std::vector<double>{3, 4}, zero), 25.0);
}

TEST(EnsembleStd, WorkedExamples) {
  EXPECT_EQ(ensemble_std(std::vector<double>{0.5, 0.5, 0.5}), 0.0);
  EXPECT_NEAR(ensemble_std(std::vector<double>{0.2, 0.8}), 0.3, 1e-12);
  EXPECT_NEAR(ensemble_std(std::vector<double>{0.0, 1.0}), 0.5, 1e-12);
  EXPECT_THROW(ensemble_std(std::vector<double>{0.4}), InvalidArgument);
}

TEST(Epistemic, WorkedExamples) {
  EXPECT_NEAR(ensemble_epistemic(std::vector<double>{1.0, 0.0}), 1.0, 1e-12);
  EXPECT_NEAR(binary_entropy_bits(0.5), 1.0, 1e-15);
  EXPECT_EQ(binary_entropy_bits(0.0), 0.0);
  EXPECT_EQ(binary_entropy_bits(1.0), 0.0);
  EXPECT_NEAR(ensemble_epistemic(std::vector<double>{0.5, 0.5, 0.5}), 0.0, 1e-15);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const double p = rng.uniform();
    EXPECT_NEAR(ensemble_epistemic(std::vector<double>{p, p, p, p}), 0.0, 1e-12);
  }
}

TEST(Epistemic, BoundedProperty) {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> p(2 + rng.below(6));
    for (auto& v : p) v = rng.uniform();
    const double e = ensemble_epistemic(p), s = ensemble_std(p);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 1.0);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 0.5);
  }
}

TEST(Energy, WorkedExamples) {
  EXPECT_NEAR(energy(std::vector<double>{0, 0}), -std::numbers::ln2, 1e-12);
  EXPECT_NEAR(energy(std::vector<double>{3, 1}), -(3 + std::log1p(std::exp(-2.0))), 1e-12);
  EXPECT_NEAR(energy(std::vector<double>{3, 1}), -3.126928, 1e-6);
  EXPECT_NEAR(energy(std::vector<double>{10, -10}), -10.0, 1e-8);
}

TEST(Energy, LowTemperatureLimitAndStability) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> f{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    EXPECT_NEAR(energy(f, 1e-3), -std::max(f[0], f[1]), 1e-2);
  }
  EXPECT_NEAR(energy(std::vector<double>{1000, 999}), -(1000 + std::log1p(std::exp(-1.0))), 1e-9);
  EXPECT_THROW(energy(std::vector<double>{0, 0}, 0.0), InvalidArgument);
}

TEST(LogSumExp, ShiftsByConstant) {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> f(1 + rng.below(5));
    for (auto& v : f) v = rng.uniform(-30, 30);
    const double c = rng.uniform(-100, 100);
    auto g = f;
    for (auto& v : g) v += c;
    EXPECT_NEAR(logsumexp(g), logsumexp(f) + c, 1e-10);
  }
}

TEST(Gem, TwoPointClasses) {
  Matrix h(4, 2);
  h(0, 0) = 1;
  h(0, 1) = 2;
  h(1, 0) = 1;
  h(1, 1) = 2;
  h(2, 0) = -3;
  h(2, 1) = 0.5;
  h(3, 0) = -3;
  h(3, 1) = 0.5;
  const std::vector<int> y{0, 0, 1, 1};
  const auto g = fit_gem_features(h, y, 2);
  EXPECT_EQ(g.means(0, 0), 1.0);
  EXPECT_EQ(g.means(1, 1), 0.5);
  for (double v : g.covariance.values()) EXPECT_EQ(v, 0.0);
  EXPECT_GT(g.epsilon, 0.0);
  EXPECT_NEAR(g.precision(0, 0), 1.0 / g.epsilon, 1e-6 / g.epsilon);
  EXPECT_NEAR(g.precision(0, 1), 0.0, 1e-12);
}

TEST(Gem, MonteCarloMeansAndCovariance) {
  Rng rng(5);
  const std::size_t n = 10000;
  Matrix h(2 * n, 2);
  std::vector<int> y(2 * n);
  // Shared covariance [[1, 0.5], [0.5, 2]] through its Cholesky factor.
  const double l00 = 1.0, l10 = 0.5, l11 = std::sqrt(2.0 - 0.25);
  const double mu[2][2] = {{0, 0}, {3, -1}};
  for (std::size_t i = 0; i < 2 * n; ++i) {
    y[i] = i < n ? 0 : 1;
    const double z0 = rng.normal(), z1 = rng.normal();
    h(i, 0) = mu[y[i]][0] + l00 * z0;
    h(i, 1) = mu[y[i]][1] + l10 * z0 + l11 * z1;
  }
  const auto g = fit_gem_features(h, y, 2);
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(g.means(k, j), mu[k][j], 0.05);
  const double truth[2][2] = {{1, 0.5}, {0.5, 2}};
  double frob = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) frob += std::pow(g.covariance(i, j) - truth[i][j], 2);
  EXPECT_LT(std::sqrt(frob), 0.05);
}

TEST(Gem, RowPermutationGivesIdenticalParameters) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 20 + rng.below(50), d = 1 + rng.below(4);
    auto h = odrop::testing::random_matrix(rng, n, d);
    auto y = odrop::testing::random_labels(rng, n);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<int> y2(n);
    for (std::size_t i = 0; i < n; ++i) y2[i] = y[perm[i]];
    EXPECT_EQ(fit_gem_features(h, y, 2), fit_gem_features(h.select_rows(perm), y2, 2));
  }
}

GemParams identity_gem(const std::vector<std::vector<double>>& means) {
  GemParams g;
  const std::size_t dim = means[0].size();
  g.means = Matrix(means.size(), dim);
  for (std::size_t k = 0; k < means.size(); ++k)
    for (std::size_t j = 0; j < dim; ++j) g.means(k, j) = means[k][j];
  g.covariance = Matrix(dim, dim);
  g.precision = Matrix(dim, dim);
  for (std::size_t j = 0; j < dim; ++j) g.covariance(j, j) = g.precision(j, j) = 1.0;
  return g;
}

TEST(Gem, ClosedForms) {
  const auto one = identity_gem({{0.3, -1.2}});
  EXPECT_EQ(gem_raw(one, std::vector<double>{0.3, -1.2}), 0.0);
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const double d = rng.uniform(0, 6);
    const double angle = rng.uniform(0, 2 * std::numbers::pi);
    const auto g = identity_gem({{1.0, 1.0}, {1.0 + d * std::cos(angle), 1.0 + d * std::sin(angle)}});
    EXPECT_NEAR(gem_raw(g, std::vector<double>{1.0, 1.0}), std::log1p(std::exp(-d * d / 2)), 1e-12);
  }
}

TEST(Gem, RadialMonotonicity) {
  const auto g = identity_gem({{1.0, 0.0}, {-1.0, 0.0}});
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const double angle = rng.uniform(0, 2 * std::numbers::pi);
    double prev = -std::numeric_limits<double>::infinity();
    for (double r = 2.0; r < 20; r += 0.5) {
      const double score = -gem_raw(g, std::vector<double>{r * std::cos(angle), r * std::sin(angle)});
      EXPECT_GT(score, prev);
      prev = score;
    }
  }
}

TEST(Methods, NamesAndOrientation) {
  for (auto m : all_methods()) EXPECT_EQ(method_from_string(to_string(m)), m);
  EXPECT_EQ(all_methods().size(), 5u);
  try {
    method_from_string("mahalanobis");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("mahalanobis"), std::string::npos);
  }
  for (auto m : all_methods()) EXPECT_EQ(orientation_flip(m), m == Method::gem);
}

OodTrainConfig small_config() {
  OodTrainConfig c;
  c.classifier.max_epochs = 15;
  c.classifier.seed = 3;
  c.vae.max_epochs = 30;
  c.vae.seed = 3;
  c.ensemble_size = 3;
  c.hidden = {32, 16};
  c.vae_hidden = 32;
  c.vae_latent = 4;
  return c;
}

TEST(Scorers, OrientationContractOnShiftedScenario) {
  synth::ShiftScenario s;
  s.n_train = 1000;
  s.n_test = 600;
  s.d = 8;
  s.mean_shift = synth::uniform_shift(8, 4);
  s.seed = 21;
  const auto data = synth::generate(s);
  const auto scorers = train_scorers(data.train, data.train_labels, all_methods(), small_config());
  ASSERT_EQ(scorers.size(), 5u);
  for (const auto& sc : scorers) {
    const auto scores = sc.score(data.test);
    std::vector<double> in, out;
    for (std::size_t i = 0; i < scores.size(); ++i) (data.ood_mask[i] ? out : in).push_back(scores[i]);
    // Classifier logits grow away from the data for ReLU nets, so energy
    // need not separate a far mean shift; the density-style scores must.
    if (sc.method() == Method::vae_reconstruction || sc.method() == Method::gem) {
      EXPECT_GT(median(out), median(in)) << to_string(sc.method());
    }
    if (sc.method() == Method::ensemble_std) {
      for (double v : scores) EXPECT_TRUE(v >= 0 && v <= 0.5);
    }
    if (sc.method() == Method::ensemble_epistemic) {
      for (double v : scores) EXPECT_TRUE(v >= 0 && v <= 1);
    }
    const auto back = OodScorer::from_json(sc.to_json());
    EXPECT_EQ(back, sc);
    EXPECT_EQ(back.score(data.test), scores);
  }
}

TEST(Scorers, SharedModelsAndSubsetRequests) {
  synth::ShiftScenario s;
  s.n_train = 300;
  s.n_test = 10;
  s.d = 4;
  const auto data = synth::generate(s);
  const std::vector<Method> all = all_methods();
  const auto full = train_scorers(data.train, data.train_labels, all, small_config());
  const std::vector<Method> only_energy{Method::energy};
  const auto energy_only = train_scorers(data.train, data.train_labels, only_energy, small_config());
  // Energy uses member 0 of the ensemble whether or not the ensemble is requested.
  EXPECT_EQ(energy_only[0], full[3]);
  const auto& members = std::get<std::vector<nn::Mlp>>(full[1].model());
  EXPECT_EQ(std::get<EnergyModel>(full[3].model()).mlp, members[0]);
  EXPECT_EQ(std::get<GemModel>(full[4].model()).mlp, members[0]);
}

}  // namespace
}  // namespace odrop::ood
