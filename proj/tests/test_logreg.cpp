#include "aidetect/logreg.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "aidetect/rng.hpp"

namespace aidetect {
namespace {

using Rows = std::vector<std::vector<double>>;

double train_accuracy(const LogRegModel& m, const Rows& x, const std::vector<int>& y) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < x.size(); ++i) ok += m.predict(x[i]) == y[i];
  return static_cast<double>(ok) / static_cast<double>(x.size());
}

void random_dataset(Rng& rng, std::size_t n, std::size_t dim, Rows& x, std::vector<int>& y) {
  x.clear();
  y.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i < 2 ? static_cast<int>(i) : static_cast<int>(rng.below(2));
    std::vector<double> row(dim);
    for (std::size_t j = 0; j < dim; ++j) row[j] = rng.uniform(-3, 3) * (1 + 10.0 * j) + (label ? 0.5 * j : 0.0);
    x.push_back(row);
    y.push_back(label);
  }
}

TEST(Standardizer, PopulationStatsWithFloor) {
  const Rows x = {{1.0, 5.0}, {3.0, 5.0}};
  const auto s = Standardizer::fit(x);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.std[0], 1.0);
  EXPECT_DOUBLE_EQ(s.std[1], Standardizer::kStdFloor);
  const auto z = s.apply(std::vector<double>{3.0, 5.0});
  EXPECT_DOUBLE_EQ(z[0], 1.0);
  EXPECT_DOUBLE_EQ(z[1], 0.0);
}

TEST(LogReg, SeparableOneDimensional) {
  Rows x;
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) {
    x.push_back({static_cast<double>(i % 2)});
    y.push_back(i % 2);
  }
  const auto m = train_logreg(x, y, {500, 0.1, 1e-4});
  EXPECT_GE(train_accuracy(m, x, y), 0.99);
  EXPECT_GT(m.weights[0], 0.0);
}

TEST(LogReg, LossNeverIncreases) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Rows x;
    std::vector<int> y;
    random_dataset(rng, 10 + rng.below(60), 1 + rng.below(5), x, y);
    for (const double lr : {0.01, 5.0}) {
      const auto m = train_logreg(x, y, {200, lr, 1e-3});
      ASSERT_EQ(m.loss_history.size(), 200u);
      for (std::size_t i = 1; i < m.loss_history.size(); ++i) ASSERT_LE(m.loss_history[i], m.loss_history[i - 1]);
    }
  }
}

TEST(LogReg, ConvergesToStationaryPoint) {
  Rng rng(2);
  Rows x;
  std::vector<int> y;
  random_dataset(rng, 80, 3, x, y);
  const double l2 = 0.05;
  const auto m = train_logreg(x, y, {5000, 0.5, l2});
  // Gradient of the objective at the returned weights, recomputed here.
  std::vector<double> gw(3, 0.0);
  double gb = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto z = m.norm.apply(x[i]);
    const double r = m.p_ai(x[i]) - y[i];
    for (std::size_t j = 0; j < 3; ++j) gw[j] += r * z[j] / 80.0;
    gb += r / 80.0;
  }
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(gw[j] + l2 * m.weights[j], 0.0, 1e-6);
  EXPECT_NEAR(gb, 0.0, 1e-6);
}

TEST(LogReg, HeavyRegularizationShrinksWeights) {
  Rng rng(3);
  Rows x;
  std::vector<int> y;
  random_dataset(rng, 50, 4, x, y);
  const auto m = train_logreg(x, y, {500, 0.1, 1e6});
  for (double w : m.weights) EXPECT_LT(std::abs(w), 1e-6);
}

TEST(LogReg, Errors) {
  const Rows x = {{1.0}, {2.0}};
  EXPECT_THROW(train_logreg(x, std::vector<int>{1, 1}), ConfigError);
  EXPECT_THROW(train_logreg(x, std::vector<int>{0}), ConfigError);
  EXPECT_THROW(train_logreg(Rows{}, std::vector<int>{}), ConfigError);
  EXPECT_THROW(train_logreg(x, std::vector<int>{0, 1}, {10, 0.0, 0.0}), ConfigError);
}

TEST(LogReg, TieGoesToHuman) {
  LogRegModel m;
  m.weights = {0.0};
  m.norm.mean = {0.0};
  m.norm.std = {1.0};
  EXPECT_EQ(m.predict(std::vector<double>{4.0}), 0);
  EXPECT_DOUBLE_EQ(m.p_ai(std::vector<double>{4.0}), 0.5);
}

TEST(LogReg, JsonRoundTrip) {
  Rng rng(4);
  Rows x;
  std::vector<int> y;
  random_dataset(rng, 30, 2, x, y);
  const auto m = train_logreg(x, y, {50, 0.1, 1e-4});
  const auto back = logreg_from_json(to_json(m));
  for (const auto& row : x) EXPECT_EQ(back.logit(row), m.logit(row));
  EXPECT_THROW(logreg_from_json(nlohmann::json::object()), nlohmann::json::exception);
}

TEST(LogReg, Deterministic) {
  Rng rng(5);
  Rows x;
  std::vector<int> y;
  random_dataset(rng, 40, 3, x, y);
  const auto a = train_logreg(x, y), b = train_logreg(x, y);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
}

}  // namespace
}  // namespace aidetect
