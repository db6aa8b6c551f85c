#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "aidetect/error.hpp"

namespace aidetect {

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;  // population std, floored at kStdFloor

  static constexpr double kStdFloor = 1e-8;

  static Standardizer fit(const std::vector<std::vector<double>>& x) {
    Standardizer s;
    const std::size_t dim = x.front().size();
    s.mean.assign(dim, 0.0);
    s.std.assign(dim, 0.0);
    const auto n = static_cast<double>(x.size());
    for (const auto& row : x) {
      for (std::size_t j = 0; j < dim; ++j) s.mean[j] += row[j];
    }
    for (double& m : s.mean) m /= n;
    for (const auto& row : x) {
      for (std::size_t j = 0; j < dim; ++j) s.std[j] += (row[j] - s.mean[j]) * (row[j] - s.mean[j]);
    }
    for (double& v : s.std) v = std::max(std::sqrt(v / n), kStdFloor);
    return s;
  }

  std::vector<double> apply(std::span<const double> row) const {
    std::vector<double> z(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) z[j] = (row[j] - mean[j]) / std[j];
    return z;
  }
};

struct LogRegConfig {
  std::size_t epochs = 2000;
  double lr = 0.1;
  double l2 = 1e-4;
};

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0.0;
  Standardizer norm;
  std::vector<double> loss_history;  // full-batch objective after each epoch

  double logit(std::span<const double> raw) const {
    const auto z = norm.apply(raw);
    double s = bias;
    for (std::size_t j = 0; j < z.size(); ++j) s += weights[j] * z[j];
    return s;
  }
  double p_ai(std::span<const double> raw) const { return 1.0 / (1.0 + std::exp(-logit(raw))); }
  // Ties (logit exactly 0) go to Human, as for the transformer.
  int predict(std::span<const double> raw) const { return logit(raw) > 0.0 ? 1 : 0; }
};

namespace detail {

// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// mean logistic loss + l2/2 * |w|^2; bias is not regularized.
inline double logreg_objective(const std::vector<std::vector<double>>& z, std::span<const int> y,
                               const std::vector<double>& w, double b, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double s = b;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * z[i][j];
    loss += y[i] ? softplus(-s) : softplus(s);
  }
  double reg = 0.0;
  for (double wj : w) reg += wj * wj;
  return loss / static_cast<double>(z.size()) + 0.5 * l2 * reg;
}

}  // namespace detail

// Full-batch gradient descent on the standardized features. A step that
// would raise the objective is retried at half the rate, and the halved rate
// is kept, so the recorded loss never increases.
inline LogRegModel train_logreg(const std::vector<std::vector<double>>& x, std::span<const int> y,
                                const LogRegConfig& cfg = {}) {
  if (x.empty() || x.size() != y.size()) throw ConfigError("logistic regression needs one label per row");
  bool has0 = false, has1 = false;
  for (int label : y) (label ? has1 : has0) = true;
  if (!has0 || !has1) throw ConfigError("logistic regression needs examples of both classes");
  if (!(cfg.lr > 0.0) || !(cfg.l2 >= 0.0)) throw ConfigError("logistic regression needs lr > 0 and l2 >= 0");

  LogRegModel model;
  model.norm = Standardizer::fit(x);
  std::vector<std::vector<double>> z;
  z.reserve(x.size());
  for (const auto& row : x) z.push_back(model.norm.apply(row));

  const std::size_t dim = x.front().size();
  const auto n = static_cast<double>(x.size());
  model.weights.assign(dim, 0.0);
  double lr = cfg.lr;
  double current = detail::logreg_objective(z, y, model.weights, model.bias, cfg.l2);

  std::vector<double> gw(dim), trial(dim);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      double s = model.bias;
      for (std::size_t j = 0; j < dim; ++j) s += model.weights[j] * z[i][j];
      const double r = 1.0 / (1.0 + std::exp(-s)) - y[i];
      for (std::size_t j = 0; j < dim; ++j) gw[j] += r * z[i][j];
      gb += r;
    }
    for (std::size_t j = 0; j < dim; ++j) gw[j] = gw[j] / n + cfg.l2 * model.weights[j];
    gb /= n;

    for (int attempt = 0; attempt < 60; ++attempt) {
      for (std::size_t j = 0; j < dim; ++j) trial[j] = model.weights[j] - lr * gw[j];
      const double tb = model.bias - lr * gb;
      const double next = detail::logreg_objective(z, y, trial, tb, cfg.l2);
      if (next <= current) {
        model.weights = trial;
        model.bias = tb;
        current = next;
        break;
      }
      lr *= 0.5;
    }
    model.loss_history.push_back(current);
  }
  return model;
}

inline nlohmann::json to_json(const LogRegModel& m) {
  return {{"weights", m.weights}, {"bias", m.bias}, {"mean", m.norm.mean}, {"std", m.norm.std}};
}

inline LogRegModel logreg_from_json(const nlohmann::json& j) {
  LogRegModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.norm.mean = j.at("mean").get<std::vector<double>>();
  m.norm.std = j.at("std").get<std::vector<double>>();
  return m;
}

}  // namespace aidetect
