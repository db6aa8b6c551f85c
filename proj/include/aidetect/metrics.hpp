#pragma once

#include <cstddef>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "aidetect/corpus.hpp"
#include "aidetect/error.hpp"

namespace aidetect {

// Positive class is Ai.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }

  void add(Label actual, Label predicted) noexcept {
    if (actual == Label::Ai) {
      (predicted == Label::Ai ? tp : fn) += 1;
    } else {
      (predicted == Label::Ai ? fp : tn) += 1;
    }
  }

  bool operator==(const ConfusionMatrix&) const = default;
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionMatrix confusion;

  bool operator==(const Metrics&) const = default;
};

// Zero denominators report 0 rather than NaN.
inline Metrics metrics_from_confusion(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ConfigError("metrics of an empty confusion matrix are undefined");
  Metrics m;
  m.confusion = cm;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  m.precision = cm.tp + cm.fp ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp) : 0.0;
  m.recall = cm.tp + cm.fn ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn) : 0.0;
  // 2PR/(P+R) = 2tp/(2tp+fp+fn)
  const auto f1_den = 2 * cm.tp + cm.fp + cm.fn;
  m.f1 = f1_den ? static_cast<double>(2 * cm.tp) / static_cast<double>(f1_den) : 0.0;
  return m;
}

inline nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}};
}

inline ConfusionMatrix confusion_from_json(const nlohmann::json& j) {
  return {j.at("tp").get<std::uint64_t>(), j.at("tn").get<std::uint64_t>(), j.at("fp").get<std::uint64_t>(),
          j.at("fn").get<std::uint64_t>()};
}

inline nlohmann::json to_json(const Metrics& m) {
  return {{"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"confusion", to_json(m.confusion)}};
}

inline Metrics metrics_from_json(const nlohmann::json& j) {
  return metrics_from_confusion(confusion_from_json(j.at("confusion")));
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  Metrics val;
};

inline nlohmann::json to_json(const EpochRecord& e) {
  return {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val", to_json(e.val)}};
}

inline EpochRecord epoch_from_json(const nlohmann::json& j) {
  return {j.at("epoch").get<std::size_t>(), j.at("train_loss").get<double>(), metrics_from_json(j.at("val"))};
}

}  // namespace aidetect
