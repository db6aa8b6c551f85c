#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aidetect/checkpoint.hpp"
#include "aidetect/corpus.hpp"
#include "aidetect/error.hpp"
#include "aidetect/features.hpp"
#include "aidetect/logreg.hpp"
#include "aidetect/metrics.hpp"
#include "aidetect/model.hpp"
#include "aidetect/rng.hpp"
#include "aidetect/tokenizer.hpp"

namespace aidetect {

using Ratios = std::array<double, 3>;
inline constexpr Ratios kDefaultRatios = {0.8, 0.1, 0.1};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  bool operator==(const SplitIndices&) const = default;
};

// Per-class allocation of n items to (train, val, test) by largest
// remainder: floor(r * n) each, leftovers to the largest fractional parts,
// ties to the later split. Every count is within 1 of r * n.
inline std::array<std::size_t, 3> allocate_counts(std::size_t n, const Ratios& ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < 3; ++j) {
    const double quota = ratios[j] * static_cast<double>(n);
    counts[j] = static_cast<std::size_t>(std::floor(quota + 1e-9));
    frac[j] = quota - static_cast<double>(counts[j]);
    assigned += counts[j];
  }
  std::array<std::size_t, 3> order = {2, 1, 0};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  return counts;
}

// Each class is shuffled with its own seeded stream and cut per
// allocate_counts; the resulting id lists are sorted ascending.
inline SplitIndices stratified_split(std::span<const TextRecord> records, const Ratios& ratios, std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  std::array<std::vector<std::size_t>, 2> by_class;
  for (const auto& r : records) by_class[static_cast<std::size_t>(to_int(r.label))].push_back(r.id);

  SplitIndices split;
  for (std::size_t c = 0; c < 2; ++c) {
    auto& ids = by_class[c];
    if (ids.size() < 3) {
      throw ConfigError("class " + std::to_string(c) + " has " + std::to_string(ids.size()) +
                        " records; stratified splitting needs at least 3");
    }
    Rng rng(derive_seed(seed, 0x5B, c));
    rng.shuffle(std::span<std::size_t>(ids));
    const auto counts = allocate_counts(ids.size(), ratios);
    auto it = ids.begin();
    split.train.insert(split.train.end(), it, it + static_cast<std::ptrdiff_t>(counts[0]));
    it += static_cast<std::ptrdiff_t>(counts[0]);
    split.val.insert(split.val.end(), it, it + static_cast<std::ptrdiff_t>(counts[1]));
    it += static_cast<std::ptrdiff_t>(counts[1]);
    split.test.insert(split.test.end(), it, ids.end());
  }
  for (auto* part : {&split.train, &split.val, &split.test}) std::sort(part->begin(), part->end());
  return split;
}

enum class BatchMode { Shuffled, Sequential };

inline std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> indices, std::size_t batch_size,
                                                          BatchMode mode, std::uint64_t seed = 0) {
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  std::vector<std::size_t> order(indices.begin(), indices.end());
  if (mode == BatchMode::Shuffled) {
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

// Encoded examples addressable by record id.
class EncodedSet {
 public:
  EncodedSet() = default;
  EncodedSet(std::span<const TextRecord> records, const BpeTokenizer& tok, std::size_t max_len) {
    for (const auto& r : records) {
      if (r.id >= slots_.size()) slots_.resize(r.id + 1);
      slots_[r.id] = tok.encode(r.clean_text, max_len, r.label);
    }
  }

  const EncodedExample& at(std::size_t id) const {
    if (id >= slots_.size() || !slots_[id]) throw RangeError("no encoded example for record id " + std::to_string(id));
    return *slots_[id];
  }

  std::vector<EncodedExample> gather(std::span<const std::size_t> ids) const {
    std::vector<EncodedExample> out;
    out.reserve(ids.size());
    for (auto id : ids) out.push_back(at(id));
    return out;
  }

 private:
  std::vector<std::optional<EncodedExample>> slots_;
};

inline Metrics evaluate(const net::Params& params, const EncodedSet& data, std::span<const std::size_t> indices,
                        std::size_t batch_size = 64) {
  if (indices.empty()) throw ConfigError("evaluate needs at least one example");
  ConfusionMatrix cm;
  for (const auto& batch : make_batches(indices, batch_size, BatchMode::Sequential)) {
    for (auto id : batch) {
      const EncodedExample& ex = data.at(id);
      if (!ex.label) throw ConfigError("evaluation example " + std::to_string(id) + " has no label");
      cm.add(*ex.label, net::predict(params, ex).label);
    }
  }
  return metrics_from_confusion(cm);
}

inline Metrics evaluate(const Checkpoint& ck, const EncodedSet& data, std::span<const std::size_t> indices,
                        std::size_t batch_size = 64) {
  return evaluate(ck.params, data, indices, batch_size);
}

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 16;
  double lr = 5e-4;
  std::uint64_t seed = 42;
  // When set, a checkpoint of the current parameters is written here after
  // every epoch as epoch-<n>.ckpt.
  std::optional<std::filesystem::path> snapshot_dir;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Shuffled minibatch Adam over the train split, validation after every
// epoch, best-by-val-accuracy retention (ties keep the earlier epoch).
inline Checkpoint train_loop(std::span<const TextRecord> records, const SplitIndices& split, const BpeTokenizer& tok,
                             const net::ModelConfig& model_cfg, const TrainConfig& cfg,
                             const EpochCallback& on_epoch = {}) {
  model_cfg.validate();
  if (cfg.epochs == 0 || cfg.batch_size == 0) throw ConfigError("epochs and batch_size must be at least 1");
  if (tok.vocab_size() != model_cfg.vocab_size) {
    throw ConfigError("tokenizer vocab " + std::to_string(tok.vocab_size()) + " does not match model vocab_size " +
                      std::to_string(model_cfg.vocab_size));
  }
  if (split.train.empty() || split.val.empty()) throw ConfigError("train and validation splits must be non-empty");

  const EncodedSet data(records, tok, model_cfg.max_len);
  Checkpoint ck;
  ck.tokenizer_hash = tok.hash();
  ck.params = net::init_params(model_cfg, derive_seed(cfg.seed, 0x1));
  net::AdamState adam = net::AdamState::fresh(model_cfg, cfg.lr);

  Checkpoint best;
  double best_acc = -1.0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches = make_batches(split.train, cfg.batch_size, BatchMode::Shuffled, derive_seed(cfg.seed, 0x2, epoch));
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto examples = data.gather(batches[b]);
      auto lg = net::backward(ck.params, examples, net::Mode::Train, derive_seed(cfg.seed, 0x3 + (epoch << 8), b));
      if (!std::isfinite(lg.loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
      }
      try {
        net::adam_step(ck.params, lg.grads, adam);
      } catch (const NumericError&) {
        throw NumericError("non-finite gradient at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
      }
      loss_sum += lg.loss * static_cast<double>(examples.size());
    }

    EpochRecord rec{epoch, loss_sum / static_cast<double>(split.train.size()), evaluate(ck.params, data, split.val)};
    ck.history.push_back(rec);
    if (rec.val.accuracy > best_acc) {
      best_acc = rec.val.accuracy;
      best.params = ck.params;
      best.adam = adam;
      best.best_epoch = epoch;
    }
    if (cfg.snapshot_dir) {
      Checkpoint snap = ck;
      snap.adam = adam;
      snap.best_epoch = best.best_epoch;
      std::filesystem::create_directories(*cfg.snapshot_dir);
      snap.save((*cfg.snapshot_dir / ("epoch-" + std::to_string(epoch) + ".ckpt")).string());
    }
    if (on_epoch) on_epoch(rec);
  }
  ck.params = std::move(best.params);
  ck.adam = std::move(best.adam);
  ck.best_epoch = best.best_epoch;
  return ck;
}

// Features as row-major doubles, optionally with one column left out.
inline std::vector<std::vector<double>> feature_matrix(std::span<const FeatureRow> rows,
                                                       std::optional<std::size_t> drop = std::nullopt) {
  std::vector<std::vector<double>> x;
  x.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<double> v;
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      if (drop && *drop == j) continue;
      v.push_back(r.features[j]);
    }
    x.push_back(std::move(v));
  }
  return x;
}

inline std::vector<int> label_vector(std::span<const FeatureRow> rows) {
  std::vector<int> y;
  for (const auto& r : rows) y.push_back(to_int(r.label));
  return y;
}

// Rows whose id is in ids, in ids order; ids with no feature row are skipped.
inline std::vector<FeatureRow> select_rows(std::span<const FeatureRow> rows, std::span<const std::size_t> ids) {
  std::vector<const FeatureRow*> by_id;
  for (const auto& r : rows) {
    if (r.id >= by_id.size()) by_id.resize(r.id + 1, nullptr);
    by_id[r.id] = &r;
  }
  std::vector<FeatureRow> out;
  for (auto id : ids) {
    if (id < by_id.size() && by_id[id]) out.push_back(*by_id[id]);
  }
  return out;
}

inline double logreg_accuracy(const LogRegModel& m, std::span<const FeatureRow> rows,
                              std::optional<std::size_t> drop = std::nullopt) {
  if (rows.empty()) throw ConfigError("accuracy of an empty set is undefined");
  const auto x = feature_matrix(rows, drop);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) correct += m.predict(x[i]) == to_int(rows[i].label);
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

inline Metrics logreg_metrics(const LogRegModel& m, std::span<const FeatureRow> rows) {
  if (rows.empty()) throw ConfigError("metrics of an empty set are undefined");
  ConfusionMatrix cm;
  const auto x = feature_matrix(rows);
  for (std::size_t i = 0; i < rows.size(); ++i) cm.add(rows[i].label, m.predict(x[i]) ? Label::Ai : Label::Human);
  return metrics_from_confusion(cm);
}

inline LogRegModel train_baseline(std::span<const FeatureRow> rows, const SplitIndices& split, const LogRegConfig& cfg,
                                  std::optional<std::size_t> drop = std::nullopt) {
  const auto train = select_rows(rows, split.train);
  const auto y = label_vector(train);
  return train_logreg(feature_matrix(train, drop), y, cfg);
}

struct AblationRow {
  std::string feature;
  double acc_full = 0.0;
  double acc_without = 0.0;
  double delta = 0.0;
};

// Leave-one-feature-out: retrain the baseline on the train split without
// each feature in turn and score it on val. Sorted by delta, largest first;
// equal deltas keep canonical feature order.
inline std::vector<AblationRow> feature_ablation(std::span<const FeatureRow> rows, const SplitIndices& split,
                                                 const LogRegConfig& cfg) {
  const auto val = select_rows(rows, split.val);
  const double acc_full = logreg_accuracy(train_baseline(rows, split, cfg), val);
  std::vector<AblationRow> report;
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    const double acc = logreg_accuracy(train_baseline(rows, split, cfg, j), val, j);
    report.push_back({std::string(kFeatureNames[j]), acc_full, acc, acc_full - acc});
  }
  std::stable_sort(report.begin(), report.end(), [](const auto& a, const auto& b) { return a.delta > b.delta; });
  return report;
}

// Mean attention entropy -sum(a ln a) per [layer][head], averaged over every
// query row of every listed example (eval mode).
inline std::vector<std::vector<double>> attention_entropy(const net::Params& params, const EncodedSet& data,
                                                          std::span<const std::size_t> indices) {
  const auto& c = params.config;
  std::vector<std::vector<double>> sum(c.n_layers, std::vector<double>(c.n_heads, 0.0));
  std::size_t rows = 0;
  for (auto id : indices) {
    const auto r = net::forward(params, data.at(id), net::Mode::Eval);
    for (std::size_t l = 0; l < c.n_layers; ++l) {
      for (std::size_t h = 0; h < c.n_heads; ++h) {
        const auto& a = r.attention[l][h];
        sum[l][h] += -(a.array() * a.array().max(1e-300).log()).sum();
      }
    }
    rows += static_cast<std::size_t>(r.attention.front().front().rows());
  }
  if (rows == 0) throw ConfigError("attention summary needs at least one example");
  for (auto& layer : sum) {
    for (double& v : layer) v /= static_cast<double>(rows);
  }
  return sum;
}

}  // namespace aidetect
