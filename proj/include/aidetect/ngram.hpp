#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "aidetect/corpus.hpp"
#include "aidetect/error.hpp"

namespace aidetect {

// Word-level n-gram LM with add-k smoothing:
//   P(w | c) = (count(c, w) + k) / (count(c) + k * |V|)
// V holds every word seen at least twice plus UNK (id 0); rarer and unseen
// words score as UNK. Each text is prefixed with order-1 start symbols, which
// occur only as context and are not part of V.
class NgramLm {
 public:
  using WordId = std::int32_t;
  static constexpr WordId kUnk = 0;
  static constexpr WordId kStart = -1;
  static constexpr std::string_view kUnkSpelling = "<unk>";
  static constexpr int kFormatVersion = 1;

  struct ContextCounts {
    std::int64_t total = 0;
    std::map<WordId, std::int64_t> next;
  };

  static NgramLm train(std::span<const std::string> clean_texts, int order, double k) {
    if (order < 1) throw ConfigError("n-gram order must be at least 1");
    if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("smoothing constant k must be positive");
    if (clean_texts.empty()) throw ConfigError("cannot train a language model on an empty corpus");

    std::map<std::string, std::int64_t, std::less<>> freq;
    for (const auto& t : clean_texts) {
      for (auto w : clean_words(t)) ++freq[std::string(w)];
    }
    NgramLm lm;
    lm.order_ = order;
    lm.k_ = k;
    lm.words_.push_back(std::string(kUnkSpelling));
    for (const auto& [w, c] : freq) {
      if (c >= 2) {
        lm.ids_.emplace(w, static_cast<WordId>(lm.words_.size()));
        lm.words_.push_back(w);
      }
    }
    for (const auto& t : clean_texts) {
      const auto seq = lm.padded_ids(t);
      for (std::size_t i = static_cast<std::size_t>(order - 1); i < seq.size(); ++i) {
        auto& ctx = lm.contexts_[context_key(seq, i, order)];
        ++ctx.total;
        ++ctx.next[seq[i]];
      }
    }
    return lm;
  }

  int order() const noexcept { return order_; }
  double k() const noexcept { return k_; }
  // |V| including UNK.
  std::size_t vocab_size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  WordId word_id(std::string_view w) const {
    const auto it = ids_.find(std::string(w));
    return it == ids_.end() ? kUnk : it->second;
  }

  // context must hold order-1 ids (kStart allowed).
  double probability(std::span<const WordId> context, WordId w) const {
    const auto it = contexts_.find(key_of(context));
    const double v = static_cast<double>(words_.size());
    if (it == contexts_.end()) return k_ / (k_ * v);
    const auto nit = it->second.next.find(w);
    const double c = nit == it->second.next.end() ? 0.0 : static_cast<double>(nit->second);
    return (c + k_) / (static_cast<double>(it->second.total) + k_ * v);
  }

  // order-1 start symbols followed by the word ids of the text.
  std::vector<WordId> padded_ids(std::string_view clean) const {
    std::vector<WordId> seq(static_cast<std::size_t>(order_ - 1), kStart);
    for (auto w : clean_words(clean)) seq.push_back(word_id(w));
    return seq;
  }

  // exp of the negative mean log-probability over the text's words.
  double perplexity(std::string_view clean) const {
    const auto seq = padded_ids(clean);
    const std::size_t pad = static_cast<std::size_t>(order_ - 1);
    const std::size_t n = seq.size() - pad;
    if (n == 0) throw UndefinedInputError("perplexity of a text with no words is undefined");
    double log_sum = 0.0;
    for (std::size_t i = pad; i < seq.size(); ++i) {
      const std::span<const WordId> ctx(seq.data() + i - pad, pad);
      log_sum += std::log(probability(ctx, seq[i]));
    }
    return std::exp(-log_sum / static_cast<double>(n));
  }

  // Observed contexts, keyed by their id sequence.
  std::vector<std::pair<std::vector<WordId>, const ContextCounts*>> contexts() const {
    std::vector<std::pair<std::vector<WordId>, const ContextCounts*>> out;
    for (const auto& [key, cc] : contexts_) out.emplace_back(unkey(key), &cc);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json ctx = nlohmann::json::array();
    for (const auto& [ids, cc] : contexts()) {
      nlohmann::json next = nlohmann::json::array();
      for (const auto& [w, c] : cc->next) next.push_back({w, c});
      ctx.push_back({{"context", ids}, {"total", cc->total}, {"next", next}});
    }
    return {{"format_version", kFormatVersion}, {"order", order_}, {"k", k_}, {"vocab", words_}, {"contexts", ctx}};
  }

  static NgramLm from_json(const nlohmann::json& j) {
    try {
      NgramLm lm;
      lm.order_ = j.at("order").get<int>();
      lm.k_ = j.at("k").get<double>();
      if (lm.order_ < 1 || !(lm.k_ > 0.0)) throw FormatError("invalid language model header");
      lm.words_ = j.at("vocab").get<std::vector<std::string>>();
      if (lm.words_.empty() || lm.words_[0] != kUnkSpelling) throw FormatError("language model vocab must start with UNK");
      for (std::size_t i = 1; i < lm.words_.size(); ++i) lm.ids_.emplace(lm.words_[i], static_cast<WordId>(i));
      for (const auto& c : j.at("contexts")) {
        ContextCounts cc;
        cc.total = c.at("total").get<std::int64_t>();
        for (const auto& e : c.at("next")) cc.next.emplace(e.at(0).get<WordId>(), e.at(1).get<std::int64_t>());
        lm.contexts_.emplace(key_of(c.at("context").get<std::vector<WordId>>()), std::move(cc));
      }
      return lm;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed language model json: ") + e.what());
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << to_json().dump() << '\n';
  }

  static NgramLm load(const std::string& path) {
    try {
      return from_json(nlohmann::json::parse(csv::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("language model '" + path + "': " + e.what());
    }
  }

 private:
  static std::string key_of(std::span<const WordId> ids) {
    return std::string(reinterpret_cast<const char*>(ids.data()), ids.size() * sizeof(WordId));
  }
  static std::string context_key(const std::vector<WordId>& seq, std::size_t i, int order) {
    const std::size_t pad = static_cast<std::size_t>(order - 1);
    return key_of(std::span<const WordId>(seq.data() + i - pad, pad));
  }
  static std::vector<WordId> unkey(const std::string& key) {
    std::vector<WordId> ids(key.size() / sizeof(WordId));
    std::copy_n(key.data(), key.size(), reinterpret_cast<char*>(ids.data()));
    return ids;
  }

  int order_ = 1;
  double k_ = 1.0;
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
  std::unordered_map<std::string, ContextCounts> contexts_;
};

}  // namespace aidetect
