#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aidetect/corpus.hpp"
#include "aidetect/rng.hpp"

namespace aidetect::synthetic {

// Two documented sources of labeled toy essays.
//
// All sources share the same surface process, so readability, punctuation,
// digit and sentence-length statistics carry no class signal:
//   - 5..9 sentences, each 6..14 words long;
//   - after any non-final word, a comma with probability 0.08;
//   - any word replaced by a 2..4 digit number with probability 0.03;
//   - sentences end in '.', or '!' / '?' with probability 0.05 each;
//   - first letter of each sentence capitalized.
// Words are pronounceable pseudo-words from one syllable generator.
//
// Label 1 (Ai), low-entropy templated source: each sentence alternates a
// connector from a small fixed set with a short run of the formulaic phrase
// chain below. Its word transitions are partly predictable.
//
// Label 0 (Human), high-variance mixture of two styles:
//   - formulaic: a walk on a sparse, skewed word chain over the common
//     vocabulary (very predictable);
//   - free: words drawn from a per-essay pool over a large open vocabulary
//     (unpredictable).
// Under an n-gram model trained on human essays the AI source therefore sits
// between the two human styles in perplexity.
struct Config {
  std::size_t n_essays = 2000;
  double ai_fraction = 0.5;
  double formulaic_fraction = 0.5;  // share of human essays in formulaic style
  std::size_t common_vocab = 150;
  std::size_t open_vocab = 1200;
  std::size_t connectors = 24;
  std::size_t chunk_min = 4;
  std::size_t chunk_max = 7;
  std::size_t pool_min = 50;  // free-style per-essay pool size
  std::size_t pool_max = 80;
  double chain_top_prob = 0.85;  // probability of the first successor
};

enum class Style { Templated, Formulaic, Free };

struct Essay {
  std::string text;
  Label label = Label::Human;
  Style style = Style::Templated;
};

class Generator {
 public:
  explicit Generator(std::uint64_t seed, Config cfg = {}) : cfg_(cfg), seed_(seed) {
    // Vocabularies are fixed per seed and pairwise disjoint.
    Rng vocab_rng(derive_seed(seed, 0x70CAB));
    std::vector<std::string> all;
    std::vector<std::string> seen;
    const std::size_t needed = cfg_.common_vocab + cfg_.open_vocab + cfg_.connectors;
    std::vector<std::string> sorted;
    while (all.size() < needed) {
      std::string w = pseudo_word(vocab_rng);
      const auto it = std::lower_bound(sorted.begin(), sorted.end(), w);
      if (it != sorted.end() && *it == w) continue;
      sorted.insert(it, w);
      all.push_back(std::move(w));
    }
    common_.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cfg_.common_vocab));
    open_.assign(all.begin() + static_cast<std::ptrdiff_t>(cfg_.common_vocab),
                 all.begin() + static_cast<std::ptrdiff_t>(cfg_.common_vocab + cfg_.open_vocab));
    connectors_.assign(all.begin() + static_cast<std::ptrdiff_t>(cfg_.common_vocab + cfg_.open_vocab), all.end());
    // Sparse chain: each common word has two successors.
    for (std::size_t i = 0; i < common_.size(); ++i) {
      successors_.push_back({vocab_rng.below(common_.size()), vocab_rng.below(common_.size())});
    }
  }

  // Essay i of the corpus; depends only on (seed, i).
  Essay essay(std::size_t i) const {
    Rng rng(derive_seed(seed_, 0xE55A, i));
    Essay e;
    e.label = rng.uniform() < cfg_.ai_fraction ? Label::Ai : Label::Human;
    const bool formulaic = rng.uniform() < cfg_.formulaic_fraction;
    e.style = e.label == Label::Ai ? Style::Templated : formulaic ? Style::Formulaic : Style::Free;
    std::vector<std::size_t> pool;
    if (e.label == Label::Human && !formulaic) {
      const std::size_t size = cfg_.pool_min + rng.below(cfg_.pool_max - cfg_.pool_min + 1);
      for (std::size_t k = 0; k < size; ++k) pool.push_back(rng.below(open_.size()));
    }

    const std::size_t sentences = 5 + rng.below(5);
    for (std::size_t s = 0; s < sentences; ++s) {
      const std::size_t len = 6 + rng.below(9);
      std::vector<std::string> words;
      if (e.label == Label::Ai) {
        std::size_t pos = rng.below(common_.size());
        while (words.size() < len) {
          words.push_back(connectors_[rng.below(connectors_.size())]);
          const std::size_t chunk = cfg_.chunk_min + rng.below(cfg_.chunk_max - cfg_.chunk_min + 1);
          pos = rng.below(common_.size());
          for (std::size_t k = 0; k < chunk && words.size() < len; ++k) {
            words.push_back(common_[pos]);
            pos = step(pos, rng);
          }
        }
      } else if (formulaic) {
        std::size_t pos = rng.below(common_.size());
        while (words.size() < len) {
          words.push_back(common_[pos]);
          pos = step(pos, rng);
        }
      } else {
        while (words.size() < len) words.push_back(open_[pool[rng.below(pool.size())]]);
      }
      append_sentence(e.text, words, rng);
    }
    return e;
  }

  std::vector<Essay> corpus() const {
    std::vector<Essay> out;
    out.reserve(cfg_.n_essays);
    for (std::size_t i = 0; i < cfg_.n_essays; ++i) out.push_back(essay(i));
    return out;
  }

  // Records as load_dataset would produce them.
  std::vector<TextRecord> records() const {
    std::vector<TextRecord> out;
    for (std::size_t i = 0; i < cfg_.n_essays; ++i) {
      Essay e = essay(i);
      out.push_back({i, e.text, clean_text(e.text), e.label});
    }
    return out;
  }

  void write_csv(std::ostream& out) const {
    csv::write_row(out, {"text", "generated"});
    for (std::size_t i = 0; i < cfg_.n_essays; ++i) {
      const Essay e = essay(i);
      csv::write_row(out, {e.text, std::to_string(to_int(e.label))});
    }
  }

 private:
  static std::string pseudo_word(Rng& rng) {
    static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                                   "s", "t", "v", "z", "br", "st", "tr", "pl", "gr", "sh"};
    static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
    static constexpr std::string_view kCodas[] = {"", "", "", "n", "r", "s", "t", "l", "m"};
    std::string w;
    const std::size_t syllables = 1 + rng.below(3);
    for (std::size_t s = 0; s < syllables; ++s) {
      w += kOnsets[rng.below(std::size(kOnsets))];
      w += kVowels[rng.below(std::size(kVowels))];
      w += kCodas[rng.below(std::size(kCodas))];
    }
    return w;
  }

  std::size_t step(std::size_t pos, Rng& rng) const {
    const auto& succ = successors_[pos];
    return rng.uniform() < cfg_.chain_top_prob ? succ[0] : succ[1];
  }

  static void append_sentence(std::string& text, std::vector<std::string>& words, Rng& rng) {
    if (!text.empty()) text.push_back(' ');
    for (std::size_t k = 0; k < words.size(); ++k) {
      std::string w = words[k];
      if (rng.uniform() < 0.03) w = std::to_string(10 + rng.below(9990));
      if (k == 0 && !w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
      text += w;
      if (k + 1 < words.size()) {
        if (rng.uniform() < 0.08) text.push_back(',');
        text.push_back(' ');
      }
    }
    const double end = rng.uniform();
    text.push_back(end < 0.05 ? '!' : end < 0.10 ? '?' : '.');
  }

  Config cfg_;
  std::uint64_t seed_;
  std::vector<std::string> common_;
  std::vector<std::string> open_;
  std::vector<std::string> connectors_;
  std::vector<std::array<std::size_t, 2>> successors_;
};

}  // namespace aidetect::synthetic
