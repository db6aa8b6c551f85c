#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "aidetect/corpus.hpp"
#include "aidetect/csv.hpp"
#include "aidetect/error.hpp"
#include "aidetect/ngram.hpp"
#include "aidetect/unicode.hpp"

namespace aidetect {

// Surface analysis of raw text. Words are whitespace-separated tokens with
// every punctuation character removed (tokens left empty are dropped).
// Sentences are the pieces between runs of '.', '!' and '?' that hold at
// least one word; a text always has at least one sentence.
struct TextAnalysis {
  std::vector<std::u32string> words;          // lowercased
  std::vector<std::size_t> sentence_lengths;  // words per sentence
  std::size_t total_chars = 0;                // code points
  std::size_t punctuation_chars = 0;
  std::size_t digit_chars = 0;
};

inline TextAnalysis analyze_text(std::string_view raw) {
  TextAnalysis a;
  const std::u32string cps = unicode::decode_utf8(raw);
  a.total_chars = cps.size();

  std::u32string word;
  bool in_token = false;
  std::size_t sentence_words = 0;
  const auto end_token = [&] {
    if (in_token && !word.empty()) {
      a.words.push_back(word);
      ++sentence_words;
    }
    word.clear();
    in_token = false;
  };
  const auto end_sentence = [&] {
    if (sentence_words > 0) a.sentence_lengths.push_back(sentence_words);
    sentence_words = 0;
  };

  for (char32_t c : cps) {
    if (unicode::is_punctuation(c)) ++a.punctuation_chars;
    if (unicode::is_decimal_digit(c)) ++a.digit_chars;
    if (c == U'.' || c == U'!' || c == U'?') {
      end_token();
      end_sentence();
    } else if (unicode::is_space(c)) {
      end_token();
    } else {
      in_token = true;
      if (!unicode::is_punctuation(c)) word.push_back(unicode::to_lower(c));
    }
  }
  end_token();
  end_sentence();
  if (a.sentence_lengths.empty() && !a.words.empty()) a.sentence_lengths.push_back(a.words.size());
  return a;
}

// Vowel groups over a,e,i,o,u,y; a trailing silent 'e' is dropped unless the
// word ends in consonant + "le"; never less than one.
inline int count_syllables(std::u32string_view word) {
  const auto vowel = [](char32_t c) {
    return c == U'a' || c == U'e' || c == U'i' || c == U'o' || c == U'u' || c == U'y';
  };
  const auto consonant = [&](char32_t c) { return c >= U'a' && c <= U'z' && !vowel(c); };
  int groups = 0;
  bool prev_vowel = false;
  for (char32_t c : word) {
    const bool v = vowel(c);
    if (v && !prev_vowel) ++groups;
    prev_vowel = v;
  }
  const std::size_t n = word.size();
  if (n > 0 && word[n - 1] == U'e') {
    const bool consonant_le = n >= 3 && word[n - 2] == U'l' && consonant(word[n - 3]);
    if (!consonant_le) --groups;
  }
  return groups < 1 ? 1 : groups;
}

struct Readability {
  double flesch_reading_ease = 0.0;
  double fk_grade = 0.0;
  double avg_sentence_len_words = 0.0;
  double avg_syllables_per_word = 0.0;
};

inline Readability readability_scores(const TextAnalysis& a) {
  if (a.words.empty()) throw UndefinedInputError("readability of a text with no words is undefined");
  std::size_t syllables = 0;
  for (const auto& w : a.words) syllables += static_cast<std::size_t>(count_syllables(w));
  const double words = static_cast<double>(a.words.size());
  const double wps = words / static_cast<double>(a.sentence_lengths.size());
  const double spw = static_cast<double>(syllables) / words;
  return {206.835 - 1.015 * wps - 84.6 * spw, 0.39 * wps + 11.8 * spw - 15.59, wps, spw};
}

inline Readability readability_scores(std::string_view raw) { return readability_scores(analyze_text(raw)); }

struct Stylometrics {
  double type_token_ratio = 0.0;
  double punctuation_density = 0.0;
  double digit_density = 0.0;
  double avg_word_len_chars = 0.0;
  double burstiness = 0.0;
};

inline Stylometrics stylometric_scores(const TextAnalysis& a) {
  if (a.words.empty()) throw UndefinedInputError("stylometrics of a text with no words is undefined");
  Stylometrics s;
  const double words = static_cast<double>(a.words.size());
  const std::set<std::u32string> distinct(a.words.begin(), a.words.end());
  s.type_token_ratio = static_cast<double>(distinct.size()) / words;
  s.punctuation_density = static_cast<double>(a.punctuation_chars) / static_cast<double>(a.total_chars);
  s.digit_density = static_cast<double>(a.digit_chars) / static_cast<double>(a.total_chars);
  std::size_t chars = 0;
  for (const auto& w : a.words) chars += w.size();
  s.avg_word_len_chars = static_cast<double>(chars) / words;

  // Coefficient of variation of sentence lengths, population std.
  const auto& lens = a.sentence_lengths;
  if (lens.size() >= 2) {
    double mean = 0.0;
    for (auto l : lens) mean += static_cast<double>(l);
    mean /= static_cast<double>(lens.size());
    double var = 0.0;
    for (auto l : lens) var += (static_cast<double>(l) - mean) * (static_cast<double>(l) - mean);
    var /= static_cast<double>(lens.size());
    s.burstiness = std::sqrt(var) / mean;
  }
  return s;
}

inline Stylometrics stylometric_scores(std::string_view raw) { return stylometric_scores(analyze_text(raw)); }

inline constexpr std::size_t kNumFeatures = 10;
inline constexpr int kFeatureVersion = 1;
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "ppl",
    "log_ppl",
    "flesch_reading_ease",
    "fk_grade",
    "avg_sentence_len_words",
    "avg_word_len_chars",
    "type_token_ratio",
    "punctuation_density",
    "digit_density",
    "burstiness"};

struct FeatureVector {
  std::array<double, kNumFeatures> values{};

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool operator==(const FeatureVector&) const = default;
};

// Perplexity terms come from clean_text; the rest from raw_text, since
// cleaning strips the punctuation and digit signals.
inline FeatureVector feature_vector(const TextRecord& record, const NgramLm& lm) {
  if (clean_words(record.clean_text).empty()) {
    throw UndefinedInputError("record " + std::to_string(record.id) + " has no words after cleaning");
  }
  const TextAnalysis a = analyze_text(record.raw_text);
  const Readability r = readability_scores(a);
  const Stylometrics s = stylometric_scores(a);
  const double ppl = lm.perplexity(record.clean_text);
  FeatureVector f;
  f.values = {ppl,
              std::log(ppl),
              r.flesch_reading_ease,
              r.fk_grade,
              r.avg_sentence_len_words,
              s.avg_word_len_chars,
              s.type_token_ratio,
              s.punctuation_density,
              s.digit_density,
              s.burstiness};
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!std::isfinite(f.values[i])) {
      throw NumericError("feature " + std::string(kFeatureNames[i]) + " is not finite for record " +
                         std::to_string(record.id));
    }
  }
  return f;
}

struct FeatureRow {
  std::size_t id = 0;
  Label label = Label::Human;
  FeatureVector features;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Header: id, label, then the features in canonical order.
inline void write_feature_csv(std::ostream& out, const std::vector<FeatureRow>& rows) {
  std::vector<std::string> header = {"id", "label"};
  for (auto n : kFeatureNames) header.emplace_back(n);
  csv::write_row(out, header);
  for (const auto& r : rows) {
    std::vector<std::string> fields = {std::to_string(r.id), std::to_string(to_int(r.label))};
    for (double v : r.features.values) fields.push_back(format_double(v));
    csv::write_row(out, fields);
  }
}

inline std::vector<FeatureRow> read_feature_csv(const std::string& path) {
  const csv::Table t = csv::read(path);
  const std::size_t id_col = csv::column_index(t, "id");
  const std::size_t label_col = csv::column_index(t, "label");
  std::array<std::size_t, kNumFeatures> cols{};
  for (std::size_t i = 0; i < kNumFeatures; ++i) cols[i] = csv::column_index(t, std::string(kFeatureNames[i]));
  std::vector<FeatureRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    FeatureRow row;
    try {
      row.id = std::stoul(f[id_col]);
      row.label = parse_label(f[label_col], r);
      for (std::size_t i = 0; i < kNumFeatures; ++i) row.features[i] = std::stod(f[cols[i]]);
    } catch (const std::logic_error&) {
      throw RowError(r, "non-numeric feature value");
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace aidetect
