#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aidetect/csv.hpp"
#include "aidetect/error.hpp"
#include "aidetect/unicode.hpp"

namespace aidetect {

enum class Label : int { Human = 0, Ai = 1 };

inline int to_int(Label l) noexcept { return static_cast<int>(l); }

struct TextRecord {
  std::size_t id = 0;
  std::string raw_text;
  std::string clean_text;
  Label label = Label::Human;
};

// lowercase -> drop Nd digits -> drop P* punctuation -> collapse whitespace
// runs to one space -> trim. Total and idempotent.
inline std::string clean_text(std::string_view raw) {
  const std::u32string cps = unicode::decode_utf8(raw);
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char32_t c : cps) {
    c = unicode::to_lower(c);
    if (unicode::is_decimal_digit(c) || unicode::is_punctuation(c)) continue;
    if (unicode::is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    unicode::append_utf8(out, c);
  }
  return out;
}

// Splits on single ASCII spaces; only valid on clean_text output.
inline std::vector<std::string_view> clean_words(std::string_view clean) {
  std::vector<std::string_view> words;
  std::size_t start = 0;
  while (start < clean.size()) {
    std::size_t end = clean.find(' ', start);
    if (end == std::string_view::npos) end = clean.size();
    if (end > start) words.push_back(clean.substr(start, end - start));
    start = end + 1;
  }
  return words;
}

inline std::string trim_whitespace(std::string_view s) {
  const std::u32string cps = unicode::decode_utf8(s);
  std::size_t b = 0, e = cps.size();
  while (b < e && unicode::is_space(cps[b])) ++b;
  while (e > b && unicode::is_space(cps[e - 1])) --e;
  return unicode::encode_utf8(std::u32string_view(cps).substr(b, e - b));
}

inline Label parse_label(std::string_view field, std::size_t row) {
  if (field == "0") return Label::Human;
  if (field == "1") return Label::Ai;
  throw RowError(row, "label '" + std::string(field) + "' is not 0 or 1");
}

inline std::vector<TextRecord> records_from_table(const csv::Table& table, const std::string& text_column,
                                                  const std::string& label_column) {
  const std::size_t text_idx = csv::column_index(table, text_column);
  const std::size_t label_idx = csv::column_index(table, label_column);
  std::vector<TextRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t row = 0; row < table.rows.size(); ++row) {
    const auto& fields = table.rows[row];
    if (trim_whitespace(fields[text_idx]).empty()) throw RowError(row, "empty text field");
    TextRecord rec;
    rec.id = row;
    rec.raw_text = fields[text_idx];
    rec.label = parse_label(fields[label_idx], row);
    rec.clean_text = clean_text(rec.raw_text);
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<TextRecord> parse_dataset(std::string_view csv_bytes, const std::string& text_column = "text",
                                             const std::string& label_column = "generated") {
  return records_from_table(csv::parse(csv_bytes), text_column, label_column);
}

inline std::vector<TextRecord> load_dataset(const std::string& path, const std::string& text_column = "text",
                                            const std::string& label_column = "generated") {
  return parse_dataset(csv::read_file(path), text_column, label_column);
}

// Unlabeled input for inference. Labels are read when the column exists.
struct InputText {
  std::size_t id = 0;
  std::string raw_text;
  std::optional<Label> label;
};

inline std::vector<InputText> load_texts(const std::string& path, const std::string& text_column = "text",
                                         const std::string& label_column = "generated") {
  const csv::Table table = csv::read(path);
  const std::size_t text_idx = csv::column_index(table, text_column);
  std::optional<std::size_t> label_idx;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i] == label_column) label_idx = i;
  }
  std::vector<InputText> out;
  for (std::size_t row = 0; row < table.rows.size(); ++row) {
    const auto& fields = table.rows[row];
    if (trim_whitespace(fields[text_idx]).empty()) throw RowError(row, "empty text field");
    InputText t{row, fields[text_idx], std::nullopt};
    if (label_idx) t.label = parse_label(fields[*label_idx], row);
    out.push_back(std::move(t));
  }
  return out;
}

struct LengthQuantiles {
  std::size_t p10 = 0;
  std::size_t p50 = 0;
  std::size_t p90 = 0;
};

struct CorpusStats {
  std::size_t n_total = 0;
  std::size_t n_human = 0;
  std::size_t n_ai = 0;
  std::optional<LengthQuantiles> human_lengths;
  std::optional<LengthQuantiles> ai_lengths;
};

// Nearest-rank: the ceil(p*n)-th smallest value (1-based), at least the first.
inline std::size_t nearest_rank(const std::vector<std::size_t>& sorted, double p) {
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

inline std::optional<LengthQuantiles> quantiles_of(std::vector<std::size_t> lengths) {
  if (lengths.empty()) return std::nullopt;
  std::sort(lengths.begin(), lengths.end());
  return LengthQuantiles{nearest_rank(lengths, 0.1), nearest_rank(lengths, 0.5), nearest_rank(lengths, 0.9)};
}

inline CorpusStats corpus_stats(const std::vector<TextRecord>& records) {
  CorpusStats s;
  std::vector<std::size_t> human, ai;
  for (const auto& r : records) {
    const std::size_t words = clean_words(r.clean_text).size();
    if (r.label == Label::Ai) {
      ++s.n_ai;
      ai.push_back(words);
    } else {
      ++s.n_human;
      human.push_back(words);
    }
  }
  s.n_total = s.n_human + s.n_ai;
  s.human_lengths = quantiles_of(std::move(human));
  s.ai_lengths = quantiles_of(std::move(ai));
  return s;
}

inline nlohmann::json to_json(const CorpusStats& s) {
  const auto q = [](const std::optional<LengthQuantiles>& lq) -> nlohmann::json {
    if (!lq) return nullptr;
    return {{"p10", lq->p10}, {"p50", lq->p50}, {"p90", lq->p90}};
  };
  return {{"format_version", 1},
          {"n_total", s.n_total},
          {"n_human", s.n_human},
          {"n_ai", s.n_ai},
          {"length_quantiles", {{"human", q(s.human_lengths)}, {"ai", q(s.ai_lengths)}}}};
}

}  // namespace aidetect
