#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "aidetect/corpus.hpp"
#include "aidetect/error.hpp"
#include "aidetect/hash.hpp"
#include "aidetect/unicode.hpp"

namespace aidetect {

using TokenId = std::int32_t;

struct EncodedExample {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> mask;
  std::optional<Label> label;

  std::size_t length() const noexcept { return ids.size(); }
  // Number of attended positions; the mask is a prefix of ones.
  std::size_t attended() const noexcept {
    std::size_t n = 0;
    while (n < mask.size() && mask[n]) ++n;
    return n;
  }
};

namespace detail {

// GPT-2 style reversible byte -> printable code point table, used to store
// arbitrary byte strings as JSON text. Printable Latin-1 bytes map to
// themselves; the rest map to U+0100 onwards in byte order.
inline const std::array<char32_t, 256>& byte_to_unicode() {
  static const std::array<char32_t, 256> table = [] {
    std::array<char32_t, 256> t{};
    char32_t extra = 0;
    for (int b = 0; b < 256; ++b) {
      const bool printable = (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF);
      t[static_cast<std::size_t>(b)] = printable ? static_cast<char32_t>(b) : 0x100 + extra++;
    }
    return t;
  }();
  return table;
}

inline const std::unordered_map<char32_t, unsigned char>& unicode_to_byte() {
  static const std::unordered_map<char32_t, unsigned char> table = [] {
    std::unordered_map<char32_t, unsigned char> t;
    const auto& fwd = byte_to_unicode();
    for (int b = 0; b < 256; ++b) t.emplace(fwd[static_cast<std::size_t>(b)], static_cast<unsigned char>(b));
    return t;
  }();
  return table;
}

inline std::string escape_bytes(std::string_view bytes) {
  std::string out;
  for (unsigned char b : bytes) unicode::append_utf8(out, byte_to_unicode()[b]);
  return out;
}

inline std::optional<std::string> unescape_bytes(std::string_view text) {
  std::string out;
  const auto& rev = unicode_to_byte();
  for (char32_t cp : unicode::decode_utf8(text)) {
    const auto it = rev.find(cp);
    if (it == rev.end()) return std::nullopt;
    out.push_back(static_cast<char>(it->second));
  }
  return out;
}

constexpr std::uint64_t pair_key(TokenId a, TokenId b) noexcept {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace detail

// Byte-level BPE. Ids: 0..3 are PAD, BOS, EOS, UNK; 4..259 the raw bytes;
// 260.. the learned merges in the order they were learned.
class BpeTokenizer {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kNumSpecials = 4;
  static constexpr std::size_t kMinVocab = 256 + kNumSpecials;
  static constexpr int kFormatVersion = 1;

  // Special-token spellings use U+27E8/U+27E9, which no escaped byte string
  // can contain, so they never collide with learned tokens.
  static constexpr std::array<std::string_view, kNumSpecials> kSpecialNames = {"pad", "bos", "eos", "unk"};
  static std::string special_spelling(std::size_t i) {
    return "⟨" + std::string(kSpecialNames[i]) + "⟩";
  }

  BpeTokenizer() { reset_base(); }

  static constexpr TokenId byte_id(unsigned char b) noexcept { return static_cast<TokenId>(kNumSpecials + b); }

  std::size_t vocab_size() const noexcept { return tokens_.size(); }
  const std::vector<std::pair<TokenId, TokenId>>& merges() const noexcept { return merges_; }
  // Raw bytes of a token; specials have none.
  const std::string& token_bytes(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  bool is_special(TokenId id) const noexcept { return id >= 0 && static_cast<std::size_t>(id) < kNumSpecials; }

  // Most frequent adjacent pair (overlapping occurrences counted) is merged
  // until vocab_size is reached or no pair occurs twice. Ties go to the
  // lexicographically smaller (left bytes, right bytes) pair.
  static BpeTokenizer train(std::span<const std::string> texts, std::size_t vocab_size);

  // Subword ids of text, no specials. Merges apply greedily in learned order.
  std::vector<TokenId> tokenize(std::string_view text) const;

  EncodedExample encode(std::string_view text, std::size_t max_len, std::optional<Label> label = std::nullopt) const;

  std::vector<EncodedExample> batch_encode(std::span<const std::string> texts, std::size_t max_len) const {
    std::vector<EncodedExample> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(encode(t, max_len));
    return out;
  }

  std::string decode(std::span<const TokenId> ids) const;

  nlohmann::json to_json() const;
  static BpeTokenizer from_json(const nlohmann::json& j);

  std::string serialize() const { return to_json().dump(1) + "\n"; }
  std::string hash() const { return hex64(fnv1a64(serialize())); }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << serialize();
  }

  static BpeTokenizer load(const std::string& path) {
    const std::string bytes = csv::read_file(path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("tokenizer '" + path + "': " + e.what());
    }
    return from_json(j);
  }

  bool operator==(const BpeTokenizer& other) const {
    return tokens_ == other.tokens_ && merges_ == other.merges_ && merge_out_ == other.merge_out_;
  }

 private:
  void reset_base() {
    tokens_.assign(kNumSpecials, std::string{});
    index_.clear();
    for (int b = 0; b < 256; ++b) {
      tokens_.push_back(std::string(1, static_cast<char>(b)));
      index_.emplace(tokens_.back(), byte_id(static_cast<unsigned char>(b)));
    }
    merges_.clear();
    merge_out_.clear();
    ranks_.clear();
  }

  // Two different pairs can spell the same bytes ("ab"+"c", "a"+"bc"); the
  // later merge then reuses the existing id so the vocab stays a bijection.
  TokenId add_merge(TokenId a, TokenId b) {
    const auto rank = static_cast<std::int32_t>(merges_.size());
    std::string bytes = tokens_[static_cast<std::size_t>(a)] + tokens_[static_cast<std::size_t>(b)];
    TokenId out;
    if (const auto it = index_.find(bytes); it != index_.end()) {
      out = it->second;
    } else {
      out = static_cast<TokenId>(tokens_.size());
      index_.emplace(bytes, out);
      tokens_.push_back(std::move(bytes));
    }
    merges_.emplace_back(a, b);
    merge_out_.push_back(out);
    ranks_.emplace(detail::pair_key(a, b), rank);
    return out;
  }

  std::optional<std::int32_t> rank_of(TokenId a, TokenId b) const {
    const auto it = ranks_.find(detail::pair_key(a, b));
    if (it == ranks_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::vector<std::pair<TokenId, TokenId>> merges_;
  std::vector<TokenId> merge_out_;
  std::unordered_map<std::uint64_t, std::int32_t> ranks_;
};

inline BpeTokenizer BpeTokenizer::train(std::span<const std::string> texts, std::size_t vocab_size) {
  if (vocab_size < kMinVocab) {
    throw ConfigError("vocab_size " + std::to_string(vocab_size) + " is below the minimum " +
                      std::to_string(kMinVocab));
  }
  if (texts.empty()) throw ConfigError("cannot train a tokenizer on an empty corpus");

  BpeTokenizer tok;

  // All texts live in one linked array; links never cross text boundaries.
  std::vector<TokenId> sym;
  std::vector<std::int32_t> prev, next;
  for (const auto& t : texts) {
    const auto base = static_cast<std::int32_t>(sym.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      sym.push_back(byte_id(static_cast<unsigned char>(t[i])));
      prev.push_back(i == 0 ? -1 : base + static_cast<std::int32_t>(i) - 1);
      next.push_back(i + 1 == t.size() ? -1 : base + static_cast<std::int32_t>(i) + 1);
    }
  }
  std::vector<std::uint8_t> alive(sym.size(), 1);

  std::unordered_map<std::uint64_t, std::int64_t> counts;
  std::unordered_map<std::uint64_t, std::vector<std::int32_t>> where;

  struct Entry {
    std::int64_t count;
    TokenId a, b;
  };
  const auto& toks = tok.tokens_;
  // Max-heap on count; among equal counts the smaller pair ranks higher.
  const auto lower_priority = [&toks](const Entry& x, const Entry& y) {
    if (x.count != y.count) return x.count < y.count;
    const auto& xa = toks[static_cast<std::size_t>(x.a)];
    const auto& ya = toks[static_cast<std::size_t>(y.a)];
    if (xa != ya) return xa > ya;
    return toks[static_cast<std::size_t>(x.b)] > toks[static_cast<std::size_t>(y.b)];
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower_priority)> heap(lower_priority);

  for (std::size_t p = 0; p < sym.size(); ++p) {
    if (next[p] < 0) continue;
    const auto key = detail::pair_key(sym[p], sym[static_cast<std::size_t>(next[p])]);
    ++counts[key];
    where[key].push_back(static_cast<std::int32_t>(p));
  }
  for (const auto& [key, c] : counts) {
    heap.push({c, static_cast<TokenId>(key >> 32), static_cast<TokenId>(key & 0xFFFFFFFFu)});
  }

  std::unordered_set<std::uint64_t> touched;
  while (tok.tokens_.size() < vocab_size && !heap.empty()) {
    const Entry top = heap.top();
    heap.pop();
    const auto key = detail::pair_key(top.a, top.b);
    const auto cit = counts.find(key);
    if (cit == counts.end() || cit->second != top.count) continue;  // stale
    if (top.count < 2) break;

    const TokenId a = top.a, b = top.b;
    const TokenId merged = tok.add_merge(a, b);

    std::vector<std::int32_t> positions = std::move(where[key]);
    where.erase(key);
    std::sort(positions.begin(), positions.end());
    touched.clear();

    const auto bump = [&](TokenId x, TokenId y, std::int64_t delta, std::int32_t pos) {
      const auto k = detail::pair_key(x, y);
      counts[k] += delta;
      touched.insert(k);
      if (delta > 0) where[k].push_back(pos);
    };

    for (const std::int32_t p : positions) {
      const auto up = static_cast<std::size_t>(p);
      if (!alive[up] || sym[up] != a) continue;
      const std::int32_t q = next[up];
      if (q < 0 || sym[static_cast<std::size_t>(q)] != b) continue;
      const std::int32_t l = prev[up];
      const std::int32_t r = next[static_cast<std::size_t>(q)];
      if (l >= 0) bump(sym[static_cast<std::size_t>(l)], a, -1, l);
      if (r >= 0) bump(b, sym[static_cast<std::size_t>(r)], -1, q);
      bump(a, b, -1, p);

      sym[up] = merged;
      alive[static_cast<std::size_t>(q)] = 0;
      next[up] = r;
      if (r >= 0) prev[static_cast<std::size_t>(r)] = p;

      if (l >= 0) bump(sym[static_cast<std::size_t>(l)], merged, +1, l);
      if (r >= 0) bump(merged, sym[static_cast<std::size_t>(r)], +1, p);
    }
    for (const auto k : touched) {
      const auto c = counts[k];
      if (c <= 0) {
        counts.erase(k);
        continue;
      }
      heap.push({c, static_cast<TokenId>(k >> 32), static_cast<TokenId>(k & 0xFFFFFFFFu)});
    }
  }
  return tok;
}

inline std::vector<TokenId> BpeTokenizer::tokenize(std::string_view text) const {
  const std::size_t n = text.size();
  std::vector<TokenId> sym(n);
  std::vector<std::int32_t> prev(n), next(n);
  std::vector<std::uint8_t> alive(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    sym[i] = byte_id(static_cast<unsigned char>(text[i]));
    prev[i] = static_cast<std::int32_t>(i) - 1;
    next[i] = i + 1 < n ? static_cast<std::int32_t>(i + 1) : -1;
  }

  // (rank, left position), smallest first: lower ranks apply before higher
  // ones, and occurrences of one rank resolve left to right.
  using Cand = std::pair<std::int32_t, std::int32_t>;
  std::priority_queue<Cand, std::vector<Cand>, std::greater<>> heap;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (auto r = rank_of(sym[i], sym[i + 1])) heap.emplace(*r, static_cast<std::int32_t>(i));
  }
  while (!heap.empty()) {
    const auto [rank, p] = heap.top();
    heap.pop();
    const auto up = static_cast<std::size_t>(p);
    if (!alive[up]) continue;
    const std::int32_t q = next[up];
    if (q < 0) continue;
    const auto& m = merges_[static_cast<std::size_t>(rank)];
    if (sym[up] != m.first || sym[static_cast<std::size_t>(q)] != m.second) continue;

    sym[up] = merge_out_[static_cast<std::size_t>(rank)];
    alive[static_cast<std::size_t>(q)] = 0;
    const std::int32_t r = next[static_cast<std::size_t>(q)];
    next[up] = r;
    if (r >= 0) prev[static_cast<std::size_t>(r)] = p;

    const std::int32_t l = prev[up];
    if (l >= 0) {
      if (auto lr = rank_of(sym[static_cast<std::size_t>(l)], sym[up])) heap.emplace(*lr, l);
    }
    if (r >= 0) {
      if (auto rr = rank_of(sym[up], sym[static_cast<std::size_t>(r)])) heap.emplace(*rr, p);
    }
  }

  std::vector<TokenId> out;
  for (std::int32_t p = n ? 0 : -1; p >= 0; p = next[static_cast<std::size_t>(p)]) out.push_back(sym[static_cast<std::size_t>(p)]);
  return out;
}

inline EncodedExample BpeTokenizer::encode(std::string_view text, std::size_t max_len, std::optional<Label> label) const {
  if (max_len < 2) throw ConfigError("max_len must be at least 2");
  std::vector<TokenId> body = tokenize(text);
  if (body.size() > max_len - 2) body.resize(max_len - 2);

  EncodedExample ex;
  ex.label = label;
  ex.ids.assign(max_len, kPad);
  ex.mask.assign(max_len, 0);
  ex.ids[0] = kBos;
  std::copy(body.begin(), body.end(), ex.ids.begin() + 1);
  ex.ids[body.size() + 1] = kEos;
  std::fill_n(ex.mask.begin(), body.size() + 2, std::uint8_t{1});
  return ex;
}

inline std::string BpeTokenizer::decode(std::span<const TokenId> ids) const {
  std::string bytes;
  for (const TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
      throw RangeError("token id " + std::to_string(id) + " is outside the vocabulary of size " +
                       std::to_string(tokens_.size()));
    }
    if (id == kPad || id == kBos || id == kEos) continue;
    if (id == kUnk) {
      bytes += "\xEF\xBF\xBD";
      continue;
    }
    bytes += tokens_[static_cast<std::size_t>(id)];
  }
  return unicode::encode_utf8(unicode::decode_utf8(bytes));
}

inline nlohmann::json BpeTokenizer::to_json() const {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& [a, b] : merges_) {
    merges.push_back({detail::escape_bytes(token_bytes(a)), detail::escape_bytes(token_bytes(b))});
  }
  nlohmann::json vocab = nlohmann::json::object();
  nlohmann::json specials = nlohmann::json::object();
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i < kNumSpecials) {
      vocab[special_spelling(i)] = i;
      specials[std::string(kSpecialNames[i])] = i;
    } else {
      vocab[detail::escape_bytes(tokens_[i])] = i;
    }
  }
  return {{"format_version", kFormatVersion},
          {"version", kFormatVersion},
          {"byte_escaping", "gpt2-bytes-to-unicode"},
          {"specials", specials},
          {"merges", merges},
          {"vocab", vocab}};
}

inline BpeTokenizer BpeTokenizer::from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kFormatVersion) throw FormatError("unsupported tokenizer version");
    const auto& specials = j.at("specials");
    for (std::size_t i = 0; i < kNumSpecials; ++i) {
      if (specials.at(std::string(kSpecialNames[i])).get<std::size_t>() != i) {
        throw FormatError("special token '" + std::string(kSpecialNames[i]) + "' has an unexpected id");
      }
    }
    const auto& vocab = j.at("vocab");
    const auto& merges = j.at("merges");

    BpeTokenizer tok;
    // Bijection check: every id 0..|V|-1 appears exactly once.
    std::vector<std::string> by_id(vocab.size());
    std::vector<std::uint8_t> seen(vocab.size(), 0);
    for (const auto& [spelling, idj] : vocab.items()) {
      const auto id = idj.get<std::size_t>();
      if (id >= vocab.size() || seen[id]) throw FormatError("vocab ids are not a bijection onto 0..|V|-1");
      seen[id] = 1;
      by_id[id] = spelling;
    }
    if (by_id.size() < kMinVocab) throw FormatError("vocab is smaller than the byte alphabet plus specials");
    for (std::size_t i = 0; i < kNumSpecials; ++i) {
      if (by_id[i] != special_spelling(i)) throw FormatError("special token spelling mismatch");
    }
    for (int b = 0; b < 256; ++b) {
      if (by_id[static_cast<std::size_t>(byte_id(static_cast<unsigned char>(b)))] !=
          detail::escape_bytes(std::string(1, static_cast<char>(b)))) {
        throw FormatError("byte token " + std::to_string(b) + " missing or misplaced");
      }
    }
    std::unordered_map<std::string, TokenId> ids;
    for (std::size_t i = kNumSpecials; i < by_id.size(); ++i) ids.emplace(by_id[i], static_cast<TokenId>(i));
    for (const auto& m : merges) {
      if (!m.is_array() || m.size() != 2) throw FormatError("merge entries must be 2-element arrays");
      const auto left = m[0].get<std::string>();
      const auto right = m[1].get<std::string>();
      const auto a = ids.find(left), b = ids.find(right);
      if (a == ids.end() || b == ids.end()) throw FormatError("merge refers to an unknown token");
      if (static_cast<std::size_t>(std::max(a->second, b->second)) >= tok.tokens_.size()) {
        throw FormatError("merge uses a token learned later");
      }
      const auto out = ids.find(left + right);
      if (out == ids.end()) throw FormatError("merge output missing from vocab");
      if (tok.add_merge(a->second, b->second) != out->second) throw FormatError("merge output id mismatch");
    }
    if (tok.tokens_.size() != by_id.size()) throw FormatError("vocab holds tokens no merge produces");
    return tok;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed tokenizer json: ") + e.what());
  }
}

}  // namespace aidetect
