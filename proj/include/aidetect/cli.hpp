#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aidetect/checkpoint.hpp"
#include "aidetect/corpus.hpp"
#include "aidetect/features.hpp"
#include "aidetect/ngram.hpp"
#include "aidetect/pipeline.hpp"
#include "aidetect/tokenizer.hpp"

namespace aidetect::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kFormatVersion = 1;

inline const std::vector<std::string> kSubcommands = {"prepare", "train-tokenizer", "features", "train",
                                                      "eval",    "detect",          "ablate",   "report"};

// Bad command line: exit 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Resolved settings for one run. Precedence: built-in defaults, then the
// config file, then flags. Paths in a config file are relative to the file;
// paths given as flags are relative to the working directory.
struct RunConfig {
  std::string dataset;
  std::string text_column = "text";
  std::string label_column = "generated";
  Ratios ratios = kDefaultRatios;
  std::uint64_t seed = 42;
  std::size_t vocab_size = 2000;
  net::ModelConfig model;
  TrainConfig train;
  bool snapshots = false;
  int lm_order = 3;
  double lm_k = 1.0;
  LogRegConfig baseline;
  std::string out = "out";

  nlohmann::json to_json() const {
    return {{"format_version", kFormatVersion},
            {"dataset", dataset},
            {"text_column", text_column},
            {"label_column", label_column},
            {"ratios", ratios},
            {"seed", seed},
            {"tokenizer", {{"vocab_size", vocab_size}, {"max_len", model.max_len}}},
            {"model",
             {{"d_model", model.d_model},
              {"n_heads", model.n_heads},
              {"n_layers", model.n_layers},
              {"d_ff", model.d_ff},
              {"dropout", model.dropout}}},
            {"train",
             {{"epochs", train.epochs}, {"batch_size", train.batch_size}, {"lr", train.lr}, {"snapshots", snapshots}}},
            {"lm", {{"order", lm_order}, {"k", lm_k}}},
            {"baseline", {{"epochs", baseline.epochs}, {"lr", baseline.lr}, {"l2", baseline.l2}}},
            {"out", out}};
  }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& dest) {
  if (j.contains(key)) dest = j.at(key).get<T>();
}

inline std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace detail

inline void apply_config_json(RunConfig& c, const nlohmann::json& j, const fs::path& base) {
  using detail::take;
  try {
    detail::check_keys(j,
                       {"format_version", "dataset", "text_column", "label_column", "ratios", "seed", "tokenizer", "model",
                        "train", "lm", "baseline", "out"},
                       "");
    if (j.contains("dataset")) c.dataset = detail::resolve(base, j.at("dataset").get<std::string>());
    if (j.contains("out")) c.out = detail::resolve(base, j.at("out").get<std::string>());
    take(j, "text_column", c.text_column);
    take(j, "label_column", c.label_column);
    take(j, "ratios", c.ratios);
    take(j, "seed", c.seed);
    if (j.contains("tokenizer")) {
      const auto& t = j.at("tokenizer");
      detail::check_keys(t, {"vocab_size", "max_len"}, "tokenizer.");
      take(t, "vocab_size", c.vocab_size);
      take(t, "max_len", c.model.max_len);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      detail::check_keys(m, {"d_model", "n_heads", "n_layers", "d_ff", "dropout"}, "model.");
      take(m, "d_model", c.model.d_model);
      take(m, "n_heads", c.model.n_heads);
      take(m, "n_layers", c.model.n_layers);
      take(m, "d_ff", c.model.d_ff);
      take(m, "dropout", c.model.dropout);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      detail::check_keys(t, {"epochs", "batch_size", "lr", "snapshots"}, "train.");
      take(t, "epochs", c.train.epochs);
      take(t, "batch_size", c.train.batch_size);
      take(t, "lr", c.train.lr);
      take(t, "snapshots", c.snapshots);
    }
    if (j.contains("lm")) {
      const auto& l = j.at("lm");
      detail::check_keys(l, {"order", "k"}, "lm.");
      take(l, "order", c.lm_order);
      take(l, "k", c.lm_k);
    }
    if (j.contains("baseline")) {
      const auto& b = j.at("baseline");
      detail::check_keys(b, {"epochs", "lr", "l2"}, "baseline.");
      take(b, "epochs", c.baseline.epochs);
      take(b, "lr", c.baseline.lr);
      take(b, "l2", c.baseline.l2);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

inline RunConfig load_config_file(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  RunConfig c;
  apply_config_json(c, j, fs::path(path).parent_path());
  return c;
}

inline Ratios parse_ratios(const std::string& s) {
  Ratios r{};
  std::stringstream ss(s);
  std::string part;
  std::size_t i = 0;
  while (std::getline(ss, part, ',')) {
    if (i == 3) throw UsageError("--ratios takes exactly three comma-separated numbers");
    try {
      std::size_t used = 0;
      r[i] = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::logic_error&) {
      throw UsageError("--ratios: '" + part + "' is not a number");
    }
    ++i;
  }
  if (i != 3) throw UsageError("--ratios takes exactly three comma-separated numbers");
  return r;
}

// Stage helpers shared by the subcommands.

struct Dataset {
  std::vector<TextRecord> records;
  SplitIndices split;
};

inline Dataset load_split_dataset(const RunConfig& c) {
  if (c.dataset.empty()) throw UsageError("no dataset given: pass --dataset or set \"dataset\" in the config");
  Dataset d;
  d.records = load_dataset(c.dataset, c.text_column, c.label_column);
  d.split = stratified_split(d.records, c.ratios, c.seed);
  return d;
}

inline std::vector<std::string> train_texts(const Dataset& d) {
  std::vector<std::string> texts;
  for (auto id : d.split.train) texts.push_back(d.records[id].clean_text);
  return texts;
}

inline BpeTokenizer build_tokenizer(const RunConfig& c, const Dataset& d) {
  return BpeTokenizer::train(train_texts(d), c.vocab_size);
}

struct FeatureSet {
  NgramLm lm;
  std::vector<FeatureRow> rows;  // records with no words after cleaning are left out
  std::size_t skipped = 0;
};

// The LM sees only human-written training essays.
inline FeatureSet build_features(const RunConfig& c, const Dataset& d) {
  std::vector<std::string> human;
  for (auto id : d.split.train) {
    if (d.records[id].label == Label::Human) human.push_back(d.records[id].clean_text);
  }
  FeatureSet fs{NgramLm::train(human, c.lm_order, c.lm_k), {}, 0};
  for (const auto& r : d.records) {
    if (clean_words(r.clean_text).empty()) {
      ++fs.skipped;
      continue;
    }
    fs.rows.push_back({r.id, r.label, feature_vector(r, fs.lm)});
  }
  return fs;
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  if (!dir.empty()) fs::create_directories(dir, ec);
}

inline void write_text(const fs::path& path, const std::string& text) {
  ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(csv::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline const std::vector<std::size_t>& split_part(const SplitIndices& s, const std::string& name) {
  if (name == "train") return s.train;
  if (name == "val") return s.val;
  if (name == "test") return s.test;
  throw UsageError("--split must be train, val or test");
}

inline nlohmann::json split_json(const SplitIndices& s) {
  return {{"format_version", kFormatVersion}, {"train", s.train}, {"val", s.val}, {"test", s.test}};
}

inline Checkpoint load_checked_checkpoint(const std::string& ck_path, const BpeTokenizer& tok) {
  Checkpoint ck = Checkpoint::load(ck_path);
  if (ck.tokenizer_hash != tok.hash()) {
    throw ConfigError("checkpoint '" + ck_path + "' was trained with a different tokenizer");
  }
  return ck;
}

// Confusion layout: rows actual Human/Ai, columns predicted Human/Ai.
inline std::string confusion_csv(const ConfusionMatrix& cm) {
  return std::to_string(cm.tn) + "," + std::to_string(cm.fp) + "\n" + std::to_string(cm.fn) + "," +
         std::to_string(cm.tp) + "\n";
}

inline std::string fixed4(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4) << v;
  return ss.str();
}

inline std::string summary_text(const nlohmann::json& metrics) {
  const Metrics m = metrics_from_json(metrics);
  std::ostringstream s;
  s << "split: " << metrics.value("split", std::string("?")) << "\n";
  s << "examples: " << m.confusion.total() << "\n";
  s << "accuracy: " << fixed4(m.accuracy) << "\n";
  s << "precision: " << fixed4(m.precision) << "\n";
  s << "recall: " << fixed4(m.recall) << "\n";
  s << "f1: " << fixed4(m.f1) << "\n";
  s << "confusion (rows actual human/ai, cols predicted human/ai):\n";
  s << "  " << m.confusion.tn << " " << m.confusion.fp << "\n";
  s << "  " << m.confusion.fn << " " << m.confusion.tp << "\n";
  if (metrics.contains("history") && metrics["history"].is_array()) {
    s << "training history:\n";
    for (const auto& e : metrics["history"]) {
      const auto rec = epoch_from_json(e);
      s << "  epoch " << rec.epoch << ": train_loss " << fixed4(rec.train_loss) << ", val accuracy "
        << fixed4(rec.val.accuracy) << "\n";
    }
    if (metrics.contains("best_epoch")) s << "best epoch: " << metrics["best_epoch"].get<std::size_t>() << "\n";
  }
  if (metrics.contains("baseline") && metrics["baseline"].is_object()) {
    const Metrics b = metrics_from_json(metrics["baseline"]);
    s << "feature baseline accuracy: " << fixed4(b.accuracy) << "\n";
  }
  return s.str();
}

// Subcommands. Each returns normally on success and throws on failure.

inline void cmd_prepare(const RunConfig& c, std::ostream& out) {
  const Dataset d = load_split_dataset(c);
  const fs::path dir(c.out);
  std::ostringstream clean;
  csv::write_row(clean, {"id", "text", "clean_text", c.label_column});
  for (const auto& r : d.records) {
    csv::write_row(clean, {std::to_string(r.id), r.raw_text, r.clean_text, std::to_string(to_int(r.label))});
  }
  write_text(dir / "clean.csv", clean.str());
  write_json(dir / "stats.json", to_json(corpus_stats(d.records)));
  write_json(dir / "split.json", split_json(d.split));
  const auto s = corpus_stats(d.records);
  out << "prepared " << s.n_total << " records (" << s.n_human << " human, " << s.n_ai << " ai) -> " << dir.string()
      << "\n";
}

inline void cmd_train_tokenizer(const RunConfig& c, std::ostream& out) {
  const Dataset d = load_split_dataset(c);
  const BpeTokenizer tok = build_tokenizer(c, d);
  ensure_dir(c.out);
  tok.save((fs::path(c.out) / "tokenizer.json").string());
  out << "tokenizer: " << tok.vocab_size() << " tokens, " << tok.merges().size() << " merges, hash " << tok.hash()
      << "\n";
}

inline void cmd_features(const RunConfig& c, std::ostream& out) {
  const Dataset d = load_split_dataset(c);
  const FeatureSet f = build_features(c, d);
  const fs::path dir(c.out);
  std::ostringstream csv_out;
  write_feature_csv(csv_out, f.rows);
  write_text(dir / "features.csv", csv_out.str());
  f.lm.save((dir / "lm.json").string());
  out << "features: " << f.rows.size() << " rows";
  if (f.skipped) out << ", " << f.skipped << " records skipped (no words after cleaning)";
  out << "\n";
}

inline void cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Dataset d = load_split_dataset(c);
  const fs::path dir(c.out);
  const BpeTokenizer tok = build_tokenizer(c, d);
  ensure_dir(dir);
  tok.save((dir / "tokenizer.json").string());

  net::ModelConfig mc = c.model;
  mc.vocab_size = tok.vocab_size();
  TrainConfig tc = c.train;
  tc.seed = c.seed;
  if (c.snapshots) tc.snapshot_dir = dir / "snapshots";

  Checkpoint ck = train_loop(d.records, d.split, tok, mc, tc, [&](const EpochRecord& r) {
    err << "epoch " << r.epoch << "/" << tc.epochs << ": train_loss " << fixed4(r.train_loss) << ", val accuracy "
        << fixed4(r.val.accuracy) << "\n";
  });
  const FeatureSet f = build_features(c, d);
  ck.baseline = train_baseline(f.rows, d.split, c.baseline);
  ck.run = {{"seed", c.seed},
            {"ratios", c.ratios},
            {"text_column", c.text_column},
            {"label_column", c.label_column},
            {"lm", {{"order", c.lm_order}, {"k", c.lm_k}}},
            {"baseline", {{"epochs", c.baseline.epochs}, {"lr", c.baseline.lr}, {"l2", c.baseline.l2}}},
            {"train", {{"epochs", tc.epochs}, {"batch_size", tc.batch_size}, {"lr", tc.lr}}}};
  ck.save((dir / "checkpoint.ckpt").string());

  nlohmann::json hist = nlohmann::json::array();
  for (const auto& e : ck.history) hist.push_back(to_json(e));
  write_json(dir / "history.json", {{"format_version", kFormatVersion}, {"best_epoch", ck.best_epoch}, {"history", hist}});
  write_json(dir / "run_config.json", c.to_json());
  out << "trained " << tc.epochs << " epochs; best epoch " << ck.best_epoch << " (val accuracy "
      << fixed4(ck.history[ck.best_epoch - 1].val.accuracy) << ") -> " << (dir / "checkpoint.ckpt").string() << "\n";
}

inline std::string default_checkpoint(const RunConfig& c) { return (fs::path(c.out) / "checkpoint.ckpt").string(); }

inline std::string tokenizer_beside(const std::string& ck_path) {
  return (fs::path(ck_path).parent_path() / "tokenizer.json").string();
}

inline void cmd_eval(const RunConfig& c, const std::string& ck_path, const std::string& tok_path,
                     const std::string& split_name, std::ostream& out) {
  const Dataset d = load_split_dataset(c);
  const auto& ids = split_part(d.split, split_name);
  const BpeTokenizer tok = BpeTokenizer::load(tok_path);
  const Checkpoint ck = load_checked_checkpoint(ck_path, tok);
  const EncodedSet data(d.records, tok, ck.config().max_len);
  const Metrics m = evaluate(ck, data, ids);

  nlohmann::json j = to_json(m);
  j["format_version"] = kFormatVersion;
  j["split"] = split_name;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& e : ck.history) hist.push_back(to_json(e));
  j["history"] = hist;
  j["best_epoch"] = ck.best_epoch;
  if (ck.baseline) {
    const FeatureSet f = build_features(c, d);
    j["baseline"] = to_json(logreg_metrics(*ck.baseline, select_rows(f.rows, ids)));
  } else {
    j["baseline"] = nullptr;
  }
  write_json(fs::path(c.out) / "metrics.json", j);
  out << split_name << " accuracy " << fixed4(m.accuracy) << " (tp " << m.confusion.tp << ", tn " << m.confusion.tn
      << ", fp " << m.confusion.fp << ", fn " << m.confusion.fn << ")\n";
}

inline void cmd_detect(const RunConfig& c, const std::string& ck_path, const std::string& tok_path,
                       const std::string& in_path, const std::string& out_path, std::ostream& out) {
  const BpeTokenizer tok = BpeTokenizer::load(tok_path);
  const Checkpoint ck = load_checked_checkpoint(ck_path, tok);
  const auto texts = load_texts(in_path, c.text_column, c.label_column);
  std::string lines;
  std::size_t flagged = 0;
  for (const auto& t : texts) {
    const auto ex = tok.encode(clean_text(t.raw_text), ck.config().max_len);
    const auto p = net::predict(ck.params, ex);
    flagged += p.label == Label::Ai;
    const nlohmann::json line = {
        {"format_version", kFormatVersion}, {"id", t.id}, {"p_ai", p.p_ai}, {"label", to_int(p.label)}};
    lines += line.dump() + "\n";
  }
  write_text(out_path, lines);
  out << texts.size() << " texts scored, " << flagged << " flagged as AI -> " << out_path << "\n";
}

inline void cmd_ablate(const RunConfig& c, const std::string& ck_path, const std::string& tok_path, std::ostream& out) {
  const Dataset d = load_split_dataset(c);
  const FeatureSet f = build_features(c, d);
  const auto report = feature_ablation(f.rows, d.split, c.baseline);
  std::ostringstream csv_out;
  csv::write_row(csv_out, {"feature", "acc_full", "acc_without", "delta"});
  for (const auto& r : report) {
    csv::write_row(csv_out, {r.feature, format_double(r.acc_full), format_double(r.acc_without), format_double(r.delta)});
  }
  const fs::path dir(c.out);
  write_text(dir / "ablation.csv", csv_out.str());
  out << "ablation: top feature " << report.front().feature << " (delta " << fixed4(report.front().delta) << ")\n";

  if (fs::exists(ck_path)) {
    const BpeTokenizer tok = BpeTokenizer::load(tok_path);
    const Checkpoint ck = load_checked_checkpoint(ck_path, tok);
    const EncodedSet data(d.records, tok, ck.config().max_len);
    const auto h = attention_entropy(ck.params, data, d.split.val);
    write_json(dir / "attention.json",
               {{"format_version", kFormatVersion}, {"split", "val"}, {"mean_entropy", h}});
    out << "attention entropy summary -> " << (dir / "attention.json").string() << "\n";
  }
}

inline void cmd_report(const RunConfig& c, const std::string& metrics_path, std::ostream& out) {
  const nlohmann::json j = read_json(metrics_path);
  ConfusionMatrix cm;
  try {
    cm = metrics_from_json(j).confusion;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + metrics_path + "' is not a metrics file: " + e.what());
  }
  if (cm.total() == 0) throw ConfigError("metrics file has an empty confusion matrix");
  const fs::path dir(c.out);
  write_text(dir / "confusion.csv", confusion_csv(cm));
  const std::string summary = summary_text(j);
  write_text(dir / "report.txt", summary);
  out << summary;
}

inline std::string usage() {
  std::string s = "usage: aidetect <command> [options]\ncommands:";
  for (const auto& c : kSubcommands) s += " " + c;
  return s + "\nrun 'aidetect <command> --help' for the options of a command\n";
}

}  // namespace aidetect::cli

namespace aidetect::cli {

// Runs one subcommand; args excludes the program name. Returns the exit
// status: 0 success, 1 usage error, 2 data or validation error.
inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    (args.empty() ? err : out) << usage();
    return args.empty() ? kExitUsage : kExitOk;
  }
  const std::string command = args[0];
  if (std::find(kSubcommands.begin(), kSubcommands.end(), command) == kSubcommands.end()) {
    err << "unknown command '" << command << "'\n" << usage();
    return kExitUsage;
  }

  CLI::App app("aidetect " + command, "aidetect " + command);
  std::optional<std::string> config_path, dataset, out_dir, ratios, checkpoint, tokenizer, in_path, metrics_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, batch_size, max_len, vocab_size;
  std::optional<double> lr;
  std::string split_name = "test";
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--dataset", dataset, "CSV dataset (overrides the config)");
  app.add_option("--seed", seed, "random seed (default 42)");
  app.add_option("--epochs", epochs, "training epochs (default 5)");
  app.add_option("--batch-size", batch_size, "minibatch size (default 16)");
  app.add_option("--max-len", max_len, "encoded sequence length (default 256)");
  app.add_option("--vocab-size", vocab_size, "tokenizer vocabulary size (default 2000)");
  app.add_option("--lr", lr, "Adam learning rate (default 5e-4)");
  app.add_option("--ratios", ratios, "train,val,test split ratios (default 0.8,0.1,0.1)");
  if (command == "detect") {
    app.add_option("--out", out_dir, "verdict JSON-lines file (default <out>/verdicts.jsonl)");
    app.add_option("--in", in_path, "CSV of texts to score")->required();
  } else {
    app.add_option("--out", out_dir, "output directory (default out)");
  }
  if (command == "eval" || command == "detect" || command == "ablate") {
    app.add_option("--checkpoint", checkpoint, "checkpoint file (default <out>/checkpoint.ckpt)");
    app.add_option("--tokenizer", tokenizer, "tokenizer file (default: beside the checkpoint)");
  }
  if (command == "eval") app.add_option("--split", split_name, "split to evaluate: train, val or test (default test)");
  if (command == "report") app.add_option("--metrics", metrics_path, "metrics JSON (default <out>/metrics.json)");

  std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "aidetect " << command << ": " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    RunConfig c = config_path ? load_config_file(*config_path) : RunConfig{};
    if (dataset) c.dataset = *dataset;
    if (seed) c.seed = *seed;
    if (epochs) c.train.epochs = *epochs;
    if (batch_size) c.train.batch_size = *batch_size;
    if (max_len) c.model.max_len = *max_len;
    if (vocab_size) c.vocab_size = *vocab_size;
    if (lr) c.train.lr = *lr;
    if (ratios) c.ratios = parse_ratios(*ratios);
    if (out_dir && command != "detect") c.out = *out_dir;

    const std::string ck_path = checkpoint.value_or(default_checkpoint(c));
    const std::string tok_path = tokenizer.value_or(tokenizer_beside(ck_path));
    if (command == "prepare") {
      cmd_prepare(c, out);
    } else if (command == "train-tokenizer") {
      cmd_train_tokenizer(c, out);
    } else if (command == "features") {
      cmd_features(c, out);
    } else if (command == "train") {
      cmd_train(c, out, err);
    } else if (command == "eval") {
      split_part(SplitIndices{}, split_name);
      cmd_eval(c, ck_path, tok_path, split_name, out);
    } else if (command == "detect") {
      cmd_detect(c, ck_path, tok_path, *in_path, out_dir.value_or((fs::path(c.out) / "verdicts.jsonl").string()), out);
    } else if (command == "ablate") {
      cmd_ablate(c, ck_path, tok_path, out);
    } else {
      cmd_report(c, metrics_path.value_or((fs::path(c.out) / "metrics.json").string()), out);
    }
    return kExitOk;
  } catch (const UsageError& e) {
    err << "aidetect " << command << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "aidetect " << command << ": error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace aidetect::cli
