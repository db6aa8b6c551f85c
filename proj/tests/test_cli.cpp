#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aidetect/cli.hpp"
#include "aidetect/synthetic.hpp"

namespace fs = std::filesystem;
using aidetect::cli::run_command;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("aidetect_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    aidetect::synthetic::Config sc;
    sc.n_essays = 60;
    std::ostringstream csv;
    aidetect::synthetic::Generator(3, sc).write_csv(csv);
    spit(dir_ / "data.csv", csv.str());
    const json cfg = {{"dataset", "data.csv"},
                      {"seed", 5},
                      {"tokenizer", {{"vocab_size", 300}, {"max_len", 32}}},
                      {"model", {{"d_model", 16}, {"n_heads", 2}, {"n_layers", 1}, {"d_ff", 32}}},
                      {"train", {{"epochs", 2}, {"batch_size", 8}, {"lr", 1e-3}}},
                      {"baseline", {{"epochs", 200}}}};
    spit(dir_ / "config.json", cfg.dump());
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string config() { return (dir_ / "config.json").string(); }
  static std::string out(const std::string& name) { return (dir_ / name).string(); }

  static fs::path dir_;
};

fs::path CliTest::dir_;

TEST(CliUsage, MissingOrUnknownCommandIsUsageError) {
  const auto none = run({});
  EXPECT_EQ(none.code, 1);
  EXPECT_NE(none.err.find("train-tokenizer"), std::string::npos);
  const auto bad = run({"frobnicate"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("frobnicate"), std::string::npos);
}

TEST(CliUsage, BadFlagsAreUsageErrors) {
  EXPECT_EQ(run({"prepare", "--bogus"}).code, 1);
  EXPECT_EQ(run({"prepare", "--epochs", "many"}).code, 1);
  EXPECT_EQ(run({"prepare", "--dataset", "x.csv", "--ratios", "0.5,0.5"}).code, 1);
  EXPECT_EQ(run({"detect"}).code, 1);  // --in is required
  EXPECT_EQ(run({"prepare"}).code, 1);  // no dataset anywhere
}

TEST(CliUsage, HelpExitsZero) {
  const auto r = run({"train", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--batch-size"), std::string::npos);
}

TEST(CliUsage, ParseRatios) {
  const auto r = aidetect::cli::parse_ratios("0.6,0.2,0.2");
  EXPECT_DOUBLE_EQ(r[0], 0.6);
  EXPECT_DOUBLE_EQ(r[2], 0.2);
  EXPECT_THROW(aidetect::cli::parse_ratios("0.6,x,0.2"), aidetect::cli::UsageError);
  EXPECT_THROW(aidetect::cli::parse_ratios("1,0,0,0"), aidetect::cli::UsageError);
}

TEST_F(CliTest, DataErrorsExitTwo) {
  EXPECT_EQ(run({"prepare", "--dataset", out("missing.csv"), "--out", out("e1")}).code, 2);
  spit(dir_ / "nolabel.csv", "text\nhello\n");
  EXPECT_EQ(run({"prepare", "--dataset", out("nolabel.csv"), "--out", out("e2")}).code, 2);
  spit(dir_ / "unknown.json", R"({"dataset":"data.csv","modle":{}})");
  const auto r = run({"prepare", "--config", out("unknown.json"), "--out", out("e3")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("modle"), std::string::npos);
  spit(dir_ / "broken.json", "{");
  EXPECT_EQ(run({"prepare", "--config", out("broken.json")}).code, 2);
  EXPECT_EQ(run({"prepare", "--config", config(), "--ratios", "0.5,0.5,0.5", "--out", out("e4")}).code, 2);
  EXPECT_EQ(run({"report", "--metrics", out("none.json"), "--out", out("e5")}).code, 2);
}

TEST_F(CliTest, PrepareWritesStatsAndSplit) {
  const auto r = run({"prepare", "--config", config(), "--out", out("prep")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json stats = json::parse(slurp(dir_ / "prep" / "stats.json"));
  EXPECT_EQ(stats["n_total"], 60);
  const auto records = aidetect::load_dataset(out("data.csv"));
  const auto expected = aidetect::corpus_stats(records);
  EXPECT_EQ(stats["n_human"], expected.n_human);
  EXPECT_EQ(stats["n_ai"], expected.n_ai);
  EXPECT_EQ(expected.n_human + expected.n_ai, 60u);
  EXPECT_TRUE(stats.contains("format_version"));
  const json split = json::parse(slurp(dir_ / "prep" / "split.json"));
  const auto want = aidetect::stratified_split(records, aidetect::kDefaultRatios, 5);
  EXPECT_EQ(split["train"].get<std::vector<std::size_t>>(), want.train);
  EXPECT_EQ(split["val"].get<std::vector<std::size_t>>(), want.val);
  EXPECT_EQ(split["test"].get<std::vector<std::size_t>>(), want.test);
  const auto clean = aidetect::csv::read((dir_ / "prep" / "clean.csv").string());
  EXPECT_EQ(clean.rows.size(), 60u);
}

TEST_F(CliTest, ConfigPathsResolveAgainstConfigDir) {
  // The config names "data.csv"; run from a different working directory.
  const auto cwd = fs::current_path();
  fs::current_path(fs::temp_directory_path());
  const auto r = run({"prepare", "--config", config(), "--out", out("prep_cwd")});
  fs::current_path(cwd);
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(CliConfig, FullSchemaRoundTrips) {
  const json j = {{"dataset", "essays.csv"},
                  {"text_column", "body"},
                  {"label_column", "is_ai"},
                  {"ratios", {0.7, 0.15, 0.15}},
                  {"seed", 9},
                  {"out", "runs/a"},
                  {"tokenizer", {{"vocab_size", 900}, {"max_len", 64}}},
                  {"model", {{"d_model", 32}, {"n_heads", 2}, {"n_layers", 1}, {"d_ff", 64}, {"dropout", 0.2}}},
                  {"train", {{"epochs", 3}, {"batch_size", 4}, {"lr", 0.01}, {"snapshots", true}}},
                  {"lm", {{"order", 2}, {"k", 0.5}}},
                  {"baseline", {{"epochs", 50}, {"lr", 0.2}, {"l2", 0.001}}}};
  aidetect::cli::RunConfig c;
  aidetect::cli::apply_config_json(c, j, "/cfg");
  EXPECT_EQ(c.dataset, "/cfg/essays.csv");
  EXPECT_EQ(c.out, "/cfg/runs/a");
  EXPECT_EQ(c.ratios[1], 0.15);
  EXPECT_EQ(c.model.max_len, 64u);
  EXPECT_EQ(c.model.dropout, 0.2);
  EXPECT_TRUE(c.snapshots);
  EXPECT_EQ(c.lm_order, 2);
  EXPECT_EQ(c.baseline.epochs, 50u);
  aidetect::cli::RunConfig again;
  aidetect::cli::apply_config_json(again, c.to_json(), "/elsewhere");
  EXPECT_EQ(again.to_json(), c.to_json());

  json bad = j;
  bad["train"]["epoch"] = 3;
  EXPECT_THROW(aidetect::cli::apply_config_json(c, bad, "/cfg"), aidetect::ConfigError);
  bad = j;
  bad["seed"] = "nine";
  EXPECT_THROW(aidetect::cli::apply_config_json(c, bad, "/cfg"), aidetect::ConfigError);
}

TEST_F(CliTest, FlagOverridesConfig) {
  ASSERT_EQ(run({"train-tokenizer", "--config", config(), "--out", out("tok_a")}).code, 0);
  ASSERT_EQ(run({"train-tokenizer", "--config", config(), "--vocab-size", "280", "--out", out("tok_b")}).code, 0);
  const auto a = aidetect::BpeTokenizer::load((dir_ / "tok_a" / "tokenizer.json").string());
  const auto b = aidetect::BpeTokenizer::load((dir_ / "tok_b" / "tokenizer.json").string());
  EXPECT_EQ(a.vocab_size(), 300u);
  EXPECT_EQ(b.vocab_size(), 280u);
}

TEST_F(CliTest, FeaturesWritesCsvAndLm) {
  ASSERT_EQ(run({"features", "--config", config(), "--out", out("feat")}).code, 0);
  const auto rows = aidetect::read_feature_csv((dir_ / "feat" / "features.csv").string());
  EXPECT_EQ(rows.size(), 60u);
  const auto lm = aidetect::NgramLm::load((dir_ / "feat" / "lm.json").string());
  EXPECT_EQ(lm.order(), 3);
}

TEST_F(CliTest, TrainEvalDetectReport) {
  const auto t1 = run({"train", "--config", config(), "--out", out("m1")});
  ASSERT_EQ(t1.code, 0) << t1.err;
  EXPECT_NE(t1.err.find("epoch 2/2"), std::string::npos);
  ASSERT_EQ(run({"train", "--config", config(), "--out", out("m2")}).code, 0);
  EXPECT_EQ(slurp(dir_ / "m1" / "checkpoint.ckpt"), slurp(dir_ / "m2" / "checkpoint.ckpt"));
  EXPECT_EQ(slurp(dir_ / "m1" / "tokenizer.json"), slurp(dir_ / "m2" / "tokenizer.json"));

  const json hist = json::parse(slurp(dir_ / "m1" / "history.json"));
  ASSERT_EQ(hist["history"].size(), 2u);

  const auto ev = run({"eval", "--config", config(), "--out", out("m1"), "--split", "val"});
  ASSERT_EQ(ev.code, 0) << ev.err;
  const json m = json::parse(slurp(dir_ / "m1" / "metrics.json"));
  const std::size_t best = m["best_epoch"];
  EXPECT_EQ(m["split"], "val");
  EXPECT_DOUBLE_EQ(m["accuracy"].get<double>(), hist["history"][best - 1]["val"]["accuracy"].get<double>());
  EXPECT_TRUE(m["baseline"].is_object());
  EXPECT_EQ(m["format_version"], 1);

  EXPECT_EQ(run({"eval", "--config", config(), "--out", out("m1"), "--split", "dev"}).code, 1);

  const auto det = run({"detect", "--config", config(), "--checkpoint", out("m1") + "/checkpoint.ckpt", "--in",
                        out("data.csv"), "--out", out("verdicts.jsonl")});
  ASSERT_EQ(det.code, 0) << det.err;
  std::istringstream lines(slurp(dir_ / "verdicts.jsonl"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const json v = json::parse(line);
    EXPECT_EQ(v["id"], n);
    EXPECT_GE(v["p_ai"].get<double>(), 0.0);
    EXPECT_LE(v["p_ai"].get<double>(), 1.0);
    EXPECT_EQ(v["label"].get<int>(), v["p_ai"].get<double>() > 0.5 ? 1 : 0);
    ++n;
  }
  EXPECT_EQ(n, 60u);

  // A tokenizer that does not match the checkpoint is rejected.
  ASSERT_EQ(run({"train-tokenizer", "--config", config(), "--vocab-size", "290", "--out", out("other")}).code, 0);
  EXPECT_EQ(run({"detect", "--config", config(), "--checkpoint", out("m1") + "/checkpoint.ckpt", "--tokenizer",
                 out("other") + "/tokenizer.json", "--in", out("data.csv"), "--out", out("v2.jsonl")})
                .code,
            2);

  ASSERT_EQ(run({"report", "--config", config(), "--out", out("m1")}).code, 0);
  const std::string conf = slurp(dir_ / "m1" / "confusion.csv");
  const std::string report = slurp(dir_ / "m1" / "report.txt");
  const auto cm = aidetect::confusion_from_json(m["confusion"]);
  EXPECT_EQ(conf, std::to_string(cm.tn) + "," + std::to_string(cm.fp) + "\n" + std::to_string(cm.fn) + "," +
                      std::to_string(cm.tp) + "\n");
  EXPECT_NE(report.find("accuracy: " + aidetect::cli::fixed4(m["accuracy"])), std::string::npos);
  ASSERT_EQ(run({"report", "--config", config(), "--out", out("m1")}).code, 0);
  EXPECT_EQ(slurp(dir_ / "m1" / "confusion.csv"), conf);
  EXPECT_EQ(slurp(dir_ / "m1" / "report.txt"), report);

  ASSERT_EQ(run({"ablate", "--config", config(), "--out", out("m1")}).code, 0);
  const auto ab = aidetect::csv::read((dir_ / "m1" / "ablation.csv").string());
  EXPECT_EQ(ab.header, (std::vector<std::string>{"feature", "acc_full", "acc_without", "delta"}));
  EXPECT_EQ(ab.rows.size(), aidetect::kNumFeatures);
  const json att = json::parse(slurp(dir_ / "m1" / "attention.json"));
  EXPECT_EQ(att["mean_entropy"].size(), 1u);
  EXPECT_EQ(att["mean_entropy"][0].size(), 2u);
}

TEST(CliReport, ConfusionLayout) {
  aidetect::ConfusionMatrix cm;
  cm.tp = 50;
  cm.tn = 50;
  EXPECT_EQ(aidetect::cli::confusion_csv(cm), "50,0\n0,50\n");
  cm.fp = 3;
  cm.fn = 1;
  EXPECT_EQ(aidetect::cli::confusion_csv(cm), "50,3\n1,50\n");
}

}  // namespace
