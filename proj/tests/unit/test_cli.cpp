#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "commands.hpp"
#include "focovil/checkpoint.hpp"
#include "focovil/corpus_io.hpp"
#include "focovil/evaluation.hpp"
#include "run_config.hpp"
#include "support/fixtures.hpp"

using namespace focovil;
using namespace focovil::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kConfig = R"({
  "generator": {"n_classes": 2, "scenes_per_class": 4, "n_views": 3, "n_joints": 6,
                "seq_len": 10, "rng_seed": 11},
  "preprocess": {"target_len": 5},
  "model": {"hidden": 4, "layers": 1, "seed": 3},
  "train": {"batch_anchors": 4, "epochs": 3, "lr": 0.01, "seed": 5},
  "eval": {"split": "cross-view:2", "probe_epochs": 20},
  "ablation": {"variants": ["raw_reconst", "align_reconst", "covil", "full"], "seeds": [1]}
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("focovil_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_ = dir_ / "config.json";
    spit(config_, kConfig);
    data_ = dir_ / "corpus.jsonl";
  }
  void TearDown() override { fs::remove_all(dir_); }

  int gen() { return run_gen_data({config_, data_}, out_, err_); }
  int train_into(const fs::path& d, std::optional<std::string> ablation = {}, bool resume = false,
                 const fs::path* cfg = nullptr) {
    return run_train({cfg ? *cfg : config_, data_, d, std::move(ablation), resume}, out_, err_);
  }

  fs::path dir_, config_, data_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(Cli, GenDataCountsAndDeterminism) {
  ASSERT_EQ(gen(), kOk) << err_.str();
  const auto first = slurp(data_);
  const auto corpus = io::read_corpus(data_, skeleton::Topology::with_default_landmarks(6));
  EXPECT_EQ(corpus.sequences.size(), 24u);
  ASSERT_EQ(gen(), kOk);
  EXPECT_EQ(slurp(data_), first);
}

TEST_F(Cli, UnknownKeyIsConfigErrorNamingTheKey) {
  auto doc = json::parse(kConfig);
  doc["train"]["learning_rate"] = 0.1;
  spit(config_, doc.dump());
  EXPECT_EQ(gen(), kConfigError);
  EXPECT_NE(err_.str().find("train.learning_rate"), std::string::npos) << err_.str();
}

TEST_F(Cli, BadValuesAndFiles) {
  auto doc = json::parse(kConfig);
  doc["train"]["lr"] = "fast";
  spit(config_, doc.dump());
  EXPECT_EQ(gen(), kConfigError);
  EXPECT_NE(err_.str().find("train.lr"), std::string::npos);
  spit(config_, "{ nope");
  EXPECT_EQ(gen(), kConfigError);
  EXPECT_EQ(run_gen_data({dir_ / "missing.json", data_}, out_, err_), kConfigError);
  spit(config_, kConfig);
  EXPECT_EQ(train_into(dir_ / "run"), kIoError);  // corpus not generated yet
  spit(data_, "{\"scene_id\": 0}\n");
  EXPECT_EQ(train_into(dir_ / "run"), kIoError);
  ASSERT_EQ(gen(), kOk);
  EXPECT_EQ(train_into(dir_ / "run", "bogus"), kConfigError);
}

TEST_F(Cli, RawReconstLogsOnlyReconstruction) {
  ASSERT_EQ(gen(), kOk);
  ASSERT_EQ(train_into(dir_ / "raw", "raw_reconst"), kOk) << err_.str();
  std::istringstream log(slurp(dir_ / "raw" / kEpochLogFile));
  std::string line;
  int n = 0;
  while (std::getline(log, line)) {
    const auto rec = json::parse(line);
    EXPECT_EQ(rec["L_fc"].get<double>(), 0.0);
    EXPECT_GT(rec["L_r"].get<double>(), 0.0);
    ++n;
  }
  EXPECT_EQ(n, 3);
  const auto resolved = json::parse(slurp(dir_ / "raw" / kResolvedConfigFile));
  EXPECT_EQ(resolved["train"]["ablation"], "raw_reconst");
}

TEST_F(Cli, TrainTwiceIsBitIdenticalAndReloads) {
  ASSERT_EQ(gen(), kOk);
  ASSERT_EQ(train_into(dir_ / "a"), kOk) << err_.str();
  ASSERT_EQ(train_into(dir_ / "b"), kOk);
  const auto ca = slurp(dir_ / "a" / kCheckpointFile);
  EXPECT_EQ(ca, slurp(dir_ / "b" / kCheckpointFile));
  EXPECT_EQ(slurp(dir_ / "a" / kEpochLogFile), slurp(dir_ / "b" / kEpochLogFile));
  const auto ck = model::load_checkpoint(dir_ / "a" / kCheckpointFile);
  EXPECT_EQ(ck.epochs_completed, 3);
  EXPECT_EQ(model::checkpoint_to_string(ck) + "\n", ca);
}

TEST_F(Cli, ResumeMatchesUninterruptedRun) {
  ASSERT_EQ(gen(), kOk);
  ASSERT_EQ(train_into(dir_ / "full"), kOk);
  auto doc = json::parse(kConfig);
  doc["train"]["epochs"] = 1;
  const auto short_cfg = dir_ / "short.json";
  spit(short_cfg, doc.dump());
  ASSERT_EQ(train_into(dir_ / "resumed", {}, false, &short_cfg), kOk);
  ASSERT_EQ(train_into(dir_ / "resumed", {}, true), kOk) << err_.str();
  EXPECT_EQ(slurp(dir_ / "resumed" / kCheckpointFile), slurp(dir_ / "full" / kCheckpointFile));
  EXPECT_EQ(slurp(dir_ / "resumed" / kEpochLogFile), slurp(dir_ / "full" / kEpochLogFile));
}

TEST_F(Cli, ResumeRejectsDifferentConfig) {
  ASSERT_EQ(gen(), kOk);
  ASSERT_EQ(train_into(dir_ / "run"), kOk);
  auto doc = json::parse(kConfig);
  doc["train"]["lr"] = 0.5;
  spit(config_, doc.dump());
  EXPECT_EQ(train_into(dir_ / "run", {}, true), kConfigError);
}

TEST_F(Cli, EvalSchemaParityAndRowAccounting) {
  ASSERT_EQ(gen(), kOk);
  ASSERT_EQ(train_into(dir_ / "run"), kOk);
  const auto report_path = dir_ / "report.json";
  ASSERT_EQ(run_eval({dir_ / "run" / kCheckpointFile, data_, std::string("cross-view:2"), report_path, {}},
                     out_, err_),
            kOk)
      << err_.str();
  const auto report = json::parse(slurp(report_path));
  for (const char* key : {"one_nn_accuracy", "linear_accuracy", "gmm", "kmeans", "confusion_matrix"}) {
    EXPECT_TRUE(report.contains(key)) << key;
  }
  EXPECT_TRUE(report["gmm"].contains("purity"));
  EXPECT_TRUE(report["gmm"].contains("ari"));
  EXPECT_TRUE(report["kmeans"].contains("purity"));
  EXPECT_TRUE(report["kmeans"].contains("ari"));
  EXPECT_EQ(report["n_test"], 8);
  EXPECT_EQ(report["n_train"], 16);

  // Same numbers straight from the library.
  const auto ck = model::load_checkpoint(dir_ / "run" / kCheckpointFile);
  const auto cfg = parse_run_config(ck.run_config_json);
  auto corpus = io::read_corpus(data_, cfg.topology(6));
  const auto all = eval::extract_embeddings(skeleton::preprocess(corpus, cfg.preprocess), ck.params);
  const auto idx = eval::split_indices(all.scene_ids, all.view_ids, cfg.eval.split);
  for (auto i : idx.test) EXPECT_EQ(all.view_ids[static_cast<std::size_t>(i)], 2);
  const auto lib = eval::evaluate(all.subset(idx.train), all.subset(idx.test), cfg.eval);
  EXPECT_EQ(json::parse(eval::report_to_json(lib)), report);

  const auto csv = slurp(dir_ / "report_embeddings.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 25);
}

TEST_F(Cli, EvalShapeMismatch) {
  ASSERT_EQ(gen(), kOk);
  ASSERT_EQ(train_into(dir_ / "run"), kOk);
  auto doc = json::parse(kConfig);
  doc["generator"]["n_joints"] = 8;
  spit(config_, doc.dump());
  const auto other = dir_ / "other.jsonl";
  ASSERT_EQ(run_gen_data({config_, other}, out_, err_), kOk);
  EXPECT_EQ(run_eval({dir_ / "run" / kCheckpointFile, other, {}, dir_ / "r.json", {}}, out_, err_),
            kShapeMismatch);
}

TEST_F(Cli, AblateTableSchema) {
  ASSERT_EQ(gen(), kOk);
  ASSERT_EQ(run_ablate({config_, data_, dir_ / "abl"}, out_, err_), kOk) << err_.str();
  std::istringstream csv(slurp(dir_ / "abl" / kAblationTableFile));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "variant,seed,one_nn_accuracy,gmm_purity");
  std::vector<std::string> variants;
  int mean_rows = 0, trend_lines = 0;
  while (std::getline(csv, line)) {
    if (line.starts_with("#")) {
      ++trend_lines;
      continue;
    }
    const auto name = line.substr(0, line.find(','));
    if (line.find(",mean,") != std::string::npos) {
      ++mean_rows;
    } else {
      variants.push_back(name);
    }
  }
  EXPECT_EQ(variants, (std::vector<std::string>{"raw_reconst", "align_reconst", "covil", "full"}));
  EXPECT_EQ(mean_rows, 4);
  EXPECT_GE(trend_lines, 1);
}

TEST(CliBinary, ParseErrorsExitTwo) {
  const std::string exe = FOCOVIL_CLI_PATH;
  EXPECT_EQ(WEXITSTATUS(std::system((exe + " > /dev/null 2>&1").c_str())), 2);
  EXPECT_EQ(WEXITSTATUS(std::system((exe + " train --bogus > /dev/null 2>&1").c_str())), 2);
  EXPECT_EQ(WEXITSTATUS(std::system((exe + " --help > /dev/null 2>&1").c_str())), 0);
}
