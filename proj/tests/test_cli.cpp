#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "test_util.hpp"

namespace dmca {
namespace {

using testing::TempDir;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "dmca");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

/// Value column of the metrics.txt line starting with `key<TAB>`.
std::string metric_value(const std::string& metrics, const std::string& key) {
  for (const auto& l : lines(metrics)) {
    if (l.rfind(key + "\t", 0) == 0) return l.substr(key.size() + 1);
  }
  return {};
}

/// Rank-score column for `method` in `rank` output.
std::string rank_score(const std::string& out, const std::string& method) {
  for (const auto& l : lines(out)) {
    std::istringstream f(l);
    std::string rank, name, score;
    std::getline(f, rank, '\t');
    std::getline(f, name, '\t');
    std::getline(f, score, '\t');
    if (name == method) return score;
  }
  return {};
}

struct ToyRun {
  TempDir dir{"cli"};
  std::filesystem::path config;

  ToyRun() {
    testing::write_file(dir / "toy.csv", testing::kToyRegressionCsv);
    config = dir / "toy.cfg";
    testing::write_file(config, std::string(testing::kTinyModelSettings) +
                                    "csv = toy.csv\nlabel_columns = y\nepochs = 3\nseeds = 1,2\n");
  }
};

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"featurize", "C", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--out", "/tmp/x"}).code, kExitUsage);
  EXPECT_EQ(run({"rank", "--results", "/nonexistent.csv"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, FeaturizeSingleSmiles) {
  const Result r = run({"featurize", "[NH4+]"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[1], "0\t7\tUnspecified\t0\t1\t4\t0\tSP3\t0\t0");
}

TEST(Cli, FeaturizeErrorReportsPosition) {
  const Result r = run({"featurize", "CC(C"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("2"), std::string::npos);
  EXPECT_EQ(run({"featurize", "C(=O)(=O)(=O)C"}).code, kExitUsage);
}

TEST(Cli, FeaturizeCsvCountsAndDrops) {
  TempDir dir("featcsv");
  testing::write_file(dir / "m.csv", "name,smiles\na,CCO\nb,C(\nc,c1ccccc1\n");
  const Result r = run({"featurize", "--csv", (dir / "m.csv").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(lines(r.out).size(), 3u);
  EXPECT_NE(r.err.find("dropped line 3"), std::string::npos);
  EXPECT_NE(r.err.find("featurized 2 of 3"), std::string::npos);
}

TEST(Cli, Tokenize) {
  const Result r = run({"tokenize", "CCl"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 5u);  // header, BOS, C, Cl, EOS
  EXPECT_EQ(l[3].substr(0, 5), "2\tCl\t");
}

TEST(Cli, TrainEvaluateRoundTrip) {
  ToyRun toy;
  const auto out = toy.dir / "run";
  const Result t = run({"train", "--config", toy.config.string(), "--out", out.string()});
  ASSERT_EQ(t.code, kExitOk) << t.err;
  EXPECT_NE(t.out.find("config_hash"), std::string::npos);
  const std::string metrics = testing::read_file(out / "seed_2/metrics.txt");
  for (const std::string which : {"train", "test"}) {
    const Result e = run({"evaluate", "--checkpoint", (out / "seed_2/model.ckpt").string(), "--split", which});
    ASSERT_EQ(e.code, kExitOk) << e.err;
    const auto l = lines(e.out);
    ASSERT_EQ(l.size(), 2u);
    EXPECT_EQ(l[1], "DMCA,esol," + metric_value(metrics, which + "_rmse"));
  }
}

TEST(Cli, EvaluateOutputFeedsRank) {
  ToyRun toy;
  const auto out = toy.dir / "run";
  ASSERT_EQ(run({"ablate", "--config", toy.config.string(), "--out", out.string(), "--seeds", "1"}).code, kExitOk);
  std::string table = "method,dataset,value\n";
  for (const std::string arm : {"gat", "seq", "dmca"}) {
    const Result e = run({"evaluate", "--checkpoint", (out / arm / "seed_1/model.ckpt").string(), "--method", arm});
    ASSERT_EQ(e.code, kExitOk) << e.err;
    table += lines(e.out).at(1) + "\n";
  }
  testing::write_file(toy.dir / "results.csv", table);
  const Result r = run({"rank", "--results", (toy.dir / "results.csv").string(), "--direction", "lower"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(lines(r.out).size(), 4u);
  EXPECT_NE(r.out.find("1.0000"), std::string::npos);
}

TEST(Cli, EvaluateMissingCheckpointOrConfig) {
  TempDir dir("evalmiss");
  EXPECT_EQ(run({"evaluate", "--checkpoint", (dir / "none.ckpt").string()}).code, kExitUsage);
  testing::write_file(dir / "lonely/model.ckpt", "not a checkpoint");
  EXPECT_EQ(run({"evaluate", "--checkpoint", (dir / "lonely/model.ckpt").string()}).code, kExitUsage);
}

TEST(Cli, DivergenceExitsOne) {
  ToyRun toy;
  std::string settings = testing::kTinyModelSettings;
  settings.replace(settings.find("learning_rate = 0.01"), 20, "learning_rate = 1e300");
  testing::write_file(toy.config, settings + "csv = toy.csv\nlabel_columns = y\nepochs = 5\nseeds = 1\n");
  const Result r = run({"train", "--config", toy.config.string(), "--out", (toy.dir / "run").string()});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_NE(r.err.find("epoch"), std::string::npos);
}

TEST(Cli, BadConfigExitsTwo) {
  TempDir dir("badcfg");
  testing::write_file(dir / "c.cfg", "epochs = -1\n");
  EXPECT_EQ(run({"train", "--config", (dir / "c.cfg").string(), "--out", (dir / "o").string()}).code, kExitUsage);
  testing::write_file(dir / "d.cfg", "csv = missing.csv\nlabel_columns = y\n");
  EXPECT_EQ(run({"train", "--config", (dir / "d.cfg").string(), "--out", (dir / "o").string()}).code, kExitUsage);
}

TEST(Cli, RankTwoMethods) {
  TempDir dir("rank2");
  testing::write_file(dir / "r.csv", "method,dataset,value\nA,d1,0.9\nB,d1,0.7\nA,d2,0.8\nB,d2,0.6\n");
  const Result r = run({"rank", "--results", (dir / "r.csv").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(rank_score(r.out, "A"), "1.0000");
  EXPECT_EQ(rank_score(r.out, "B"), "0.0000");
  EXPECT_EQ(lines(r.out).at(1).substr(0, 3), "1\tA");
}

TEST(Cli, MissingPolicyChangesPlacement) {
  TempDir dir("rankmiss");
  testing::write_file(dir / "r.csv",
                      "method,dataset,value\nA,d1,0.9\nB,d1,0.5\nB,d2,0.8\nB,d3,0.8\nC,d1,0.1\nC,d2,0.6\n"
                      "C,d3,0.6\nD,d2,0.9\nD,d3,0.9\n");
  const Result ex = run({"rank", "--results", (dir / "r.csv").string(), "--missing", "exclude"});
  const Result zero = run({"rank", "--results", (dir / "r.csv").string(), "--missing", "zero"});
  ASSERT_EQ(ex.code, kExitOk) << ex.err;
  ASSERT_EQ(zero.code, kExitOk) << zero.err;
  EXPECT_EQ(rank_score(ex.out, "A"), "1.0000");
  EXPECT_EQ(rank_score(zero.out, "A"), "0.0000");
  EXPECT_EQ(rank_score(ex.out, "B"), "0.6667");
  EXPECT_EQ(rank_score(zero.out, "D"), "1.0000");
}

TEST(Cli, GradcheckPassAndInjectedFault) {
  const Result ok = run({"gradcheck", "--scope", "op", "--points", "1"});
  EXPECT_EQ(ok.code, kExitOk) << ok.out;
  EXPECT_NE(ok.out.find("all passed"), std::string::npos);
  const Result bad = run({"gradcheck", "--scope", "op", "--points", "1", "--inject-fault"});
  EXPECT_EQ(bad.code, kExitRuntime);
  EXPECT_NE(bad.out.find("faulty_square\tFAIL"), std::string::npos);
}

}  // namespace
}  // namespace dmca
