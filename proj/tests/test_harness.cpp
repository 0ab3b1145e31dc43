#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dmca/error.hpp"
#include "dmca/harness.hpp"
#include "dmca/metrics.hpp"
#include "test_util.hpp"

namespace dmca {
namespace {

using testing::TempDir;

ExperimentConfig toy_config(const std::filesystem::path& csv, const std::string& task = "regression",
                            const std::string& label = "y") {
  return parse_config(std::string(testing::kTinyModelSettings) + "csv = " + csv.string() + "\nlabel_columns = " +
                      label + "\ntask = " + task + "\nepochs = 3\nseeds = 1\n");
}

struct ToyData {
  TempDir dir{"harness"};
  ExperimentConfig config;
  Dataset data;

  explicit ToyData(bool classification = false) {
    const auto csv = dir / "toy.csv";
    testing::write_file(csv, classification ? testing::kToyClassificationCsv : testing::kToyRegressionCsv);
    config = classification ? toy_config(csv, "classification", "label") : toy_config(csv);
    data = load_dataset(config.dataset);
  }
};

// Config.

TEST(Config, RejectsUnknownAndDuplicateKeys) {
  EXPECT_THROW(parse_config("colour = blue\n"), ConfigError);
  EXPECT_THROW(parse_config("epochs = 3\nepochs = 4\n"), ConfigError);
  EXPECT_THROW(parse_config("epochs = three\n"), ConfigError);
  EXPECT_THROW(parse_config("split_ratio = 1.5\n"), ConfigError);
  EXPECT_THROW(parse_config("arm = both\n"), ConfigError);
  EXPECT_THROW(parse_config("no equals sign\n"), ConfigError);
}

TEST(Config, CommentsAndDefaults) {
  const ExperimentConfig c = parse_config("# a comment\nepochs = 7  # trailing\n\nseeds = 4, 5\n");
  EXPECT_EQ(c.epochs, 7u);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_EQ(c.batch_size, 32u);
  EXPECT_EQ(c.vocab_size, 767u);
  EXPECT_EQ(c.max_length, 512u);
  EXPECT_EQ(c.model.graph.width, 64u);
  EXPECT_EQ(c.model.graph.layers, 4u);
  EXPECT_EQ(c.model.seq.layers, 2u);
}

TEST(Config, HashIgnoresKeyOrder) {
  const ExperimentConfig a = parse_config("epochs = 5\nlearning_rate = 0.01\nseq_width = 32\n");
  const ExperimentConfig b = parse_config("seq_width = 32\nepochs = 5\nlearning_rate = 1e-2\n");
  const ExperimentConfig c = parse_config("seq_width = 32\nepochs = 6\nlearning_rate = 1e-2\n");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(canonical_text(a), canonical_text(parse_config(canonical_text(a))));
}

TEST(Config, DatasetPresetsAndRelativeCsv) {
  const ExperimentConfig c = parse_config("dataset = clintox\ncsv = sub/x.csv\n", "/base");
  EXPECT_EQ(c.dataset.csv, std::filesystem::path("/base/sub/x.csv"));
  EXPECT_EQ(c.dataset.policy, LabelPolicy::ClinToxCollapse);
  EXPECT_EQ(dataset_preset("bace").smiles_column, "mol");
  EXPECT_EQ(dataset_preset("sider").task, TaskKind::MultiLabel);
  EXPECT_THROW(dataset_preset("qm9"), ConfigError);
}

// CSV and loading.

TEST(Csv, QuotedFieldsAndLineNumbers) {
  const CsvTable t = parse_csv("a,b\r\n\"x,1\",\"say \"\"hi\"\"\"\n\"multi\nline\",2\nlast,3");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0][0], "x,1");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
  EXPECT_EQ(t.rows[1][0], "multi\nline");
  EXPECT_EQ(t.lines, (std::vector<std::size_t>{2, 3, 5}));
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_THROW(t.column("c"), DataError);
}

TEST(Csv, FieldCountMismatchIsDataError) {
  EXPECT_THROW(parse_csv("a,b\n1,2,3\n"), DataError);
  EXPECT_THROW(parse_csv("a,b\n\"open,2\n"), DataError);
}

TEST(LoadDataset, ThreeRowToyWithOneBadSmiles) {
  DatasetSpec spec;
  spec.label_columns = {"y"};
  const Dataset d = load_dataset(spec, parse_csv("smiles,y\nCCO,1.5\nC(,2\n  c1ccccc1 ,-3\n"));
  ASSERT_EQ(d.records.size(), 2u);
  EXPECT_EQ(d.records[1].smiles, "c1ccccc1");
  EXPECT_EQ(d.records[1].labels, (std::vector<double>{-3.0}));
  EXPECT_EQ(d.records[0].graph.atoms.size(), 3u);
  EXPECT_EQ(d.report.rows, 3u);
  ASSERT_EQ(d.report.dropped.size(), 1u);
  EXPECT_EQ(d.report.dropped[0].line, 3u);
  EXPECT_EQ(d.report.dropped[0].smiles, "C(");
  EXPECT_EQ(d.tasks, (std::vector<std::string>{"y"}));
}

TEST(LoadDataset, ClinToxCollapseUsesToxicity) {
  DatasetSpec spec = dataset_preset("clintox");
  const Dataset d = load_dataset(spec, parse_csv("smiles,FDA_APPROVED,CT_TOX\nCCO,1,0\nCCN,0,1\nCCC,1,1\nCCCl,0,0\n"));
  ASSERT_EQ(d.records.size(), 4u);
  EXPECT_EQ(d.tasks.size(), 1u);
  EXPECT_EQ(d.records[0].labels[0], 0.0);
  EXPECT_EQ(d.records[1].labels[0], 1.0);
  EXPECT_EQ(d.records[2].labels[0], 1.0);
  EXPECT_EQ(d.records[3].labels[0], 0.0);
  EXPECT_EQ(d.report.inconsistent_clintox, 2u);
}

TEST(LoadDataset, SiderTakesEveryOtherColumn) {
  DatasetSpec spec = dataset_preset("sider");
  const Dataset d = load_dataset(spec, parse_csv("smiles,a,b,c\nCCO,1,0,1\nCCN,0,0,1\n"));
  EXPECT_EQ(d.tasks, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(d.records[1].labels, (std::vector<double>{0, 0, 1}));
}

TEST(LoadDataset, Errors) {
  DatasetSpec spec = dataset_preset("bbbp");
  EXPECT_THROW(load_dataset(spec, parse_csv("smiles,p_np\nCCO,2\n")), DataError);
  EXPECT_THROW(load_dataset(spec, parse_csv("smiles,other\nCCO,1\n")), DataError);
  EXPECT_THROW(load_dataset(spec, parse_csv("smiles,p_np\nC(,1\n")), DataError);
  DatasetSpec reg;
  reg.label_columns = {"y"};
  EXPECT_THROW(load_dataset(reg, parse_csv("smiles,y\nCCO,abc\n")), DataError);
  reg.csv = "/nonexistent/file.csv";
  EXPECT_THROW(load_dataset(reg), DataError);
}

// Split.

TEST(Split, SizesDeterminismAndPartition) {
  const Split a = split(10, 0.8, 1), b = split(10, 0.8, 1), c = split(10, 0.8, 2);
  EXPECT_EQ(a.train.size(), 8u);
  EXPECT_EQ(a.test.size(), 2u);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  std::set<std::size_t> all(a.train.begin(), a.train.end());
  all.insert(a.test.begin(), a.test.end());
  EXPECT_EQ(all.size(), 10u);
  EXPECT_EQ(*all.rbegin(), 9u);
  EXPECT_EQ(split(1128, 0.8, 3).test.size(), 225u);
  EXPECT_EQ(split(7, 1.0, 3).test.size(), 0u);
}

TEST(Split, TooFewRecordsOrBadRatio) {
  EXPECT_THROW(split(4, 0.8, 1), DataError);
  EXPECT_THROW(split(10, 0.0, 1), ParameterError);
}

// Training.

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  ToyData toy;
  toy.config.learning_rate = 0.0;
  const Split sp = split(toy.data.records.size(), 0.8, 1);
  const TrainedModel t = train(toy.config, toy.data, sp.train, 0, 5);
  ModelConfig mc = toy.config.model;
  mc.seq.vocab_size = toy.config.vocab_size;
  mc.seq.max_positions = toy.config.max_length;
  const Model fresh(mc, 5);
  ASSERT_EQ(fresh.params().names(), t.model->params().names());
  for (std::size_t k = 0; k < fresh.params().size(); ++k) {
    const Tensor& a = fresh.params().tensors()[k];
    const Tensor& b = t.model->params().tensors()[k];
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]) << fresh.params().names()[k];
  }
}

TEST(Train, SingleSampleIsFitExactly) {
  ToyData toy;
  toy.config.epochs = 200;
  toy.config.standardize_targets = false;
  const std::size_t idx[] = {3};
  const TrainedModel t = train(toy.config, toy.data, idx, 0, 1);
  EXPECT_LT(t.loss_log.back(), 1e-3);
  EXPECT_NEAR(predict(t, toy.data, idx)[0], toy.data.records[3].labels[0], 0.05);
}

TEST(Train, LossDecreasesOnToySet) {
  ToyData toy;
  toy.config.epochs = 10;
  std::vector<std::size_t> all(toy.data.records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const TrainedModel t = train(toy.config, toy.data, all, 0, 1);
  ASSERT_EQ(t.loss_log.size(), 10u);
  EXPECT_LT(t.loss_log.back(), t.loss_log.front());
}

TEST(Train, TargetsAreStandardizedWithSampleStd) {
  ToyData toy;
  toy.config.epochs = 0;
  const std::size_t idx[] = {0, 1, 2};  // 0.5, -1.25, -2.0
  const TrainedModel t = train(toy.config, toy.data, idx, 0, 1);
  EXPECT_NEAR(t.target_mean, -2.75 / 3.0, 1e-15);
  const double m = -2.75 / 3.0;
  const double var = ((0.5 - m) * (0.5 - m) + (-1.25 - m) * (-1.25 - m) + (-2.0 - m) * (-2.0 - m)) / 2.0;
  EXPECT_NEAR(t.target_std, std::sqrt(var), 1e-15);
}

TEST(Train, IdenticalSeedsGiveIdenticalLossLogs) {
  ToyData toy;
  toy.config.model.seq.dropout = 0.2;
  toy.config.model.graph.dropout = 0.2;
  const Split sp = split(toy.data.records.size(), 0.8, 1);
  const TrainedModel a = train(toy.config, toy.data, sp.train, 0, 9);
  const TrainedModel b = train(toy.config, toy.data, sp.train, 0, 9);
  const TrainedModel c = train(toy.config, toy.data, sp.train, 0, 10);
  EXPECT_EQ(a.loss_log, b.loss_log);
  EXPECT_NE(a.loss_log, c.loss_log);
}

TEST(Train, DivergenceNamesTheEpoch) {
  ToyData toy;
  toy.config.learning_rate = 1e300;
  toy.config.epochs = 5;
  const Split sp = split(toy.data.records.size(), 0.8, 1);
  try {
    train(toy.config, toy.data, sp.train, 0, 1);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(Train, ClassificationProducesProbabilities) {
  ToyData toy(true);
  const Split sp = split(toy.data.records.size(), 0.75, 2);
  const TrainedModel t = train(toy.config, toy.data, sp.train, 0, 2);
  EXPECT_EQ(t.kind, TaskKind::Classification);
  for (double p : predict(t, toy.data, sp.test)) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(Train, CheckpointRoundTrip) {
  ToyData toy;
  const Split sp = split(toy.data.records.size(), 0.8, 1);
  const TrainedModel t = train(toy.config, toy.data, sp.train, 0, 4);
  save_trained(t, toy.dir / "m.ckpt", toy.dir / "vocab.txt");
  const TrainedModel u = load_trained(toy.config, toy.dir / "m.ckpt", toy.dir / "vocab.txt");
  EXPECT_EQ(u.seed, 4u);
  EXPECT_EQ(u.target_mean, t.target_mean);
  EXPECT_EQ(u.target_std, t.target_std);
  EXPECT_EQ(predict(t, toy.data, sp.test), predict(u, toy.data, sp.test));
  EXPECT_THROW(load_trained(toy.config, toy.dir / "missing.ckpt", toy.dir / "vocab.txt"), DataError);
}

// Experiments.

TEST(RunExperiment, WritesOutputsAndAggregates) {
  ToyData toy;
  toy.config.seeds = {1, 2};
  const auto out = toy.dir / "run";
  const RunSummary s = run_experiment(toy.config, toy.data, out);
  ASSERT_EQ(s.seeds.size(), 2u);
  EXPECT_EQ(s.metric, "test_rmse");
  for (const char* f : {"config.txt", "summary.tsv", "seed_1/metrics.txt", "seed_1/loss.tsv", "seed_1/model.ckpt",
                        "seed_2/vocab.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  }
  const double values[] = {s.seeds[0].test_metric, s.seeds[1].test_metric};
  const MeanStd ms = mean_std(values);
  EXPECT_EQ(s.mean, ms.mean);
  EXPECT_EQ(s.std, ms.std);
  EXPECT_NEAR(s.std, std::abs(values[0] - values[1]) / std::sqrt(2.0), 1e-12);
  const std::string metrics = testing::read_file(out / "seed_1/metrics.txt");
  EXPECT_NE(metrics.find("test_rmse\t"), std::string::npos);
  EXPECT_NE(metrics.find("baseline_test_rmse\t"), std::string::npos);
  EXPECT_NE(metrics.find("split_hash\t" + s.seeds[0].split_hash), std::string::npos);
  EXPECT_EQ(parse_config(testing::read_file(out / "config.txt")).epochs, 3u);
}

TEST(RunExperiment, RepeatRunsAreByteIdentical) {
  ToyData toy;
  toy.config.model.seq.dropout = 0.1;
  run_experiment(toy.config, toy.data, toy.dir / "a");
  run_experiment(toy.config, toy.data, toy.dir / "b");
  for (const char* f : {"summary.tsv", "seed_1/metrics.txt", "seed_1/loss.tsv", "seed_1/model.ckpt"}) {
    EXPECT_EQ(testing::read_file(toy.dir / "a" / f), testing::read_file(toy.dir / "b" / f)) << f;
  }
}

TEST(RunExperiment, FullTrainSplitReportsTrainMetric) {
  ToyData toy;
  toy.config.split_ratio = 1.0;
  const RunSummary s = run_experiment(toy.config, toy.data, toy.dir / "full");
  EXPECT_EQ(s.metric, "train_rmse");
  EXPECT_EQ(s.seeds[0].test_metric, s.seeds[0].train_metric);
  EXPECT_FALSE(s.seeds[0].baseline_metric.has_value());
}

TEST(RunExperiment, MultiLabelTrainsOneModelPerTask) {
  TempDir dir("sider");
  testing::write_file(dir / "s.csv",
                      "smiles,a,b\nCCO,1,0\nCCCC,0,1\nc1ccccc1,1,1\nCC(=O)O,0,0\nCCN,1,0\nOCCO,0,1\n"
                      "c1ccncc1,1,0\nCC(C)C,0,1\nClCCl,1,1\nCC#N,0,0\n");
  ExperimentConfig c = parse_config(std::string(testing::kTinyModelSettings) + "dataset = sider\ncsv = " +
                                    (dir / "s.csv").string() + "\nepochs = 2\nseeds = 1\nsplit_ratio = 0.6\n");
  const Dataset d = load_dataset(c.dataset);
  const RunSummary s = run_experiment(c, d, dir / "run");
  EXPECT_EQ(s.metric, "test_auc_roc");
  EXPECT_EQ(s.seeds[0].task_metrics.size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(dir / "run/seed_1/task_1/model.ckpt"));
}

TEST(Ablation, ArmsShareSplits) {
  ToyData toy;
  toy.config.seeds = {1, 2};
  const auto runs = ablation(toy.config, toy.data, toy.dir / "abl");
  ASSERT_EQ(runs.size(), 3u);
  EXPECT_EQ(runs[0].arm, "gat");
  EXPECT_EQ(runs[1].arm, "seq");
  EXPECT_EQ(runs[2].arm, "dmca");
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_EQ(runs[0].seeds[s].split_hash, runs[1].seeds[s].split_hash);
    EXPECT_EQ(runs[0].seeds[s].split_hash, runs[2].seeds[s].split_hash);
  }
  EXPECT_NE(runs[0].seeds[0].split_hash, runs[0].seeds[1].split_hash);
  EXPECT_TRUE(std::filesystem::exists(toy.dir / "abl/ablation.tsv"));
  EXPECT_TRUE(std::filesystem::exists(toy.dir / "abl/seq/seed_2/metrics.txt"));
}

TEST(FormatReal, ShortestRoundTrip) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(1e-300), "1e-300");
  EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
}

}  // namespace
}  // namespace dmca
