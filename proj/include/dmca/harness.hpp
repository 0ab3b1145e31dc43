#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmca/chem/molecule.hpp"
#include "dmca/config.hpp"
#include "dmca/model.hpp"
#include "dmca/params.hpp"
#include "dmca/tokenizer.hpp"

namespace dmca {

/// RFC 4180 style CSV: quoted fields may hold commas, newlines and doubled quotes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based line number where each row starts.
  std::vector<std::size_t> lines;

  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

struct Record {
  std::string smiles;
  chem::MolecularGraph graph;
  /// One value per task (regression target or 0/1 class).
  std::vector<double> labels;
};

struct DroppedRow {
  std::size_t line = 0;
  std::string smiles;
  std::string reason;
};

struct LoadReport {
  std::size_t rows = 0;
  std::vector<DroppedRow> dropped;
  /// ClinTox rows outside the (approved, non-toxic) / (unapproved, toxic) pairs; kept.
  std::size_t inconsistent_clintox = 0;
};

struct Dataset {
  DatasetSpec spec;
  /// Task names, parallel to Record::labels.
  std::vector<std::string> tasks;
  std::vector<Record> records;
  LoadReport report;
};

/// Reads and featurizes a dataset. SMILES are whitespace-trimmed; rows whose SMILES fail
/// to parse or featurize are dropped and listed in the report. ClinTox collapsing keeps
/// CT_TOX as the single label. Throws DataError for missing columns, an empty result, or
/// a non-binary classification label.
Dataset load_dataset(const DatasetSpec& spec);
Dataset load_dataset(const DatasetSpec& spec, const CsvTable& table);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  /// FNV-1a over the train then test indices.
  std::string hash() const;
};

/// Seeded uniform permutation; the first ceil(ratio * n) indices train, the rest test.
/// Needs n >= 5; ratio must lie in (0, 1].
Split split(std::size_t n, double ratio, std::uint64_t seed);

/// A trained single-task model with what is needed to run it on new SMILES.
struct TrainedModel {
  std::unique_ptr<Model> model;
  Vocab vocab;
  std::size_t max_length = kDefaultMaxLength;
  TaskKind kind = TaskKind::Regression;
  std::size_t task = 0;
  double target_mean = 0.0;
  double target_std = 1.0;
  std::uint64_t seed = 0;
  /// Mean training loss per epoch.
  std::vector<double> loss_log;
};

struct TrainProgress {
  std::ostream* log = nullptr;
};

/// Mini-batch Adam on records[indices], one task. Classification minimizes cross-entropy
/// over two logits; regression minimizes MSE on (standardized) targets. The vocabulary is
/// built from the training SMILES. A non-finite loss throws NumericError naming the epoch.
TrainedModel train(const ExperimentConfig& config, const Dataset& data, std::span<const std::size_t> indices,
                   std::size_t task, std::uint64_t seed, const TrainProgress& progress = {});

/// Regression predictions in label units, or the probability of class 1.
std::vector<double> predict(const TrainedModel& trained, const Dataset& data, std::span<const std::size_t> indices,
                            std::size_t batch_size = 64);

/// RMSE for regression, AUC-ROC for classification.
double evaluate(const TrainedModel& trained, const Dataset& data, std::span<const std::size_t> indices);
std::string metric_name(TaskKind kind);

/// Checkpoint = model parameters plus meta.* arrays (target scaling, seed, task).
void save_trained(const TrainedModel& trained, const std::filesystem::path& checkpoint,
                  const std::filesystem::path& vocab_file);
TrainedModel load_trained(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                          const std::filesystem::path& vocab_file);

struct SeedResult {
  std::uint64_t seed = 0;
  std::string split_hash;
  /// Test metric, averaged over tasks for multi-label datasets.
  double test_metric = 0.0;
  double train_metric = 0.0;
  /// Per-task test metrics; NaN where a task's test split has one class only.
  std::vector<double> task_metrics;
  /// Test RMSE of predicting the training-label mean (regression only).
  std::optional<double> baseline_metric;
  std::vector<double> final_loss;
};

struct RunSummary {
  std::string dataset;
  std::string arm;
  std::string metric;
  std::string config_hash;
  std::vector<SeedResult> seeds;
  double mean = 0.0;
  double std = 0.0;
};

/// Trains and evaluates once per configured seed. When `out_dir` is set, writes
///   config.txt, summary.tsv,
///   seed_<s>/{metrics.txt, loss.tsv, model.ckpt, vocab.txt}
/// (multi-label runs put each task's loss/checkpoint under seed_<s>/task_<k>/).
RunSummary run_experiment(const ExperimentConfig& config, const Dataset& data,
                          const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                          const TrainProgress& progress = {});

/// The same protocol for the gat, seq and dmca arms; outputs go to out_dir/<arm>/ and a
/// comparison table to out_dir/ablation.tsv. Throws Error if the arms' splits differ.
std::vector<RunSummary> ablation(const ExperimentConfig& config, const Dataset& data,
                                 const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                 const TrainProgress& progress = {});

/// Shortest decimal text that reads back to exactly `v`.
std::string format_real(double v);

}  // namespace dmca
