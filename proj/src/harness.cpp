#include "dmca/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "dmca/error.hpp"
#include "dmca/metrics.hpp"
#include "dmca/ops.hpp"
#include "dmca/optim.hpp"

namespace dmca {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

bool is_classification(TaskKind kind) { return kind != TaskKind::Regression; }

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> lines;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1, row_line = 1;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) {
      records.push_back(std::move(row));
      lines.push_back(row_line);
    }
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_row();
      row_line = ++line;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw DataError("CSV: unterminated quoted field starting on line " + std::to_string(row_line));
  if (!field.empty() || !row.empty()) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    end_row();
  }
  if (records.empty()) throw DataError("CSV: no header row");
  CsvTable table;
  table.header = std::move(records.front());
  for (auto& h : table.header) h = trim(h);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw DataError("CSV line " + std::to_string(lines[r]) + ": expected " + std::to_string(table.header.size()) +
                      " fields, found " + std::to_string(records[r].size()));
    }
    table.rows.push_back(std::move(records[r]));
    table.lines.push_back(lines[r]);
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path)); }

namespace {

double parse_label(const std::string& raw, bool binary, std::size_t line, const std::string& column) {
  const std::string text = trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line) + ": column '" + column + "' has non-numeric label '" + raw + "'");
  }
  if (binary && v != 0.0 && v != 1.0) {
    throw DataError("line " + std::to_string(line) + ": column '" + column + "' has non-binary label '" + raw + "'");
  }
  return v;
}

}  // namespace

Dataset load_dataset(const DatasetSpec& spec) { return load_dataset(spec, read_csv(spec.csv)); }

Dataset load_dataset(const DatasetSpec& spec, const CsvTable& table) {
  Dataset data;
  data.spec = spec;
  const std::size_t smiles_col = table.column(spec.smiles_column);
  std::vector<std::size_t> label_cols;
  if (spec.label_columns.size() == 1 && spec.label_columns[0] == "*") {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c != smiles_col) {
        label_cols.push_back(c);
        data.tasks.push_back(table.header[c]);
      }
    }
  } else {
    for (const auto& name : spec.label_columns) {
      label_cols.push_back(table.column(name));
      data.tasks.push_back(name);
    }
  }
  if (label_cols.empty()) throw DataError("dataset '" + spec.name + "' has no label columns");

  std::optional<std::size_t> fda_col;
  if (spec.policy == LabelPolicy::ClinToxCollapse) {
    const std::size_t tox = table.column("CT_TOX");
    if (std::find(table.header.begin(), table.header.end(), "FDA_APPROVED") != table.header.end()) {
      fda_col = table.column("FDA_APPROVED");
    }
    label_cols = {tox};
    data.tasks = {"CT_TOX"};
  }
  if (spec.task != TaskKind::MultiLabel && label_cols.size() != 1) {
    throw DataError("dataset '" + spec.name + "': a " + to_string(spec.task) + " task takes exactly one label column");
  }

  const bool binary = is_classification(spec.task);
  data.report.rows = table.rows.size();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    Record rec;
    rec.smiles = trim(row[smiles_col]);
    for (std::size_t k = 0; k < label_cols.size(); ++k) {
      rec.labels.push_back(parse_label(row[label_cols[k]], binary, table.lines[r], table.header[label_cols[k]]));
    }
    try {
      rec.graph = chem::featurize(rec.smiles);
    } catch (const ParseError& e) {
      data.report.dropped.push_back({table.lines[r], rec.smiles, std::string("parse error: ") + e.what()});
      continue;
    } catch (const ValenceError& e) {
      data.report.dropped.push_back({table.lines[r], rec.smiles, std::string("valence error: ") + e.what()});
      continue;
    }
    if (fda_col) {
      const double fda = parse_label(row[*fda_col], true, table.lines[r], "FDA_APPROVED");
      const double tox = rec.labels[0];
      if (!((fda == 1.0 && tox == 0.0) || (fda == 0.0 && tox == 1.0))) ++data.report.inconsistent_clintox;
    }
    data.records.push_back(std::move(rec));
  }
  if (data.records.empty()) throw DataError("dataset '" + spec.name + "' has no usable rows");
  return data;
}

std::string Split::hash() const {
  std::uint64_t h = fnv1a64("train");
  for (std::size_t i : train) h = fnv1a64(std::to_string(i) + ",", h);
  h = fnv1a64("test", h);
  for (std::size_t i : test) h = fnv1a64(std::to_string(i) + ",", h);
  return hex64(h);
}

Split split(std::size_t n, double ratio, std::uint64_t seed) {
  if (n < 5) throw DataError("split needs at least 5 records, got " + std::to_string(n));
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ParameterError("split ratio must lie in (0, 1]");
  CounterRng rng(seed, 0x53504c54);
  const auto perm = random_permutation(n, rng);
  // The epsilon keeps products like 0.8 * 10 from rounding up past the exact integer.
  const auto n_train = std::min(n, static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9)));
  Split s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return s;
}

namespace {

ModelConfig model_config(const ExperimentConfig& config) {
  ModelConfig mc = config.model;
  mc.outputs = is_classification(config.dataset.task) ? 2 : 1;
  mc.seq.vocab_size = config.vocab_size;
  mc.seq.max_positions = config.max_length;
  return mc;
}

std::vector<TokenSequence> encode_records(const Dataset& data, std::span<const std::size_t> indices,
                                          const Vocab& vocab, std::size_t max_length) {
  std::vector<TokenSequence> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(encode_unpadded(tokenize(data.records[i].smiles), vocab, max_length));
  return out;
}

}  // namespace

TrainedModel train(const ExperimentConfig& config, const Dataset& data, std::span<const std::size_t> indices,
                   std::size_t task, std::uint64_t seed, const TrainProgress& progress) {
  if (indices.empty()) throw DataError("training set is empty");
  if (task >= data.tasks.size()) throw DataError("task index out of range");
  TrainedModel t;
  t.kind = is_classification(data.spec.task) ? TaskKind::Classification : TaskKind::Regression;
  t.task = task;
  t.seed = seed;
  t.max_length = config.max_length;

  std::vector<std::vector<std::string>> corpus;
  for (std::size_t i : indices) corpus.push_back(tokenize(data.records[i].smiles));
  t.vocab = Vocab::build(corpus, config.vocab_size);
  const auto tokens = encode_records(data, indices, t.vocab, config.max_length);

  std::vector<double> targets;
  for (std::size_t i : indices) targets.push_back(data.records[i].labels[task]);
  if (t.kind == TaskKind::Regression && config.standardize_targets) {
    double m = 0.0;
    for (double y : targets) m += y;
    m /= static_cast<double>(targets.size());
    double var = 0.0;
    for (double y : targets) var += (y - m) * (y - m);
    const double sd = targets.size() > 1 ? std::sqrt(var / static_cast<double>(targets.size() - 1)) : 0.0;
    t.target_mean = m;
    t.target_std = sd > 0.0 ? sd : 1.0;
  }

  t.model = std::make_unique<Model>(model_config(config), seed);
  Adam adam(t.model->params().tensors(), config.learning_rate);
  CounterRng shuffle(seed, 0x53485546);
  CounterRng noise(seed, 0x44524f50);
  const std::size_t n = indices.size();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = random_permutation(n, shuffle);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      std::vector<ModelInput> batch;
      std::vector<double> y;
      std::vector<std::size_t> labels;
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t j = order[k];
        batch.push_back({&data.records[indices[j]].graph, &tokens[j]});
        y.push_back((targets[j] - t.target_mean) / t.target_std);
        labels.push_back(static_cast<std::size_t>(targets[j]));
      }
      try {
        adam.zero_grad();
        const Tensor out = t.model->forward(batch, Mode::Train, noise);
        const Tensor loss = t.kind == TaskKind::Regression ? mse(out, Tensor({batch.size(), 1}, y))
                                                           : cross_entropy(out, labels);
        backward(loss);
        adam.step();
        total += loss.item() * static_cast<double>(batch.size());
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch starting at " +
                           std::to_string(start) + ": " + e.what());
      }
    }
    t.loss_log.push_back(total / static_cast<double>(n));
    if (progress.log) *progress.log << "epoch " << epoch << "\tloss " << format_real(t.loss_log.back()) << "\n";
  }
  return t;
}

std::vector<double> predict(const TrainedModel& trained, const Dataset& data, std::span<const std::size_t> indices,
                            std::size_t batch_size) {
  const auto tokens = encode_records(data, indices, trained.vocab, trained.max_length);
  CounterRng unused(0);
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t stop = std::min(indices.size(), start + batch_size);
    std::vector<ModelInput> batch;
    for (std::size_t k = start; k < stop; ++k) batch.push_back({&data.records[indices[k]].graph, &tokens[k]});
    const Tensor y = trained.model->forward(batch, Mode::Eval, unused);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (trained.kind == TaskKind::Regression) {
        out.push_back(y.at(b, 0) * trained.target_std + trained.target_mean);
      } else {
        out.push_back(1.0 / (1.0 + std::exp(y.at(b, 0) - y.at(b, 1))));
      }
    }
  }
  return out;
}

std::string metric_name(TaskKind kind) { return is_classification(kind) ? "auc_roc" : "rmse"; }

double evaluate(const TrainedModel& trained, const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("evaluation set is empty");
  const auto pred = predict(trained, data, indices);
  if (trained.kind == TaskKind::Regression) {
    std::vector<double> target;
    for (std::size_t i : indices) target.push_back(data.records[i].labels[trained.task]);
    return rmse(pred, target);
  }
  std::vector<int> labels;
  for (std::size_t i : indices) labels.push_back(static_cast<int>(data.records[i].labels[trained.task]));
  return auc_roc(pred, labels);
}

void save_trained(const TrainedModel& trained, const std::filesystem::path& checkpoint,
                  const std::filesystem::path& vocab_file) {
  auto arrays = snapshot(trained.model->params());
  arrays.push_back({"meta.target_mean", {1}, {trained.target_mean}});
  arrays.push_back({"meta.target_std", {1}, {trained.target_std}});
  arrays.push_back({"meta.seed", {1}, {static_cast<double>(trained.seed)}});
  arrays.push_back({"meta.task", {1}, {static_cast<double>(trained.task)}});
  write_checkpoint(checkpoint, arrays);
  trained.vocab.save(vocab_file);
}

TrainedModel load_trained(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                          const std::filesystem::path& vocab_file) {
  if (!std::filesystem::exists(checkpoint)) throw DataError("checkpoint not found: " + checkpoint.string());
  if (!std::filesystem::exists(vocab_file)) throw DataError("vocabulary file not found: " + vocab_file.string());
  const auto arrays = read_checkpoint(checkpoint);
  TrainedModel t;
  t.kind = is_classification(config.dataset.task) ? TaskKind::Classification : TaskKind::Regression;
  t.max_length = config.max_length;
  t.vocab = Vocab::load(vocab_file);
  t.model = std::make_unique<Model>(model_config(config), 0);
  restore(t.model->params(), arrays);
  for (const auto& a : arrays) {
    if (a.values.size() != 1) continue;
    if (a.name == "meta.target_mean") t.target_mean = a.values[0];
    if (a.name == "meta.target_std") t.target_std = a.values[0];
    if (a.name == "meta.seed") t.seed = static_cast<std::uint64_t>(a.values[0]);
    if (a.name == "meta.task") t.task = static_cast<std::size_t>(a.values[0]);
  }
  return t;
}

namespace {

std::string loss_table(const std::vector<double>& log) {
  std::string out = "epoch\tloss\n";
  for (std::size_t e = 0; e < log.size(); ++e) out += std::to_string(e + 1) + "\t" + format_real(log[e]) + "\n";
  return out;
}

double finite_mean(const std::vector<double>& values) {
  double total = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      total += v;
      ++n;
    }
  }
  return n ? total / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config, const Dataset& data,
                          const std::optional<std::filesystem::path>& out_dir, const TrainProgress& progress) {
  if (config.seeds.empty()) throw ConfigError("at least one seed is required");
  const TaskKind kind = is_classification(data.spec.task) ? TaskKind::Classification : TaskKind::Regression;
  RunSummary summary;
  summary.dataset = data.spec.name;
  summary.arm = to_string(config.model.arm);
  summary.config_hash = config_hash(config);
  const bool has_test = split(data.records.size(), config.split_ratio, 0).test.size() > 0;
  summary.metric = (has_test ? "test_" : "train_") + metric_name(kind);
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    write_text(*out_dir / "config.txt", canonical_text(config));
  }

  const bool multi = data.spec.task == TaskKind::MultiLabel;
  for (std::uint64_t seed : config.seeds) {
    const Split sp = split(data.records.size(), config.split_ratio, seed);
    SeedResult result;
    result.seed = seed;
    result.split_hash = sp.hash();
    std::optional<std::filesystem::path> seed_dir;
    if (out_dir) {
      seed_dir = *out_dir / ("seed_" + std::to_string(seed));
      std::filesystem::create_directories(*seed_dir);
    }
    std::vector<double> train_metrics;
    for (std::size_t task = 0; task < data.tasks.size(); ++task) {
      if (progress.log) {
        *progress.log << "seed " << seed << (multi ? " task " + data.tasks[task] : std::string()) << "\n";
      }
      const TrainedModel trained = train(config, data, sp.train, task, seed, progress);
      double train_metric = std::numeric_limits<double>::quiet_NaN();
      double test_metric = std::numeric_limits<double>::quiet_NaN();
      try {
        train_metric = evaluate(trained, data, sp.train);
      } catch (const MetricError&) {
      }
      if (!sp.test.empty()) {
        try {
          test_metric = evaluate(trained, data, sp.test);
        } catch (const MetricError&) {
          // A single-class test split leaves this task's AUC undefined; it is skipped in the mean.
        }
      }
      train_metrics.push_back(train_metric);
      result.task_metrics.push_back(test_metric);
      result.final_loss.push_back(trained.loss_log.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                           : trained.loss_log.back());
      if (seed_dir) {
        const auto dir = multi ? *seed_dir / ("task_" + std::to_string(task)) : *seed_dir;
        std::filesystem::create_directories(dir);
        write_text(dir / "loss.tsv", loss_table(trained.loss_log));
        save_trained(trained, dir / "model.ckpt", dir / "vocab.txt");
      }
    }
    result.train_metric = finite_mean(train_metrics);
    result.test_metric = has_test ? finite_mean(result.task_metrics) : result.train_metric;
    if (kind == TaskKind::Regression && !sp.test.empty()) {
      double m = 0.0;
      for (std::size_t i : sp.train) m += data.records[i].labels[0];
      m /= static_cast<double>(sp.train.size());
      std::vector<double> constant(sp.test.size(), m), target;
      for (std::size_t i : sp.test) target.push_back(data.records[i].labels[0]);
      result.baseline_metric = rmse(constant, target);
    }
    if (seed_dir) {
      const std::string name = metric_name(kind);
      std::string text;
      if (has_test) text += "test_" + name + "\t" + format_real(result.test_metric) + "\n";
      text += "train_" + name + "\t" + format_real(result.train_metric) + "\n";
      if (result.baseline_metric) text += "baseline_test_rmse\t" + format_real(*result.baseline_metric) + "\n";
      if (multi) {
        for (std::size_t task = 0; task < data.tasks.size(); ++task) {
          text += "test_" + name + "[" + data.tasks[task] + "]\t" + format_real(result.task_metrics[task]) + "\n";
        }
      }
      text += "split_hash\t" + result.split_hash + "\n";
      write_text(*seed_dir / "metrics.txt", text);
    }
    summary.seeds.push_back(std::move(result));
  }

  std::vector<double> values;
  for (const auto& s : summary.seeds) values.push_back(s.test_metric);
  const MeanStd ms = mean_std(values);
  summary.mean = ms.mean;
  summary.std = ms.std;
  if (out_dir) {
    std::string text = "dataset\t" + summary.dataset + "\narm\t" + summary.arm + "\nmetric\t" + summary.metric +
                       "\nmean\t" + format_real(summary.mean) + "\nstd\t" + format_real(summary.std) +
                       "\nconfig_hash\t" + summary.config_hash + "\n";
    for (const auto& s : summary.seeds) {
      text += "seed\t" + std::to_string(s.seed) + "\t" + format_real(s.test_metric) + "\t" + s.split_hash + "\n";
    }
    write_text(*out_dir / "summary.tsv", text);
  }
  return summary;
}

std::vector<RunSummary> ablation(const ExperimentConfig& config, const Dataset& data,
                                 const std::optional<std::filesystem::path>& out_dir, const TrainProgress& progress) {
  std::vector<RunSummary> out;
  for (Arm arm : {Arm::Gat, Arm::Seq, Arm::Dmca}) {
    ExperimentConfig c = config;
    c.model.arm = arm;
    std::optional<std::filesystem::path> dir;
    if (out_dir) dir = *out_dir / to_string(arm);
    if (progress.log) *progress.log << "arm " << to_string(arm) << "\n";
    out.push_back(run_experiment(c, data, dir, progress));
  }
  for (std::size_t k = 0; k < out.front().seeds.size(); ++k) {
    for (const auto& s : out) {
      if (s.seeds[k].split_hash != out.front().seeds[k].split_hash) {
        throw Error("ablation arms consumed different splits for seed " + std::to_string(s.seeds[k].seed));
      }
    }
  }
  if (out_dir) {
    std::string text = "arm\tmetric\tmean\tstd\tsplit_hashes\n";
    for (const auto& s : out) {
      std::string hashes;
      for (const auto& seed : s.seeds) hashes += (hashes.empty() ? "" : ",") + seed.split_hash;
      text += s.arm + "\t" + s.metric + "\t" + format_real(s.mean) + "\t" + format_real(s.std) + "\t" + hashes + "\n";
    }
    write_text(*out_dir / "ablation.tsv", text);
  }
  return out;
}

}  // namespace dmca
