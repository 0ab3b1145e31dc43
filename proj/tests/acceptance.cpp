// Acceptance checks, one per criterion. Usage: acceptance <1-9|all> [work-dir]
// Each criterion prints exactly one "criterion N: PASS|FAIL ..." line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "dmca/chem/molecule.hpp"
#include "dmca/error.hpp"
#include "dmca/gradcheck.hpp"
#include "dmca/harness.hpp"
#include "dmca/metrics.hpp"
#include "dmca/ops.hpp"

namespace fs = std::filesystem;
using namespace dmca;

namespace {

const fs::path kSource = DMCA_SOURCE_DIR;
fs::path g_work = fs::current_path();

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

// 1. Average column of the regression table through the `rank` command.
Outcome benchmark_average_oracle() {
  const fs::path table = kSource / "data" / "benchmark_regression.csv";
  std::ostringstream out, err;
  const std::string results = table.string();
  const char* argv[] = {"dmca", "rank", "--results", results.c_str(), "--direction", "lower"};
  if (run_cli(6, argv, out, err) != kExitOk) return {false, "rank failed: " + err.str()};
  std::map<std::string, double> printed;
  for (const auto& line : split_on(out.str(), '\n')) {
    const auto f = split_on(line, '\t');
    if (f.size() == 4 && f[0] != "rank") printed[f[1]] = std::stod(f[3]);
  }
  std::size_t checked = 0;
  double worst = 0.0;
  std::string mismatch;
  for (const auto& line : split_on(read_text(kSource / "fixtures" / "benchmark_average.csv"), '\n')) {
    const auto f = split_on(line, ',');
    if (f.size() != 2 || f[0] == "method") continue;
    ++checked;
    const auto it = printed.find(f[0]);
    if (it == printed.end()) {
      mismatch += " missing " + f[0];
      continue;
    }
    const double diff = std::abs(it->second - std::stod(f[1]));
    worst = std::max(worst, diff);
    if (diff > 0.0005) mismatch += " " + f[0];
  }
  if (checked != 12) return {false, "expected 12 reference averages, found " + std::to_string(checked)};
  return {mismatch.empty(), std::to_string(checked) + " methods, max |diff| " + fmt(worst) + mismatch};
}

// 2. Rank scores on random complete 5x5 tables against a brute-force median.
Outcome rank_properties() {
  CounterRng rng(20240607);
  std::size_t violations = 0;
  for (int t = 0; t < 1000; ++t) {
    ResultsTable table;
    for (int m = 0; m < 5; ++m) table.methods.push_back("m" + std::to_string(m));
    for (int d = 0; d < 5; ++d) table.datasets.push_back("d" + std::to_string(d));
    table.cells.assign(5, std::vector<std::optional<double>>(5));
    for (int d = 0; d < 5; ++d) {
      do {
        for (int m = 0; m < 5; ++m) {
          // Coarse values on every other table so that ties occur.
          double v = rng.uniform(0.0, 2.0);
          if (t % 2 == 0) v = std::round(v * 4.0) / 4.0;
          table.cell(m, d) = v;
        }
      } while ([&] {
        for (int m = 1; m < 5; ++m) {
          if (*table.cell(m, d) != *table.cell(0, d)) return false;
        }
        return true;
      }());
    }
    const ResultsTable norm = minmax_normalize(table);
    const std::vector<double> score = rank_score(norm, MissingPolicy::Exclude);
    for (int d = 0; d < 5; ++d) {
      double lo = INFINITY, hi = -INFINITY;
      for (int m = 0; m < 5; ++m) {
        lo = std::min(lo, *table.cell(m, d));
        hi = std::max(hi, *table.cell(m, d));
      }
      for (int m = 0; m < 5; ++m) {
        if (*table.cell(m, d) == hi && *norm.cell(m, d) != 1.0) ++violations;
      }
    }
    for (int m = 0; m < 5; ++m) {
      if (!(score[m] >= 0.0 && score[m] <= 1.0)) ++violations;
      std::vector<double> row;
      for (int d = 0; d < 5; ++d) {
        double lo = INFINITY, hi = -INFINITY;
        for (int k = 0; k < 5; ++k) {
          lo = std::min(lo, *table.cell(k, d));
          hi = std::max(hi, *table.cell(k, d));
        }
        row.push_back((*table.cell(m, d) - lo) / (hi - lo));
      }
      // The median of five is the value with at least three entries on each side (inclusive).
      double oracle = NAN;
      for (double c : row) {
        const auto below = std::count_if(row.begin(), row.end(), [&](double x) { return x <= c; });
        const auto above = std::count_if(row.begin(), row.end(), [&](double x) { return x >= c; });
        if (below >= 3 && above >= 3) oracle = c;
      }
      if (score[m] != oracle) ++violations;
    }
  }
  return {violations == 0, "1000 tables, " + std::to_string(violations) + " violations"};
}

// 3. Finite-difference gradient checks.
Outcome gradient_suite() {
  std::vector<GradCheckCase> cases = registered_gradchecks(GradCheckScope::Op);
  for (auto& c : registered_gradchecks(GradCheckScope::Module)) cases.push_back(std::move(c));
  for (auto& c : registered_gradchecks(GradCheckScope::Model)) cases.push_back(std::move(c));
  std::size_t failed = 0;
  double worst = 0.0;
  std::string worst_case;
  for (const auto& c : cases) {
    GradCheckOptions o;
    o.seed = 1;
    // Every coordinate for ops and for the full toy fusion model; sampled elsewhere.
    const bool full = c.scope == GradCheckScope::Op || c.name == "model_dmca_regression";
    o.max_coordinates = full ? 0 : 16;
    const GradCheckSummary s = run_gradcheck(c, 10, o);
    if (!s.passed) {
      ++failed;
      std::cerr << "gradcheck " << s.name << " failed: " << s.worst << "\n";
    }
    if (s.max_relative_error > worst) {
      worst = s.max_relative_error;
      worst_case = s.name;
    }
  }
  return {failed == 0, std::to_string(cases.size()) + " cases x 10 points, " + std::to_string(failed) +
                           " failed, max rel err " + fmt(worst, 3) + " (" + worst_case + ")"};
}

ExperimentConfig config_file(const std::string& name) { return load_config(kSource / "configs" / name); }

// 4. Memorization of the 32-molecule subset.
Outcome memorization() {
  const ExperimentConfig cfg = config_file("esol32_memorize.cfg");
  const Dataset data = load_dataset(cfg.dataset);
  if (data.records.size() != 32) return {false, "subset has " + std::to_string(data.records.size()) + " molecules"};
  const RunSummary s = run_experiment(cfg, data);
  const double r = s.seeds.at(0).train_metric;
  return {r < 0.1, "train RMSE " + fmt(r) + " after " + std::to_string(cfg.epochs) + " epochs (threshold 0.1)"};
}

RunSummary esol_run(const fs::path& dir) {
  const ExperimentConfig cfg = config_file("esol_desk.cfg");
  const Dataset data = load_dataset(cfg.dataset);
  fs::remove_all(dir);
  return run_experiment(cfg, data, dir);
}

// 5. Desk model against the constant-mean predictor on full ESOL.
Outcome beats_mean() {
  const RunSummary s = esol_run(g_work / "esol_run_a");
  double baseline = 0.0;
  for (const auto& r : s.seeds) baseline += r.baseline_metric.value();
  baseline /= static_cast<double>(s.seeds.size());
  std::string per_seed;
  for (const auto& r : s.seeds) per_seed += " " + fmt(r.test_metric);
  return {s.mean < baseline, "mean test RMSE " + fmt(s.mean) + " (seeds" + per_seed + ") vs mean-predictor " +
                                 fmt(baseline)};
}

// 6. Ablation arms on the 32-molecule subset.
Outcome ablation_structure() {
  const ExperimentConfig cfg = config_file("esol32_memorize.cfg");
  const Dataset data = load_dataset(cfg.dataset);
  const auto runs = ablation(cfg, data);
  bool pass = true;
  std::string detail;
  for (const auto& r : runs) {
    const double v = r.seeds.at(0).train_metric;
    pass = pass && v < 0.2;
    detail += r.arm + " " + fmt(v) + ", ";
    if (r.seeds.at(0).split_hash != runs.front().seeds.at(0).split_hash) pass = false;
  }
  return {pass, "train RMSE " + detail + "split hash " + runs.front().seeds.at(0).split_hash + " shared"};
}

chem::MolecularGraph permute(const chem::MolecularGraph& g, const std::vector<std::size_t>& perm) {
  chem::MolecularGraph out = g;
  for (std::size_t i = 0; i < g.atoms.size(); ++i) out.atoms[perm[i]] = g.atoms[i];
  for (auto& b : out.bonds) {
    b.begin = perm[b.begin];
    b.end = perm[b.end];
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b, std::size_t count) {
  double d = 0.0;
  for (std::size_t i = 0; i < count; ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// 7. Node permutation, PAD extension and AUC invariances.
Outcome invariances() {
  const Dataset data = load_dataset(config_file("esol32_memorize.cfg").dataset);
  std::vector<std::vector<std::string>> corpus;
  for (const auto& r : data.records) corpus.push_back(tokenize(r.smiles));
  const Vocab vocab = Vocab::build(corpus, kDefaultVocabSize);
  ModelConfig mc;  // desk widths
  const Model model(mc, 7);
  CounterRng rng(0), perm_rng(11);
  double perm_diff = 0.0, pad_diff = 0.0;
  for (const auto& r : data.records) {
    const TokenSequence tokens = encode_unpadded(tokenize(r.smiles), vocab);
    const TokenSequence padded = encode(tokenize(r.smiles), vocab, kDefaultMaxLength);
    const SequenceFeatures seq = model.seq_encoder()->forward(tokens, Mode::Eval, rng);
    const Tensor nodes = model.graph_encoder()->forward(make_graph_batch(r.graph), Mode::Eval, rng).node_features;
    const Tensor fused = model.fusion()->forward(seq, nodes, Mode::Eval, rng).features;
    for (int trial = 0; trial < 3; ++trial) {
      const auto g = permute(r.graph, random_permutation(r.graph.atoms.size(), perm_rng));
      const Tensor pn = model.graph_encoder()->forward(make_graph_batch(g), Mode::Eval, rng).node_features;
      perm_diff = std::max(perm_diff, max_abs_diff(fused, model.fusion()->forward(seq, pn, Mode::Eval, rng).features,
                                                   fused.size()));
    }
    // Encoding all 512 positions with PAD keys masked must reproduce the content rows.
    const SequenceFeatures full = model.seq_encoder()->forward(padded, Mode::Eval, rng, false);
    pad_diff = std::max(pad_diff, max_abs_diff(seq.features, full.features, seq.features.size()));
    const Tensor fused_full = model.fusion()->forward(full, nodes, Mode::Eval, rng).features;
    pad_diff = std::max(pad_diff, max_abs_diff(fused, fused_full, fused.size()));
    const ModelInput a{&r.graph, &tokens}, b{&r.graph, &padded};
    pad_diff = std::max(pad_diff, std::abs(model.forward(std::span(&a, 1), Mode::Eval, rng)[0] -
                                           model.forward(std::span(&b, 1), Mode::Eval, rng)[0]));
  }
  CounterRng auc_rng(5);
  std::size_t auc_violations = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 10 + t % 40;
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = std::round(auc_rng.uniform(-4.0, 4.0) * 8.0) / 8.0;  // ties included
      labels[i] = static_cast<int>(i % 2 == 0 || auc_rng.uniform() < 0.3);
    }
    const double base = auc_roc(scores, labels);
    const std::vector<std::function<double(double)>> transforms = {
        [](double x) { return std::exp(x); }, [](double x) { return x * x * x; },
        [](double x) { return 2.0 * x + 1.0; }, [](double x) { return std::atan(x); }};
    for (const auto& f : transforms) {
      std::vector<double> s2(n);
      std::transform(scores.begin(), scores.end(), s2.begin(), f);
      if (auc_roc(s2, labels) != base) ++auc_violations;
    }
  }
  const bool pass = perm_diff <= 1e-10 && pad_diff <= 1e-10 && auc_violations == 0;
  return {pass, "permutation max diff " + fmt(perm_diff, 3) + ", PAD max diff " + fmt(pad_diff, 3) +
                    ", AUC violations " + std::to_string(auc_violations) + "/800"};
}

// 8. Parser oracle: reference features and the negative corpus.
Outcome parser_oracle() {
  std::size_t atoms = 0, matched = 0, molecules = 0;
  std::ifstream in(kSource / "fixtures" / "features_50.tsv");
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    const std::string smiles = line.substr(0, tab);
    const auto expected = nlohmann::json::parse(line.substr(tab + 1));
    ++molecules;
    const chem::MolecularGraph g = chem::featurize(smiles);
    atoms += expected.size();
    for (std::size_t i = 0; i < std::min(expected.size(), g.atoms.size()); ++i) {
      const auto& a = g.atoms[i];
      const auto& e = expected[i];
      matched += a.atomic_number == e["atomic_number"].get<int>() &&
                 chem::to_string(a.chirality) == e["chirality"].get<std::string>() &&
                 a.degree == e["degree"].get<int>() && a.formal_charge == e["formal_charge"].get<int>() &&
                 a.num_hs == e["num_hs"].get<int>() && a.radical_electrons == e["radical_electrons"].get<int>() &&
                 chem::to_string(a.hybridization) == e["hybridization"].get<std::string>() &&
                 a.is_aromatic == e["is_aromatic"].get<bool>() && a.in_ring == e["in_ring"].get<bool>();
    }
  }
  std::size_t negatives = 0, positioned = 0;
  std::ifstream neg(kSource / "fixtures" / "negative_smiles.txt");
  for (std::string line; std::getline(neg, line);) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_on(line, '\t');
    ++negatives;
    try {
      chem::parse_smiles(f.at(0));
    } catch (const ParseError& e) {
      positioned += parse_error_kind_name(e.kind()) == f.at(1) && e.offset() == std::stoul(f.at(2));
    }
  }
  const bool pass = molecules == 50 && matched == atoms && atoms > 0 && negatives > 0 && positioned == negatives;
  return {pass, std::to_string(matched) + "/" + std::to_string(atoms) + " atoms over " + std::to_string(molecules) +
                    " molecules, " + std::to_string(positioned) + "/" + std::to_string(negatives) +
                    " negative entries positioned"};
}

// 9. Two full runs of criterion 5 give byte-identical metric files.
Outcome determinism() {
  const fs::path a = g_work / "esol_run_a", b = g_work / "esol_run_b";
  if (!fs::exists(a / "summary.tsv")) esol_run(a);
  esol_run(b);
  std::size_t compared = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    if (name != "metrics.txt" && name != "summary.tsv" && name != "loss.tsv") continue;
    ++compared;
    const fs::path other = b / fs::relative(entry.path(), a);
    if (!fs::exists(other) || read_text(entry.path()) != read_text(other)) {
      ++differing;
      std::cerr << "differs: " << fs::relative(entry.path(), a).string() << "\n";
    }
  }
  return {compared > 0 && differing == 0,
          std::to_string(compared) + " metric files compared, " + std::to_string(differing) + " differ"};
}

struct Criterion {
  int id;
  double budget_seconds;  // 0 = no stated bound
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, 1, benchmark_average_oracle},       {2, 10, rank_properties},    {3, 120, gradient_suite},
      {4, 600, memorization},      {5, 1800, beats_mean},       {6, 0, ablation_structure},
      {7, 60, invariances},        {8, 0, parser_oracle},       {9, 0, determinism},
  };
  return all;
}

bool run_one(const Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string timing = fmt(secs, 3) + " s";
  if (c.budget_seconds > 0) {
    timing += " of " + fmt(c.budget_seconds, 4) + " s";
    if (secs >= c.budget_seconds) {
      o.pass = false;
      timing += " (over budget)";
    }
  }
  std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "; " << timing
            << std::endl;
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2 || argc > 3) {
    std::cerr << "usage: acceptance <1-9|all> [work-dir]\n";
    return 2;
  }
  if (argc == 3) g_work = argv[2];
  fs::create_directories(g_work);
  const std::string which = argv[1];
  bool ok = true;
  bool found = false;
  for (const auto& c : criteria()) {
    if (which == "all" || which == std::to_string(c.id)) {
      found = true;
      ok = run_one(c) && ok;
    }
  }
  if (!found) {
    std::cerr << "unknown criterion '" << which << "'\n";
    return 2;
  }
  return ok ? 0 : 1;
}
