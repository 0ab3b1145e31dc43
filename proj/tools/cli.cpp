#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "dmca/chem/molecule.hpp"
#include "dmca/error.hpp"
#include "dmca/gradcheck.hpp"
#include "dmca/harness.hpp"
#include "dmca/metrics.hpp"
#include "dmca/tokenizer.hpp"

namespace dmca {

namespace {

namespace fs = std::filesystem;

void print_feature_header(std::ostream& out) {
  out << "atom\tatomic_number\tchirality\tdegree\tformal_charge\tnum_hs\tradical_electrons\thybridization"
         "\tis_aromatic\tin_ring\n";
}

void print_atoms(std::ostream& out, const chem::MolecularGraph& g) {
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    const auto& a = g.atoms[i];
    out << i << '\t' << a.atomic_number << '\t' << chem::to_string(a.chirality) << '\t' << a.degree << '\t'
        << a.formal_charge << '\t' << a.num_hs << '\t' << a.radical_electrons << '\t'
        << chem::to_string(a.hybridization) << '\t' << (a.is_aromatic ? 1 : 0) << '\t' << (a.in_ring ? 1 : 0)
        << '\n';
  }
}

/// One line per molecule: atoms joined by ';', the nine numeric features by ','.
std::string numeric_features(const chem::MolecularGraph& g) {
  std::string s;
  for (const auto& a : g.atoms) {
    if (!s.empty()) s += ';';
    const auto v = a.to_vector();
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(static_cast<long>(v[k]));
  }
  return s;
}

int cmd_featurize(const std::string& smiles, const std::string& csv, const std::string& column, std::ostream& out,
                  std::ostream& err) {
  if (csv.empty()) {
    const auto g = chem::featurize(smiles);
    print_feature_header(out);
    print_atoms(out, g);
    return kExitOk;
  }
  const CsvTable table = read_csv(csv);
  const std::size_t col = table.column(column);
  out << "line\tsmiles\tatoms\tbonds\tfeatures\n";
  std::size_t dropped = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::string s = table.rows[r][col];
    s.erase(s.find_last_not_of(" \t\r\n") + 1);
    s.erase(0, s.find_first_not_of(" \t\r\n"));
    try {
      const auto g = chem::featurize(s);
      out << table.lines[r] << '\t' << s << '\t' << g.atoms.size() << '\t' << g.bonds.size() << '\t'
          << numeric_features(g) << '\n';
    } catch (const ParseError& e) {
      ++dropped;
      err << "dropped line " << table.lines[r] << ": " << parse_error_kind_name(e.kind()) << ": " << e.what() << '\n';
    } catch (const ValenceError& e) {
      ++dropped;
      err << "dropped line " << table.lines[r] << ": valence: " << e.what() << '\n';
    }
  }
  err << "featurized " << table.rows.size() - dropped << " of " << table.rows.size() << " rows, dropped " << dropped
      << '\n';
  return kExitOk;
}

int cmd_tokenize(const std::string& smiles, const std::string& vocab_path, std::size_t max_length,
                 std::ostream& out) {
  const auto tokens = tokenize(smiles);
  const Vocab vocab = vocab_path.empty() ? Vocab::build({tokens}) : Vocab::load(vocab_path);
  const TokenSequence seq = encode_unpadded(tokens, vocab, max_length);
  out << "position\ttoken\tid\n";
  for (std::size_t i = 0; i < seq.ids.size(); ++i) out << i << '\t' << vocab.token(seq.ids[i]) << '\t' << seq.ids[i] << '\n';
  return kExitOk;
}

struct RunOptions {
  std::string config;
  std::string out;
  std::string seeds;
  std::string arm;
  std::string fg;
  std::string dataset;
  bool verbose = false;
};

ExperimentConfig resolve_config(const RunOptions& o) {
  ExperimentConfig cfg = load_config(o.config);
  const fs::path base = fs::path(o.config).parent_path();
  if (!o.dataset.empty()) {
    if (fs::is_regular_file(o.dataset)) {
      // A dataset spec file: the dataset keys of a config, applied over the config.
      const ExperimentConfig spec = load_config(o.dataset);
      cfg.dataset = spec.dataset;
    } else {
      apply_setting(cfg, "dataset", o.dataset, base);
    }
  }
  if (!o.seeds.empty()) apply_setting(cfg, "seeds", o.seeds);
  if (!o.arm.empty()) apply_setting(cfg, "arm", o.arm);
  if (!o.fg.empty()) apply_setting(cfg, "fg", o.fg);
  return cfg;
}

void report_drops(const Dataset& data, std::ostream& err) {
  for (const auto& d : data.report.dropped) err << "dropped line " << d.line << " (" << d.smiles << "): " << d.reason << '\n';
  if (data.report.inconsistent_clintox) {
    err << "clintox: " << data.report.inconsistent_clintox << " rows outside the two dominant label pairs (kept)\n";
  }
}

int cmd_train(const RunOptions& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve_config(o);
  const Dataset data = load_dataset(cfg.dataset);
  report_drops(data, err);
  TrainProgress progress{o.verbose ? &err : nullptr};
  const RunSummary s = run_experiment(cfg, data, fs::path(o.out), progress);
  out << "seed\t" << s.metric << "\tsplit_hash\n";
  for (const auto& r : s.seeds) out << r.seed << '\t' << format_real(r.test_metric) << '\t' << r.split_hash << '\n';
  out << "mean\t" << format_real(s.mean) << "\nstd\t" << format_real(s.std) << "\nconfig_hash\t" << s.config_hash << '\n';
  return kExitOk;
}

int cmd_ablate(const RunOptions& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve_config(o);
  const Dataset data = load_dataset(cfg.dataset);
  report_drops(data, err);
  TrainProgress progress{o.verbose ? &err : nullptr};
  const auto runs = ablation(cfg, data, fs::path(o.out), progress);
  out << "arm\tmetric\tmean\tstd\n";
  for (const auto& s : runs) out << s.arm << '\t' << s.metric << '\t' << format_real(s.mean) << '\t' << format_real(s.std) << '\n';
  return kExitOk;
}

/// Looks for the run's config snapshot next to the checkpoint or up to two levels above.
fs::path find_config(const fs::path& checkpoint) {
  fs::path dir = fs::absolute(checkpoint).parent_path();
  for (int up = 0; up < 3; ++up, dir = dir.parent_path()) {
    if (fs::exists(dir / "config.txt")) return dir / "config.txt";
  }
  throw DataError("no config.txt found near " + checkpoint.string() + "; pass --config");
}

int cmd_evaluate(const std::string& checkpoint, std::string config, const std::string& dataset,
                 const std::string& which, std::string method, std::ostream& out) {
  if (!fs::exists(checkpoint)) throw DataError("checkpoint not found: " + checkpoint);
  if (config.empty()) config = find_config(checkpoint).string();
  RunOptions o;
  o.config = config;
  o.dataset = dataset;
  const ExperimentConfig cfg = resolve_config(o);
  const Dataset data = load_dataset(cfg.dataset);
  const TrainedModel trained =
      load_trained(cfg, checkpoint, fs::path(checkpoint).parent_path() / "vocab.txt");
  std::vector<std::size_t> indices;
  if (which == "all") {
    indices.resize(data.records.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  } else {
    const Split sp = split(data.records.size(), cfg.split_ratio, trained.seed);
    indices = which == "train" ? sp.train : sp.test;
  }
  const double value = evaluate(trained, data, indices);
  if (method.empty()) {
    method = to_string(cfg.model.arm);
    std::transform(method.begin(), method.end(), method.begin(), [](unsigned char c) { return std::toupper(c); });
  }
  out << "method,dataset,value\n" << method << ',' << data.spec.name << ',' << format_real(value) << '\n';
  return kExitOk;
}

int cmd_rank(const std::string& results, const std::string& missing, const std::string& direction, std::ostream& out) {
  ResultsTable table = read_results_csv(results);
  const MissingPolicy policy = missing == "zero" ? MissingPolicy::Zero : MissingPolicy::Exclude;
  const std::vector<double> average = average_metric(table);
  ResultsTable oriented = table;
  if (direction == "lower") {
    // Lower is better: negate so the best method still normalizes to 1.
    for (auto& row : oriented.cells) {
      for (auto& c : row) {
        if (c) *c = -*c;
      }
    }
  }
  const std::vector<double> score = rank_score(minmax_normalize(oriented), policy);
  out << "rank\tmethod\trank_score\taverage\n";
  std::size_t rank = 0;
  for (std::size_t m : order_methods(score, true)) {
    out << ++rank << '\t' << table.methods[m] << '\t' << std::fixed << std::setprecision(4) << score[m] << '\t'
        << std::setprecision(3) << average[m] << '\n';
    out.unsetf(std::ios::floatfield);
  }
  return kExitOk;
}

int cmd_gradcheck(const std::string& scope, std::size_t points, std::size_t coordinates, std::uint64_t seed,
                  bool inject_fault, std::ostream& out) {
  std::vector<GradCheckCase> cases;
  auto add = [&](GradCheckScope s) {
    for (auto& c : registered_gradchecks(s)) cases.push_back(std::move(c));
  };
  if (scope == "op" || scope == "all") add(GradCheckScope::Op);
  if (scope == "module" || scope == "all") add(GradCheckScope::Module);
  if (scope == "model" || scope == "all") add(GradCheckScope::Model);
  if (inject_fault) cases.push_back(faulty_gradcheck_case());
  GradCheckOptions options;
  options.seed = seed;
  bool all_passed = true;
  out << "case\tstatus\tpoints\tmax_rel_error\tworst\n";
  for (const auto& c : cases) {
    GradCheckOptions o = options;
    o.max_coordinates = c.scope == GradCheckScope::Op ? 0 : coordinates;
    const GradCheckSummary s = run_gradcheck(c, points, o);
    all_passed = all_passed && s.passed;
    out << s.name << '\t' << (s.passed ? "pass" : "FAIL") << '\t' << s.points << '\t' << std::scientific
        << std::setprecision(3) << s.max_relative_error << '\t' << s.worst << '\n';
    out.unsetf(std::ios::floatfield);
  }
  out << (all_passed ? "all passed\n" : "FAILED\n");
  return all_passed ? kExitOk : kExitRuntime;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-modality cross-attention molecular property prediction"};
  app.name("dmca");
  app.require_subcommand(1);

  std::string smiles, csv, column = "smiles";
  auto* featurize = app.add_subcommand("featurize", "Print the nine node features of a SMILES string or CSV column");
  featurize->add_option("smiles", smiles, "SMILES string");
  featurize->add_option("--csv", csv, "CSV file; prints one line per parsed molecule")->check(CLI::ExistingFile);
  featurize->add_option("--smiles-column", column, "SMILES column name in --csv mode");

  std::string vocab;
  std::size_t max_length = kDefaultMaxLength;
  auto* tok = app.add_subcommand("tokenize", "Print tokens and ids of a SMILES string");
  tok->add_option("smiles", smiles, "SMILES string")->required();
  tok->add_option("--vocab", vocab, "vocabulary file (default: built from the input)")->check(CLI::ExistingFile);
  tok->add_option("--max-length", max_length, "sequence cap including BOS/EOS")->check(CLI::PositiveNumber);

  RunOptions run;
  auto add_run_flags = [&run](CLI::App* sub) {
    sub->add_option("--config", run.config, "key = value config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", run.out, "results directory")->required();
    sub->add_option("--seeds", run.seeds, "comma separated seeds, e.g. 1,2,3");
    sub->add_option("--dataset", run.dataset, "dataset preset name or dataset spec file");
    sub->add_option("--fg", run.fg, "graph features for cross-attention: nodes|pooled");
    sub->add_flag("--verbose", run.verbose, "log per-epoch loss to stderr");
  };
  auto* train_cmd = app.add_subcommand("train", "Train and evaluate once per seed");
  add_run_flags(train_cmd);
  train_cmd->add_option("--arm", run.arm, "gat|seq|dmca");
  auto* ablate_cmd = app.add_subcommand("ablate", "Run the gat, seq and dmca arms under one protocol");
  add_run_flags(ablate_cmd);

  std::string checkpoint, config, dataset, which = "test", method;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint; prints method,dataset,value CSV");
  eval_cmd->add_option("--checkpoint", checkpoint, "model.ckpt written by train")->required();
  eval_cmd->add_option("--config", config, "config (default: the run's config.txt snapshot)");
  eval_cmd->add_option("--dataset", dataset, "dataset preset name or dataset spec file");
  eval_cmd->add_option("--split", which, "train|test|all")->check(CLI::IsMember({"train", "test", "all"}));
  eval_cmd->add_option("--method", method, "method name in the report (default: arm name)");

  std::string results, missing = "exclude", direction = "higher";
  auto* rank_cmd = app.add_subcommand("rank", "Rank-score and average a method,dataset,value table");
  rank_cmd->add_option("--results", results, "results CSV")->required()->check(CLI::ExistingFile);
  rank_cmd->add_option("--missing", missing, "exclude|zero")->check(CLI::IsMember({"exclude", "zero"}));
  rank_cmd->add_option("--direction", direction, "higher|lower is better")
      ->check(CLI::IsMember({"higher", "lower"}));

  std::string scope = "all";
  std::size_t points = 10, coordinates = 16;
  std::uint64_t seed = 0;
  bool inject_fault = false;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every registered gradient");
  grad_cmd->add_option("--scope", scope, "op|module|model|all")
      ->check(CLI::IsMember({"op", "module", "model", "all"}));
  grad_cmd->add_option("--points", points, "random evaluation points per case")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--coordinates", coordinates, "sampled coordinates per tensor (module/model; 0 = all)");
  grad_cmd->add_option("--seed", seed, "first evaluation point seed");
  grad_cmd->add_flag("--inject-fault", inject_fault, "add a case with a wrong backward rule");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*featurize) {
      if (smiles.empty() == csv.empty()) throw ConfigError("featurize takes either a SMILES argument or --csv");
      return cmd_featurize(smiles, csv, column, out, err);
    }
    if (*tok) return cmd_tokenize(smiles, vocab, max_length, out);
    if (*train_cmd) return cmd_train(run, out, err);
    if (*ablate_cmd) return cmd_ablate(run, out, err);
    if (*eval_cmd) return cmd_evaluate(checkpoint, config, dataset, which, method, out);
    if (*rank_cmd) return cmd_rank(results, missing, direction, out);
    if (*grad_cmd) return cmd_gradcheck(scope, points, coordinates, seed, inject_fault, out);
  } catch (const ParseError& e) {
    err << "error: " << parse_error_kind_name(e.kind()) << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValenceError& e) {
    err << "error: valence: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: data: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: config: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "error: parameter: " << e.what() << '\n';
    return kExitUsage;
  } catch (const MetricError& e) {
    err << "error: metric: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "error: numeric: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace dmca
