#include "dmca/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "dmca/error.hpp"

namespace dmca {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::size_t to_size(const std::string& key, const std::string& value, bool allow_zero = false) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || (!allow_zero && out == 0)) {
    throw ConfigError(key + ": expected a positive integer, got '" + value + "'");
  }
  return out;
}

double to_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a real number, got '" + value + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::string real_text(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

TaskKind parse_task_kind(const std::string& name) {
  if (name == "regression") return TaskKind::Regression;
  if (name == "classification") return TaskKind::Classification;
  if (name == "multilabel") return TaskKind::MultiLabel;
  throw ConfigError("unknown task '" + name + "' (expected regression, classification or multilabel)");
}

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Regression:
      return "regression";
    case TaskKind::Classification:
      return "classification";
    case TaskKind::MultiLabel:
      return "multilabel";
  }
  return "?";
}

LabelPolicy parse_label_policy(const std::string& name) {
  if (name == "none") return LabelPolicy::None;
  if (name == "clintox-collapse") return LabelPolicy::ClinToxCollapse;
  throw ConfigError("unknown label policy '" + name + "' (expected none or clintox-collapse)");
}

std::string to_string(LabelPolicy policy) { return policy == LabelPolicy::None ? "none" : "clintox-collapse"; }

DatasetSpec dataset_preset(const std::string& name) {
  DatasetSpec spec;
  spec.name = name;
  spec.csv = std::filesystem::path("data") / (name + ".csv");
  if (name == "esol") {
    spec.label_columns = {"measured log solubility in mols per litre"};
  } else if (name == "freesolv") {
    spec.label_columns = {"expt"};
  } else if (name == "lipophilicity") {
    spec.label_columns = {"exp"};
  } else if (name == "bbbp") {
    spec.label_columns = {"p_np"};
    spec.task = TaskKind::Classification;
  } else if (name == "bace") {
    spec.smiles_column = "mol";
    spec.label_columns = {"Class"};
    spec.task = TaskKind::Classification;
  } else if (name == "hiv") {
    spec.label_columns = {"HIV_active"};
    spec.task = TaskKind::Classification;
  } else if (name == "clintox") {
    spec.label_columns = {"FDA_APPROVED", "CT_TOX"};
    spec.task = TaskKind::Classification;
    spec.policy = LabelPolicy::ClinToxCollapse;
  } else if (name == "sider") {
    spec.label_columns = {"*"};
    spec.task = TaskKind::MultiLabel;
  } else {
    throw ConfigError("unknown dataset preset '" + name + "'");
  }
  return spec;
}

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::filesystem::path&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Key {
  Setter set;
  Getter get;
};

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> table = [] {
    std::map<std::string, Key> k;
    // Dataset. `dataset` resets the dataset keys to the preset, so it is applied first.
    k["dataset"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.dataset = dataset_preset(v); },
                    [](const ExperimentConfig& c) { return c.dataset.name; }};
    k["csv"] = {[](ExperimentConfig& c, const std::string& v, const std::filesystem::path& base) {
                  std::filesystem::path p(v);
                  c.dataset.csv = p.is_relative() && !base.empty() ? (base / p).lexically_normal() : p;
                },
                [](const ExperimentConfig& c) { return c.dataset.csv.generic_string(); }};
    k["smiles_column"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.dataset.smiles_column = v; },
                          [](const ExperimentConfig& c) { return c.dataset.smiles_column; }};
    k["label_columns"] = {[](ExperimentConfig& c, const std::string& v, const auto&) {
                            c.dataset.label_columns = split_list(v);
                            if (c.dataset.label_columns.empty()) throw ConfigError("label_columns: empty list");
                          },
                          [](const ExperimentConfig& c) { return join(c.dataset.label_columns); }};
    k["task"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.dataset.task = parse_task_kind(v); },
                 [](const ExperimentConfig& c) { return to_string(c.dataset.task); }};
    k["label_policy"] = {
        [](ExperimentConfig& c, const std::string& v, const auto&) { c.dataset.policy = parse_label_policy(v); },
        [](const ExperimentConfig& c) { return to_string(c.dataset.policy); }};
    // Model.
    k["arm"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.arm = parse_arm(v); },
                [](const ExperimentConfig& c) { return to_string(c.model.arm); }};
    k["fg"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.fg = parse_graph_features(v); },
               [](const ExperimentConfig& c) { return to_string(c.model.fg); }};
    k["graph_width"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.graph.width = to_size("graph_width", v); },
                        [](const ExperimentConfig& c) { return std::to_string(c.model.graph.width); }};
    k["graph_layers"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.graph.layers = to_size("graph_layers", v); },
                         [](const ExperimentConfig& c) { return std::to_string(c.model.graph.layers); }};
    k["graph_dropout"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.graph.dropout = to_real("graph_dropout", v); },
                          [](const ExperimentConfig& c) { return real_text(c.model.graph.dropout); }};
    k["graph_activation"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.graph.activation = parse_activation(v); },
                             [](const ExperimentConfig& c) { return to_string(c.model.graph.activation); }};
    k["leaky_slope"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.graph.leaky_slope = to_real("leaky_slope", v); },
                        [](const ExperimentConfig& c) { return real_text(c.model.graph.leaky_slope); }};
    k["seq_width"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.seq.width = to_size("seq_width", v); },
                      [](const ExperimentConfig& c) { return std::to_string(c.model.seq.width); }};
    k["seq_layers"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.seq.layers = to_size("seq_layers", v); },
                       [](const ExperimentConfig& c) { return std::to_string(c.model.seq.layers); }};
    k["seq_heads"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.seq.heads = to_size("seq_heads", v); },
                      [](const ExperimentConfig& c) { return std::to_string(c.model.seq.heads); }};
    k["seq_ffn_width"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.seq.ffn_width = to_size("seq_ffn_width", v); },
                          [](const ExperimentConfig& c) { return std::to_string(c.model.seq.ffn_width); }};
    k["seq_dropout"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.seq.dropout = to_real("seq_dropout", v); },
                        [](const ExperimentConfig& c) { return real_text(c.model.seq.dropout); }};
    k["seq_activation"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.seq.activation = parse_activation(v); },
                           [](const ExperimentConfig& c) { return to_string(c.model.seq.activation); }};
    k["fusion_heads"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.fusion_heads = to_size("fusion_heads", v); },
                         [](const ExperimentConfig& c) { return std::to_string(c.model.fusion_heads); }};
    k["fusion_ffn_width"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.fusion_ffn_width = to_size("fusion_ffn_width", v); },
                             [](const ExperimentConfig& c) { return std::to_string(c.model.fusion_ffn_width); }};
    k["mlp_hidden"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.model.mlp_hidden = to_size("mlp_hidden", v); },
                       [](const ExperimentConfig& c) { return std::to_string(c.model.mlp_hidden); }};
    // Tokenizer and protocol.
    k["vocab_size"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.vocab_size = to_size("vocab_size", v); },
                       [](const ExperimentConfig& c) { return std::to_string(c.vocab_size); }};
    k["max_length"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.max_length = to_size("max_length", v); },
                       [](const ExperimentConfig& c) { return std::to_string(c.max_length); }};
    k["epochs"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.epochs = to_size("epochs", v, true); },
                   [](const ExperimentConfig& c) { return std::to_string(c.epochs); }};
    k["batch_size"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.batch_size = to_size("batch_size", v); },
                       [](const ExperimentConfig& c) { return std::to_string(c.batch_size); }};
    k["learning_rate"] = {[](ExperimentConfig& c, const std::string& v, const auto&) {
                            c.learning_rate = to_real("learning_rate", v);
                            if (c.learning_rate < 0.0) throw ConfigError("learning_rate: must be nonnegative");
                          },
                          [](const ExperimentConfig& c) { return real_text(c.learning_rate); }};
    k["split_ratio"] = {[](ExperimentConfig& c, const std::string& v, const auto&) {
                          c.split_ratio = to_real("split_ratio", v);
                          if (!(c.split_ratio > 0.0 && c.split_ratio <= 1.0)) throw ConfigError("split_ratio: must lie in (0, 1]");
                        },
                        [](const ExperimentConfig& c) { return real_text(c.split_ratio); }};
    k["seeds"] = {[](ExperimentConfig& c, const std::string& v, const auto&) { c.seeds = parse_seeds(v); },
                  [](const ExperimentConfig& c) {
                    std::vector<std::string> s;
                    for (auto seed : c.seeds) s.push_back(std::to_string(seed));
                    return join(s);
                  }};
    k["standardize_targets"] = {
        [](ExperimentConfig& c, const std::string& v, const auto&) { c.standardize_targets = to_bool("standardize_targets", v); },
        [](const ExperimentConfig& c) { return std::string(c.standardize_targets ? "true" : "false"); }};
    return k;
  }();
  return table;
}

}  // namespace

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir) {
  const auto it = keys().find(key);
  if (it == keys().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(config, value, base_dir);
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (keys().count(key) == 0) throw ConfigError("line " + std::to_string(number) + ": unknown config key '" + key + "'");
    for (const auto& e : entries) {
      if (e.first == key) throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
    }
    entries.emplace_back(std::move(key), std::move(value));
  }
  ExperimentConfig config;
  // The preset must land before the dataset keys that refine it, whatever the file order.
  for (const auto& [key, value] : entries) {
    if (key == "dataset") apply_setting(config, key, value, base_dir);
  }
  for (const auto& [key, value] : entries) {
    if (key != "dataset") apply_setting(config, key, value, base_dir);
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

std::map<std::string, std::string> config_entries(const ExperimentConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& [key, k] : keys()) out[key] = k.get(config);
  return out;
}

std::string canonical_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [key, value] : config_entries(config)) out += key + " = " + value + "\n";
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::string hex64(std::uint64_t value) {
  static const char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, value >>= 4) out[static_cast<std::size_t>(i)] = digits[value & 0xf];
  return out;
}

std::string config_hash(const ExperimentConfig& config) { return hex64(fnv1a64(canonical_text(config))); }

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& s : split_list(text)) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("seeds: bad seed '" + s + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("seeds: at least one seed required");
  return seeds;
}

}  // namespace dmca
