#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dmca/model.hpp"

namespace dmca {

enum class TaskKind { Regression, Classification, MultiLabel };
enum class LabelPolicy { None, ClinToxCollapse };

TaskKind parse_task_kind(const std::string& name);
std::string to_string(TaskKind kind);
LabelPolicy parse_label_policy(const std::string& name);
std::string to_string(LabelPolicy policy);

/// Where a dataset lives and how its labels are read.
struct DatasetSpec {
  std::string name = "esol";
  std::filesystem::path csv;
  std::string smiles_column = "smiles";
  /// Label column names; a single "*" means every column except the SMILES one.
  std::vector<std::string> label_columns;
  TaskKind task = TaskKind::Regression;
  LabelPolicy policy = LabelPolicy::None;
};

/// Built-in MoleculeNet layouts (esol, freesolv, lipophilicity, bbbp, bace, clintox, hiv,
/// sider). The csv path defaults to data/<name>.csv. Throws ConfigError for other names.
DatasetSpec dataset_preset(const std::string& name);

/// Everything a run needs: dataset, model shape and optimization protocol.
struct ExperimentConfig {
  DatasetSpec dataset = dataset_preset("esol");
  ModelConfig model;
  std::size_t vocab_size = 767;
  std::size_t max_length = 512;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  double split_ratio = 0.8;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  bool standardize_targets = true;
};

/// Flat `key = value` text; `#` starts a comment. Unknown keys and malformed values throw
/// ConfigError. Relative csv paths are resolved against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Sets one key as if it appeared in a config file.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir = {});

/// Every key with its effective value.
std::map<std::string, std::string> config_entries(const ExperimentConfig& config);
/// Sorted `key = value` lines; parse_config(canonical_text(c)) reproduces c.
std::string canonical_text(const ExperimentConfig& config);
/// FNV-1a 64 of canonical_text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// Comma separated list, surrounding whitespace trimmed, empty items dropped.
std::vector<std::string> split_list(const std::string& text);
std::vector<std::uint64_t> parse_seeds(const std::string& text);

}  // namespace dmca
