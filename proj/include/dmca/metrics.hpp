#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dmca {

/// Mann-Whitney estimate of ROC AUC: the fraction of (positive, negative) pairs the
/// scores order correctly, ties counting one half. Labels are 0/1; both classes required.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

double rmse(std::span<const double> prediction, std::span<const double> target);

/// Median; an even count averages the two central values.
double median(std::vector<double> values);

/// Mean and sample standard deviation (n - 1 denominator; 0 for a single value).
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

/// Method x dataset grid; an empty optional is a missing entry.
struct ResultsTable {
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  std::vector<std::vector<std::optional<double>>> cells;  // [method][dataset]

  std::optional<double>& cell(std::size_t method, std::size_t dataset) { return cells[method][dataset]; }
  const std::optional<double>& cell(std::size_t method, std::size_t dataset) const {
    return cells[method][dataset];
  }
};

/// Long-format CSV `method,dataset,value` with `NA` for missing values; a header line
/// `method,dataset,value` is optional. Methods and datasets keep first-seen order.
ResultsTable read_results_csv(const std::filesystem::path& path);
ResultsTable parse_results_csv(const std::string& text);

/// Per-dataset min-max scaling: (m - min) / (max - min). Missing stays missing.
ResultsTable minmax_normalize(const ResultsTable& table);

enum class MissingPolicy { Exclude, Zero };

/// Per-method median of the (normalized) cells. `Exclude` skips missing cells, `Zero`
/// counts them as 0.
std::vector<double> rank_score(const ResultsTable& normalized, MissingPolicy policy);

/// Per-method arithmetic mean over available cells.
std::vector<double> average_metric(const ResultsTable& table);

/// Method indices sorted by `score`, descending when `descending`; ties keep table order.
std::vector<std::size_t> order_methods(std::span<const double> score, bool descending);

}  // namespace dmca
