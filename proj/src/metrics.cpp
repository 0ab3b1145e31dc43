#include "dmca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dmca/error.hpp"

namespace dmca {

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw MetricError("auc_roc: scores and labels differ in length");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw MetricError("auc_roc: labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw MetricError("auc_roc: undefined with a single class");

  // Average ranks over tied groups; U = sum of positive ranks - P(P+1)/2.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) positive_rank_sum += rank;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

double rmse(std::span<const double> prediction, std::span<const double> target) {
  if (prediction.size() != target.size()) throw MetricError("rmse: length mismatch");
  if (prediction.empty()) throw MetricError("rmse: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction[i] - target[i];
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(prediction.size()));
}

double median(std::vector<double> values) {
  if (values.empty()) throw MetricError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw MetricError("mean_std of an empty list");
  MeanStd r;
  // Shifted by the first value so identical inputs give their exact value and std 0.
  const double shift = values.front();
  double d = 0.0;
  for (double v : values) d += v - shift;
  d /= static_cast<double>(values.size());
  r.mean = shift + d;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - shift - d) * (v - shift - d);
    r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t index_of(std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
  names.push_back(name);
  return names.size() - 1;
}

}  // namespace

ResultsTable parse_results_csv(const std::string& text) {
  struct Entry {
    std::size_t method, dataset;
    std::optional<double> value;
  };
  ResultsTable table;
  std::vector<Entry> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (fields.size() != 3) {
      throw DataError("results line " + std::to_string(line_no) + ": expected method,dataset,value");
    }
    if (fields[0] == "method" && fields[1] == "dataset" && fields[2] == "value") continue;
    Entry e{index_of(table.methods, fields[0]), index_of(table.datasets, fields[1]), std::nullopt};
    if (fields[2] != "NA") {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(fields[2], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != fields[2].size() || !std::isfinite(v)) {
        throw DataError("results line " + std::to_string(line_no) + ": bad value '" + fields[2] + "'");
      }
      e.value = v;
    }
    entries.push_back(e);
  }
  if (table.methods.empty()) throw DataError("results table is empty");
  table.cells.assign(table.methods.size(), std::vector<std::optional<double>>(table.datasets.size()));
  std::vector<std::vector<bool>> seen(table.methods.size(), std::vector<bool>(table.datasets.size(), false));
  for (const Entry& e : entries) {
    if (seen[e.method][e.dataset]) {
      throw DataError("duplicate results entry for " + table.methods[e.method] + "/" + table.datasets[e.dataset]);
    }
    seen[e.method][e.dataset] = true;
    table.cells[e.method][e.dataset] = e.value;
  }
  return table;
}

ResultsTable read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open results file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_results_csv(buffer.str());
}

ResultsTable minmax_normalize(const ResultsTable& table) {
  if (table.methods.size() < 2) throw MetricError("min-max scaling needs at least two methods");
  ResultsTable out = table;
  for (std::size_t d = 0; d < table.datasets.size(); ++d) {
    std::vector<double> column;
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
      if (table.cell(m, d)) column.push_back(*table.cell(m, d));
    }
    if (column.size() < 2) {
      throw MetricError("dataset '" + table.datasets[d] + "' has fewer than two values to scale");
    }
    const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    const double min = *lo;
    const double max = *hi;
    if (!(max > min)) throw MetricError("dataset '" + table.datasets[d] + "' is degenerate (max == min)");
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
      if (auto& c = out.cell(m, d)) *c = (*c - min) / (max - min);
    }
  }
  return out;
}

std::vector<double> rank_score(const ResultsTable& normalized, MissingPolicy policy) {
  std::vector<double> scores;
  for (std::size_t m = 0; m < normalized.methods.size(); ++m) {
    std::vector<double> values;
    for (std::size_t d = 0; d < normalized.datasets.size(); ++d) {
      if (const auto& c = normalized.cell(m, d)) {
        values.push_back(*c);
      } else if (policy == MissingPolicy::Zero) {
        values.push_back(0.0);
      }
    }
    if (values.empty()) throw MetricError("method '" + normalized.methods[m] + "' has no values");
    scores.push_back(median(std::move(values)));
  }
  return scores;
}

std::vector<double> average_metric(const ResultsTable& table) {
  std::vector<double> averages;
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t d = 0; d < table.datasets.size(); ++d) {
      if (const auto& c = table.cell(m, d)) {
        total += *c;
        ++count;
      }
    }
    if (count == 0) throw MetricError("method '" + table.methods[m] + "' has no values to average");
    averages.push_back(total / static_cast<double>(count));
  }
  return averages;
}

std::vector<std::size_t> order_methods(std::span<const double> score, bool descending) {
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? score[a] > score[b] : score[a] < score[b];
  });
  return order;
}

}  // namespace dmca
