#include "strongsig/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "strongsig/errors.hpp"

namespace strongsig {

namespace {

struct GroupCols {
  std::vector<std::size_t> experiment;
  std::vector<std::size_t> control;
};

GroupCols split_groups(const ReplicateMatrix& m) {
  GroupCols g;
  for (std::size_t j = 0; j < m.n_cols(); ++j) {
    (m.groups[j] == Group::experiment ? g.experiment : g.control).push_back(j);
  }
  return g;
}

// (experiment, control) column pairs keyed by batch label.
std::vector<std::pair<std::size_t, std::size_t>> pair_columns(
    const ReplicateMatrix& m) {
  std::map<std::string, std::pair<int, int>> by_batch;  // -1 = unset
  for (std::size_t j = 0; j < m.n_cols(); ++j) {
    const std::string& b = m.batches.empty() ? std::string() : m.batches[j];
    if (b.empty()) {
      throw design_error("paired design: column '" + m.sample_names[j] +
                         "' has no batch/pairing label");
    }
    auto [it, inserted] = by_batch.try_emplace(b, -1, -1);
    int& slot = m.groups[j] == Group::experiment ? it->second.first
                                                 : it->second.second;
    if (slot != -1) {
      throw design_error("paired design: duplicate " +
                         std::string(m.groups[j] == Group::experiment
                                         ? "experiment"
                                         : "control") +
                         " column in batch '" + b + "'");
    }
    slot = static_cast<int>(j);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& [batch, cols] : by_batch) {
    if (cols.first < 0 || cols.second < 0) {
      throw design_error("paired design: batch '" + batch +
                         "' is missing its experiment or control column");
    }
    pairs.emplace_back(cols.first, cols.second);
  }
  if (pairs.size() < 2) {
    throw design_error("paired design: need at least 2 pairs");
  }
  return pairs;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

// Unbiased sample variance; 0 for a single element.
double sample_var(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (v.size() - 1);
}

}  // namespace

std::vector<GeneSummary> summarize_paired(const ReplicateMatrix& matrix) {
  const auto pairs = pair_columns(matrix);
  const double m1 = static_cast<double>(pairs.size());
  std::vector<GeneSummary> out;
  out.reserve(matrix.n_genes());
  std::vector<double> diffs(pairs.size());
  for (std::size_t i = 0; i < matrix.n_genes(); ++i) {
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      diffs[p] = matrix.at(i, pairs[p].first) - matrix.at(i, pairs[p].second);
    }
    const double xbar = mean_of(diffs);
    const double s2 = sample_var(diffs, xbar) / m1;
    out.push_back({matrix.gene_ids[i], xbar, s2, m1 - 1.0});
  }
  return out;
}

std::vector<GeneSummary> summarize_one_sample(const ReplicateMatrix& matrix) {
  const std::size_t m = matrix.n_cols();
  if (m < 2) {
    throw design_error("one-sample summary: need >= 2 columns");
  }
  std::vector<GeneSummary> out;
  out.reserve(matrix.n_genes());
  std::vector<double> row(m);
  for (std::size_t i = 0; i < matrix.n_genes(); ++i) {
    for (std::size_t j = 0; j < m; ++j) row[j] = matrix.at(i, j);
    const double xbar = mean_of(row);
    const double s2 = sample_var(row, xbar) / static_cast<double>(m);
    out.push_back({matrix.gene_ids[i], xbar, s2, static_cast<double>(m) - 1.0});
  }
  return out;
}

std::vector<GeneSummary> summarize_pooled(const ReplicateMatrix& matrix) {
  const auto g = split_groups(matrix);
  const double m1 = static_cast<double>(g.experiment.size());
  const double m0 = static_cast<double>(g.control.size());
  if (g.experiment.size() < 2 || g.control.size() < 2) {
    throw design_error("pooled design: each group needs >= 2 replicates");
  }
  std::vector<GeneSummary> out;
  out.reserve(matrix.n_genes());
  std::vector<double> x(g.experiment.size()), z(g.control.size());
  for (std::size_t i = 0; i < matrix.n_genes(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = matrix.at(i, g.experiment[j]);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = matrix.at(i, g.control[j]);
    const double mx = mean_of(x);
    const double mz = mean_of(z);
    const double pooled = ((m1 - 1.0) * sample_var(x, mx) +
                           (m0 - 1.0) * sample_var(z, mz)) /
                          (m1 + m0 - 2.0);
    out.push_back({matrix.gene_ids[i], mx - mz, pooled * (1.0 / m1 + 1.0 / m0),
                   m1 + m0 - 2.0});
  }
  return out;
}

std::vector<GeneSummary> summarize_welch(const ReplicateMatrix& matrix) {
  const auto g = split_groups(matrix);
  const double m1 = static_cast<double>(g.experiment.size());
  const double m0 = static_cast<double>(g.control.size());
  if (g.experiment.size() < 2 || g.control.size() < 2) {
    throw design_error("welch design: each group needs >= 2 replicates");
  }
  std::vector<GeneSummary> out;
  out.reserve(matrix.n_genes());
  std::vector<double> x(g.experiment.size()), z(g.control.size());
  for (std::size_t i = 0; i < matrix.n_genes(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = matrix.at(i, g.experiment[j]);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = matrix.at(i, g.control[j]);
    const double mx = mean_of(x);
    const double mz = mean_of(z);
    double ssx = 0.0, ssz = 0.0;  // sums of squared deviations
    for (double v : x) ssx += (v - mx) * (v - mx);
    for (double v : z) ssz += (v - mz) * (v - mz);
    const double s2 = ssx / (m1 * (m1 - 1.0)) + ssz / (m0 * (m0 - 1.0));
    const double ax = ssx / m1;
    const double az = ssz / m0;
    double df;
    if (ax + az == 0.0) {
      df = m1 + m0 - 2.0;  // degenerate: both group variances zero
    } else {
      df = (ax + az) * (ax + az) /
           (ax * ax / (m1 - 1.0) + az * az / (m0 - 1.0));
    }
    out.push_back({matrix.gene_ids[i], mx - mz, s2, df});
  }
  return out;
}

ReplicateMatrix quantile_normalize(const ReplicateMatrix& matrix) {
  const std::size_t n = matrix.n_genes();
  const std::size_t m = matrix.n_cols();
  // Mean order-statistic profile across columns.
  std::vector<double> profile(n, 0.0);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = matrix.at(i, j);
    std::sort(col.begin(), col.end());
    for (std::size_t i = 0; i < n; ++i) profile[i] += col[i];
  }
  for (double& v : profile) v /= static_cast<double>(m);

  ReplicateMatrix out = matrix;
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < m; ++j) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return matrix.at(a, j) < matrix.at(b, j);
    });
    // Runs of tied values share the mean of their target positions.
    std::size_t r = 0;
    while (r < n) {
      std::size_t r_end = r + 1;
      while (r_end < n &&
             matrix.at(order[r_end], j) == matrix.at(order[r], j)) {
        ++r_end;
      }
      double target = 0.0;
      for (std::size_t k = r; k < r_end; ++k) target += profile[k];
      target /= static_cast<double>(r_end - r);
      for (std::size_t k = r; k < r_end; ++k) out.at(order[k], j) = target;
      r = r_end;
    }
  }
  return out;
}

ReplicateMatrix paired_log_diff(const ReplicateMatrix& matrix) {
  const auto pairs = [&] {
    // Reuse the 1:1 pairing check but allow a single pair here.
    std::map<std::string, std::pair<int, int>> by_batch;
    for (std::size_t j = 0; j < matrix.n_cols(); ++j) {
      const std::string& b =
          matrix.batches.empty() ? std::string() : matrix.batches[j];
      if (b.empty()) {
        throw design_error("paired_log_diff: column '" +
                           matrix.sample_names[j] + "' has no pairing label");
      }
      auto [it, inserted] = by_batch.try_emplace(b, -1, -1);
      int& slot = matrix.groups[j] == Group::experiment ? it->second.first
                                                        : it->second.second;
      if (slot != -1) {
        throw design_error("paired_log_diff: duplicate column in batch '" + b +
                           "'");
      }
      slot = static_cast<int>(j);
    }
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& [batch, cols] : by_batch) {
      if (cols.first < 0 || cols.second < 0) {
        throw design_error("paired_log_diff: batch '" + batch +
                           "' is not a complete pair");
      }
      out.emplace_back(cols.first, cols.second);
    }
    return out;
  }();

  ReplicateMatrix out;
  out.gene_ids = matrix.gene_ids;
  for (const auto& [e, c] : pairs) {
    const std::string& b = matrix.batches[e];
    out.sample_names.push_back(b);
    out.groups.push_back(Group::experiment);
    out.batches.push_back(b);
  }
  out.values.resize(matrix.n_genes() * pairs.size());
  for (std::size_t i = 0; i < matrix.n_genes(); ++i) {
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const double e = matrix.at(i, pairs[p].first);
      const double c = matrix.at(i, pairs[p].second);
      if (!(e > 0.0) || !(c > 0.0)) {
        throw design_error("paired_log_diff: nonpositive measurement for gene '" +
                           matrix.gene_ids[i] + "'");
      }
      out.values[i * pairs.size() + p] = std::log(e) - std::log(c);
    }
  }
  return out;
}

}  // namespace strongsig
