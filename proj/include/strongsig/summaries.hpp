#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace strongsig {

enum class Group { experiment, control };

// N x M matrix of replicate measurements with per-column group labels and
// optional batch labels used for pairing.
struct ReplicateMatrix {
  std::vector<std::string> gene_ids;      // N
  std::vector<std::string> sample_names;  // M
  std::vector<Group> groups;              // M
  std::vector<std::string> batches;       // M, empty strings when unset
  std::vector<double> values;             // row-major N x M

  std::size_t n_genes() const { return gene_ids.size(); }
  std::size_t n_cols() const { return groups.size(); }

  double at(std::size_t gene, std::size_t col) const {
    return values[gene * n_cols() + col];
  }
  double& at(std::size_t gene, std::size_t col) {
    return values[gene * n_cols() + col];
  }
};

// Per-gene sufficient statistics: effect estimate, its variance estimate,
// degrees of freedom of the variance estimate.
struct GeneSummary {
  std::string id;
  double xbar;
  double s2;        // variance estimate of xbar, >= 0
  double df_sigma;  // > 0, real-valued
};

// Paired design: xbar is the mean per-pair difference, s2 = var(diff)/m,
// df = m - 1. Columns pair off 1:1 via batch labels.
std::vector<GeneSummary> summarize_paired(const ReplicateMatrix& matrix);

// One-sample summary of precomputed per-pair difference columns (e.g. the
// output of paired_log_diff): xbar is the row mean, s2 = var(row)/m,
// df = m - 1.
std::vector<GeneSummary> summarize_one_sample(const ReplicateMatrix& matrix);

// Pooled two-sample design: s2 = pooled within-group variance * (1/m1 + 1/m0),
// df = m1 + m0 - 2.
std::vector<GeneSummary> summarize_pooled(const ReplicateMatrix& matrix);

// Unequal-variance two-sample design with Satterthwaite df.
std::vector<GeneSummary> summarize_welch(const ReplicateMatrix& matrix);

// Replace each column's empirical distribution by the mean order-statistic
// profile, preserving within-column ranks. Ties get the average of the tied
// positions' target values. Idempotent.
ReplicateMatrix quantile_normalize(const ReplicateMatrix& matrix);

// One output column per batch pair: log(experiment) - log(control).
// Requires strictly positive values.
ReplicateMatrix paired_log_diff(const ReplicateMatrix& matrix);

}  // namespace strongsig
