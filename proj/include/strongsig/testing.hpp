#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "strongsig/summaries.hpp"

namespace strongsig {

enum class Procedure { BH, BONFERRONI, DUAL };

std::string procedure_name(Procedure p);

struct TestOutcome {
  std::vector<double> pvalues;  // per gene, in (0, 1]
  std::vector<char> rejected;   // per gene
  Procedure procedure = Procedure::BH;
  double alpha1 = 0.1;
  double alpha2 = 0.01;  // DUAL only
  double tau2_used = 0.0;
};

// Two-sided null tail probabilities p_i = null_sf(xbar_i^2/(tau2 + s2_i))
// with each gene's df. OpenMP over genes; bit-identical to the serial
// reference.
std::vector<double> pvalues(std::span<const GeneSummary> summaries,
                            double tau2);
std::vector<double> pvalues_serial(std::span<const GeneSummary> summaries,
                                   double tau2);

// Benjamini-Hochberg step-up at level alpha. Returns rejected indices in
// ascending index order.
std::vector<std::size_t> bh(std::span<const double> pvals, double alpha);

// bh(alpha1) intersected with {p_i <= alpha2}.
std::vector<std::size_t> dual_threshold(std::span<const double> pvals,
                                        double alpha1, double alpha2);

// Reject p_i <= alpha / N.
std::vector<std::size_t> bonferroni(std::span<const double> pvals,
                                    double alpha);

// Fixed-level oracle rule knowing the true tau2:
// reject when xbar_i^2 > null_quantile(alpha) * (s2_i + tau2).
std::vector<std::size_t> oracle_reject(std::span<const GeneSummary> summaries,
                                       double true_tau2, double alpha);

TestOutcome run_procedure(std::span<const GeneSummary> summaries, double tau2,
                          Procedure procedure, double alpha1, double alpha2);

}  // namespace strongsig
