#include "strongsig/testing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "strongsig/distributions.hpp"

namespace strongsig {

std::string procedure_name(Procedure p) {
  switch (p) {
    case Procedure::BH: return "bh";
    case Procedure::BONFERRONI: return "bonferroni";
    case Procedure::DUAL: return "dual";
  }
  return "?";
}

namespace {

double gene_pvalue(const GeneSummary& g, double tau2) {
  if (g.xbar == 0.0) return 1.0;
  const double denom = tau2 + g.s2;
  if (denom == 0.0) {
    // Zero-variance gene with a nonzero effect: maximally significant.
    return std::numeric_limits<double>::min();
  }
  return null_sf(g.xbar * g.xbar / denom, {g.s2, tau2, g.df_sigma});
}

}  // namespace

std::vector<double> pvalues_serial(std::span<const GeneSummary> summaries,
                                   double tau2) {
  if (!(tau2 >= 0.0)) {
    throw std::domain_error("pvalues: tau2 must be >= 0");
  }
  std::vector<double> out(summaries.size());
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    out[i] = gene_pvalue(summaries[i], tau2);
  }
  return out;
}

std::vector<double> pvalues(std::span<const GeneSummary> summaries,
                            double tau2) {
  if (!(tau2 >= 0.0)) {
    throw std::domain_error("pvalues: tau2 must be >= 0");
  }
  std::vector<double> out(summaries.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(summaries.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = gene_pvalue(summaries[i], tau2);
  }
  return out;
}

std::vector<std::size_t> bh(std::span<const double> pvals, double alpha) {
  const std::size_t n = pvals.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pvals[a] < pvals[b];
  });
  std::size_t cut = 0;  // number of rejections
  for (std::size_t i = n; i-- > 0;) {
    if (pvals[order[i]] <= (static_cast<double>(i + 1) / n) * alpha) {
      cut = i + 1;
      break;
    }
  }
  if (cut == 0) return {};
  const double p_star = pvals[order[cut - 1]];
  std::vector<std::size_t> rejected;
  for (std::size_t i = 0; i < n; ++i) {
    if (pvals[i] <= p_star) rejected.push_back(i);
  }
  return rejected;
}

std::vector<std::size_t> dual_threshold(std::span<const double> pvals,
                                        double alpha1, double alpha2) {
  std::vector<std::size_t> out;
  for (std::size_t i : bh(pvals, alpha1)) {
    if (pvals[i] <= alpha2) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> bonferroni(std::span<const double> pvals,
                                    double alpha) {
  std::vector<std::size_t> out;
  const double cut = alpha / static_cast<double>(pvals.size());
  for (std::size_t i = 0; i < pvals.size(); ++i) {
    if (pvals[i] <= cut) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> oracle_reject(std::span<const GeneSummary> summaries,
                                       double true_tau2, double alpha) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(summaries.size());
  std::vector<char> flag(summaries.size(), 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const GeneSummary& g = summaries[i];
    const double threshold =
        null_quantile(alpha, {g.s2, true_tau2, g.df_sigma}) *
        (g.s2 + true_tau2);
    flag[i] = g.xbar * g.xbar > threshold ? 1 : 0;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    if (flag[i]) out.push_back(i);
  }
  return out;
}

TestOutcome run_procedure(std::span<const GeneSummary> summaries, double tau2,
                          Procedure procedure, double alpha1, double alpha2) {
  TestOutcome out;
  out.procedure = procedure;
  out.alpha1 = alpha1;
  out.alpha2 = alpha2;
  out.tau2_used = tau2;
  out.pvalues = pvalues(summaries, tau2);
  out.rejected.assign(summaries.size(), 0);
  std::vector<std::size_t> rej;
  switch (procedure) {
    case Procedure::BH: rej = bh(out.pvalues, alpha1); break;
    case Procedure::BONFERRONI: rej = bonferroni(out.pvalues, alpha1); break;
    case Procedure::DUAL: rej = dual_threshold(out.pvalues, alpha1, alpha2); break;
  }
  for (std::size_t i : rej) out.rejected[i] = 1;
  return out;
}

}  // namespace strongsig
