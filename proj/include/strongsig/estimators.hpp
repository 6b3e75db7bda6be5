#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "strongsig/summaries.hpp"

namespace strongsig {

enum class TauMethod { ITEB, TMLE, CM };

std::string tau_method_name(TauMethod method);

struct TauEstimate {
  double tau2 = 0.0;
  TauMethod method = TauMethod::ITEB;
  int iterations = 0;
  // ITEB only: gene indices retained in S_K / rejected in J_K, and the
  // per-iteration tau2 trace starting at tau2_{S_0}.
  std::vector<std::size_t> surviving_set;
  std::vector<std::size_t> rejected_set;
  std::vector<double> trace;
  // CM only: the moment equation had no root below tau2_max and the boundary
  // value was returned.
  bool at_boundary = false;
};

struct ItebConfig {
  double alpha1 = 0.1;        // BH level
  double alpha2 = 0.01;       // hard p-value cutoff
  double delta = -1.0;        // shrinkage inflation; < 0 means sqrt(8/N)
  int max_iterations = -1;    // < 0 means N

  double resolved_delta(std::size_t n) const;
  int resolved_max_iterations(std::size_t n) const;
};

// Adjusted empirical Bayes pilot: [ mean(xbar^2) - (1+delta) mean(s2) ]_+.
double eb_pilot(std::span<const GeneSummary> summaries, double delta);

// Iterated empirical Bayes estimation of tau2. Starts from the full set,
// iteratively removes genes that are both BH-rejected at alpha1 and have
// p <= alpha2, re-estimating tau2 on the survivors until a fixed point.
TauEstimate iteb(const std::vector<GeneSummary>& summaries,
                 const ItebConfig& config = {});

// Maximum likelihood on the genes with |xbar| inside the central window
// (-delta0, delta0), delta0 the empirical (1 - leave_out) quantile of |xbar|,
// with the window-renormalized likelihood. Alternates per-gene variance
// updates with a 1-D tau2 update, both by golden-section search.
TauEstimate truncated_mle(const std::vector<GeneSummary>& summaries,
                          double leave_out = 0.2, double tol = 1e-6,
                          int max_outer = 200);

// Central matching: fit a quadratic to -log of the binned central density of
// xbar and solve the moment equation for tau2 by bisection.
TauEstimate central_matching(const std::vector<GeneSummary>& summaries,
                             double leave_out = 0.2, int n_bins = 120,
                             double grid_tol = 1e-6);

// The moment-equation inversion step of central matching, exposed so a known
// beta2 can be fed directly (bypassing the histogram fit).
TauEstimate central_matching_from_beta2(
    const std::vector<GeneSummary>& summaries, double beta2, double tau2_max,
    double grid_tol);

// Truncated negative log-likelihood over the given window genes at the given
// per-gene variances; exposed for the objective-descent tests.
double tmle_objective(const std::vector<GeneSummary>& summaries,
                      std::span<const std::size_t> window,
                      std::span<const double> gene_var, double tau2,
                      double delta0);

}  // namespace strongsig
