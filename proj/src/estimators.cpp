#include "strongsig/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "strongsig/distributions.hpp"
#include "strongsig/errors.hpp"
#include "strongsig/testing.hpp"

namespace strongsig {

std::string tau_method_name(TauMethod method) {
  switch (method) {
    case TauMethod::ITEB: return "iteb";
    case TauMethod::TMLE: return "tmle";
    case TauMethod::CM: return "cm";
  }
  return "?";
}

double ItebConfig::resolved_delta(std::size_t n) const {
  return delta < 0.0 ? std::sqrt(8.0 / static_cast<double>(n)) : delta;
}

int ItebConfig::resolved_max_iterations(std::size_t n) const {
  return max_iterations < 0 ? static_cast<int>(n) : max_iterations;
}

double eb_pilot(std::span<const GeneSummary> summaries, double delta) {
  if (summaries.empty()) {
    throw estimator_error("eb_pilot: empty summary set");
  }
  double sum_x2 = 0.0, sum_s2 = 0.0;
  for (const GeneSummary& g : summaries) {
    sum_x2 += g.xbar * g.xbar;
    sum_s2 += g.s2;
  }
  const double n = static_cast<double>(summaries.size());
  return std::max(0.0, (sum_x2 - (1.0 + delta) * sum_s2) / n);
}

namespace {

double pilot_over(const std::vector<GeneSummary>& summaries,
                  const std::vector<char>& in_set, double delta) {
  double sum_x2 = 0.0, sum_s2 = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    if (!in_set[i]) continue;
    sum_x2 += summaries[i].xbar * summaries[i].xbar;
    sum_s2 += summaries[i].s2;
    ++count;
  }
  if (count == 0) {
    throw estimator_error("iteb: all hypotheses removed");
  }
  return std::max(0.0,
                  (sum_x2 - (1.0 + delta) * sum_s2) / static_cast<double>(count));
}

}  // namespace

TauEstimate iteb(const std::vector<GeneSummary>& summaries,
                 const ItebConfig& config) {
  const std::size_t n = summaries.size();
  if (n < 2) {
    throw estimator_error("iteb: need at least 2 hypotheses");
  }
  if (!(config.alpha1 > 0.0 && config.alpha1 < 1.0) ||
      !(config.alpha2 > 0.0 && config.alpha2 < 1.0)) {
    throw estimator_error("iteb: alpha levels must be in (0, 1)");
  }
  const double delta = config.resolved_delta(n);
  const int max_iter = config.resolved_max_iterations(n);

  TauEstimate est;
  est.method = TauMethod::ITEB;
  std::vector<char> in_set(n, 1);
  double tau2 = pilot_over(summaries, in_set, delta);
  est.trace.push_back(tau2);

  std::vector<char> final_reject(n, 0);
  int k = 0;
  while (k < max_iter) {
    ++k;
    const std::vector<double> p = pvalues(summaries, tau2);
    std::vector<char> reject(n, 0);
    for (std::size_t i : bh(p, config.alpha1)) {
      if (p[i] <= config.alpha2) reject[i] = 1;
    }
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (reject[i] && in_set[i]) {
        in_set[i] = 0;
        changed = true;
      }
    }
    final_reject = std::move(reject);
    if (!changed) break;  // S_k == S_{k-1}
    tau2 = pilot_over(summaries, in_set, delta);
    est.trace.push_back(tau2);
  }

  est.tau2 = tau2;
  est.iterations = k;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_set[i]) est.surviving_set.push_back(i);
    if (final_reject[i]) est.rejected_set.push_back(i);
  }
  return est;
}

namespace {

// Golden-section minimum of f on [lo, hi].
template <typename F>
double golden_min(F&& f, double lo, double hi, double rel_tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > rel_tol * (std::fabs(a) + std::fabs(b) + 1e-12)) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Window mass of N(0, tau2 + v) on (-delta0, delta0).
double window_mass(double tau2, double v, double delta0) {
  return std::erf(delta0 / std::sqrt(2.0 * (tau2 + v)));
}

double tmle_gene_term(const GeneSummary& g, double v, double tau2,
                      double delta0) {
  const double total = tau2 + v;
  return std::log(window_mass(tau2, v, delta0)) + 0.5 * std::log(total) +
         0.5 * g.df_sigma * std::log(v) + g.df_sigma * g.s2 / (2.0 * v) +
         g.xbar * g.xbar / (2.0 * total);
}

double abs_quantile(const std::vector<GeneSummary>& summaries, double q) {
  std::vector<double> a;
  a.reserve(summaries.size());
  for (const GeneSummary& g : summaries) a.push_back(std::fabs(g.xbar));
  std::sort(a.begin(), a.end());
  const double pos = q * static_cast<double>(a.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, a.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return a[lo] * (1.0 - frac) + a[hi] * frac;
}

double tau2_search_cap(const std::vector<GeneSummary>& summaries) {
  double max_s2 = 0.0;
  for (const GeneSummary& g : summaries) max_s2 = std::max(max_s2, g.s2);
  return 3.0 * eb_pilot(summaries, 0.0) + 10.0 * max_s2;
}

}  // namespace

double tmle_objective(const std::vector<GeneSummary>& summaries,
                      std::span<const std::size_t> window,
                      std::span<const double> gene_var, double tau2,
                      double delta0) {
  double total = 0.0;
  for (std::size_t w = 0; w < window.size(); ++w) {
    total += tmle_gene_term(summaries[window[w]], gene_var[w], tau2, delta0);
  }
  return total;
}

TauEstimate truncated_mle(const std::vector<GeneSummary>& summaries,
                          double leave_out, double tol, int max_outer) {
  if (!(leave_out > 0.0 && leave_out < 1.0)) {
    throw estimator_error("truncated_mle: leave_out must be in (0, 1)");
  }
  const double delta0 = abs_quantile(summaries, 1.0 - leave_out);
  std::vector<std::size_t> window;
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    if (std::fabs(summaries[i].xbar) < delta0) window.push_back(i);
  }
  if (window.size() < 10) {
    throw estimator_error("truncated_mle: truncation window has fewer than 10 genes");
  }

  const double tau2_cap = std::max(1.0, tau2_search_cap(summaries));
  std::vector<double> v(window.size());
  for (std::size_t w = 0; w < window.size(); ++w) {
    v[w] = std::max(summaries[window[w]].s2, 1e-12);
  }

  double tau2 = 0.0;
  int outer = 0;
  for (; outer < max_outer; ++outer) {
    // Per-gene variance step; genes are independent.
    const std::ptrdiff_t nw = static_cast<std::ptrdiff_t>(window.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t w = 0; w < nw; ++w) {
      const GeneSummary& g = summaries[window[w]];
      const double s2 = std::max(g.s2, 1e-12);
      const double log_lo = std::log(1e-6 * s2);
      const double log_hi = std::log(1e6 * s2);
      const double best_log = golden_min(
          [&](double lv) { return tmle_gene_term(g, std::exp(lv), tau2, delta0); },
          log_lo, log_hi, 1e-8);
      v[w] = std::exp(best_log);
    }

    // tau2 step on the summed tau2-dependent terms.
    const double tau2_new = golden_min(
        [&](double t2) {
          double total = 0.0;
          for (std::size_t w = 0; w < window.size(); ++w) {
            const double tv = t2 + v[w];
            total += std::log(window_mass(t2, v[w], delta0)) +
                     0.5 * std::log(tv) +
                     summaries[window[w]].xbar * summaries[window[w]].xbar /
                         (2.0 * tv);
          }
          return total;
        },
        0.0, tau2_cap, 1e-8);

    const double change = std::fabs(tau2_new - tau2);
    tau2 = tau2_new;
    if (change <= tol * (tau2 + 0.1)) {
      ++outer;
      break;
    }
  }

  if (!std::isfinite(tau2)) {
    throw estimator_error("truncated_mle: non-finite objective");
  }
  TauEstimate est;
  est.method = TauMethod::TMLE;
  est.tau2 = std::max(0.0, tau2);
  est.iterations = outer;
  return est;
}

TauEstimate central_matching_from_beta2(
    const std::vector<GeneSummary>& summaries, double beta2, double tau2_max,
    double grid_tol) {
  if (!(beta2 > 0.0)) {
    throw estimator_error(
        "central matching failed: fitted quadratic coefficient is not positive");
  }
  // Left side of the moment equation; strictly decreasing in tau2.
  const auto lhs = [&](double tau2) {
    double num = 0.0, den = 0.0;
    for (const GeneSummary& g : summaries) {
      const double tv = g.s2 + tau2;
      num += 1.0 / (tv * std::sqrt(tv));
      den += 1.0 / std::sqrt(tv);
    }
    return num / (2.0 * den);
  };

  TauEstimate est;
  est.method = TauMethod::CM;
  if (lhs(0.0) <= beta2) {
    est.tau2 = 0.0;  // root at or below the boundary
    return est;
  }
  if (lhs(tau2_max) > beta2) {
    est.tau2 = tau2_max;
    est.at_boundary = true;
    return est;
  }
  double lo = 0.0, hi = tau2_max;
  int iters = 0;
  while (hi - lo > grid_tol && iters < 500) {
    const double mid = 0.5 * (lo + hi);
    (lhs(mid) > beta2 ? lo : hi) = mid;
    ++iters;
  }
  est.tau2 = std::max(0.0, 0.5 * (lo + hi));
  est.iterations = iters;
  return est;
}

TauEstimate central_matching(const std::vector<GeneSummary>& summaries,
                             double leave_out, int n_bins, double grid_tol) {
  if (!(leave_out > 0.0 && leave_out < 1.0)) {
    throw estimator_error("central_matching: leave_out must be in (0, 1)");
  }
  if (n_bins < 3) {
    throw estimator_error("central_matching: need at least 3 bins");
  }
  const double delta0 = abs_quantile(summaries, 1.0 - leave_out);
  if (!(delta0 > 0.0)) {
    throw estimator_error("central matching failed: degenerate central window");
  }
  const double width = 2.0 * delta0 / n_bins;
  std::vector<std::size_t> counts(n_bins, 0);
  std::size_t n_window = 0;
  for (const GeneSummary& g : summaries) {
    if (std::fabs(g.xbar) >= delta0) continue;
    auto b = static_cast<std::size_t>((g.xbar + delta0) / width);
    if (b >= static_cast<std::size_t>(n_bins)) b = n_bins - 1;
    ++counts[b];
    ++n_window;
  }

  // Least-squares quadratic fit of -log(count density) at nonempty bin centers.
  double sx[5] = {0, 0, 0, 0, 0};
  double sy[3] = {0, 0, 0};
  int populated = 0;
  for (int b = 0; b < n_bins; ++b) {
    if (counts[b] == 0) continue;
    ++populated;
    const double c = -delta0 + (b + 0.5) * width;
    const double y =
        -std::log(static_cast<double>(counts[b]) / (n_window * width));
    double cp = 1.0;
    for (int k = 0; k < 5; ++k) {
      sx[k] += cp;
      if (k < 3) sy[k] += y * cp;
      cp *= c;
    }
  }
  if (populated < 10) {
    throw estimator_error("central matching failed: fewer than 10 populated bins");
  }
  // Solve the 3x3 normal equations by Gaussian elimination with pivoting.
  double m[3][4] = {{sx[0], sx[1], sx[2], sy[0]},
                    {sx[1], sx[2], sx[3], sy[1]},
                    {sx[2], sx[3], sx[4], sy[2]}};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
    }
    std::swap(m[col], m[piv]);
    if (m[col][col] == 0.0) {
      throw estimator_error("central matching failed: singular design matrix");
    }
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  const double beta2 = m[2][3] / m[2][2];

  const double tau2_max = std::max(1.0, tau2_search_cap(summaries));
  TauEstimate est = central_matching_from_beta2(summaries, beta2, tau2_max,
                                                grid_tol);
  return est;
}

}  // namespace strongsig
