#include "strongsig/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "strongsig/parallel.hpp"
#include "strongsig/rng.hpp"

namespace strongsig {

namespace {

constexpr int kBetaMaxIter = 200;
constexpr double kBetaEps = 1e-14;
constexpr double kFpMin = 1e-300;

// Lentz continued fraction for the incomplete beta; converges fast for
// x < (a+1)/(a+b+2).
double beta_cf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kBetaMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kBetaEps) return h;
  }
  throw std::domain_error("reg_inc_beta: continued fraction did not converge");
}

void check_params(const NullTailParams& p) {
  if (!(p.sigma2_hat >= 0.0)) {
    throw std::domain_error("null tail: sigma2_hat must be >= 0");
  }
  if (!(p.tau2 >= 0.0)) {
    throw std::domain_error("null tail: tau2 must be >= 0");
  }
  if (!(p.df_sigma > 0.0)) {
    throw std::domain_error("null tail: df_sigma must be > 0");
  }
}

}  // namespace

double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::domain_error("reg_inc_beta: a and b must be positive");
  }
  if (!(x >= 0.0) || !(x <= 1.0)) {
    throw std::domain_error("reg_inc_beta: x must be in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double student_t_sf(double t, double nu) {
  if (!(nu > 0.0)) {
    throw std::domain_error("student_t_sf: nu must be positive");
  }
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (t < 0.0) return 1.0 - student_t_sf(-t, nu);
  const double x = nu / (nu + t * t);
  return 0.5 * reg_inc_beta(nu / 2.0, 0.5, x);
}

double f_sf(double x, double d1, double d2) {
  if (!(x >= 0.0)) {
    throw std::domain_error("f_sf: x must be nonnegative");
  }
  if (!(d1 > 0.0) || !(d2 > 0.0)) {
    throw std::domain_error("f_sf: degrees of freedom must be positive");
  }
  return reg_inc_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x));
}

double effective_df(const NullTailParams& params) {
  check_params(params);
  if (params.sigma2_hat == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double r = params.tau2 / params.sigma2_hat + 1.0;
  return r * r * params.df_sigma;
}

double null_sf(double t, const NullTailParams& params) {
  if (!(t >= 0.0)) {
    throw std::domain_error("null_sf: t must be nonnegative");
  }
  const double df = effective_df(params);
  double p;
  if (df > kDfCap) {
    p = 2.0 * normal_sf(std::sqrt(t));
  } else {
    p = f_sf(t, 1.0, df);
  }
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

double null_quantile(double p, const NullTailParams& params) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::domain_error("null_quantile: p must be in (0, 1]");
  }
  if (p == 1.0) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (null_sf(hi, params) > p) {
    hi *= 2.0;
    if (hi > 1e300) break;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (null_sf(mid, params) > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

// Exceedance counts for one fixed chunk of draws; chunk boundaries are fixed
// so the sum is identical for any thread count.
void oracle_chunk(std::span<const double> ts, double sigma2, double tau2,
                  double df_sigma, std::size_t count, std::uint64_t chunk_seed,
                  std::span<std::size_t> exceed) {
  Rng rng(chunk_seed);
  const double sd = std::sqrt(tau2 + sigma2);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = sd * rng.next_normal();
    const double s2hat = sigma2 * rng.next_scaled_chisq(df_sigma);
    const double stat = x * x / (tau2 + s2hat);
    for (std::size_t j = 0; j < ts.size(); ++j) {
      if (stat > ts[j]) ++exceed[j];
    }
  }
}

std::vector<McTail> oracle_impl(std::span<const double> ts, double sigma2,
                                double tau2, double df_sigma,
                                std::size_t n_draws, std::uint64_t seed,
                                bool parallel) {
  if (n_draws < 10000) {
    throw std::domain_error("null_sf_mc_oracle: need at least 1e4 draws");
  }
  if (!(sigma2 >= 0.0) || !(tau2 >= 0.0) || !(df_sigma > 0.0)) {
    throw std::domain_error("null_sf_mc_oracle: invalid parameters");
  }
  const std::size_t n_chunks =
      (n_draws + kReductionChunk - 1) / kReductionChunk;
  std::vector<std::size_t> counts(n_chunks * ts.size(), 0);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kReductionChunk;
    const std::size_t len = std::min(kReductionChunk, n_draws - begin);
    oracle_chunk(ts, sigma2, tau2, df_sigma, len,
                 splitmix64(seed ^ (0x5851f42d4c957f2dULL *
                                    (static_cast<std::uint64_t>(c) + 1))),
                 std::span<std::size_t>(counts.data() + c * ts.size(),
                                        ts.size()));
  }
  (void)parallel;

  std::vector<McTail> out(ts.size());
  for (std::size_t j = 0; j < ts.size(); ++j) {
    std::size_t total = 0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
      total += counts[c * ts.size() + j];
    }
    const double est = static_cast<double>(total) / n_draws;
    out[j] = {est, std::sqrt(est * (1.0 - est) / n_draws)};
  }
  return out;
}

}  // namespace

McTail null_sf_mc_oracle(double t, double sigma2, double tau2, double df_sigma,
                         std::size_t n_draws, std::uint64_t seed) {
  const double ts[1] = {t};
  return oracle_impl(ts, sigma2, tau2, df_sigma, n_draws, seed, true)[0];
}

std::vector<McTail> null_sf_mc_oracle_multi(std::span<const double> ts,
                                            double sigma2, double tau2,
                                            double df_sigma,
                                            std::size_t n_draws,
                                            std::uint64_t seed) {
  return oracle_impl(ts, sigma2, tau2, df_sigma, n_draws, seed, true);
}

std::vector<McTail> null_sf_mc_oracle_multi_serial(std::span<const double> ts,
                                                   double sigma2, double tau2,
                                                   double df_sigma,
                                                   std::size_t n_draws,
                                                   std::uint64_t seed) {
  return oracle_impl(ts, sigma2, tau2, df_sigma, n_draws, seed, false);
}

}  // namespace strongsig
