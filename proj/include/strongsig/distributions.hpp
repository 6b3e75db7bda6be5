#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace strongsig {

// Parameters of the null tail of the squared Welch statistic
// xbar^2 / (tau2 + sigma2_hat), approximated by F(1, df) with the
// Satterthwaite effective degrees of freedom.
struct NullTailParams {
  double sigma2_hat;  // variance estimate of the effect, >= 0
  double tau2;        // null spreading variance, >= 0
  double df_sigma;    // degrees of freedom of sigma2_hat, > 0, real-valued
};

// Regularized incomplete beta function I_x(a, b).
// Continued fraction with the symmetry switch at x > (a+1)/(a+b+2).
double reg_inc_beta(double a, double b, double x);

// Upper tail of the standard normal.
double normal_sf(double z);

// Upper tail of Student's t with nu (> 0, real) degrees of freedom.
double student_t_sf(double t, double nu);

// Upper tail of the F distribution with (d1, d2) degrees of freedom.
double f_sf(double x, double d1, double d2);

// Effective degrees of freedom (tau2/sigma2_hat + 1)^2 * df_sigma.
// Returns +inf when sigma2_hat == 0 and tau2 > 0.
double effective_df(const NullTailParams& params);

// Above this effective df the F(1, df) tail is replaced by the normal limit
// 2 * normal_sf(sqrt(t)); the continued fraction degrades beyond it.
inline constexpr double kDfCap = 1e7;

// Null tail probability of the squared Welch statistic at t >= 0.
double null_sf(double t, const NullTailParams& params);

// Inverse of null_sf: the t >= 0 with null_sf(t) == p, by bracketing
// bisection. p in (0, 1].
double null_quantile(double p, const NullTailParams& params);

struct McTail {
  double estimate;
  double std_error;
};

// Monte-Carlo estimate of the exact tail of xbar^2 / (tau2 + s2hat) with
// xbar ~ N(0, tau2 + sigma2) and s2hat ~ sigma2 * chi^2_{df_sigma}/df_sigma.
// Deterministic given the seed, independent of thread count.
McTail null_sf_mc_oracle(double t, double sigma2, double tau2, double df_sigma,
                         std::size_t n_draws, std::uint64_t seed);

// Same draws evaluated at several thresholds at once.
std::vector<McTail> null_sf_mc_oracle_multi(std::span<const double> ts,
                                            double sigma2, double tau2,
                                            double df_sigma,
                                            std::size_t n_draws,
                                            std::uint64_t seed);

// Serial reference for the parallel oracle; identical output by construction.
std::vector<McTail> null_sf_mc_oracle_multi_serial(std::span<const double> ts,
                                                   double sigma2, double tau2,
                                                   double df_sigma,
                                                   std::size_t n_draws,
                                                   std::uint64_t seed);

}  // namespace strongsig
