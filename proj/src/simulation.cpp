#include "strongsig/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "strongsig/errors.hpp"
#include "strongsig/io.hpp"
#include "strongsig/rng.hpp"
#include "strongsig/testing.hpp"

namespace strongsig {

namespace {

std::uint64_t rep_seed(std::uint64_t seed, int rep_index) {
  return splitmix64(seed ^ (0xd1b54a32d192ed03ULL *
                            (static_cast<std::uint64_t>(rep_index) + 1)));
}

std::vector<double> draw_variances(const ScenarioConfig& config, Rng& rng) {
  std::vector<double> s2(config.n_genes);
  switch (config.variance.kind) {
    case VarianceSource::Kind::chisq1:
      for (double& v : s2) {
        const double z = rng.next_normal();
        v = z * z;
      }
      break;
    case VarianceSource::Kind::constant:
      std::fill(s2.begin(), s2.end(), config.variance.value);
      break;
    case VarianceSource::Kind::empirical_file: {
      const std::vector<double> pool = read_variance_file(config.variance.path);
      if (pool.empty()) {
        throw input_error("empirical variance file is empty: " +
                          config.variance.path);
      }
      for (double& v : s2) {
        v = pool[rng.next_u64() % pool.size()];
      }
      break;
    }
  }
  // Rescale to mean 1.
  const double mean =
      std::accumulate(s2.begin(), s2.end(), 0.0) / static_cast<double>(s2.size());
  if (mean > 0.0) {
    for (double& v : s2) v /= mean;
  }
  return s2;
}

double draw_noise(Rng& rng, NoiseFamily family, double sd) {
  return family == NoiseFamily::gaussian ? sd * rng.next_normal()
                                         : rng.next_laplace(sd);
}

}  // namespace

ReplicateMatrix gen_scenario(const ScenarioConfig& config, int rep_index,
                             ScenarioTruth* truth) {
  if (!(config.gamma >= 0.0 && config.gamma < 1.0)) {
    throw input_error("gen_scenario: gamma must be in [0, 1)");
  }
  if (!(config.tau >= 0.0)) {
    throw input_error("gen_scenario: tau must be >= 0");
  }
  Rng rng(rep_seed(config.seed, rep_index));
  const std::size_t n = config.n_genes;

  const std::vector<double> sigma2 = draw_variances(config, rng);

  // floor(gamma * N) non-nulls, first half of them positive.
  const std::size_t n_nonnull =
      static_cast<std::size_t>(config.gamma * static_cast<double>(n));
  const std::size_t n_pos = (n_nonnull + 1) / 2;
  const double u_hi = std::max(3.0, 10.0 * config.tau);
  std::vector<double> mu(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_nonnull) {
      const double mag = 1.0 + (u_hi - 1.0) * rng.next_uniform();
      mu[i] = i < n_pos ? mag : -mag;
    } else {
      mu[i] = config.tau * rng.next_normal();
    }
  }

  ReplicateMatrix out;
  out.gene_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.gene_ids[i] = "g" + std::to_string(i);
  }
  const bool paired = config.design == Design::paired;
  const int m1 = config.m1;
  const int m0 = paired ? config.m1 : config.m0;
  for (int j = 0; j < m1; ++j) {
    out.sample_names.push_back("e" + std::to_string(j));
    out.groups.push_back(Group::experiment);
    out.batches.push_back(paired ? "p" + std::to_string(j) : "");
  }
  for (int j = 0; j < m0; ++j) {
    out.sample_names.push_back("c" + std::to_string(j));
    out.groups.push_back(Group::control);
    out.batches.push_back(paired ? "p" + std::to_string(j) : "");
  }
  const std::size_t cols = out.groups.size();
  out.values.resize(n * cols);
  for (std::size_t i = 0; i < n; ++i) {
    // Paired convention: sigma2 is the variance of a per-pair difference
    // (the one-sample observation), so each column carries half of it.
    const double sd = std::sqrt(paired ? 0.5 * sigma2[i] : sigma2[i]);
    for (std::size_t j = 0; j < cols; ++j) {
      const double mean = out.groups[j] == Group::experiment ? mu[i] : 0.0;
      out.values[i * cols + j] = mean + draw_noise(rng, config.noise, sd);
    }
  }

  if (truth) {
    truth->is_nonnull.assign(n, 0);
    for (std::size_t i = 0; i < n_nonnull; ++i) truth->is_nonnull[i] = 1;
    truth->mu = std::move(mu);
    truth->sigma2 = sigma2;
  }
  return out;
}

std::vector<GeneSummary> summarize_for_design(const ReplicateMatrix& matrix,
                                              Design design) {
  switch (design) {
    case Design::two_sample_pooled: return summarize_pooled(matrix);
    case Design::paired: return summarize_paired(matrix);
    case Design::welch: return summarize_welch(matrix);
  }
  throw std::logic_error("unknown design");
}

double fdp_of(std::span<const std::size_t> rejected,
              std::span<const char> is_nonnull) {
  if (rejected.empty()) return 0.0;
  std::size_t false_pos = 0;
  for (std::size_t i : rejected) {
    if (!is_nonnull[i]) ++false_pos;
  }
  return static_cast<double>(false_pos) / static_cast<double>(rejected.size());
}

std::optional<double> sensitivity_of(std::span<const std::size_t> rejected,
                                     std::span<const char> is_nonnull) {
  std::size_t total = 0;
  for (char c : is_nonnull) total += c != 0;
  if (total == 0) return std::nullopt;
  std::size_t hit = 0;
  for (std::size_t i : rejected) {
    if (is_nonnull[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

RocCurve roc_experiment(const ScenarioConfig& config, RocMethod method) {
  if (config.reps < 1) {
    throw input_error("roc_experiment: need reps >= 1");
  }
  const std::size_t n = config.n_genes;
  std::vector<double> sum_fdp(n, 0.0), sum_sens(n, 0.0);

  // Reps are independent; accumulate into per-rep buffers and sum in rep
  // order so the result does not depend on scheduling.
  std::vector<std::vector<double>> rep_fdp(config.reps), rep_sens(config.reps);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int rep = 0; rep < config.reps; ++rep) {
    ScenarioTruth truth;
    const ReplicateMatrix matrix = gen_scenario(config, rep, &truth);
    const std::vector<GeneSummary> summaries =
        summarize_for_design(matrix, config.design);
    double tau2 = 0.0;
    if (method == RocMethod::iteb_test) {
      tau2 = iteb(summaries).tau2;
    }
    const std::vector<double> p = pvalues_serial(summaries, tau2);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::size_t n_nonnull = 0;
    for (char c : truth.is_nonnull) n_nonnull += c != 0;
    rep_fdp[rep].resize(n);
    rep_sens[rep].resize(n);
    std::size_t false_pos = 0, hits = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (truth.is_nonnull[order[k]]) {
        ++hits;
      } else {
        ++false_pos;
      }
      rep_fdp[rep][k] = static_cast<double>(false_pos) / static_cast<double>(k + 1);
      rep_sens[rep][k] =
          n_nonnull == 0 ? 0.0
                         : static_cast<double>(hits) / static_cast<double>(n_nonnull);
    }
  }
  for (int rep = 0; rep < config.reps; ++rep) {
    for (std::size_t k = 0; k < n; ++k) {
      sum_fdp[k] += rep_fdp[rep][k];
      sum_sens[k] += rep_sens[rep][k];
    }
  }

  RocCurve curve;
  curve.fdp.resize(n);
  curve.sensitivity.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    curve.fdp[k] = sum_fdp[k] / config.reps;
    curve.sensitivity[k] = sum_sens[k] / config.reps;
  }
  return curve;
}

double sensitivity_at_fdp(const RocCurve& curve, double fdp_target) {
  double best = 0.0;
  for (std::size_t k = 0; k < curve.fdp.size(); ++k) {
    if (curve.fdp[k] <= fdp_target) best = curve.sensitivity[k];
  }
  return best;
}

std::vector<TauErrorCell> tau_error_experiment(
    const ScenarioConfig& base, std::span<const double> taus,
    std::span<const double> gammas, std::span<const TauMethod> methods) {
  if (base.reps < 2) {
    throw input_error("tau_error_experiment: need reps >= 2");
  }
  std::vector<TauErrorCell> cells;
  for (double gamma : gammas) {
    for (double tau : taus) {
      ScenarioConfig config = base;
      config.gamma = gamma;
      config.tau = tau;

      // One dataset per rep, shared across methods.
      std::vector<std::vector<GeneSummary>> rep_summaries(config.reps);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
      for (int rep = 0; rep < config.reps; ++rep) {
        const ReplicateMatrix matrix = gen_scenario(config, rep, nullptr);
        rep_summaries[rep] = summarize_for_design(matrix, config.design);
      }

      for (TauMethod method : methods) {
        TauErrorCell cell{tau, gamma, method, 0.0, 0, 0};
        double err_sum = 0.0;
        const std::ptrdiff_t reps = config.reps;
        std::vector<double> rep_err(config.reps,
                                    std::numeric_limits<double>::quiet_NaN());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (method == TauMethod::TMLE)
#endif
        for (std::ptrdiff_t rep = 0; rep < reps; ++rep) {
          try {
            TauEstimate est;
            switch (method) {
              case TauMethod::ITEB: est = iteb(rep_summaries[rep]); break;
              case TauMethod::TMLE:
                est = truncated_mle(rep_summaries[rep]);
                break;
              case TauMethod::CM:
                est = central_matching(rep_summaries[rep]);
                break;
            }
            rep_err[rep] =
                std::fabs(est.tau2 - tau * tau) / (tau * tau + 0.1);
          } catch (const std::exception&) {
            // failure recorded per cell below
          }
        }
        for (int rep = 0; rep < config.reps; ++rep) {
          if (std::isnan(rep_err[rep])) {
            ++cell.n_failed;
          } else {
            err_sum += rep_err[rep];
            ++cell.n_ok;
          }
        }
        cell.mean_rel_error =
            cell.n_ok > 0 ? err_sum / cell.n_ok
                          : std::numeric_limits<double>::quiet_NaN();
        cells.push_back(cell);
      }
    }
  }
  return cells;
}

FdrPowerResult fdr_power_experiment(const ScenarioConfig& config,
                                    double alpha1, double alpha2,
                                    double per_gene_alpha) {
  if (config.reps < 1) {
    throw input_error("fdr_power_experiment: need reps >= 1");
  }
  FdrPowerResult out;
  out.reps = config.reps;
  std::vector<double> fdps(config.reps), powers(config.reps),
      fixed_powers(config.reps), oracle_powers(config.reps);
  std::vector<char> power_defined(config.reps, 0);
  const double true_tau2 = config.tau * config.tau;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int rep = 0; rep < config.reps; ++rep) {
    ScenarioTruth truth;
    const ReplicateMatrix matrix = gen_scenario(config, rep, &truth);
    const std::vector<GeneSummary> summaries =
        summarize_for_design(matrix, config.design);
    ItebConfig iteb_config;
    iteb_config.alpha1 = alpha1;
    iteb_config.alpha2 = alpha2;
    const TauEstimate est = iteb(summaries, iteb_config);

    fdps[rep] = fdp_of(est.rejected_set, truth.is_nonnull);
    const auto sens = sensitivity_of(est.rejected_set, truth.is_nonnull);
    if (sens) {
      power_defined[rep] = 1;
      powers[rep] = *sens;

      const std::vector<double> p = pvalues_serial(summaries, est.tau2);
      std::vector<std::size_t> fixed;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= per_gene_alpha) fixed.push_back(i);
      }
      fixed_powers[rep] = *sensitivity_of(fixed, truth.is_nonnull);
      oracle_powers[rep] = *sensitivity_of(
          oracle_reject(summaries, true_tau2, per_gene_alpha),
          truth.is_nonnull);
    }
  }

  const auto mean_se = [](std::span<const double> v) {
    const double mean =
        std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double se = v.size() > 1 ? std::sqrt(ss / (v.size() - 1) /
                                               static_cast<double>(v.size()))
                                   : 0.0;
    return std::pair<double, double>(mean, se);
  };

  std::tie(out.mean_fdp, out.se_fdp) = mean_se(fdps);
  const bool any_power =
      std::any_of(power_defined.begin(), power_defined.end(),
                  [](char c) { return c != 0; });
  if (any_power) {
    std::tie(out.mean_power.emplace(), out.se_power) = mean_se(powers);
    out.mean_fixed_level_power = mean_se(fixed_powers).first;
    out.mean_oracle_power = mean_se(oracle_powers).first;
  }
  return out;
}

}  // namespace strongsig
