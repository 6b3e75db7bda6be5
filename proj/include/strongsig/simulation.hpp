#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strongsig/estimators.hpp"
#include "strongsig/summaries.hpp"

namespace strongsig {

enum class NoiseFamily { gaussian, laplacian };

// For the two-sample designs sigma2_i is the per-observation noise variance.
// The paired design is the one-sample setting in disguise: sigma2_i is the
// variance of a per-pair difference, split evenly across the two columns.
enum class Design { two_sample_pooled, paired, welch };

struct VarianceSource {
  enum class Kind { chisq1, empirical_file, constant };
  Kind kind = Kind::constant;
  std::string path;    // empirical_file
  double value = 1.0;  // constant
};

struct ScenarioConfig {
  std::size_t n_genes = 15000;
  int m1 = 5;  // experiment replicates; pair count for the paired design
  int m0 = 5;  // control replicates (ignored for paired)
  double gamma = 0.01;  // non-null fraction
  double tau = 1.0;     // null spread (standard deviation)
  NoiseFamily noise = NoiseFamily::gaussian;
  VarianceSource variance;
  Design design = Design::two_sample_pooled;
  std::uint64_t seed = 0;
  int reps = 20;
};

struct ScenarioTruth {
  std::vector<char> is_nonnull;
  std::vector<double> mu;
  std::vector<double> sigma2;
};

// Deterministic given (config.seed, rep_index). Non-nulls are the first
// floor(gamma*N) genes, the first half of them with positive sign.
ReplicateMatrix gen_scenario(const ScenarioConfig& config, int rep_index,
                             ScenarioTruth* truth = nullptr);

std::vector<GeneSummary> summarize_for_design(const ReplicateMatrix& matrix,
                                              Design design);

struct RocCurve {
  // Averaged over reps at fixed rejection counts 1..N.
  std::vector<double> fdp;
  std::vector<double> sensitivity;
};

enum class RocMethod { iteb_test, t_test };

RocCurve roc_experiment(const ScenarioConfig& config, RocMethod method);

// Sensitivity of the averaged curve at the largest rejection count whose
// mean FDP does not exceed the target.
double sensitivity_at_fdp(const RocCurve& curve, double fdp_target);

struct TauErrorCell {
  double tau;
  double gamma;
  TauMethod method;
  double mean_rel_error;  // mean |tau2_hat - tau^2| / (tau^2 + 0.1)
  int n_ok;
  int n_failed;  // estimator failures, recorded per cell
};

std::vector<TauErrorCell> tau_error_experiment(
    const ScenarioConfig& base, std::span<const double> taus,
    std::span<const double> gammas, std::span<const TauMethod> methods);

struct FdrPowerResult {
  double mean_fdp = 0.0;
  double se_fdp = 0.0;
  std::optional<double> mean_power;  // absent when gamma == 0
  double se_power = 0.0;
  std::optional<double> mean_fixed_level_power;  // p_i <= alpha with tau2_hat
  std::optional<double> mean_oracle_power;       // oracle rule with true tau2
  int reps = 0;
};

// Per rep: run ITEB, reject J_K, score FDP/sensitivity against the truth;
// also score the fixed-level test at per_gene_alpha using tau2_hat and the
// oracle rule using the true tau2.
FdrPowerResult fdr_power_experiment(const ScenarioConfig& config,
                                    double alpha1, double alpha2,
                                    double per_gene_alpha = 0.01);

// Exhaustive-definition scoring of a rejection set against truth labels.
double fdp_of(std::span<const std::size_t> rejected,
              std::span<const char> is_nonnull);
std::optional<double> sensitivity_of(std::span<const std::size_t> rejected,
                                     std::span<const char> is_nonnull);

}  // namespace strongsig
