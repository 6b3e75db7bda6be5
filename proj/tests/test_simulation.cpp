#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "strongsig/errors.hpp"
#include "strongsig/rng.hpp"
#include "strongsig/simulation.hpp"

using namespace strongsig;

TEST_CASE("gen_scenario shape and truth layout") {
  ScenarioConfig cfg;
  cfg.n_genes = 15000;
  cfg.gamma = 0.01;
  cfg.tau = 1.0;
  cfg.seed = 5;
  ScenarioTruth truth;
  const auto m = gen_scenario(cfg, 0, &truth);
  CHECK(m.n_genes() == 15000);
  CHECK(m.n_cols() == 10);
  std::size_t n_nonnull = 0;
  for (char c : truth.is_nonnull) n_nonnull += c != 0;
  CHECK(n_nonnull == 150);
  // Non-nulls lead, first half positive.
  for (std::size_t i = 0; i < 150; ++i) {
    CHECK(truth.is_nonnull[i]);
    CHECK(std::fabs(truth.mu[i]) >= 1.0);
    CHECK(std::fabs(truth.mu[i]) <= 10.0);
    if (i < 75) {
      CHECK(truth.mu[i] > 0.0);
    } else {
      CHECK(truth.mu[i] < 0.0);
    }
  }
  CHECK_FALSE(truth.is_nonnull[150]);
}

TEST_CASE("gen_scenario gamma=0 tau=0 is the sharp null") {
  ScenarioConfig cfg;
  cfg.n_genes = 500;
  cfg.gamma = 0.0;
  cfg.tau = 0.0;
  ScenarioTruth truth;
  gen_scenario(cfg, 3, &truth);
  for (std::size_t i = 0; i < cfg.n_genes; ++i) {
    CHECK_FALSE(truth.is_nonnull[i]);
    CHECK(truth.mu[i] == 0.0);
  }
}

TEST_CASE("gen_scenario determinism and rep separation") {
  ScenarioConfig cfg;
  cfg.n_genes = 200;
  cfg.gamma = 0.05;
  cfg.seed = 42;
  const auto a = gen_scenario(cfg, 1, nullptr);
  const auto b = gen_scenario(cfg, 1, nullptr);
  CHECK(a.values == b.values);
  const auto c = gen_scenario(cfg, 2, nullptr);
  CHECK(a.values != c.values);
  ScenarioConfig other = cfg;
  other.seed = 43;
  CHECK(gen_scenario(other, 1, nullptr).values != a.values);
}

TEST_CASE("gen_scenario validation") {
  ScenarioConfig cfg;
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(gen_scenario(cfg, 0, nullptr), input_error);
  cfg.gamma = 0.0;
  cfg.tau = -1.0;
  CHECK_THROWS_AS(gen_scenario(cfg, 0, nullptr), input_error);
}

TEST_CASE("variance sources match their moments") {
  ScenarioConfig cfg;
  cfg.n_genes = 30000;
  cfg.gamma = 0.0;
  cfg.tau = 0.0;
  cfg.seed = 10;

  // Constant: exactly the value after mean-1 rescaling.
  cfg.variance = {VarianceSource::Kind::constant, "", 2.5};
  ScenarioTruth truth;
  gen_scenario(cfg, 0, &truth);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(truth.sigma2[i] == doctest::Approx(1.0));
  }

  // chi^2_1: rescaled to mean exactly 1, variance near 2 (relative to the
  // pre-scaling mean 1).
  cfg.variance = {VarianceSource::Kind::chisq1, "", 1.0};
  gen_scenario(cfg, 0, &truth);
  const double mean = std::accumulate(truth.sigma2.begin(), truth.sigma2.end(),
                                      0.0) /
                      cfg.n_genes;
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));
  double var = 0.0;
  for (double v : truth.sigma2) var += (v - mean) * (v - mean);
  var /= cfg.n_genes;
  CHECK(std::fabs(var - 2.0) < 0.15);
}

TEST_CASE("gaussian and laplacian noise match the target variance") {
  for (auto family : {NoiseFamily::gaussian, NoiseFamily::laplacian}) {
    ScenarioConfig cfg;
    cfg.n_genes = 20000;
    cfg.gamma = 0.0;
    cfg.tau = 0.0;
    cfg.m1 = 1;
    cfg.m0 = 1;
    cfg.noise = family;
    cfg.variance = {VarianceSource::Kind::constant, "", 1.0};
    cfg.seed = 77;
    const auto m = gen_scenario(cfg, 0, nullptr);
    double ss = 0.0, s4 = 0.0;
    for (std::size_t i = 0; i < cfg.n_genes; ++i) {
      const double v = m.at(i, 0);
      ss += v * v;
      s4 += v * v * v * v;
    }
    const double var = ss / cfg.n_genes;
    const double kurt = s4 / cfg.n_genes / (var * var);
    CHECK(std::fabs(var - 1.0) < 0.05);
    // Kurtosis separates the families: 3 for Gaussian, 6 for Laplace.
    if (family == NoiseFamily::gaussian) {
      CHECK(std::fabs(kurt - 3.0) < 0.4);
    } else {
      CHECK(std::fabs(kurt - 6.0) < 1.0);
    }
  }
}

TEST_CASE("paired design: difference variance matches sigma2") {
  // sigma2 in the paired design is the variance of a per-pair difference.
  ScenarioConfig cfg;
  cfg.n_genes = 20000;
  cfg.design = Design::paired;
  cfg.m1 = 1;
  cfg.gamma = 0.0;
  cfg.tau = 0.0;
  cfg.variance = {VarianceSource::Kind::constant, "", 1.0};
  cfg.seed = 31;
  for (auto family : {NoiseFamily::gaussian, NoiseFamily::laplacian}) {
    cfg.noise = family;
    const auto m = gen_scenario(cfg, 0, nullptr);
    double ss = 0.0;
    for (std::size_t i = 0; i < cfg.n_genes; ++i) {
      const double d = m.at(i, 0) - m.at(i, 1);
      ss += d * d;
    }
    CHECK(std::fabs(ss / cfg.n_genes - 1.0) < 0.05);
  }
}

TEST_CASE("paired design generates usable batch labels") {
  ScenarioConfig cfg;
  cfg.n_genes = 100;
  cfg.design = Design::paired;
  cfg.m1 = 4;
  const auto m = gen_scenario(cfg, 0, nullptr);
  CHECK(m.n_cols() == 8);
  const auto s = summarize_for_design(m, Design::paired);
  CHECK(s.size() == 100);
  CHECK(s[0].df_sigma == doctest::Approx(3.0));
}

TEST_CASE("fdp_of and sensitivity_of match the literal definitions") {
  const std::vector<char> truth = {1, 1, 0, 0, 0};
  const std::vector<std::size_t> rej = {0, 2, 3};
  CHECK(fdp_of(rej, truth) == doctest::Approx(2.0 / 3.0));
  CHECK(*sensitivity_of(rej, truth) == doctest::Approx(0.5));
  CHECK(fdp_of({}, truth) == 0.0);
  const std::vector<char> all_null = {0, 0, 0};
  CHECK(!sensitivity_of({}, all_null).has_value());
  CHECK(fdp_of(std::vector<std::size_t>{1}, all_null) == 1.0);

  // Exhaustive brute force on random small instances.
  Rng rng(606);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.next_u64() % 20;
    std::vector<char> labels(n);
    std::vector<std::size_t> rejected;
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = rng.next_u64() % 2;
      if (rng.next_u64() % 2) rejected.push_back(i);
    }
    std::size_t fp = 0, tp = 0, nn = 0;
    for (std::size_t i = 0; i < n; ++i) nn += labels[i] != 0;
    for (std::size_t i : rejected) (labels[i] ? tp : fp)++;
    if (rejected.empty()) {
      CHECK(fdp_of(rejected, labels) == 0.0);
    } else {
      CHECK(fdp_of(rejected, labels) ==
            doctest::Approx(static_cast<double>(fp) / rejected.size()));
    }
    const auto sens = sensitivity_of(rejected, labels);
    if (nn == 0) {
      CHECK(!sens.has_value());
    } else {
      CHECK(*sens == doctest::Approx(static_cast<double>(tp) / nn));
    }
  }
}

TEST_CASE("roc_experiment produces monotone sensitivity and is deterministic") {
  ScenarioConfig cfg;
  cfg.n_genes = 600;
  cfg.gamma = 0.05;
  cfg.tau = 1.0;
  cfg.m1 = cfg.m0 = 5;
  cfg.reps = 4;
  cfg.seed = 8;
  const auto curve = roc_experiment(cfg, RocMethod::iteb_test);
  REQUIRE(curve.fdp.size() == cfg.n_genes);
  for (std::size_t k = 1; k < curve.sensitivity.size(); ++k) {
    CHECK(curve.sensitivity[k] >= curve.sensitivity[k - 1] - 1e-12);
  }
  CHECK(curve.sensitivity.back() == doctest::Approx(1.0));
  CHECK(curve.fdp.back() == doctest::Approx(1.0 - 0.05).epsilon(0.01));
  // Determinism across calls (also exercises the fixed-order reduction).
  const auto again = roc_experiment(cfg, RocMethod::iteb_test);
  CHECK(curve.fdp == again.fdp);
  CHECK(curve.sensitivity == again.sensitivity);

  // sensitivity_at_fdp picks the best count within budget.
  RocCurve toy;
  toy.fdp = {0.0, 0.05, 0.2, 0.08};
  toy.sensitivity = {0.1, 0.4, 0.6, 0.9};
  CHECK(sensitivity_at_fdp(toy, 0.1) == doctest::Approx(0.9));
  CHECK(sensitivity_at_fdp(toy, 0.01) == doctest::Approx(0.1));
}

TEST_CASE("tau_error_experiment layout and sanity") {
  ScenarioConfig cfg;
  cfg.n_genes = 2000;
  cfg.gamma = 0.0;
  cfg.m1 = cfg.m0 = 5;
  cfg.reps = 3;
  cfg.seed = 12;
  const std::vector<double> taus = {0.0, 1.0};
  const std::vector<double> gammas = {0.0, 0.01};
  const std::vector<TauMethod> methods = {TauMethod::ITEB, TauMethod::CM};
  const auto cells = tau_error_experiment(cfg, taus, gammas, methods);
  REQUIRE(cells.size() == taus.size() * gammas.size() * methods.size());
  for (const auto& c : cells) {
    CHECK(c.n_ok + c.n_failed == cfg.reps);
    if (c.n_ok > 0) {
      CHECK(c.mean_rel_error >= 0.0);
      CHECK(std::isfinite(c.mean_rel_error));
    }
  }
}

TEST_CASE("fdr_power_experiment scores against the truth") {
  ScenarioConfig cfg;
  cfg.n_genes = 3000;
  cfg.gamma = 0.02;
  cfg.tau = 1.0;
  cfg.m1 = cfg.m0 = 8;
  cfg.reps = 4;
  cfg.seed = 19;
  const auto res = fdr_power_experiment(cfg, 0.1, 0.01);
  CHECK(res.reps == 4);
  CHECK(res.mean_fdp >= 0.0);
  CHECK(res.mean_fdp <= 1.0);
  REQUIRE(res.mean_power.has_value());
  CHECK(*res.mean_power > 0.0);
  REQUIRE(res.mean_oracle_power.has_value());
  CHECK(*res.mean_oracle_power >= *res.mean_power - 0.2);

  // All-null scenario: no power is reported.
  ScenarioConfig null_cfg = cfg;
  null_cfg.gamma = 0.0;
  null_cfg.n_genes = 1000;
  const auto null_res = fdr_power_experiment(null_cfg, 0.1, 0.01);
  CHECK(!null_res.mean_power.has_value());
}
