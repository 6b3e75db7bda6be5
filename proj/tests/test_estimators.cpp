#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "strongsig/errors.hpp"
#include "strongsig/estimators.hpp"
#include "strongsig/rng.hpp"

using namespace strongsig;

namespace {

// Null-plus-spikes dataset: N genes with true per-gene variance `scale`
// (df = 9 estimate), xbar ~ N(0, tau2 + scale), plus n_spike large effects.
std::vector<GeneSummary> synth(std::size_t n, double tau2, std::size_t n_spike,
                               std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<GeneSummary> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    GeneSummary g;
    g.id = "g" + std::to_string(i);
    g.df_sigma = 9.0;
    g.s2 = scale * rng.next_scaled_chisq(9.0);
    const double sd = std::sqrt(tau2 + scale);
    g.xbar = i < n_spike ? 9.0 + rng.next_normal() : sd * rng.next_normal();
    out.push_back(g);
  }
  return out;
}

}  // namespace

TEST_CASE("eb_pilot arithmetic") {
  // Single gene, xbar^2 = 5, s2 = 1, delta = 0 -> 4.
  std::vector<GeneSummary> one = {{"a", std::sqrt(5.0), 1.0, 4.0}};
  CHECK(eb_pilot(one, 0.0) == doctest::Approx(4.0));
  // Inflation by delta.
  CHECK(eb_pilot(one, 0.5) == doctest::Approx(5.0 - 1.5));
  // Clamped at zero when the variance term dominates.
  std::vector<GeneSummary> low = {{"a", 0.5, 3.0, 4.0}};
  CHECK(eb_pilot(low, 0.0) == 0.0);
  // Two genes: mean of squares minus mean of variances.
  std::vector<GeneSummary> two = {{"a", 2.0, 1.0, 4.0}, {"b", 0.0, 3.0, 4.0}};
  CHECK(eb_pilot(two, 0.0) == doctest::Approx((4.0 + 0.0) / 2 - 2.0));
  CHECK_THROWS_AS(eb_pilot({}, 0.0), estimator_error);
}

TEST_CASE("iteb config resolution") {
  ItebConfig c;
  CHECK(c.resolved_delta(8) == doctest::Approx(1.0));
  CHECK(c.resolved_delta(800) == doctest::Approx(0.1));
  CHECK(c.resolved_max_iterations(37) == 37);
  c.delta = 0.25;
  c.max_iterations = 5;
  CHECK(c.resolved_delta(800) == 0.25);
  CHECK(c.resolved_max_iterations(37) == 5);
}

TEST_CASE("iteb on an all-null dataset stops at the pilot") {
  const auto data = synth(2000, 0.5, 0, 11);
  ItebConfig cfg;
  cfg.alpha2 = 1e-6;  // nothing should clear this on pure nulls
  const auto est = iteb(data, cfg);
  CHECK(est.trace.size() == 1);
  CHECK(est.tau2 ==
        doctest::Approx(eb_pilot(data, cfg.resolved_delta(data.size()))));
  CHECK(est.surviving_set.size() == data.size());
  CHECK(est.rejected_set.empty());
}

TEST_CASE("iteb trace is nonincreasing and sets partition sensibly") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    const auto data = synth(3000, 1.0, 60, seed);
    const auto est = iteb(data);
    REQUIRE(!est.trace.empty());
    for (std::size_t k = 1; k < est.trace.size(); ++k) {
      CHECK(est.trace[k] <= est.trace[k - 1] + 1e-12);
    }
    CHECK(est.tau2 == doctest::Approx(est.trace.back()));
    CHECK(est.iterations >= 1);
    // Rejected and surviving sets are disjoint and cover everything.
    std::set<std::size_t> surv(est.surviving_set.begin(),
                               est.surviving_set.end());
    for (std::size_t i : est.rejected_set) CHECK(surv.count(i) == 0);
    CHECK(est.surviving_set.size() + est.rejected_set.size() == data.size());
    // The spikes should mostly be caught.
    std::size_t caught = 0;
    for (std::size_t i : est.rejected_set) {
      if (i < 60) ++caught;
    }
    CHECK(caught >= 50);
  }
}

TEST_CASE("iteb recovers tau2 on spiked data") {
  const auto data = synth(8000, 1.0, 80, 77);
  const auto est = iteb(data);
  CHECK(std::fabs(est.tau2 - 1.0) / 1.1 < 0.15);
}

TEST_CASE("iteb scale equivariance") {
  const auto data = synth(2000, 1.0, 40, 9);
  const double c2 = 4.0;
  std::vector<GeneSummary> scaled = data;
  for (auto& g : scaled) {
    g.xbar *= std::sqrt(c2);
    g.s2 *= c2;
  }
  const auto a = iteb(data);
  const auto b = iteb(scaled);
  // p-values are invariant under the common scaling, so the paths coincide.
  CHECK(b.tau2 == doctest::Approx(c2 * a.tau2).epsilon(1e-10));
  CHECK(b.iterations == a.iterations);
  CHECK(b.rejected_set == a.rejected_set);
  CHECK(b.surviving_set == a.surviving_set);
}

TEST_CASE("iteb input validation") {
  std::vector<GeneSummary> tiny = {{"a", 1.0, 1.0, 4.0}};
  CHECK_THROWS_AS(iteb(tiny), estimator_error);
  const auto data = synth(100, 1.0, 0, 3);
  ItebConfig bad;
  bad.alpha1 = 1.5;
  CHECK_THROWS_AS(iteb(data, bad), estimator_error);
}

TEST_CASE("tmle objective has its minimum near the truth") {
  const auto data = synth(4000, 1.5, 0, 21);
  // Fixed central window and per-gene variances: the profiled tau2 objective
  // should prefer the true value over gross misses.
  std::vector<std::size_t> window;
  std::vector<double> v;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (std::fabs(data[i].xbar) < 3.0) {
      window.push_back(i);
      v.push_back(std::max(data[i].s2, 1e-12));
    }
  }
  REQUIRE(window.size() > 100);
  const double at_true = tmle_objective(data, window, v, 1.5, 3.0);
  CHECK(at_true < tmle_objective(data, window, v, 0.0, 3.0));
  CHECK(at_true < tmle_objective(data, window, v, 10.0, 3.0));
}

TEST_CASE("tmle recovers tau2 and ignores the leave-out tail") {
  // Per-gene variances ~0.1, the regime where the effect variance is
  // dominated by tau2 (e.g. 10 replicates of unit-variance noise).
  const auto data = synth(6000, 1.0, 60, 31, 0.1);
  const auto est = truncated_mle(data);
  CHECK(est.method == TauMethod::TMLE);
  CHECK(est.iterations >= 1);
  CHECK(std::fabs(est.tau2 - 1.0) / 1.1 < 0.2);

  // tau2 = 0 case stays near zero.
  const auto null_data = synth(6000, 0.0, 0, 32, 0.1);
  const auto est0 = truncated_mle(null_data);
  CHECK(est0.tau2 / 0.1 < 0.35);
}

TEST_CASE("tmle input validation") {
  const auto data = synth(100, 1.0, 0, 3);
  CHECK_THROWS_AS(truncated_mle(data, 0.0), estimator_error);
  CHECK_THROWS_AS(truncated_mle(data, 1.0), estimator_error);
  std::vector<GeneSummary> few = {{"a", 1.0, 1.0, 4.0}, {"b", 0.5, 1.0, 4.0}};
  CHECK_THROWS_AS(truncated_mle(few), estimator_error);
}

TEST_CASE("central matching moment-equation inversion is exact") {
  const auto data = synth(2000, 0.7, 0, 41);
  // Noiseless inverse: compute the left side at a known tau2 and feed it back.
  const auto lhs_at = [&](double tau2) {
    double num = 0.0, den = 0.0;
    for (const auto& g : data) {
      const double tv = g.s2 + tau2;
      num += 1.0 / (tv * std::sqrt(tv));
      den += 1.0 / std::sqrt(tv);
    }
    return num / (2.0 * den);
  };
  for (double tau2 : {0.0, 0.4, 1.3, 5.0}) {
    const auto est =
        central_matching_from_beta2(data, lhs_at(tau2), 100.0, 1e-9);
    CHECK(est.method == TauMethod::CM);
    CHECK(std::fabs(est.tau2 - tau2) < 1e-6);
    CHECK(!est.at_boundary);
  }
  // Constant-variance special case: beta2 = 1/(2 (s2 + tau2)) exactly.
  std::vector<GeneSummary> flat(500, {"g", 0.0, 2.0, 9.0});
  const double want = 1.7;
  const auto est = central_matching_from_beta2(
      flat, 1.0 / (2.0 * (2.0 + want)), 100.0, 1e-9);
  CHECK(std::fabs(est.tau2 - want) < 1e-6);
}

TEST_CASE("central matching boundary and failure modes") {
  const auto data = synth(500, 0.5, 0, 51);
  CHECK_THROWS_AS(central_matching_from_beta2(data, -1.0, 10.0, 1e-8),
                  estimator_error);
  CHECK_THROWS_AS(central_matching_from_beta2(data, 0.0, 10.0, 1e-8),
                  estimator_error);
  // beta2 too small to match below tau2_max: boundary flag.
  const auto b = central_matching_from_beta2(data, 1e-9, 10.0, 1e-8);
  CHECK(b.at_boundary);
  CHECK(b.tau2 == 10.0);
  // beta2 larger than lhs(0): clamps to 0.
  const auto z = central_matching_from_beta2(data, 100.0, 10.0, 1e-8);
  CHECK(z.tau2 == 0.0);
  CHECK(!z.at_boundary);

  CHECK_THROWS_AS(central_matching(data, 0.2, 2), estimator_error);
  std::vector<GeneSummary> degenerate(100, {"g", 0.0, 1.0, 4.0});
  CHECK_THROWS_AS(central_matching(degenerate), estimator_error);
}

TEST_CASE("central matching end-to-end recovery") {
  const auto data = synth(15000, 1.0, 150, 61, 0.1);
  const auto est = central_matching(data);
  CHECK(std::fabs(est.tau2 - 1.0) / 1.1 < 0.25);

  const auto null_data = synth(15000, 0.0, 0, 62, 0.1);
  const auto est0 = central_matching(null_data);
  CHECK(est0.tau2 / 0.1 < 0.6);
}
