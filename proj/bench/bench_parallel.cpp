// Timing comparison of the OpenMP kernels against their serial references.
// Usage: bench_parallel [n_genes] [mc_draws]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "strongsig/distributions.hpp"
#include "strongsig/parallel.hpp"
#include "strongsig/rng.hpp"
#include "strongsig/summaries.hpp"
#include "strongsig/testing.hpp"

using namespace strongsig;

namespace {

double seconds(const std::function<void()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void row(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-24s %10.4fs %10.4fs %8.2fx  %s\n", name, serial, parallel,
              serial / parallel, identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n_genes = argc > 1 ? std::strtoull(argv[1], nullptr, 10)
                                       : 2000000;
  const std::size_t mc_draws = argc > 2 ? std::strtoull(argv[2], nullptr, 10)
                                        : 20000000;
  std::printf("threads: %d, genes: %zu, mc draws: %zu\n", max_threads(),
              n_genes, mc_draws);
  std::printf("%-24s %11s %11s %9s\n", "kernel", "serial", "parallel",
              "speedup");

  Rng rng(1);
  std::vector<GeneSummary> data;
  data.reserve(n_genes);
  for (std::size_t i = 0; i < n_genes; ++i) {
    GeneSummary g;
    g.id = "g";
    g.xbar = 1.5 * rng.next_normal();
    g.s2 = rng.next_scaled_chisq(8.0);
    g.df_sigma = 8.0;
    data.push_back(g);
  }

  std::vector<double> p_serial, p_parallel;
  const double t_ser = seconds([&] { p_serial = pvalues_serial(data, 0.8); });
  const double t_par = seconds([&] { p_parallel = pvalues(data, 0.8); });
  row("pvalues", t_ser, t_par, p_serial == p_parallel);

  const std::vector<double> ts = {0.5, 1.0, 4.0, 9.0};
  std::vector<McTail> mc_serial, mc_parallel;
  const double m_ser = seconds([&] {
    mc_serial = null_sf_mc_oracle_multi_serial(ts, 1.0, 1.0, 4.0, mc_draws, 7);
  });
  const double m_par = seconds([&] {
    mc_parallel = null_sf_mc_oracle_multi(ts, 1.0, 1.0, 4.0, mc_draws, 7);
  });
  bool same = true;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    same = same && mc_serial[i].estimate == mc_parallel[i].estimate;
  }
  row("mc tail oracle", m_ser, m_par, same);
  return 0;
}
