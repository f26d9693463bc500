// Times the windowed, vectorised, OpenMP kernel sums against the serial
// double-loop references they are tested against.
//
//   idm_bench [n ...]     (default: 250 1000 4000)

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "idm/fit.hpp"
#include "idm/kernel_sums.hpp"
#include "idm/simulate.hpp"
#include "idm/smoothing.hpp"

using namespace idm;

namespace {

template <class Fn>
double median_ms(Fn fn, int reps) {
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

void bench(std::size_t n) {
  Scenario sc = Scenario::reference(1.0);
  sc.n = n;
  const Dataset d = simulate_dataset(sc, 99).data;
  const FitConfig cfg = fit_config_for(sc, FitConfig{});
  const auto cols = resolve_covariates(d, cfg);
  const BandwidthSet bw = select_bandwidths(d, cfg.zeta_beta, cfg.zeta_hazard);
  const int reps = n > 2000 ? 3 : 7;
  const int max_threads = omp_get_max_threads();

  for (Transition t : {Transition::T01, Transition::T12}) {
    const std::size_t k = index(t);
    const TransitionData td = make_transition_data(d, t, cols[k]);
    const std::vector<double> beta = sc.beta[k];
    const std::vector<double> e1(td.size(), 1.0);
    std::vector<double> g_ref(beta.size()), g_fast(beta.size());

    double v_ref = 0.0, v_fast = 0.0;
    const double ms_ref = median_ms(
        [&] { v_ref = profile_loglik_reference(td, beta, e1, bw.beta[k], cfg.kernel, g_ref); }, reps);
    omp_set_num_threads(1);
    const double ms_one = median_ms(
        [&] { v_fast = profile_loglik(td, beta, e1, bw.beta[k], cfg.kernel, g_fast); }, reps);
    omp_set_num_threads(max_threads);
    const double ms_all = median_ms(
        [&] { v_fast = profile_loglik(td, beta, e1, bw.beta[k], cfg.kernel, g_fast); }, reps);
    std::printf("n=%-5zu %s profile likelihood+gradient  reference %9.2f ms  fast(1 thread) %8.2f ms"
                "  fast(%d threads) %8.2f ms  speedup %6.1fx  |diff| %.1e\n",
                n, to_string(t).data(), ms_ref, ms_one, max_threads, ms_all, ms_ref / ms_all,
                std::abs(v_ref - v_fast));

    // The hazard ratio on a grid of 200 residual points.
    const HazardSums sums(td, beta, e1, bw.hazard[k], cfg.kernel);
    const auto& ev = sums.event_residuals();
    // Points with an empty risk set are skipped; there the brute-force
    // ratio is two underflowed tails divided by each other.
    std::vector<double> s;
    for (int i = 0; i < 200; ++i) {
      const double x = ev.front() + (ev.back() - ev.front()) * (i + 0.5) / 200.0;
      if (sums.at_risk(x) > 0) s.push_back(x);
    }
    double acc_ref = 0.0, acc_fast = 0.0;
    const double h_ref = median_ms(
        [&] {
          acc_ref = 0.0;
          for (double x : s) {
            const HazardTerms h = hazard_terms_reference(td, beta, e1, bw.hazard[k], cfg.kernel, x);
            acc_ref += h.numerator / h.denominator;
          }
        },
        reps);
    const double h_fast = median_ms(
        [&] {
          acc_fast = 0.0;
          for (double x : s) acc_fast += sums.numerator(x) / sums.denominator(x);
        },
        reps);
    std::printf("n=%-5zu %s hazard ratio x%-4zu         reference %9.2f ms  windowed       %8.2f ms"
                "  speedup %6.1fx  rel diff %.1e\n",
                n, to_string(t).data(), s.size(), h_ref, h_fast, h_ref / h_fast,
                std::abs(acc_ref - acc_fast) / std::abs(acc_ref));
  }

  FitConfig few = cfg;
  few.max_iterations = 10;
  omp_set_num_threads(1);
  const double fit_one = median_ms([&] { (void)fit(d, few); }, 1);
  omp_set_num_threads(max_threads);
  const double fit_all = median_ms([&] { (void)fit(d, few); }, 1);
  std::printf("n=%-5zu 10 EM iterations            1 thread %9.1f ms  %d threads %9.1f ms\n", n,
              fit_one, max_threads, fit_all);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::size_t> sizes;
  for (int i = 1; i < argc; ++i) sizes.push_back(std::strtoul(argv[i], nullptr, 10));
  if (sizes.empty()) sizes = {250, 1000, 4000};
  for (std::size_t n : sizes) bench(n);
}
