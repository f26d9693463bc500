#include <boost/math/distributions/normal.hpp>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "idm/error.hpp"
#include "idm/kernel_sums.hpp"
#include "idm/simulate.hpp"
#include "idm/smoothing.hpp"
#include "oracles.hpp"

using namespace idm;

namespace {

const boost::math::normal_distribution<double> kNormal;
double K(double u) { return boost::math::pdf(kNormal, u); }
double Phi(double u) { return boost::math::cdf(kNormal, u); }

Dataset small_sim(std::size_t n, std::optional<double> sigma, std::uint64_t seed) {
  Scenario sc = Scenario::reference(sigma);
  sc.n = n;
  return simulate_dataset(sc, seed).data;
}

std::vector<double> random_positive(std::size_t n, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = U(rng);
  return v;
}

}  // namespace

TEST_SUITE("smoothing") {
  TEST_CASE("bandwidth rules") {
    const double c = std::pow(8.0 * std::numbers::sqrt2 / 3.0, 0.2);
    CHECK(std::abs(bandwidth_density(0.5, 1.0, 32) - 0.5 * c / 2.0) < 1e-15);
    CHECK(std::abs(bandwidth_density(0.5, 1.0, 32) - 0.3260143785972472) < 1e-15);
    CHECK(std::abs(bandwidth_density(1.0, 0.7, 50) - 2 * bandwidth_density(0.5, 0.7, 50)) < 1e-15);
    CHECK(std::abs(bandwidth_cumulative(0.01, 2.0, 8) - 0.0158740) < 1e-7);
    CHECK(std::abs(bandwidth_cumulative(0.3, 1.2, 10) / bandwidth_cumulative(0.3, 1.2, 80) - 2.0) < 1e-12);
    CHECK_THROWS_AS(bandwidth_density(0.5, 1.0, 0), Error);
    CHECK_THROWS_AS(bandwidth_cumulative(0.5, 1.0, 0), Error);
  }

  TEST_CASE("spread falls back to the IQR and then fails") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(std::abs(spread(v) - std::sqrt(5.0 / 3.0)) < 1e-14);
    const std::vector<double> same{2.0, 2.0, 2.0};
    CHECK_THROWS_AS(spread(same), Error);
  }

  TEST_CASE("selected bandwidths are positive") {
    const Dataset d = small_sim(300, 1.0, 4);
    const BandwidthSet bw = select_bandwidths(d, 0.5, 0.01);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(bw.beta[k].density > 0.0);
      CHECK(bw.beta[k].cumulative > 0.0);
      CHECK(bw.hazard[k].density > 0.0);
      CHECK(bw.hazard[k].density == bw.hazard[k].cumulative);
    }
  }

  TEST_CASE("two-observation profile likelihood by hand") {
    const Dataset d({oracle::obs(1.0, 1.0, 1, 0, 0, {0.0}),
                     oracle::obs(std::numbers::e, std::numbers::e, 1, 0, 0, {1.0})},
                    {"x"});
    const std::vector<double> e1{1.0, 1.0}, beta{0.0};
    // R = (0, 1); the three terms of the smoothed likelihood written out.
    const double t1 = -0.5 * (0.0 + 1.0);
    const double t2 = 0.5 * 2.0 * std::log((K(0) + K(1)) / 2.0);
    const double t3 = -0.5 * (std::log((Phi(0) + Phi(1)) / 2.0) + std::log((Phi(-1) + Phi(0)) / 2.0));
    const double value = profile_loglik_0k(beta, 1, d, e1, 1.0);
    CHECK(std::abs(value - (t1 + t2 + t3)) < 1e-12);
    CHECK(std::abs(value + 0.8830) < 1e-4);
    CHECK(profile_loglik_0k(beta, 2, d, e1, 1.0) == 0.0);
  }

  TEST_CASE("two-observation 1->2 profile likelihood by hand") {
    // Diagnosed at V, dying (or censored) at W; x scalar.
    const Dataset d({oracle::obs(0.5, 2.0, 1, 0, 1, {0.2}), oracle::obs(1.0, 3.0, 1, 0, 0, {-0.4})},
                    {"x"});
    const std::vector<double> e1{1.3, 0.7};
    const double b = 0.6, a = 0.8;
    const double rv[] = {std::log(0.5) - b * 0.2, std::log(1.0) + b * 0.4};
    const double rw[] = {std::log(2.0) - b * 0.2, std::log(3.0) + b * 0.4};
    // Only subject 0 has an event.
    const double t1 = -0.5 * std::log(2.0);
    const double t2 = 0.5 * std::log((K(0) + 0.0) / (2 * a));
    double den = 0.0;
    for (int j = 0; j < 2; ++j) den += e1[j] * (Phi((rw[j] - rw[0]) / a) - Phi((rv[j] - rw[0]) / a));
    const double t3 = -0.5 * std::log(den / 2.0);
    const double value = profile_loglik_12(std::vector<double>{b}, d, e1, a);
    CHECK(std::abs(value - (t1 + t2 + t3)) < 1e-6);
  }

  TEST_CASE("zero sojourn subject leaves the 1->2 likelihood finite") {
    const Dataset d({oracle::obs(0.5, 0.5, 1, 0, 0, {0.1}), oracle::obs(0.4, 1.1, 1, 0, 1, {0.3}),
                     oracle::obs(0.9, 0.0, 0, 1, 0, {0.0})},
                    {"x"});
    const std::vector<double> e1{1.0, 1.0, 1.0};
    CHECK(std::isfinite(profile_loglik_12(std::vector<double>{0.2}, d, e1, 0.5)));
  }

  TEST_CASE("fast profile likelihood and gradient equal the pairwise reference") {
    const Dataset d = small_sim(250, 1.0, 9);
    const std::vector<double> g = random_positive(d.size(), 2, 0.2, 3.0);
    const std::vector<std::size_t> cols{0, 1, 3};
    for (Transition t : kTransitions)
      for (const Kernel ker : {Kernel(KernelType::Gaussian), Kernel(KernelType::Logistic)})
        for (bool weighted : {false, true}) {
          const TransitionData td = make_transition_data(d, t, cols, weighted ? std::span<const double>(g)
                                                                              : std::span<const double>());
          const std::vector<double> e1 = random_positive(td.size(), 7, 0.3, 2.5);
          const std::vector<double> beta{0.7, -0.2, 0.4};
          const KernelBandwidth bw{0.35, 0.21};
          std::vector<double> gf(3), gr(3);
          const double vf = profile_loglik(td, beta, e1, bw, ker, gf);
          const double vr = profile_loglik_reference(td, beta, e1, bw, ker, gr);
          CHECK(std::abs(vf - vr) < 1e-11 * std::max(1.0, std::abs(vr)));
          for (int l = 0; l < 3; ++l) CHECK(std::abs(gf[l] - gr[l]) < 1e-10 * std::max(1.0, std::abs(gr[l])));
        }
  }

  TEST_CASE("hazard sums equal the brute-force terms") {
    const Dataset d = small_sim(200, 0.5, 21);
    const std::vector<double> g = random_positive(d.size(), 5, 0.1, 2.0);
    for (Transition t : kTransitions) {
      const TransitionData td = make_transition_data(d, t, std::vector<std::size_t>{0, 2}, g);
      const std::vector<double> e1 = random_positive(td.size(), 8, 0.5, 1.5);
      const std::vector<double> beta{0.3, 0.9};
      const KernelBandwidth bw{0.08, 0.08};
      const HazardSums hs(td, beta, e1, bw, Kernel{});
      for (double s = -4.0; s <= 2.5; s += 0.173) {
        const HazardTerms ref = hazard_terms_reference(td, beta, e1, bw, Kernel{}, s);
        CHECK(std::abs(hs.numerator(s) - ref.numerator) <= 1e-12 * std::max(1.0, ref.numerator));
        CHECK(std::abs(hs.denominator(s) - ref.denominator) <= 1e-12 * std::max(1.0, ref.denominator));
      }
    }
  }

  TEST_CASE("profile likelihood is invariant to covariate translation") {
    const Dataset d = small_sim(150, 1.0, 3);
    std::vector<Observation> shifted = d.observations();
    for (auto& o : shifted)
      for (double& x : o.x) x += 5.0;
    const Dataset ds(shifted, d.covariate_names());
    const std::vector<double> e1(d.size(), 1.0), beta{0.4, -0.3, 0.8, 0.1};
    for (int k : {1, 2})
      CHECK(std::abs(profile_loglik_0k(beta, k, d, e1, 0.3) - profile_loglik_0k(beta, k, ds, e1, 0.3)) < 1e-12);
    CHECK(std::abs(profile_loglik_12(beta, d, e1, 0.3) - profile_loglik_12(beta, ds, e1, 0.3)) < 1e-12);
  }

  TEST_CASE("rescaling time shifts the profile likelihood by a constant") {
    const Dataset d = small_sim(150, 1.0, 13);
    std::vector<Observation> scaled = d.observations();
    for (auto& o : scaled) {
      o.v *= 3.0;
      o.w *= 3.0;
    }
    const Dataset ds(scaled, d.covariate_names());
    const std::vector<double> e1(d.size(), 1.0);
    double shift = 0.0;
    bool first = true;
    for (double b0 : {-0.5, 0.3, 1.2}) {
      const std::vector<double> beta{b0, 0.5, -0.1, 0.2};
      const double diff = profile_loglik_0k(beta, 1, ds, e1, 0.4) - profile_loglik_0k(beta, 1, d, e1, 0.4);
      if (first) shift = diff, first = false;
      CHECK(std::abs(diff - shift) < 1e-12);
    }
    const TransitionCounts tc = transition_counts(d);
    CHECK(std::abs(shift + std::log(3.0) * tc.n01 / d.size()) < 1e-12);
  }

  TEST_CASE("analytic gradient matches a Richardson difference") {
    const Dataset d = small_sim(200, 1.0, 17);
    const std::vector<std::size_t> cols{0, 1};
    for (Transition t : kTransitions) {
      const TransitionData td = make_transition_data(d, t, cols);
      const std::vector<double> e1 = random_positive(td.size(), 1, 0.5, 2.0);
      const KernelBandwidth bw{0.3, 0.25};
      std::vector<double> beta{0.6, 0.2}, grad(2);
      profile_loglik(td, beta, e1, bw, Kernel{}, grad);
      for (int l = 0; l < 2; ++l) {
        auto f = [&](double h) {
          std::vector<double> b = beta;
          b[l] += h;
          return profile_loglik(td, b, e1, bw, Kernel{});
        };
        const double h = 1e-3;
        const double d1 = (f(h) - f(-h)) / (2 * h), d2 = (f(h / 2) - f(-h / 2)) / h;
        const double rich = (4 * d2 - d1) / 3;
        CHECK(std::abs(grad[l] - rich) <= 1e-4 * std::max(1e-2, std::abs(rich)));
      }
    }
  }

  TEST_CASE("single-subject hazard estimates") {
    const Dataset d({oracle::obs(1.0, 0.0, 0, 0, 0, {0.0})}, {"x"});
    const Dataset d1({oracle::obs(1.0, 1.0, 1, 0, 0, {0.0})}, {"x"});
    const std::vector<double> e1{1.0}, beta{0.0};
    const BaselineHazard h01 = estimate_hazard_0k(beta, 1, d1, e1, 1.0);
    CHECK(std::abs(h01.hazard(1.0) - K(0) / Phi(0)) < 1e-12);
    CHECK(std::abs(h01.hazard(1.0) - 0.7978846) < 1e-7);
    CHECK(h01.hazard(50.0) == 0.0);

    const Dataset d12({oracle::obs(1.0, std::numbers::e, 1, 0, 1, {0.0})}, {"x"});
    const BaselineHazard h12 = estimate_hazard_12(beta, d12, e1, 1.0);
    const double expect = K(0) / (std::numbers::e * (Phi(0) - Phi(-1)));
    CHECK(std::abs(h12.hazard(std::numbers::e) - expect) < 1e-12);
    CHECK(std::abs(expect - 0.4299) < 1e-4);

    CHECK_THROWS_AS(estimate_hazard_12(beta, d, e1, 1.0), Error);
  }

  TEST_CASE("estimated cumulative hazards start at 0 and never decrease") {
    const Dataset d = small_sim(300, 1.0, 5);
    const std::vector<double> e1 = random_positive(d.size(), 3, 0.4, 2.0);
    const std::vector<double> beta{0.8, 0.3, 0.2, 0.5};
    const BaselineHazard hz[] = {estimate_hazard_0k(beta, 1, d, e1, 0.05),
                                 estimate_hazard_0k(beta, 2, d, e1, 0.05),
                                 estimate_hazard_12(beta, d, e1, 0.05)};
    for (const BaselineHazard& h : hz) {
      CHECK(h.cumulative(0.0) == 0.0);
      const auto& v = h.grid().values();
      CHECK(std::is_sorted(v.begin(), v.end()));
      for (double t = 1e-3; t < 20.0; t *= 1.3) CHECK(h.hazard(t) >= 0.0);
    }
  }

  TEST_CASE("piecewise closed form") {
    const Dataset d({oracle::obs(0.5, 0.5, 1, 0, 0, {0.0})}, {"x"});
    const TransitionData td = make_transition_data(d, Transition::T01, std::vector<std::size_t>{0});
    const std::vector<double> e1{1.0}, beta{0.0};
    const PiecewiseHazard ph = piecewise_c_hat(td, beta, e1, 1, 1.0);
    CHECK(std::abs(ph.heights[0] - 2.0) < 1e-14);
    const TransitionData td2 = make_transition_data(d, Transition::T02, std::vector<std::size_t>{0});
    const PiecewiseHazard none = piecewise_c_hat(td2, beta, e1, 4, 1.0);
    for (double h : none.heights) CHECK(h == 0.0);
  }

  TEST_CASE("piecewise and smoothed likelihoods pick the same grid point") {
    const Dataset d = small_sim(600, std::nullopt, 77);
    const TransitionData td = make_transition_data(d, Transition::T01, std::vector<std::size_t>{0, 1});
    const std::vector<double> e1(td.size(), 1.0);
    const BandwidthSet bw = select_bandwidths(d, 0.5, 0.01);
    int best_s = -1, best_p = -1;
    double vs = -1e300, vp = -1e300;
    for (int i = 0; i < 5; ++i) {
      const std::vector<double> beta{0.5 * i, 0.5};
      const std::vector<double> r = exit_residuals(td, beta);
      const double M = 1.01 * std::exp(*std::max_element(r.begin(), r.end()));
      const double s = profile_loglik(td, beta, e1, bw.beta[0], Kernel{});
      const double p = piecewise_profile_loglik(td, beta, e1, 60, M);
      if (s > vs) vs = s, best_s = i;
      if (p > vp) vp = p, best_p = i;
    }
    CHECK(best_s == best_p);
    CHECK(best_s == 2);
  }
}
