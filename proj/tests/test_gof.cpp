#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "idm/error.hpp"
#include "idm/gof.hpp"
#include "idm/simulate.hpp"
#include "oracles.hpp"

using namespace idm;

namespace {

// Constant hazards: H01 + H02 = t, H12 = c12 t; β = 0.
ModelFit constant_fit(std::optional<double> sigma, double c12 = 1.0) {
  ModelFit f;
  f.covariate_names = {"x"};
  const double c[] = {0.5, 0.5, c12};
  for (std::size_t k = 0; k < 3; ++k) {
    f.transitions[k].transition = kTransitions[k];
    f.transitions[k].columns = {0};
    f.transitions[k].names = {"x"};
    f.transitions[k].beta = {0.0};
    f.transitions[k].hazard = ParametricHazard{HazardFamily::Constant, c[k]};
  }
  f.sigma = sigma;
  return f;
}

}  // namespace

TEST_SUITE("gof") {
  TEST_CASE("state-0 marginal survival") {
    const Observation x = oracle::obs(1.0, 0.0, 0, 0, 0, {0.3});
    CHECK(marginal_survival_state0(0.0, x, constant_fit(1.0)) == 1.0);
    CHECK(std::abs(marginal_survival_state0(1.0, x, constant_fit(1.0)) - 0.5) < 1e-15);
    // E[exp(-γ)] for γ ~ Gamma(1, 1).
    std::mt19937_64 rng(1);
    std::gamma_distribution<double> G(1.0, 1.0);
    double mc = 0.0;
    for (int i = 0; i < 200000; ++i) mc += std::exp(-G(rng));
    CHECK(std::abs(mc / 200000 - 0.5) < 0.003);
    CHECK(std::abs(marginal_survival_state0(1.0, x, constant_fit(1e-6)) - std::exp(-1.0)) < 1e-4);
  }

  TEST_CASE("post-diagnosis marginal survival") {
    const Observation x = oracle::obs(1.0, 2.0, 1, 0, 0, {0.0});
    const ModelFit f = constant_fit(1.0);
    CHECK(marginal_survival_12(1.0, 1.0, x, f) == 1.0);
    CHECK(std::abs(marginal_survival_12(2.0, 1.0, x, f) - 4.0 / 9.0) < 1e-15);
    // Posterior of γ at diagnosis is Gamma(1/σ + 1, rate 1/σ + H0(t1)).
    std::mt19937_64 rng(2);
    std::gamma_distribution<double> G(2.0, 1.0 / 2.0);
    double mc = 0.0;
    for (int i = 0; i < 200000; ++i) mc += std::exp(-G(rng));
    CHECK(std::abs(mc / 200000 - 4.0 / 9.0) < 0.003);
    CHECK_THROWS_AS(marginal_survival_12(0.5, 1.0, x, f), Error);
    double prev = 1.0;
    for (double t = 1.0; t < 10.0; t += 0.25) {
      const double s = marginal_survival_12(t, 1.0, x, f);
      CHECK(s <= prev);
      prev = s;
    }
  }

  TEST_CASE("frailty marginals approach the exponential forms as sigma vanishes") {
    const Observation x = oracle::obs(1.0, 2.0, 1, 0, 0, {0.0});
    const ModelFit a = constant_fit(1e-6, 0.8), b = constant_fit(std::nullopt, 0.8);
    double sup = 0.0;
    for (double t = 0.0; t <= 5.0; t += 0.05) {
      sup = std::max(sup, std::abs(marginal_survival_state0(t, x, a) - marginal_survival_state0(t, x, b)));
      sup = std::max(sup, std::abs(marginal_survival_12(1.0 + t, 1.0, x, a) - marginal_survival_12(1.0 + t, 1.0, x, b)));
    }
    CHECK(sup <= 1e-3);
  }

  TEST_CASE("state-0 survival is non-increasing on a grid") {
    const Observation x = oracle::obs(1.0, 0.0, 0, 0, 0, {-0.5});
    for (auto s : {std::optional<double>(0.4), std::optional<double>(std::nullopt)}) {
      double prev = 1.0;
      for (double t = 0.0; t < 8.0; t += 0.1) {
        const double v = marginal_survival_state0(t, x, constant_fit(s));
        CHECK(v <= prev);
        prev = v;
      }
    }
  }

  TEST_CASE("RSP definitions") {
    const Dataset d({oracle::obs(0.7, 0.0, 0, 1, 0, {0.0}), oracle::obs(0.9, 0.0, 0, 0, 0, {0.0}),
                     oracle::obs(0.4, 1.3, 1, 0, 1, {0.0}), oracle::obs(0.5, 0.8, 1, 0, 0, {0.0})},
                    {"x"});
    const ModelFit f = constant_fit(0.8);
    const RspSample a = rsp(d, f, 1), b = rsp(d, f, 2);
    REQUIRE(a.rsp0.size() == 4);
    REQUIRE(a.rsp12.size() == 2);
    CHECK(a.rsp0[0] == marginal_survival_state0(0.7, d[0], f));
    CHECK(a.rsp0[0] == b.rsp0[0]);
    CHECK(a.rsp0[2] == b.rsp0[2]);
    CHECK(a.rsp12[0] == b.rsp12[0]);
    CHECK(a.rsp12[0] == marginal_survival_12(1.3, 0.4, d[2], f));
    CHECK(a.rsp0[1] != b.rsp0[1]);
    CHECK(a.rsp0[1] < a.surv0[1]);
    CHECK(a.rsp12[1] < a.surv12[1]);
    for (const auto* v : {&a.rsp0, &a.rsp12, &b.rsp0, &b.rsp12})
      for (double u : *v) CHECK((u >= 0.0 && u <= 1.0));
  }

  TEST_CASE("uniformity report") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> u(10000);
    for (double& v : u) v = U(rng);
    const UniformityReport r = uniformity_report(u, 20);
    CHECK(r.ks_p_value > 0.01);
    CHECK(r.count.size() == 20);
    CHECK(r.expected == 500.0);
    std::size_t total = 0;
    for (auto c : r.count) total += c;
    CHECK(total == 10000);
    CHECK(r.bin_right.back() == 1.0);
    const std::vector<double> half(100, 0.5);
    CHECK(std::abs(uniformity_report(half, 40).ks_statistic - 0.5) < 1e-15);
    CHECK(uniformity_report(half, 40).count.size() == 40);
    CHECK_THROWS_AS(uniformity_report(half, 1), Error);
    CHECK_THROWS_AS(uniformity_report(std::vector<double>{}, 20), Error);
  }

  TEST_CASE("KS statistic and tail probability") {
    std::vector<double> u{0.1, 0.4, 0.35, 0.9};
    CHECK(std::abs(ks_statistic_uniform(u) - oracle::ks_distance(u)) < 1e-15);
    const std::size_t n = 1000000;
    CHECK(std::abs(ks_p_value(1.3581 / std::sqrt(double(n)), n) - 0.05) < 1e-3);
    CHECK(std::abs(ks_p_value(1.6276 / std::sqrt(double(n)), n) - 0.01) < 2e-4);
    CHECK(ks_p_value(0.0, 50) == 1.0);
  }

  TEST_CASE("RSPs at the generating model look uniform") {
    Scenario sc = Scenario::reference(1.0);
    sc.n = 2000;
    const Dataset d = simulate_dataset(sc, 31).data;
    const RspSample s = rsp(d, true_model(sc, d), 5);
    CHECK(oracle::ks_distance(s.rsp0) < oracle::ks_critical_1pct(s.rsp0.size()));
    CHECK(oracle::ks_distance(s.rsp12) < oracle::ks_critical_1pct(s.rsp12.size()));
    CHECK(s.beyond_range == 0);
  }
}
