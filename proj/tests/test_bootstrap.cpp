#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "idm/bootstrap.hpp"
#include "idm/error.hpp"
#include "idm/simulate.hpp"

using namespace idm;

TEST_SUITE("bootstrap") {
  TEST_CASE("exponential weights") {
    Rng rng = make_rng(10, 3);
    const std::vector<double> w = draw_weights(100000, rng);
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / w.size();
    double var = 0.0;
    for (double g : w) var += (g - mean) * (g - mean);
    var /= w.size() - 1;
    CHECK(std::abs(mean - 1.0) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
    CHECK(*std::min_element(w.begin(), w.end()) > 0.0);
    Rng again = make_rng(10, 3);
    CHECK(draw_weights(100000, again) == w);
  }

  TEST_CASE("Holm adjustment by hand") {
    const auto a = holm_adjust({0.01, 0.04, 0.03});
    CHECK(std::abs(a[0] - 0.03) < 1e-15);
    CHECK(std::abs(a[1] - 0.06) < 1e-15);
    CHECK(std::abs(a[2] - 0.06) < 1e-15);
    CHECK(holm_adjust({0.2}) == std::vector<double>{0.2});
    CHECK(holm_adjust({1.0, 1.0, 1.0}) == std::vector<double>{1.0, 1.0, 1.0});
    CHECK_THROWS_AS(holm_adjust({1.2}), Error);
  }

  TEST_CASE("Holm adjustment is monotone and never below the raw p") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(0.0, 0.2);
    for (int r = 0; r < 50; ++r) {
      std::vector<double> p(9);
      for (double& v : p) v = U(rng);
      const auto adj = holm_adjust(p);
      for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(adj[i] >= p[i]);
        CHECK(adj[i] <= 1.0);
        for (std::size_t j = 0; j < p.size(); ++j)
          if (p[i] <= p[j]) CHECK(adj[i] <= adj[j]);
      }
    }
  }

  TEST_CASE("Wald rows") {
    const InferenceTable t = wald_table({{"x", "01"}, {"y", "02"}, {"sigma", ""}},
                                        {0.0, 0.7, 1.2}, {1.0, 0.0, 0.3}, 0.95);
    CHECK(std::abs(t.rows[0].ci_lo + 1.959963984540054) < 1e-9);
    CHECK(std::abs(t.rows[0].ci_hi - 1.959963984540054) < 1e-9);
    CHECK(t.rows[0].p == 1.0);
    CHECK(t.rows[1].ci_lo == 0.7);
    CHECK(t.rows[1].ci_hi == 0.7);
    CHECK(t.rows[1].p == 0.0);
    CHECK(std::abs(t.rows[1].exp_estimate - std::exp(0.7)) < 1e-15);
    CHECK(std::isnan(t.rows[2].exp_estimate));
    CHECK(std::abs(t.rows[2].p - 2 * 0.5 * std::erfc(4.0 / std::sqrt(2.0))) < 1e-12);
    for (const auto& r : t.rows) {
      CHECK(r.p_holm >= r.p);
      CHECK((r.ci_lo <= r.estimate && r.estimate <= r.ci_hi));
    }
    std::ostringstream csv;
    write_inference_csv(csv, t);
    CHECK(csv.str().rfind("parameter,transition,estimate,exp,se,z,p,p_holm,ci_lo,ci_hi\n", 0) == 0);
    CHECK_THROWS_AS(wald_table({{"x", "01"}}, {0.0}, {1.0}, 1.0), Error);
  }

  TEST_CASE("bootstrap SE does not depend on replicate order") {
    std::vector<std::vector<double>> rows{{1.0, 2.0}, {1.5, 1.0}, {0.7, 2.2}, {1.1, 3.0}};
    const auto sd = column_sd(rows);
    std::reverse(rows.begin(), rows.end());
    const auto sd2 = column_sd(rows);
    for (int k = 0; k < 2; ++k) CHECK(std::abs(sd[k] - sd2[k]) < 1e-15);
    CHECK(std::abs(sd[0] - std::sqrt((0.005625 + 0.180625 + 0.140625 + 0.000625) / 3.0)) < 1e-12);
  }

  TEST_CASE("bootstrap counts failed replicates and gives up past half") {
    Scenario sc = Scenario::reference(1.0);
    sc.n = 150;
    const Dataset d = simulate_dataset(sc, 6).data;
    FitConfig cfg = fit_config_for(sc, FitConfig{});
    cfg.max_iterations = 1;
    try {
      bootstrap(d, cfg, 4, 1);
      FAIL("expected TooManyFailures");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::TooManyFailures);
    }
  }

  TEST_CASE("no-frailty bootstrap is reproducible") {
    Scenario sc = Scenario::reference(std::nullopt);
    sc.n = 200;
    const Dataset d = simulate_dataset(sc, 2).data;
    const FitConfig cfg = fit_config_for(sc, FitConfig{});
    BootstrapOptions bo;
    bo.no_frailty = true;
    bo.time_points = {0.5};
    const BootstrapResult a = bootstrap(d, cfg, 4, 77, bo);
    const BootstrapResult b = bootstrap(d, cfg, 4, 77, bo);
    CHECK(a.replicates.size() + a.n_failed == 4);
    CHECK(a.se == b.se);
    CHECK(a.se.size() == 7);
    for (double s : a.se) CHECK(s > 0.0);
    CHECK(a.hazard_se[0].size() == 1);
    CHECK(a.replicates[0].seed != a.replicates[1].seed);
  }
}
