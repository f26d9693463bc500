#include <cmath>
#include <sstream>

#include "doctest.h"
#include "idm/config.hpp"
#include "idm/error.hpp"
#include "idm/fit.hpp"
#include "idm/io.hpp"
#include "idm/simulate.hpp"

using namespace idm;

namespace {

ErrorKind config_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_config(in);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("numbers round-trip and NaN prints as NA") {
    for (double v : {0.1, -3.0, 1e-300, 123456.789, 2.0 / 3.0}) {
      std::ostringstream s;
      write_number(s, v);
      CHECK(std::stod(s.str()) == v);
    }
    std::ostringstream s;
    write_number(s, std::nan(""));
    CHECK(s.str() == "NA");
    CHECK(json_number(INFINITY).is_null());
  }

  TEST_CASE("fit documents round-trip") {
    Scenario sc = Scenario::reference(std::nullopt);
    sc.n = 200;
    const Dataset d = simulate_dataset(sc, 3).data;
    const ModelFit f = fit_no_frailty(d, fit_config_for(sc, FitConfig{}));
    const Json j = fit_to_json(f);
    CHECK_FALSE(j.contains("sigma"));
    CHECK(j["model"] == "no-frailty");
    const ModelFit g = fit_from_json(Json::parse(j.dump()));
    CHECK_FALSE(g.sigma.has_value());
    CHECK(g.covariate_names == f.covariate_names);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(g.transitions[k].beta == f.transitions[k].beta);
      CHECK(g.transitions[k].columns == f.transitions[k].columns);
      for (double t : {0.01, 0.2, 0.5, 1.0, 3.0})
        CHECK(g.transitions[k].hazard(t) == f.transitions[k].hazard(t));
    }
    CHECK(g.bandwidths.beta[1].density == f.bandwidths.beta[1].density);
    std::ostringstream csv;
    write_hazard_grid_csv(csv, f.transitions[0]);
    CHECK(csv.str().rfind("t,H\n", 0) == 0);
  }

  TEST_CASE("a frailty fit keeps sigma") {
    ModelFit f;
    f.covariate_names = {"x"};
    for (std::size_t k = 0; k < 3; ++k) {
      f.transitions[k].transition = kTransitions[k];
      f.transitions[k].columns = {0};
      f.transitions[k].names = {"x"};
      f.transitions[k].beta = {0.1 * k};
      f.transitions[k].hazard = TabulatedHazard({0.5, 1.0}, {0.1, 0.3});
    }
    f.sigma = 0.75;
    const ModelFit g = fit_from_json(fit_to_json(f));
    CHECK(*g.sigma == 0.75);
    CHECK(g.transitions[2].hazard(0.75) == f.transitions[2].hazard(0.75));
  }

  TEST_CASE("malformed fit documents are parse errors") {
    try {
      fit_from_json(Json::parse(R"({"covariate_names": ["x"], "transitions": []})"));
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ParseError);
    }
    try {
      fit_from_json(Json::parse(R"({"transitions": 3})"));
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ParseError);
    }
  }

  TEST_CASE("error documents") {
    const Json j = error_json(ErrorKind::ZeroEvents, "none");
    CHECK(j["error"] == "ZeroEvents");
    CHECK(j["message"] == "none");
  }
}

TEST_SUITE("config") {
  TEST_CASE("a two-line config runs the reference design") {
    std::istringstream in("[scenario]\nsigma = 0.5\n");
    const RunConfig rc = parse_config(in);
    CHECK(*rc.scenario.sigma == 0.5);
    CHECK(rc.scenario.n == 1000);
    CHECK(rc.scenario.censor_max == 15.0);
    CHECK(rc.fit.sigma_init == 2.0);
    CHECK(rc.fit.zeta_beta == 0.5);
    CHECK(rc.fit.zeta_hazard == 0.01);
    CHECK(rc.fit.tol_beta == 1e-5);
    CHECK(rc.fit.tol_hazard == 1e-4);
    CHECK(rc.fit.tol_sigma == 1e-4);
    CHECK(rc.scenario.beta[2] == std::vector<double>{0.5, 0.5, 1.0});
    rc.scenario.validate();
  }

  TEST_CASE("every section is read") {
    std::istringstream in(R"(; comment
[scenario]
n = 250
sigma = none
censor_max = inf
replicates = 7
seed = 42
time_points = 0.25, 0.5
[covariates]
a = uniform(0,2)
b = bernoulli(0.3)
[transition.01]
covariates = a
beta = 0.4
hazard = constant(1.5)
[transition.02]
covariates = b
beta = -0.2
hazard = inverse(2)
[transition.12]
covariates = a, b
beta = 1, 0
hazard = lognormal
[fit]
zeta_beta = 0.6
kernel = logistic
max_iterations = 50
covariates_12 = a
[bootstrap]
B = 20
level = 0.9
[gof]
bins = 40
)");
    const RunConfig rc = parse_config(in);
    CHECK_FALSE(rc.scenario.sigma.has_value());
    CHECK(std::isinf(rc.scenario.censor_max));
    CHECK(rc.scenario.replicates == 7);
    CHECK(rc.seed == 42);
    CHECK(rc.scenario.seed == 42);
    CHECK(rc.scenario.time_points == std::vector<double>{0.25, 0.5});
    CHECK(rc.scenario.covariates.size() == 2);
    CHECK(rc.scenario.hazards[1].family == HazardFamily::Inverse);
    CHECK(rc.scenario.hazards[2].family == HazardFamily::Lognormal);
    CHECK(rc.scenario.transition_covariates[2] == std::vector<std::string>{"a", "b"});
    CHECK(rc.fit.kernel.type() == KernelType::Logistic);
    CHECK(rc.fit.max_iterations == 50);
    CHECK(rc.fit.covariates[2] == std::vector<std::string>{"a"});
    CHECK(rc.bootstrap == 20);
    CHECK(rc.level == 0.9);
    CHECK(rc.bins == 40);
    rc.scenario.validate();
  }

  TEST_CASE("bad configs are config errors") {
    CHECK(config_error("[scenario]\nsigmaa = 1\n") == ErrorKind::ConfigError);
    CHECK(config_error("[nonsense]\nx = 1\n") == ErrorKind::ConfigError);
    CHECK(config_error("[scenario]\nn = ten\n") == ErrorKind::ConfigError);
    CHECK(config_error("[fit]\nzeta_beta = -1\n") == ErrorKind::ConfigError);
    CHECK(config_error("[fit]\nkernel = boxcar\n") == ErrorKind::ConfigError);
    CHECK(config_error("[bootstrap]\nlevel = 1.5\n") == ErrorKind::ConfigError);
    CHECK(config_error("[transition.01]\nhazard = weibull(1)\n") == ErrorKind::ConfigError);
    CHECK(config_error("[scenario\n") == ErrorKind::ConfigError);
  }
}
