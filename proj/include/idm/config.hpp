#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "idm/model.hpp"
#include "idm/simulate.hpp"

namespace idm {

/// Everything a run reads from its config file. Unset keys keep the
/// reference simulation design and the default fitting settings, so
///
///   [scenario]
///   sigma = 0.5
///
/// is a complete experiment config.
struct RunConfig {
  Scenario scenario = Scenario::reference(2.0);
  FitConfig fit{};
  bool no_frailty = false;
  int bootstrap = 0;
  bool warm_start = true;
  double level = 0.95;
  std::size_t bins = 20;
  std::uint64_t seed = 1;
};

/// INI sections: [scenario] n, sigma ("none" for γ ≡ 1), censor_max ("inf"
/// disables censoring), replicates, seed, time_points; [covariates]
/// name = uniform(a,b) | bernoulli(p); [transition.01|02|12] covariates,
/// beta, hazard; [fit] zeta_beta, zeta_hazard, sigma_init, estimate_sigma,
/// sigma_lower, sigma_upper, max_iterations, tol_beta, tol_hazard,
/// tol_sigma, kernel, grid_points, no_frailty, covariates_01|02|12;
/// [bootstrap] B, level, warm_start; [gof] bins. Unknown sections or keys
/// and malformed values throw ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

}  // namespace idm
