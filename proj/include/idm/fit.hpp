#pragma once

#include <span>

#include "idm/data.hpp"
#include "idm/model.hpp"

namespace idm {

/// Step 0: E1 ≡ 1, β0k from the no-frailty profile likelihood started at 0,
/// β12 = 0, kernel hazards at those values, σ = cfg.sigma_init.
ModelFit initialize(const Dataset& data, const FitConfig& cfg);

/// One E-step followed by the σ, β and hazard updates.
ModelFit em_iterate(const ModelFit& fit, const Dataset& data, const FitConfig& cfg);

/// Runs EM to convergence or cfg.max_iterations; non-convergence is
/// reported through `converged` and a warning.
ModelFit fit(const Dataset& data, const FitConfig& cfg);

/// The model with γ ≡ 1: one maximisation per transition, then hazards.
ModelFit fit_no_frailty(const Dataset& data, const FitConfig& cfg);

/// EM with bootstrap weights G (positive, rescaled to mean 1). Every subject
/// term carries its own G_i, every inner sum G_j. With `warm_start` the run
/// starts from that fit instead of Step 0. Bandwidths come from the
/// unweighted data.
ModelFit weighted_fit(const Dataset& data, std::span<const double> weights,
                      const FitConfig& cfg, const ModelFit* warm_start = nullptr);
ModelFit weighted_fit_no_frailty(const Dataset& data, std::span<const double> weights,
                                 const FitConfig& cfg);

/// Columns of x used by each transition under `cfg`.
std::array<std::vector<std::size_t>, 3> resolve_covariates(const Dataset& data,
                                                           const FitConfig& cfg);

}  // namespace idm
