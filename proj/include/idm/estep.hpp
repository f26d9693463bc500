#pragma once

#include <array>
#include <span>

#include "idm/data.hpp"
#include "idm/model.hpp"

namespace idm {

/// H01(V e^{-η01}) + H02(V e^{-η02}) + δ1 [H12(W e^{-η12}) - H12(V e^{-η12})].
/// Throws NegativeIncrement when the bracket is below -tolerance; smaller
/// negative brackets are clamped to 0.
double total_cumulative_hazard(const Observation& obs,
                               const std::array<const CumulativeHazard*, 3>& hazards,
                               const std::array<double, 3>& eta, double tolerance = 1e-9);
double total_cumulative_hazard(const Observation& obs, const ModelFit& fit);

/// (D + 1/σ) / (1/σ + H)
double posterior_mean(int D, double sigma, double h_total);
/// Ψ(D + 1/σ) - log(1/σ + H)
double posterior_mean_log(int D, double sigma, double h_total);

/// Expected complete-data log-likelihood of σ given the posterior moments.
/// With weights G (mean 1) every subject term carries G_i.
double sigma_loglik(double sigma, std::span<const int> D, const EStepState& state,
                    std::span<const double> weights = {});

/// Maximises sigma_loglik over log σ in [lower, upper].
double maximize_sigma(std::span<const int> D, const EStepState& state,
                      std::span<const double> weights, double lower, double upper);

/// Posterior moments for every subject under `fit`. A fit without σ
/// yields E1 ≡ 1 and E2 ≡ 0.
EStepState update_estep(const Dataset& data, const ModelFit& fit);

std::vector<int> event_counts(const Dataset& data);

}  // namespace idm
