#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "idm/data.hpp"
#include "idm/hazard.hpp"
#include "idm/kernel_sums.hpp"
#include "idm/numerics.hpp"

namespace idm {

/// ζ τ̂ (8√2/3)^{1/5} n^{-1/5}. Throws ZeroEvents when n_jk = 0.
double bandwidth_density(double zeta, double tau_hat, std::size_t n_jk);
/// ζ υ̂ 4^{1/3} n^{-1/3}. Throws ZeroEvents when n_j = 0.
double bandwidth_cumulative(double zeta, double upsilon_hat, std::size_t n_j);

/// Sample SD, falling back to IQR/1.349 when the SD is 0. Throws
/// DegenerateBandwidth when both vanish.
double spread(std::span<const double> values);

struct BandwidthSet {
  double zeta_beta = 0.5;
  double zeta_hazard = 0.01;
  std::array<KernelBandwidth, 3> beta{};    // for the profile likelihoods
  std::array<KernelBandwidth, 3> hazard{};  // for the hazard estimators
};

/// Rule-of-thumb bandwidths for all three transitions. τ̂ is the spread of
/// the log event times of the transition, υ̂ that of log V over everyone
/// (state 0) or log W over the diagnosed (state 1). The profile likelihoods
/// get the density and cumulative rules at ζ_β; the hazard estimators use the
/// density rule at ζ_h for both of their terms. Throws ZeroEvents for a
/// transition without events.
BandwidthSet select_bandwidths(const Dataset& data, double zeta_beta, double zeta_hazard);

/// Smoothed profile log-likelihood of β for 0→k (k = 1, 2) using every
/// covariate column and one bandwidth a for both kernel terms.
double profile_loglik_0k(std::span<const double> beta, int k, const Dataset& data,
                         std::span<const double> e1, double a, Kernel kernel = {});
/// Same for 1→2; `e1` has length n and only diagnosed subjects are used.
double profile_loglik_12(std::span<const double> beta, const Dataset& data,
                         std::span<const double> e1, double a, Kernel kernel = {});

struct HazardGridConfig {
  std::size_t points = 512;
  double lower_fraction = 1e-6;  // t_min = lower_fraction · M
  double upper_margin = 1.01;    // M = upper_margin · largest residual time
  double piece_tolerance = 1e-9;
};

/// Kernel hazard estimator for one transition at β with frailty means `e1`
/// given per member of the risk set. Its cumulative hazard is the integral
/// of the hazard tabulated on a log-spaced grid.
BaselineHazard estimate_hazard(const TransitionData& td, std::span<const double> beta,
                               std::span<const double> e1, KernelBandwidth bw,
                               Kernel kernel = {}, const HazardGridConfig& grid = {});

BaselineHazard estimate_hazard_0k(std::span<const double> beta, int k, const Dataset& data,
                                  std::span<const double> e1, double a, Kernel kernel = {},
                                  const HazardGridConfig& grid = {});
BaselineHazard estimate_hazard_12(std::span<const double> beta, const Dataset& data,
                                  std::span<const double> e1, double a, Kernel kernel = {},
                                  const HazardGridConfig& grid = {});

/// Piecewise-constant hazard on J equal bins of [0, M] in residual time.
struct PiecewiseHazard {
  double upper = 0.0;
  std::vector<double> heights;

  double knot(std::size_t l) const noexcept {
    return upper * static_cast<double>(l) / static_cast<double>(heights.size());
  }
};

/// Closed-form maximising heights: weighted events in each bin over the
/// E1-weighted exposure the risk set spends in it.
PiecewiseHazard piecewise_c_hat(const TransitionData& td, std::span<const double> beta,
                                std::span<const double> e1, std::size_t J, double M);

/// The profile log-likelihood obtained by plugging those heights back in.
double piecewise_profile_loglik(const TransitionData& td, std::span<const double> beta,
                                std::span<const double> e1, std::size_t J, double M);

/// Gathers a length-n vector onto the members of a risk set.
std::vector<double> gather(const TransitionData& td, std::span<const double> full);

}  // namespace idm
