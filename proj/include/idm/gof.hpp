#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "idm/data.hpp"
#include "idm/model.hpp"

namespace idm {

/// Pr(T1 > t, T2 > t | x): [1 + σ(H01 + H02)]^{-1/σ}, or exp{-(H01 + H02)}
/// without frailty.
double marginal_survival_state0(double t, const Observation& x, const ModelFit& fit);

/// Pr(T2 > t | T1 = t1, T2 > t1, x). Throws DomainError when t < t1.
double marginal_survival_12(double t, double t1, const Observation& x, const ModelFit& fit);

struct RspSample {
  std::vector<double> rsp0;   // every subject
  std::vector<double> rsp12;  // diagnosed subjects, in data order
  /// The marginal survivals at V and W before randomization.
  std::vector<double> surv0;
  std::vector<double> surv12;
  std::uint64_t u_seed = 0;
  /// Subjects whose times lie past the hazard estimation range; their
  /// survival is floored at the boundary value.
  std::size_t beyond_range = 0;
};

/// Randomized survival probabilities. Censored subjects multiply the
/// marginal survival by U drawn from stream i of `u_seed`.
RspSample rsp(const Dataset& data, const ModelFit& fit, std::uint64_t u_seed);

struct UniformityReport {
  std::vector<double> bin_left;
  std::vector<double> bin_right;
  std::vector<std::size_t> count;
  double expected = 0.0;  // n / bins
  std::size_t n = 0;
  double ks_statistic = 0.0;
  double ks_p_value = 1.0;
};

/// Equal-width histogram on [0, 1] and the one-sample KS test against
/// U(0, 1). Throws ConfigError when bins < 2 or the sample is empty.
UniformityReport uniformity_report(std::span<const double> sample, std::size_t bins = 20);

/// sup |F_n - F| against U(0, 1).
double ks_statistic_uniform(std::span<const double> sample);
/// Asymptotic Kolmogorov tail with Stephens' finite-n correction.
double ks_p_value(double d, std::size_t n);

/// bin_left,bin_right,count,expected
void write_histogram_csv(std::ostream& out, const UniformityReport& r);

}  // namespace idm
