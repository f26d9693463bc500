#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "idm/data.hpp"
#include "idm/hazard.hpp"
#include "idm/numerics.hpp"
#include "idm/smoothing.hpp"

namespace idm {

/// Posterior frailty moments E[γ | data] and E[log γ | data] per subject.
struct EStepState {
  std::vector<double> e1;
  std::vector<double> e2;
};

struct FitConfig {
  double zeta_beta = 0.5;
  double zeta_hazard = 0.01;
  double sigma_init = 2.0;
  /// When false σ stays at sigma_init for the whole run.
  bool estimate_sigma = true;
  double sigma_lower = 1e-4;
  double sigma_upper = 100.0;
  int max_iterations = 200;
  double tol_beta = 1e-5;
  double tol_hazard = 1e-4;
  double tol_sigma = 1e-4;
  Kernel kernel{};
  /// Covariate names entering each transition (01, 02, 12); empty means
  /// every column of the dataset.
  std::array<std::vector<std::string>, 3> covariates{};
  /// Replaces the rule-of-thumb bandwidths when set.
  std::optional<BandwidthSet> bandwidths{};
  HazardGridConfig grid{};

  /// Throws ConfigError on non-positive tolerances, ζ or σ bounds.
  void validate() const;
};

struct TransitionFit {
  Transition transition = Transition::T01;
  std::vector<std::size_t> columns;  // dataset columns of x used
  std::vector<std::string> names;
  std::vector<double> beta;
  CumulativeHazard hazard;
  BfgsState bfgs;  // curvature carried between EM iterations

  double eta(const Observation& o) const noexcept;
};

struct TraceEntry {
  int iteration = 0;
  std::optional<double> sigma;
  std::array<std::vector<double>, 3> beta;
  double max_delta_beta = 0.0;
  std::array<double, 3> delta_hazard{};
  double delta_sigma = 0.0;
};

struct ModelFit {
  std::vector<std::string> covariate_names;  // columns of the fitted dataset
  std::array<TransitionFit, 3> transitions;
  std::optional<double> sigma;  // absent for the no-frailty model
  EStepState estep;
  int iterations = 0;
  bool converged = false;
  std::vector<TraceEntry> trace;
  BandwidthSet bandwidths;
  std::vector<std::string> warnings;

  TransitionFit& operator[](Transition t) { return transitions[index(t)]; }
  const TransitionFit& operator[](Transition t) const { return transitions[index(t)]; }
};

}  // namespace idm
