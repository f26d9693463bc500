#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "idm/data.hpp"
#include "idm/hazard.hpp"
#include "idm/model.hpp"
#include "idm/rng.hpp"

namespace idm {

struct CovariateSpec {
  enum class Law { Uniform, Bernoulli };
  std::string name;
  Law law = Law::Uniform;
  double a = -1.0;  // uniform lower bound, or Bernoulli probability
  double b = 1.0;   // uniform upper bound

  /// Parses "uniform(-1,1)" or "bernoulli(0.5)".
  static CovariateSpec parse(std::string name, std::string_view law);
  std::string describe() const;
};

struct Scenario {
  std::size_t n = 1000;
  std::optional<double> sigma = 2.0;  // absent: γ ≡ 1
  std::vector<CovariateSpec> covariates;
  /// Names of the covariates entering 01, 02, 12, and their true effects.
  std::array<std::vector<std::string>, 3> transition_covariates;
  std::array<std::vector<double>, 3> beta;
  std::array<ParametricHazard, 3> hazards;
  double censor_max = 15.0;  // +inf disables censoring
  int replicates = 100;
  std::uint64_t seed = 1;
  std::vector<double> time_points{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

  /// The reference design: X1, X3, X4 ~ U(-1, 1), X2 ~ Bernoulli(0.5);
  /// β01 = (1, 0.5) on (x1, x2), β02 = (1, 1) on (x2, x3),
  /// β12 = (0.5, 0.5, 1) on (x1, x2, x4); hazards 2t, 3t, 2t; C ~ U(0, 15).
  static Scenario reference(std::optional<double> sigma);

  /// Throws ConfigError on inconsistent dimensions or invalid values.
  void validate() const;
};

/// Gamma(1/σ, σ) draw, or 1 without frailty.
double sample_frailty(std::optional<double> sigma, Rng& rng);

/// Solves U = exp{-γ [H(T e^{-η}) - H(t1 e^{-η})]} for T (t1 = 0 when there
/// is no truncation). With truncation the result is strictly above t1.
double invert_time(double U, double gamma, double eta, const ParametricHazard& H,
                   std::optional<double> t1 = std::nullopt);

struct LatentTruth {
  std::vector<double> t1, t2, gamma, censor;
};

struct SimulatedData {
  Dataset data;
  LatentTruth truth;
};

/// Subject i draws from stream i of `seed`, so results do not depend on n
/// for the subjects they share.
SimulatedData simulate_dataset(const Scenario& sc, std::uint64_t seed);

struct CensoringRates {
  double before_first_event = 0.0;  // share with δ1 = δ2 = 0
  double after_diagnosis = 0.0;     // share of diagnosed with δ3 = 0
};
CensoringRates censoring_rates(const Dataset& data);

/// The generating model as a ModelFit over `data`'s columns, with the
/// parametric hazards as baselines.
ModelFit true_model(const Scenario& sc, const Dataset& data);

/// FitConfig covariate subsets matching the scenario's design.
FitConfig fit_config_for(const Scenario& sc, FitConfig base);

struct ParameterSummary {
  std::string parameter;
  std::string transition;
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;  // mean bootstrap SE; NaN without bootstrap
  double cr = 0.0;
  std::size_t count = 0;
};

struct HazardSummary {
  Transition transition = Transition::T01;
  double time = 0.0;
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
  double cr = 0.0;
};

struct ReplicateOutcome {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<double> estimates;
  std::vector<double> se;  // empty without bootstrap
  std::array<std::vector<double>, 3> hazard_at{};
  std::array<std::vector<double>, 3> hazard_se{};
  CensoringRates censoring;
  int iterations = 0;
};

struct ExperimentOptions {
  bool no_frailty = false;
  int bootstrap = 0;  // B; 0 disables
  double level = 0.95;
  std::function<void(const ReplicateOutcome&)> on_replicate{};
};

struct ExperimentSummary {
  std::vector<ParameterSummary> parameters;
  std::vector<HazardSummary> hazards;
  std::vector<ReplicateOutcome> outcomes;
  std::size_t failures = 0;
};

/// Simulates and fits sc.replicates datasets. Coverage uses the bootstrap SE
/// of each replicate when B > 0 and the empirical SD otherwise.
ExperimentSummary run_experiment(const Scenario& sc, const FitConfig& cfg,
                                 const ExperimentOptions& opts);

void write_parameter_summary_csv(std::ostream& out, const ExperimentSummary& s);
void write_hazard_summary_csv(std::ostream& out, const ExperimentSummary& s);

}  // namespace idm
