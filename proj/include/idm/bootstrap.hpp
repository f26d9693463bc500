#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "idm/data.hpp"
#include "idm/model.hpp"
#include "idm/rng.hpp"

namespace idm {

/// One row of the flattened parameter vector: a coefficient (named by its
/// covariate, tagged with its transition) or σ (transition left empty).
struct ParameterId {
  std::string name;
  std::string transition;
};

std::vector<ParameterId> parameter_ids(const ModelFit& fit);
std::vector<double> parameter_values(const ModelFit& fit);

/// n i.i.d. standard exponential weights.
std::vector<double> draw_weights(std::size_t n, Rng& rng);

struct BootstrapOptions {
  /// Start each replicate from the full-data fit rather than Step 0.
  bool warm_start = true;
  bool no_frailty = false;
  /// Times at which replicate baseline cumulative hazards are recorded.
  std::vector<double> time_points{};
};

struct ReplicateSummary {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<double> parameters;
  std::array<std::vector<double>, 3> hazard_at{};
  int iterations = 0;
};

struct BootstrapResult {
  std::vector<ParameterId> parameters;
  std::vector<ReplicateSummary> replicates;
  std::vector<double> se;
  std::vector<double> time_points;
  std::array<std::vector<double>, 3> hazard_se{};
  std::size_t requested = 0;
  std::size_t n_failed = 0;
  std::vector<std::string> failures;
  std::uint64_t seed = 0;
};

/// B weighted refits with weights from independent per-replicate streams of
/// `seed`. Replicates that throw or fail to converge are counted, not fatal;
/// TooManyFailures when more than B/2 fail. `full_fit` is the unweighted fit
/// (computed when null).
BootstrapResult bootstrap(const Dataset& data, const FitConfig& cfg, int B, std::uint64_t seed,
                          const BootstrapOptions& opts = {}, const ModelFit* full_fit = nullptr);

/// Sample SD (divisor m - 1) of each column.
std::vector<double> column_sd(const std::vector<std::vector<double>>& rows);

struct InferenceRow {
  std::string parameter;
  std::string transition;
  double estimate = 0.0;
  double exp_estimate = 0.0;  // NaN for σ
  double se = 0.0;
  double z = 0.0;
  double p = 1.0;
  double p_holm = 1.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct InferenceTable {
  double level = 0.95;
  std::vector<InferenceRow> rows;
};

/// Step-down Holm adjustment, returned in the input order.
std::vector<double> holm_adjust(const std::vector<double>& p);

/// Wald rows from estimates and SEs; Holm runs over the coefficient rows.
InferenceTable wald_table(const std::vector<ParameterId>& ids,
                          const std::vector<double>& estimates, const std::vector<double>& se,
                          double level);
InferenceTable wald_table(const ModelFit& fit, const BootstrapResult& boot, double level);

void write_inference_csv(std::ostream& out, const InferenceTable& table);
nlohmann::ordered_json inference_to_json(const InferenceTable& table);

}  // namespace idm
