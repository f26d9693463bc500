#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "idm/data.hpp"
#include "idm/hazard.hpp"
#include "idm/numerics.hpp"

namespace idm {

/// The risk set of one transition with everything that does not depend on
/// β precomputed. For 0→k every subject is at risk from time 0 and exits at
/// V; for 1→2 only diagnosed subjects are at risk, entering at V and exiting
/// at W.
struct TransitionData {
  Transition transition = Transition::T01;
  std::size_t n_total = 0;          // normaliser n of every average
  std::size_t p = 0;                // covariates used by this transition
  std::vector<std::size_t> rows;    // dataset row of each member
  std::vector<double> log_exit;     // log V or log W
  std::vector<double> log_entry;    // log V for 1→2, empty otherwise
  std::vector<double> x;            // members × p, row-major
  std::vector<char> event;
  std::vector<double> weight;       // bootstrap weight G (1 when unweighted)

  std::size_t size() const noexcept { return rows.size(); }
  bool truncated() const noexcept { return !log_entry.empty(); }
  std::size_t events() const noexcept;
};

/// `covariates` picks dataset columns; `weights` is empty or length n and
/// should already have mean 1.
TransitionData make_transition_data(const Dataset& data, Transition t,
                                    std::span<const std::size_t> covariates,
                                    std::span<const double> weights = {});

struct KernelBandwidth {
  double density = 0.0;     // kernel density terms
  double cumulative = 0.0;  // integrated-kernel terms
};

/// Smoothed profile log-likelihood of β for one transition, with the
/// frailty means `e1` given per member. When `grad` is non-empty the
/// gradient in β is written to it. Windowed sums over sorted residuals,
/// parallel over events, summed in a fixed order.
double profile_loglik(const TransitionData& td, std::span<const double> beta,
                      std::span<const double> e1, KernelBandwidth bw, Kernel kernel,
                      std::span<double> grad = {});

/// Direct double loop over all pairs, single-threaded. Kept as the
/// reference the fast version is tested and benchmarked against.
double profile_loglik_reference(const TransitionData& td, std::span<const double> beta,
                                std::span<const double> e1, KernelBandwidth bw,
                                Kernel kernel, std::span<double> grad = {});

/// The ratio g(s) = h(e^s) e^s of the hazard estimator on the log-time axis,
/// evaluated with windowed sums over sorted residuals.
class HazardSums {
 public:
  HazardSums(const TransitionData& td, std::span<const double> beta,
             std::span<const double> e1, KernelBandwidth bw, Kernel kernel);

  /// (1/(n a)) Σ δ_j G_j K((r_j - s)/a)
  double numerator(double s) const;
  /// (1/n) Σ G_j E1_j [F((r_j - s)/a) - F((e_j - s)/a)]
  double denominator(double s) const;

  /// Members with entry residual < s ≤ exit residual.
  std::size_t at_risk(double s) const noexcept;
  /// {smallest entry residual (-inf for 0→k), largest event residual}.
  std::vector<double> support() const;

  struct Ratio {
    double value = 0.0;
    bool degenerate = false;
  };
  /// 0 outside the support or where nobody is at risk; 0 and flagged when the denominator is
  /// below 1e-10 while the numerator is positive.
  Ratio ratio(double s) const;

  /// Event residuals, ascending.
  const std::vector<double>& event_residuals() const noexcept { return event_r_; }
  /// Largest exit residual on the time scale, exp(max r).
  double max_time() const noexcept;
  double degenerate_threshold() const noexcept { return 1e-10; }

 private:
  double n_ = 1.0;
  KernelBandwidth bw_;
  Kernel kernel_;
  std::vector<double> event_r_, event_w_;
  std::vector<double> exit_r_, exit_suffix_;
  std::vector<double> exit_c_;
  std::vector<double> entry_r_, entry_suffix_;
  std::vector<double> entry_c_;
};

/// Brute-force numerator and denominator of the hazard ratio at s.
struct HazardTerms {
  double numerator = 0.0;
  double denominator = 0.0;
};
HazardTerms hazard_terms_reference(const TransitionData& td, std::span<const double> beta,
                                   std::span<const double> e1, KernelBandwidth bw,
                                   Kernel kernel, double s);

/// F(hi) - F(lo) for hi ≥ lo, using upper tails when both are positive.
double cdf_difference(const Kernel& kernel, double hi, double lo) noexcept;

/// Per-transition residuals r = log time - βᵀx for every member.
std::vector<double> exit_residuals(const TransitionData& td, std::span<const double> beta);
std::vector<double> entry_residuals(const TransitionData& td, std::span<const double> beta);

}  // namespace idm
