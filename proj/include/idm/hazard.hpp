#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace idm {

enum class Transition { T01 = 0, T02 = 1, T12 = 2 };

inline constexpr std::array<Transition, 3> kTransitions{Transition::T01, Transition::T02,
                                                        Transition::T12};

/// "01", "02" or "12".
std::string_view to_string(Transition t) noexcept;
Transition transition_from_string(std::string_view s);
inline std::size_t index(Transition t) noexcept { return static_cast<std::size_t>(t); }

enum class HazardFamily { Linear, Constant, Inverse, Lognormal };

/// Closed-form baseline hazards used by the simulator:
///   linear     h = c t
///   constant   h = c
///   inverse    h = c / (1 + t)
///   lognormal  h = c φ(log t) / (t (1 - Φ(log t)))
struct ParametricHazard {
  HazardFamily family = HazardFamily::Linear;
  double c = 1.0;

  double hazard(double t) const;
  double cumulative(double t) const;
  /// Smallest t with cumulative(t) = y.
  double inverse_cumulative(double y) const;

  /// Parses "linear(2)", "constant(0.5)", "inverse(1)", "lognormal" or
  /// "lognormal(2)".
  static ParametricHazard parse(std::string_view text);
  std::string describe() const;
};

/// Cumulative hazard tabulated on increasing knots with linear
/// interpolation. Below the first knot it interpolates from (0, 0); past the
/// last knot it stays constant.
class TabulatedHazard {
 public:
  TabulatedHazard() = default;
  TabulatedHazard(std::vector<double> times, std::vector<double> values);

  double cumulative(double t) const noexcept;
  double upper() const noexcept { return times_.empty() ? 0.0 : times_.back(); }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

class HazardSums;

/// Kernel estimator of a baseline hazard: h(t) from the smoothed ratio and
/// H(t) from its integral tabulated on a log-spaced grid.
class BaselineHazard {
 public:
  BaselineHazard() = default;
  BaselineHazard(Transition transition, std::shared_ptr<const HazardSums> sums,
                 TabulatedHazard grid, std::size_t degenerate_points);

  Transition transition() const noexcept { return transition_; }
  double hazard(double t) const;
  double cumulative(double t) const noexcept { return grid_.cumulative(t); }
  const TabulatedHazard& grid() const noexcept { return grid_; }
  /// Number of quadrature nodes where the denominator fell below 1e-10
  /// while the numerator was positive (hazard taken as 0 there).
  std::size_t degenerate_points() const noexcept { return degenerate_points_; }

 private:
  Transition transition_ = Transition::T01;
  std::shared_ptr<const HazardSums> sums_;
  TabulatedHazard grid_;
  std::size_t degenerate_points_ = 0;
};

/// Any baseline cumulative hazard the model can be evaluated with.
class CumulativeHazard {
 public:
  using Variant = std::variant<TabulatedHazard, ParametricHazard, BaselineHazard>;

  CumulativeHazard() = default;
  CumulativeHazard(TabulatedHazard h) : impl_(std::move(h)) {}
  CumulativeHazard(ParametricHazard h) : impl_(h) {}
  CumulativeHazard(BaselineHazard h) : impl_(std::move(h)) {}

  double operator()(double t) const;
  /// End of the estimation range; +inf for parametric families.
  double upper() const;
  /// The grid backing the evaluator; parametric families are sampled on
  /// `points` log-spaced knots over [lo, hi].
  TabulatedHazard tabulate(double lo = 1e-4, double hi = 10.0, std::size_t points = 512) const;
  const Variant& get() const noexcept { return impl_; }

 private:
  Variant impl_;
};

}  // namespace idm
