#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace idm {

// ---------------------------------------------------------------------------
// Special functions

/// log Γ(x) for x > 0. Throws DomainError otherwise.
double log_gamma(double x);

/// Ψ(x) = Γ'(x)/Γ(x) for x > 0. Throws DomainError otherwise.
double digamma(double x);

/// Standard normal quantile for p in (0, 1).
double normal_quantile(double p);

/// Standard normal upper tail 1 - Φ(z), accurate in the far tail.
double normal_upper_tail(double z);

/// Neumaier-compensated sum, accumulated left to right.
double compensated_sum(std::span<const double> values) noexcept;

// ---------------------------------------------------------------------------
// Smoothing kernels

enum class KernelType { Gaussian, Logistic };

/// Symmetric smoothing kernel K with its distribution function.
class Kernel {
 public:
  constexpr Kernel() = default;
  constexpr explicit Kernel(KernelType type) : type_(type) {}

  KernelType type() const noexcept { return type_; }
  std::string_view name() const noexcept;
  static Kernel from_name(std::string_view name);

  double density(double u) const noexcept;
  /// ∫_{-∞}^u K(s) ds
  double cdf(double u) const noexcept;
  /// K'(u)
  double derivative(double u) const noexcept;
  /// K'(u) reusing k = K(u).
  double derivative(double u, double k) const noexcept {
    return type_ == KernelType::Gaussian ? -u * k : -k * std::tanh(0.5 * u);
  }
  /// Element-wise forms writing into `out` (same length as `u`). In-place
  /// use (out aliasing u) is allowed.
  void density(std::span<const double> u, std::span<double> out) const noexcept;
  void cdf(std::span<const double> u, std::span<double> out) const noexcept;

  /// Beyond |u| > cutoff(), K(u)/K(0) and min(F(u), 1 - F(u)) are below
  /// 1e-17, i.e. invisible next to any O(1) term in double precision.
  double cutoff() const noexcept;

 private:
  KernelType type_ = KernelType::Gaussian;
};

/// Gaussian density and CDF.
double kernel_density(double u) noexcept;
double kernel_cdf(double u) noexcept;

/// y = exp(x) and y = erfc(x) element-wise (y may alias x). On x86-64 with
/// AVX2 these use glibc's vector math library, which agrees with the scalar
/// functions to a few ulp; results never depend on the thread count.
void exp_batch(std::span<const double> x, std::span<double> y) noexcept;
void erfc_batch(std::span<const double> x, std::span<double> y) noexcept;
bool vector_math_enabled() noexcept;

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureConfig {
  double abs_tol = 1e-8;
  /// A panel is also accepted when its error estimate is below rel_tol times
  /// its own value, so the total error stays below abs_tol + rel_tol ∫|f|
  /// and large integrals are not held to an absolute accuracy beyond double
  /// precision. Values below 1e-15 are raised to it.
  double rel_tol = 1e-12;
  int max_subdivisions = 100000;
};

/// Adaptive Simpson quadrature of f over [a, b]. Deterministic. Throws
/// NonConvergence when the subdivision budget runs out.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureConfig& cfg = {});

// ---------------------------------------------------------------------------
// Root finding and optimisation

/// Brent's method on a sign-changing bracket. Throws RootNotBracketed.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double tol = 1e-13, int max_iterations = 500);

struct ScalarMaximum {
  double argmax = 0.0;
  double value = 0.0;
};

/// Golden-section search with parabolic steps (Brent) for a unimodal f on
/// [lo, hi].
ScalarMaximum maximize_scalar(const std::function<double(double)>& f, double lo,
                              double hi, double tol);

using Objective = std::function<double(std::span<const double>)>;
/// Returns f(x) and writes ∇f(x) into the second argument.
using ObjectiveWithGradient =
    std::function<double(std::span<const double>, std::span<double>)>;

struct BfgsOptions {
  /// Converged when the Euclidean gradient norm falls below this.
  double gradient_tol = 1e-6;
  /// Also converged when the quasi-Newton step's largest coordinate falls
  /// below this (only once the curvature estimate is informed). 0 disables.
  double step_tol = 0.0;
  /// Largest coordinate change allowed in one step. 0 disables.
  double max_step = 0.0;
  int max_iterations = 200;
};

/// Inverse-Hessian estimate carried between related maximisations.
struct BfgsState {
  std::vector<double> inverse_hessian;  // row-major, dim x dim; empty = identity
};

struct VectorMaximum {
  std::vector<double> argmax;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// BFGS maximisation with an analytic gradient. A non-finite value at a
/// trial point shortens the step; non-finite f or ∇f at an accepted point
/// throws NonFiniteObjective.
VectorMaximum maximize_multivariate(const ObjectiveWithGradient& f,
                                    std::span<const double> x0,
                                    const BfgsOptions& options,
                                    BfgsState* state = nullptr);

/// BFGS with central-difference gradients, step max(1e-6, 1e-6·|x|).
VectorMaximum maximize_multivariate(const Objective& f, std::span<const double> x0,
                                    double tol);

/// Central-difference gradient with step max(h, h·|x_k|).
std::vector<double> central_gradient(const Objective& f, std::span<const double> x,
                                     double h = 1e-6);

}  // namespace idm
