#include "idm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <string>

#include "idm/error.hpp"

namespace idm {

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw Error(ErrorKind::DomainError, "log_gamma requires x > 0");
  return std::lgamma(x);
}

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw Error(ErrorKind::DomainError, "digamma requires x > 0");
  double shift = 0.0;
  while (x < 6.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  // Asymptotic expansion with Bernoulli-number coefficients.
  const double r = 1.0 / x;
  const double r2 = r * r;
  const double tail =
      r2 * (1.0 / 12 -
            r2 * (1.0 / 120 -
                  r2 * (1.0 / 252 -
                        r2 * (1.0 / 240 -
                              r2 * (1.0 / 132 - r2 * (691.0 / 32760 - r2 / 12.0))))));
  return shift + std::log(x) - 0.5 * r - tail;
}

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw Error(ErrorKind::DomainError, "normal_quantile requires 0 < p < 1");
  // Acklam's rational approximation followed by one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

double compensated_sum(std::span<const double> values) noexcept {
  double sum = 0.0, carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  return sum + carry;
}

// ---------------------------------------------------------------------------

namespace {
constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
}

double kernel_density(double u) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

double kernel_cdf(double u) noexcept { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

std::string_view Kernel::name() const noexcept {
  return type_ == KernelType::Gaussian ? "gaussian" : "logistic";
}

Kernel Kernel::from_name(std::string_view name) {
  if (name == "gaussian") return Kernel(KernelType::Gaussian);
  if (name == "logistic") return Kernel(KernelType::Logistic);
  throw Error(ErrorKind::ConfigError, "unknown kernel '" + std::string(name) + "'");
}

double Kernel::density(double u) const noexcept {
  if (type_ == KernelType::Gaussian) return kernel_density(u);
  const double e = std::exp(-std::abs(u));
  return e / ((1 + e) * (1 + e));
}

double Kernel::cdf(double u) const noexcept {
  if (type_ == KernelType::Gaussian) return kernel_cdf(u);
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double Kernel::derivative(double u) const noexcept {
  if (type_ == KernelType::Gaussian) return -u * kernel_density(u);
  return density(u) * (1.0 - 2.0 * cdf(u));
}

void Kernel::density(std::span<const double> u, std::span<double> out) const noexcept {
  if (type_ == KernelType::Gaussian) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = -0.5 * u[i] * u[i];
    exp_batch(out, out);
    for (double& v : out) v *= kInvSqrt2Pi;
    return;
  }
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = density(u[i]);
}

void Kernel::cdf(std::span<const double> u, std::span<double> out) const noexcept {
  if (type_ == KernelType::Gaussian) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = -u[i] / std::numbers::sqrt2;
    erfc_batch(out, out);
    for (double& v : out) v *= 0.5;
    return;
  }
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = cdf(u[i]);
}

double Kernel::cutoff() const noexcept { return type_ == KernelType::Gaussian ? 9.0 : 45.0; }

// ---------------------------------------------------------------------------

namespace {

class AdaptiveSimpson {
 public:
  AdaptiveSimpson(const std::function<double(double)>& f, int budget)
      : f_(f), budget_(budget) {}

  double run(double a, double b, double abs_tol, double rel_tol) {
    rel_tol_ = rel_tol;
    const double fa = f_(a), fb = f_(b), fm = f_(0.5 * (a + b));
    const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return step(a, b, fa, fm, fb, whole, abs_tol, 0);
  }

 private:
  static constexpr int kMinDepth = 2;
  static constexpr int kMaxDepth = 60;

  double step(double a, double b, double fa, double fm, double fb, double whole,
              double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f_(lm), frm = f_(rm);
    const double left = (m - a) / 6 * (fa + 4 * flm + fm);
    const double right = (b - m) / 6 * (fm + 4 * frm + fb);
    const double delta = left + right - whole;
    // A jump never meets the halved tolerance; panels this narrow carry a
    // negligible share of any bounded integrand, so they are accepted.
    const bool settled = std::abs(delta) <= 15 * tol ||
                         std::abs(delta) <= rel_tol_ * std::abs(left + right) ||
                         (b - a) <= 1e-13 * std::max(1.0, std::abs(a) + std::abs(b)) ||
                         depth >= kMaxDepth;
    if (depth >= kMinDepth && settled) return left + right + delta / 15;
    if (--budget_ < 0)
      throw Error(ErrorKind::NonConvergence, "adaptive quadrature did not converge");
    return step(a, m, fa, flm, fm, left, tol / 2, depth + 1) +
           step(m, b, fm, frm, fb, right, tol / 2, depth + 1);
  }

  const std::function<double(double)>& f_;
  int budget_;
  double rel_tol_ = 0.0;
};

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureConfig& cfg) {
  if (!(cfg.abs_tol > 0.0))
    throw Error(ErrorKind::DomainError, "quadrature tolerance must be positive");
  if (!(a <= b)) throw Error(ErrorKind::DomainError, "integrate requires a <= b");
  if (a == b) return 0.0;
  AdaptiveSimpson simpson(f, cfg.max_subdivisions);
  return simpson.run(a, b, cfg.abs_tol, std::max(cfg.rel_tol, 1e-15));
}

// ---------------------------------------------------------------------------

double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double tol, int max_iterations) {
  double a = lo, b = hi, fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (!(fa * fb < 0.0))
    throw Error(ErrorKind::RootNotBracketed, "root is not bracketed");
  double c = b, fc = fb, d = 0.0, e = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    if ((fb > 0 && fc > 0) || (fb < 0 && fc < 0)) {
      c = a;
      fc = fa;
      e = d = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol1 = 2 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * tol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2 * xm * s;
        q = 1 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2 * xm * q * (q - r) - (b - a) * (r - 1));
        q = (q - 1) * (r - 1) * (s - 1);
      }
      if (p > 0) q = -q;
      p = std::abs(p);
      if (2 * p < std::min(3 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : (xm > 0 ? tol1 : -tol1);
    fb = f(b);
  }
  throw Error(ErrorKind::NonConvergence, "root finding did not converge");
}

ScalarMaximum maximize_scalar(const std::function<double(double)>& f, double lo,
                              double hi, double tol) {
  if (!(lo < hi)) throw Error(ErrorKind::DomainError, "maximize_scalar requires lo < hi");
  constexpr double kGolden = 0.3819660112501051;
  const double abs_tol = std::max(tol, 1e-15) / 3;
  auto g = [&](double x) {
    const double v = f(x);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };
  double a = lo, b = hi;
  double x = a + kGolden * (b - a), w = x, v = x;
  double fx = g(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < 500; ++it) {
    const double xm = 0.5 * (a + b);
    const double tol1 = abs_tol + 1e-12 * std::abs(x);
    const double tol2 = 2 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2 * (q - r);
      if (q > 0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (a - x) || p >= q * (b - x)) {
        e = x >= xm ? a - x : b - x;
        d = kGolden * e;
      } else {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
      }
    } else {
      e = x >= xm ? a - x : b - x;
      d = kGolden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
    const double fu = g(u);
    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; w = x; x = u;
      fv = fw; fw = fx; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; w = u;
        fv = fw; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }
  // The interior search never probes the ends; a monotone objective peaks there.
  ScalarMaximum best{x, -fx};
  for (double end : {lo, hi}) {
    const double fe = g(end);
    if (fe < fx) {
      fx = fe;
      best = {end, -fe};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

VectorMaximum maximize_multivariate(const ObjectiveWithGradient& f,
                                    std::span<const double> x0,
                                    const BfgsOptions& options, BfgsState* state) {
  const std::size_t n = x0.size();
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> g(n), g_new(n), x_new(n), d(n), s(n), y(n), hy(n);

  // Minimise phi = -f.
  auto phi = [&](std::span<const double> at, std::span<double> grad) {
    const double v = f(at, grad);
    for (auto& gi : grad) gi = -gi;
    return -v;
  };
  double fx = phi(x, g);
  auto finite_grad = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
  };
  if (!std::isfinite(fx) || !finite_grad(g))
    throw Error(ErrorKind::NonFiniteObjective, "objective is not finite at the start point");

  std::vector<double> h(n * n, 0.0);
  bool informed = false;
  if (state && state->inverse_hessian.size() == n * n) {
    h = state->inverse_hessian;
    informed = true;
  } else {
    for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
  }

  VectorMaximum out;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (norm(g) <= options.gradient_tol) {
      out.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc -= h[i * n + j] * g[j];
      d[i] = acc;
    }
    double slope = dot(d, g);
    if (!(slope < 0.0)) {
      std::fill(h.begin(), h.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
      informed = false;
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = dot(d, g);
    }
    double dmax = 0.0;
    for (double di : d) dmax = std::max(dmax, std::abs(di));
    if (informed && options.step_tol > 0.0 && dmax < options.step_tol) {
      out.converged = true;
      break;
    }
    double t = 1.0;
    if (!informed && dmax > 1.0) t = 1.0 / dmax;
    if (options.max_step > 0.0 && t * dmax > options.max_step) t = options.max_step / dmax;

    bool accepted = false;
    double f_new = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + t * d[i];
      f_new = phi(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      double shrink = 0.5;
      if (std::isfinite(f_new)) {
        // Quadratic interpolation along the search line, safeguarded.
        const double denom = 2.0 * (f_new - fx - slope * t);
        if (denom > 0.0) shrink = std::clamp(-slope * t / denom, 0.1, 0.5);
      }
      t *= shrink;
    }
    if (!accepted) break;
    if (!finite_grad(g_new))
      throw Error(ErrorKind::NonFiniteObjective, "gradient is not finite");

    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * norm(s) * norm(y)) {
      if (!informed) {
        const double scale = sy / dot(y, y);
        std::fill(h.begin(), h.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) h[i * n + i] = scale;
      }
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += h[i * n + j] * y[j];
        hy[i] = acc;
      }
      const double yhy = dot(y, hy);
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          h[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
      informed = true;
    }
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
  }
  if (state && informed) state->inverse_hessian = h;
  out.argmax = std::move(x);
  out.value = -fx;
  out.gradient_norm = norm(g);
  out.iterations = it;
  if (!out.converged) out.converged = out.gradient_norm <= options.gradient_tol;
  return out;
}

std::vector<double> central_gradient(const Objective& f, std::span<const double> x,
                                     double h) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double step = std::max(h, h * std::abs(x[k]));
    probe[k] = x[k] + step;
    const double up = f(probe);
    probe[k] = x[k] - step;
    const double down = f(probe);
    probe[k] = x[k];
    grad[k] = (up - down) / (2 * step);
  }
  return grad;
}

VectorMaximum maximize_multivariate(const Objective& f, std::span<const double> x0,
                                    double tol) {
  auto with_grad = [&](std::span<const double> x, std::span<double> grad) {
    const double v = f(x);
    if (!std::isfinite(v)) return v;
    const auto gr = central_gradient(f, x);
    std::copy(gr.begin(), gr.end(), grad.begin());
    return v;
  };
  BfgsOptions opts;
  opts.gradient_tol = tol;
  return maximize_multivariate(with_grad, x0, opts);
}

}  // namespace idm
