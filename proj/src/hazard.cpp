#include "idm/hazard.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "idm/error.hpp"
#include "idm/kernel_sums.hpp"
#include "idm/numerics.hpp"

namespace idm {

std::string_view to_string(Transition t) noexcept {
  switch (t) {
    case Transition::T01: return "01";
    case Transition::T02: return "02";
    case Transition::T12: return "12";
  }
  return "??";
}

Transition transition_from_string(std::string_view s) {
  if (s == "01") return Transition::T01;
  if (s == "02") return Transition::T02;
  if (s == "12") return Transition::T12;
  throw Error(ErrorKind::ConfigError, "unknown transition '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

namespace {

// log(1 - Φ(z)), finite far into the upper tail.
double log_upper_tail(double z) {
  if (z < 30.0) return std::log(normal_upper_tail(z));
  const double z2 = z * z;
  return -0.5 * z2 - std::log(z * std::sqrt(2 * std::numbers::pi)) +
         std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

}  // namespace

double ParametricHazard::hazard(double t) const {
  if (t < 0.0) throw Error(ErrorKind::DomainError, "hazard needs t >= 0");
  switch (family) {
    case HazardFamily::Linear: return c * t;
    case HazardFamily::Constant: return c;
    case HazardFamily::Inverse: return c / (1.0 + t);
    case HazardFamily::Lognormal: {
      if (t == 0.0) return 0.0;
      const double z = std::log(t);
      return c * std::exp(std::log(kernel_density(z)) - log_upper_tail(z)) / t;
    }
  }
  return 0.0;
}

double ParametricHazard::cumulative(double t) const {
  if (t < 0.0) throw Error(ErrorKind::DomainError, "cumulative hazard needs t >= 0");
  switch (family) {
    case HazardFamily::Linear: return 0.5 * c * t * t;
    case HazardFamily::Constant: return c * t;
    case HazardFamily::Inverse: return c * std::log1p(t);
    case HazardFamily::Lognormal:
      if (t == 0.0) return 0.0;
      return -c * log_upper_tail(std::log(t));
  }
  return 0.0;
}

double ParametricHazard::inverse_cumulative(double y) const {
  if (!(y >= 0.0)) throw Error(ErrorKind::DomainError, "inverse cumulative needs y >= 0");
  if (y == 0.0) return 0.0;
  switch (family) {
    case HazardFamily::Linear: return std::sqrt(2.0 * y / c);
    case HazardFamily::Constant: return y / c;
    case HazardFamily::Inverse: return std::expm1(y / c);
    case HazardFamily::Lognormal: {
      auto f = [&](double z) { return -c * log_upper_tail(z) - y; };
      double lo = -10.0, hi = 10.0;
      while (f(lo) > 0.0 && lo > -1e3) lo *= 2;
      while (f(hi) < 0.0 && hi < 1e3) hi *= 2;
      return std::exp(find_root(f, lo, hi, 1e-14));
    }
  }
  return 0.0;
}

ParametricHazard ParametricHazard::parse(std::string_view text) {
  auto fail = [&]() -> ParametricHazard {
    throw Error(ErrorKind::ConfigError, "cannot parse hazard '" + std::string(text) + "'");
  };
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  const auto open = text.find('(');
  const std::string_view name = text.substr(0, open);
  ParametricHazard h;
  if (name == "linear") h.family = HazardFamily::Linear;
  else if (name == "constant") h.family = HazardFamily::Constant;
  else if (name == "inverse") h.family = HazardFamily::Inverse;
  else if (name == "lognormal") h.family = HazardFamily::Lognormal;
  else return fail();
  if (open == std::string_view::npos) {
    if (h.family != HazardFamily::Lognormal) return fail();
    h.c = 1.0;
    return h;
  }
  if (text.back() != ')') return fail();
  const std::string_view arg = text.substr(open + 1, text.size() - open - 2);
  const auto res = std::from_chars(arg.data(), arg.data() + arg.size(), h.c);
  if (res.ec != std::errc() || res.ptr != arg.data() + arg.size() || !(h.c > 0.0) ||
      !std::isfinite(h.c))
    return fail();
  return h;
}

std::string ParametricHazard::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (family) {
    case HazardFamily::Linear: os << "linear"; break;
    case HazardFamily::Constant: os << "constant"; break;
    case HazardFamily::Inverse: os << "inverse"; break;
    case HazardFamily::Lognormal: os << "lognormal"; break;
  }
  os << '(' << c << ')';
  return os.str();
}

// ---------------------------------------------------------------------------

TabulatedHazard::TabulatedHazard(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size())
    throw Error(ErrorKind::DimensionMismatch, "hazard grid columns differ in length");
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (!std::isfinite(times_[k]) || !std::isfinite(values_[k]) || !(times_[k] > 0.0) ||
        values_[k] < 0.0)
      throw Error(ErrorKind::DomainError, "hazard grid entries must be finite and positive");
    if (k > 0 && (times_[k] <= times_[k - 1] || values_[k] < values_[k - 1]))
      throw Error(ErrorKind::DomainError, "hazard grid must be increasing in t and non-decreasing in H");
  }
}

double TabulatedHazard::cumulative(double t) const noexcept {
  if (times_.empty() || !(t > 0.0)) return 0.0;
  if (t >= times_.back()) return values_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times_.begin());
  const double t0 = k == 0 ? 0.0 : times_[k - 1];
  const double h0 = k == 0 ? 0.0 : values_[k - 1];
  const double w = (t - t0) / (times_[k] - t0);
  return h0 + w * (values_[k] - h0);
}

// ---------------------------------------------------------------------------

BaselineHazard::BaselineHazard(Transition transition, std::shared_ptr<const HazardSums> sums,
                               TabulatedHazard grid, std::size_t degenerate_points)
    : transition_(transition),
      sums_(std::move(sums)),
      grid_(std::move(grid)),
      degenerate_points_(degenerate_points) {}

double BaselineHazard::hazard(double t) const {
  if (!(t > 0.0) || !sums_) return 0.0;
  return sums_->ratio(std::log(t)).value / t;
}

// ---------------------------------------------------------------------------

double CumulativeHazard::operator()(double t) const {
  return std::visit(
      [t](const auto& h) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(h)>, ParametricHazard>)
          return h.cumulative(std::max(t, 0.0));
        else
          return h.cumulative(t);
      },
      impl_);
}

double CumulativeHazard::upper() const {
  if (const auto* tab = std::get_if<TabulatedHazard>(&impl_)) return tab->upper();
  if (const auto* ker = std::get_if<BaselineHazard>(&impl_)) return ker->grid().upper();
  return std::numeric_limits<double>::infinity();
}

TabulatedHazard CumulativeHazard::tabulate(double lo, double hi, std::size_t points) const {
  if (const auto* tab = std::get_if<TabulatedHazard>(&impl_)) return *tab;
  if (const auto* ker = std::get_if<BaselineHazard>(&impl_)) return ker->grid();
  if (!(lo > 0.0 && hi > lo) || points < 2)
    throw Error(ErrorKind::DomainError, "invalid tabulation range");
  const auto& par = std::get<ParametricHazard>(impl_);
  std::vector<double> t(points), h(points);
  const double step = std::log(hi / lo) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) {
    t[k] = lo * std::exp(step * static_cast<double>(k));
    h[k] = par.cumulative(t[k]);
  }
  t.back() = hi;
  h.back() = par.cumulative(hi);
  return TabulatedHazard(std::move(t), std::move(h));
}

}  // namespace idm
