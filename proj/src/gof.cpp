#include "idm/gof.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "idm/error.hpp"
#include "idm/io.hpp"
#include "idm/rng.hpp"

namespace idm {

namespace {

double state0_sum(double t, const Observation& x, const ModelFit& fit) {
  const auto& f01 = fit.transitions[0];
  const auto& f02 = fit.transitions[1];
  return f01.hazard(t * std::exp(-f01.eta(x))) + f02.hazard(t * std::exp(-f02.eta(x)));
}

bool beyond(double t, const Observation& x, const TransitionFit& f) {
  return t * std::exp(-f.eta(x)) > f.hazard.upper();
}

}  // namespace

double marginal_survival_state0(double t, const Observation& x, const ModelFit& fit) {
  if (t <= 0.0) return 1.0;
  const double h = state0_sum(t, x, fit);
  if (!fit.sigma) return std::exp(-h);
  const double s = *fit.sigma;
  return std::exp(-std::log1p(s * h) / s);
}

double marginal_survival_12(double t, double t1, const Observation& x, const ModelFit& fit) {
  if (t < t1) throw Error(ErrorKind::DomainError, "marginal_survival_12 needs t >= t1");
  const auto& f12 = fit.transitions[2];
  const double scale = std::exp(-f12.eta(x));
  const double dh = std::max(f12.hazard(t * scale) - f12.hazard(t1 * scale), 0.0);
  if (!fit.sigma) return std::exp(-dh);
  const double s = *fit.sigma;
  const double base = 1.0 + s * state0_sum(t1, x, fit);
  return std::exp(-(1.0 / s + 1.0) * std::log1p(s * dh / base));
}

RspSample rsp(const Dataset& data, const ModelFit& fit, std::uint64_t u_seed) {
  RspSample out;
  out.u_seed = u_seed;
  out.rsp0.resize(data.size());
  out.surv0.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Observation& o = data[i];
    Rng rng = make_rng(u_seed, i);
    const double u1 = uniform_open(rng);
    const double u2 = uniform_open(rng);
    const double s0 = marginal_survival_state0(o.v, o, fit);
    out.surv0[i] = s0;
    out.rsp0[i] = (o.delta1 + o.delta2 == 1) ? s0 : u1 * s0;
    bool far = beyond(o.v, o, fit.transitions[0]) || beyond(o.v, o, fit.transitions[1]);
    if (o.delta1) {
      const double s12 = marginal_survival_12(o.w, o.v, o, fit);
      out.surv12.push_back(s12);
      out.rsp12.push_back(o.delta3 ? s12 : u2 * s12);
      far = far || beyond(o.w, o, fit.transitions[2]);
    }
    if (far) ++out.beyond_range;
  }
  return out;
}

double ks_statistic_uniform(std::span<const double> sample) {
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = std::clamp(x[i], 0.0, 1.0);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_p_value(double d, std::size_t n) {
  if (n == 0) return 1.0;
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * d;
  if (lambda < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

UniformityReport uniformity_report(std::span<const double> sample, std::size_t bins) {
  if (bins < 2) throw Error(ErrorKind::ConfigError, "need at least 2 histogram bins");
  if (sample.empty()) throw Error(ErrorKind::ConfigError, "empty RSP sample");
  UniformityReport r;
  r.n = sample.size();
  r.count.assign(bins, 0);
  for (std::size_t b = 0; b < bins; ++b) {
    r.bin_left.push_back(static_cast<double>(b) / bins);
    r.bin_right.push_back(static_cast<double>(b + 1) / bins);
  }
  for (double u : sample) {
    const auto b = static_cast<std::size_t>(std::clamp(u, 0.0, 1.0) * bins);
    ++r.count[std::min(b, bins - 1)];
  }
  r.expected = static_cast<double>(r.n) / bins;
  r.ks_statistic = ks_statistic_uniform(sample);
  r.ks_p_value = ks_p_value(r.ks_statistic, r.n);
  return r;
}

void write_histogram_csv(std::ostream& out, const UniformityReport& r) {
  out << "bin_left,bin_right,count,expected\n";
  for (std::size_t b = 0; b < r.count.size(); ++b)
  {
    write_number(out, r.bin_left[b]);
    out << ',';
    write_number(out, r.bin_right[b]);
    out << ',' << r.count[b] << ',';
    write_number(out, r.expected);
    out << '\n';
  }
}

}  // namespace idm
