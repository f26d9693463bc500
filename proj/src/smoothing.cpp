#include "idm/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "idm/error.hpp"

namespace idm {

double bandwidth_density(double zeta, double tau_hat, std::size_t n_jk) {
  if (n_jk == 0) throw Error(ErrorKind::ZeroEvents, "no events for bandwidth");
  if (!(zeta > 0.0)) throw Error(ErrorKind::ConfigError, "zeta must be positive");
  const double c = std::pow(8.0 * std::sqrt(2.0) / 3.0, 0.2);
  return zeta * tau_hat * c * std::pow(static_cast<double>(n_jk), -0.2);
}

double bandwidth_cumulative(double zeta, double upsilon_hat, std::size_t n_j) {
  if (n_j == 0) throw Error(ErrorKind::ZeroEvents, "empty state for bandwidth");
  if (!(zeta > 0.0)) throw Error(ErrorKind::ConfigError, "zeta must be positive");
  return zeta * upsilon_hat * std::cbrt(4.0) / std::cbrt(static_cast<double>(n_j));
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

double spread(std::span<const double> values) {
  const std::size_t m = values.size();
  if (m >= 2) {
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(m);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(m - 1));
    if (sd > 0.0) return sd;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    if (iqr > 0.0) return iqr / 1.349;
  }
  throw Error(ErrorKind::DegenerateBandwidth, "log times have zero spread");
}

BandwidthSet select_bandwidths(const Dataset& data, double zeta_beta, double zeta_hazard) {
  if (!(zeta_beta > 0.0) || !(zeta_hazard > 0.0))
    throw Error(ErrorKind::ConfigError, "zeta must be positive");
  std::array<std::vector<double>, 3> events;
  std::vector<double> state0, state1;
  for (const Observation& o : data.observations()) {
    state0.push_back(std::log(o.v));
    if (o.delta1) {
      events[0].push_back(std::log(o.v));
      state1.push_back(std::log(o.w));
    }
    if (o.delta2) events[1].push_back(std::log(o.v));
    if (o.delta3) events[2].push_back(std::log(o.w));
  }
  for (Transition t : kTransitions)
    if (events[index(t)].empty())
      throw Error(ErrorKind::ZeroEvents,
                  "transition " + std::string(to_string(t)) + " has no observed events");

  auto guarded = [](std::span<const double> v, Transition t) {
    try {
      return spread(v);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " (transition " +
                                std::string(to_string(t)) + ")");
    }
  };
  const double ups0 = guarded(state0, Transition::T01);
  const double ups1 = guarded(state1, Transition::T12);

  BandwidthSet out;
  out.zeta_beta = zeta_beta;
  out.zeta_hazard = zeta_hazard;
  for (Transition t : kTransitions) {
    const auto& ev = events[index(t)];
    const double tau = guarded(ev, t);
    const bool from1 = t == Transition::T12;
    const double ups = from1 ? ups1 : ups0;
    const std::size_t nj = from1 ? state1.size() : state0.size();
    out.beta[index(t)] = {bandwidth_density(zeta_beta, tau, ev.size()),
                          bandwidth_cumulative(zeta_beta, ups, nj)};
    // The hazard estimator uses one bandwidth in both terms. A narrower
    // integrated kernel lets the ratio explode wherever the E1-weighted risk
    // set thins out, which is common in the tails of bootstrap refits.
    const double a = bandwidth_density(zeta_hazard, tau, ev.size());
    out.hazard[index(t)] = {a, a};
  }
  return out;
}

std::vector<double> gather(const TransitionData& td, std::span<const double> full) {
  std::vector<double> out(td.size());
  for (std::size_t j = 0; j < td.size(); ++j) out[j] = full[td.rows[j]];
  return out;
}

namespace {

std::vector<std::size_t> every_column(const Dataset& data) {
  std::vector<std::size_t> cols(data.dim());
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  return cols;
}

Transition from_k(int k) {
  if (k == 1) return Transition::T01;
  if (k == 2) return Transition::T02;
  throw Error(ErrorKind::DomainError, "k must be 1 or 2");
}

void check_full_e1(const Dataset& data, std::span<const double> e1) {
  if (e1.size() != data.size())
    throw Error(ErrorKind::DimensionMismatch, "e1 must have length n");
}

}  // namespace

double profile_loglik_0k(std::span<const double> beta, int k, const Dataset& data,
                         std::span<const double> e1, double a, Kernel kernel) {
  check_full_e1(data, e1);
  const TransitionData td = make_transition_data(data, from_k(k), every_column(data));
  return profile_loglik(td, beta, gather(td, e1), {a, a}, kernel);
}

double profile_loglik_12(std::span<const double> beta, const Dataset& data,
                         std::span<const double> e1, double a, Kernel kernel) {
  check_full_e1(data, e1);
  const TransitionData td = make_transition_data(data, Transition::T12, every_column(data));
  return profile_loglik(td, beta, gather(td, e1), {a, a}, kernel);
}

BaselineHazard estimate_hazard(const TransitionData& td, std::span<const double> beta,
                               std::span<const double> e1, KernelBandwidth bw, Kernel kernel,
                               const HazardGridConfig& cfg) {
  if (td.events() == 0)
    throw Error(ErrorKind::ZeroEvents, "transition " + std::string(to_string(td.transition)) +
                                           " has no observed events");
  if (cfg.points < 2) throw Error(ErrorKind::ConfigError, "hazard grid needs two points");
  auto sums = std::make_shared<const HazardSums>(td, beta, e1, bw, kernel);

  const double upper = cfg.upper_margin * sums->max_time();
  const double lower = cfg.lower_fraction * upper;
  const std::size_t m = cfg.points;
  std::vector<double> log_t(m), t(m);
  const double step = std::log(upper / lower) / static_cast<double>(m - 1);
  for (std::size_t k = 0; k < m; ++k) {
    log_t[k] = std::log(lower) + step * static_cast<double>(k);
    t[k] = std::exp(log_t[k]);
  }
  log_t.back() = std::log(upper);
  t.front() = lower;
  t.back() = upper;

  // Each kernel bump peaks at an event residual and g drops to 0 at the
  // edges of the risk set, so both are breakpoints.
  std::vector<double> peaks = sums->event_residuals();
  for (double edge : sums->support())
    if (std::isfinite(edge)) peaks.push_back(edge);
  std::sort(peaks.begin(), peaks.end());
  std::vector<double> piece(m, 0.0);
  std::vector<std::size_t> degenerate(m, 0);
  QuadratureConfig qc;
  qc.abs_tol = cfg.piece_tolerance;
  // Exceptions must not leave the parallel region; the first failing
  // interval (lowest k, for a deterministic message) is reported after it.
  std::vector<char> failed(m, 0);

#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t kk = 1; kk < static_cast<std::ptrdiff_t>(m); ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    const double a = log_t[k - 1], b = log_t[k];
    std::size_t bad = 0;
    auto g = [&](double s) {
      const auto r = sums->ratio(s);
      bad += r.degenerate;
      return r.value;
    };
    double left = a, total = 0.0;
    try {
      auto it = std::upper_bound(peaks.begin(), peaks.end(), a);
      for (; it != peaks.end() && *it < b; ++it) {
        if (*it > left) total += integrate(g, left, *it, qc);
        left = *it;
      }
      total += integrate(g, left, b, qc);
    } catch (const Error&) {
      failed[k] = 1;
    }
    piece[k] = total;
    degenerate[k] = bad;
  }

  const auto bad_piece = std::find(failed.begin(), failed.end(), 1);
  if (bad_piece != failed.end()) {
    const auto k = static_cast<std::size_t>(bad_piece - failed.begin());
    throw Error(ErrorKind::NonConvergence,
                "hazard quadrature for transition " + std::string(to_string(td.transition)) +
                    " did not converge on [" + std::to_string(t[k - 1]) + ", " +
                    std::to_string(t[k]) + "]; the weighted risk set is nearly empty there");
  }

  std::vector<double> h(m, 0.0);
  for (std::size_t k = 1; k < m; ++k) h[k] = h[k - 1] + piece[k];
  const std::size_t bad = std::accumulate(degenerate.begin(), degenerate.end(), std::size_t{0});
  return BaselineHazard(td.transition, std::move(sums), TabulatedHazard(std::move(t), std::move(h)),
                        bad);
}

BaselineHazard estimate_hazard_0k(std::span<const double> beta, int k, const Dataset& data,
                                  std::span<const double> e1, double a, Kernel kernel,
                                  const HazardGridConfig& grid) {
  check_full_e1(data, e1);
  const TransitionData td = make_transition_data(data, from_k(k), every_column(data));
  return estimate_hazard(td, beta, gather(td, e1), {a, a}, kernel, grid);
}

BaselineHazard estimate_hazard_12(std::span<const double> beta, const Dataset& data,
                                  std::span<const double> e1, double a, Kernel kernel,
                                  const HazardGridConfig& grid) {
  check_full_e1(data, e1);
  const TransitionData td = make_transition_data(data, Transition::T12, every_column(data));
  return estimate_hazard(td, beta, gather(td, e1), {a, a}, kernel, grid);
}

// ---------------------------------------------------------------------------

namespace {

struct BinTotals {
  std::vector<double> events;
  std::vector<double> exposure;
};

BinTotals bin_totals(const TransitionData& td, std::span<const double> beta,
                     std::span<const double> e1, std::size_t J, double M) {
  if (J == 0 || !(M > 0.0)) throw Error(ErrorKind::DomainError, "need J >= 1 and M > 0");
  if (e1.size() != td.size()) throw Error(ErrorKind::DimensionMismatch, "e1 has wrong length");
  const std::vector<double> r = exit_residuals(td, beta);
  const std::vector<double> e = entry_residuals(td, beta);
  const double width = M / static_cast<double>(J);
  BinTotals out{std::vector<double>(J, 0.0), std::vector<double>(J, 0.0)};
  for (std::size_t j = 0; j < td.size(); ++j) {
    const double exit = std::exp(r[j]);
    const double entry = td.truncated() ? std::exp(e[j]) : 0.0;
    const double c = td.weight[j] * e1[j];
    if (td.event[j]) {
      const auto l = std::min(J - 1, static_cast<std::size_t>(exit / width));
      out.events[l] += td.weight[j];
    }
    for (std::size_t l = 0; l < J; ++l) {
      const double lo = std::max(entry, width * static_cast<double>(l));
      const double hi = std::min(exit, width * static_cast<double>(l + 1));
      if (hi > lo) out.exposure[l] += c * (hi - lo);
    }
  }
  return out;
}

}  // namespace

PiecewiseHazard piecewise_c_hat(const TransitionData& td, std::span<const double> beta,
                                std::span<const double> e1, std::size_t J, double M) {
  const BinTotals bins = bin_totals(td, beta, e1, J, M);
  PiecewiseHazard out{M, std::vector<double>(J, 0.0)};
  for (std::size_t l = 0; l < J; ++l)
    if (bins.events[l] > 0.0 && bins.exposure[l] > 0.0)
      out.heights[l] = bins.events[l] / bins.exposure[l];
  return out;
}

double piecewise_profile_loglik(const TransitionData& td, std::span<const double> beta,
                                std::span<const double> e1, std::size_t J, double M) {
  const BinTotals bins = bin_totals(td, beta, e1, J, M);
  const double n = static_cast<double>(td.n_total);
  double value = 0.0;
  for (std::size_t j = 0; j < td.size(); ++j) {
    if (!td.event[j]) continue;
    double eta = 0.0;
    for (std::size_t l = 0; l < td.p; ++l) eta += beta[l] * td.x[j * td.p + l];
    value -= td.weight[j] * (eta + 1.0);
  }
  for (std::size_t l = 0; l < J; ++l)
    if (bins.events[l] > 0.0) value += bins.events[l] * std::log(bins.events[l] / bins.exposure[l]);
  return value / n;
}

}  // namespace idm
