#include "idm/estep.hpp"

#include <cmath>
#include <string>

#include "idm/error.hpp"
#include "idm/numerics.hpp"

namespace idm {

double total_cumulative_hazard(const Observation& obs,
                               const std::array<const CumulativeHazard*, 3>& hazards,
                               const std::array<double, 3>& eta, double tolerance) {
  const CumulativeHazard& h01 = *hazards[0];
  const CumulativeHazard& h02 = *hazards[1];
  const CumulativeHazard& h12 = *hazards[2];
  double total = h01(obs.v * std::exp(-eta[0])) + h02(obs.v * std::exp(-eta[1]));
  if (obs.delta1) {
    const double scale = std::exp(-eta[2]);
    double bracket = h12(obs.w * scale) - h12(obs.v * scale);
    if (bracket < -tolerance)
      throw Error(ErrorKind::NegativeIncrement,
                  "1->2 cumulative hazard decreases between V and W");
    total += std::max(bracket, 0.0);
  }
  return std::max(total, 0.0);
}

double total_cumulative_hazard(const Observation& obs, const ModelFit& fit) {
  return total_cumulative_hazard(
      obs,
      {&fit.transitions[0].hazard, &fit.transitions[1].hazard, &fit.transitions[2].hazard},
      {fit.transitions[0].eta(obs), fit.transitions[1].eta(obs), fit.transitions[2].eta(obs)});
}

namespace {

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error(ErrorKind::DomainError, "sigma must be positive");
}

double mean_from_inverse(int D, double inv_sigma, double h) { return (D + inv_sigma) / (inv_sigma + h); }

double log_from_inverse(int D, double inv_sigma, double h) {
  return digamma(D + inv_sigma) - std::log(inv_sigma + h);
}

// sigma_loglik written in log σ so that 1/σ = exp(-log σ) stays accurate.
double sigma_loglik_log(double log_sigma, std::span<const int> D, const EStepState& state,
                        std::span<const double> weights) {
  const double inv = std::exp(-log_sigma);
  const std::size_t n = D.size();
  std::vector<double> a(n), b(n);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = weights.empty() ? 1.0 : weights[i];
    a[i] = g * (D[i] + inv) * state.e2[i];
    b[i] = g * state.e1[i];
    wsum += g;
  }
  const double nn = static_cast<double>(n);
  return compensated_sum(a) / nn - inv * compensated_sum(b) / nn -
         (wsum / nn) * (inv * log_sigma + log_gamma(inv));
}

}  // namespace

double posterior_mean(int D, double sigma, double h_total) {
  check_sigma(sigma);
  return mean_from_inverse(D, 1.0 / sigma, h_total);
}

double posterior_mean_log(int D, double sigma, double h_total) {
  check_sigma(sigma);
  return log_from_inverse(D, 1.0 / sigma, h_total);
}

double sigma_loglik(double sigma, std::span<const int> D, const EStepState& state,
                    std::span<const double> weights) {
  check_sigma(sigma);
  if (D.empty() || state.e1.size() != D.size() || state.e2.size() != D.size() ||
      (!weights.empty() && weights.size() != D.size()))
    throw Error(ErrorKind::DimensionMismatch, "sigma likelihood inputs differ in length");
  return sigma_loglik_log(std::log(sigma), D, state, weights);
}

double maximize_sigma(std::span<const int> D, const EStepState& state,
                      std::span<const double> weights, double lower, double upper) {
  if (D.empty() || state.e1.size() != D.size() || state.e2.size() != D.size())
    throw Error(ErrorKind::DimensionMismatch, "sigma likelihood inputs differ in length");
  const auto best = maximize_scalar(
      [&](double ls) { return sigma_loglik_log(ls, D, state, weights); }, std::log(lower),
      std::log(upper), 1e-9);
  return std::exp(best.argmax);
}

std::vector<int> event_counts(const Dataset& data) {
  std::vector<int> D(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) D[i] = data[i].events();
  return D;
}

EStepState update_estep(const Dataset& data, const ModelFit& fit) {
  const std::size_t n = data.size();
  EStepState out{std::vector<double>(n, 1.0), std::vector<double>(n, 0.0)};
  if (!fit.sigma) return out;
  check_sigma(*fit.sigma);
  const double inv = 1.0 / *fit.sigma;
  for (std::size_t i = 0; i < n; ++i) {
    const Observation& o = data[i];
    const double h = total_cumulative_hazard(o, fit);
    out.e1[i] = mean_from_inverse(o.events(), inv, h);
    out.e2[i] = log_from_inverse(o.events(), inv, h);
  }
  return out;
}

}  // namespace idm
