#include "idm/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "idm/error.hpp"
#include "idm/estep.hpp"
#include "idm/kernel_sums.hpp"

namespace idm {

void FitConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::ConfigError, what);
  };
  need(zeta_beta > 0.0 && std::isfinite(zeta_beta), "zeta_beta must be positive");
  need(zeta_hazard > 0.0 && std::isfinite(zeta_hazard), "zeta_hazard must be positive");
  need(sigma_init > 0.0 && std::isfinite(sigma_init), "sigma_init must be positive");
  need(sigma_lower > 0.0 && sigma_upper > sigma_lower, "sigma bounds must satisfy 0 < lower < upper");
  need(max_iterations >= 1, "max_iterations must be at least 1");
  need(tol_beta > 0.0 && tol_hazard > 0.0 && tol_sigma > 0.0, "tolerances must be positive");
  need(grid.points >= 2 && grid.lower_fraction > 0.0 && grid.lower_fraction < 1.0 &&
           grid.upper_margin >= 1.0 && grid.piece_tolerance > 0.0,
       "invalid hazard grid settings");
  if (bandwidths)
    for (std::size_t k = 0; k < 3; ++k)
      need(bandwidths->beta[k].density > 0.0 && bandwidths->beta[k].cumulative > 0.0 &&
               bandwidths->hazard[k].density > 0.0 && bandwidths->hazard[k].cumulative > 0.0,
           "bandwidth overrides must be positive");
}

double TransitionFit::eta(const Observation& o) const noexcept {
  double s = 0.0;
  for (std::size_t l = 0; l < columns.size(); ++l) s += beta[l] * o.x[columns[l]];
  return s;
}

std::array<std::vector<std::size_t>, 3> resolve_covariates(const Dataset& data,
                                                           const FitConfig& cfg) {
  std::array<std::vector<std::size_t>, 3> out;
  for (std::size_t k = 0; k < 3; ++k) {
    if (cfg.covariates[k].empty()) {
      out[k].resize(data.dim());
      std::iota(out[k].begin(), out[k].end(), std::size_t{0});
    } else {
      for (const auto& name : cfg.covariates[k]) out[k].push_back(data.covariate_index(name));
    }
  }
  return out;
}

namespace {

std::vector<double> normalise_weights(std::span<const double> weights, std::size_t n) {
  if (weights.empty()) return {};
  if (weights.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "weight vector length differs from n");
  for (double g : weights)
    if (!(g > 0.0) || !std::isfinite(g))
      throw Error(ErrorKind::DomainError, "weights must be positive and finite");
  const auto [lo, hi] = std::minmax_element(weights.begin(), weights.end());
  if (*lo == *hi) return {};  // a constant weight cancels from every estimator
  const double mean = compensated_sum(weights) / static_cast<double>(n);
  std::vector<double> out(weights.begin(), weights.end());
  for (double& g : out) g /= mean;
  return out;
}

// Sample SD of each covariate over the risk set, 1 for a constant column.
std::vector<double> covariate_scale(const TransitionData& td) {
  std::vector<double> out(td.p, 1.0);
  const double m = static_cast<double>(td.size());
  for (std::size_t l = 0; l < td.p && td.size() > 1; ++l) {
    double mean = 0.0;
    for (std::size_t j = 0; j < td.size(); ++j) mean += td.x[j * td.p + l];
    mean /= m;
    double ss = 0.0;
    for (std::size_t j = 0; j < td.size(); ++j) {
      const double d = td.x[j * td.p + l] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / (m - 1.0));
    if (sd > 0.0 && std::isfinite(sd)) out[l] = sd;
  }
  return out;
}

class Estimator {
 public:
  Estimator(const Dataset& data, std::span<const double> weights, const FitConfig& cfg)
      : data_(data), cfg_(cfg), weights_(normalise_weights(weights, data.size())) {
    cfg_.validate();
    bandwidths_ = cfg_.bandwidths ? *cfg_.bandwidths
                                  : select_bandwidths(data, cfg_.zeta_beta, cfg_.zeta_hazard);
    columns_ = resolve_covariates(data, cfg_);
    for (Transition t : kTransitions) {
      td_[index(t)] = make_transition_data(data, t, columns_[index(t)], weights_);
      if (td_[index(t)].events() == 0)
        throw Error(ErrorKind::ZeroEvents,
                    "transition " + std::string(to_string(t)) + " has no observed events");
      scale_[index(t)] = covariate_scale(td_[index(t)]);
    }
    D_ = event_counts(data);
  }

  ModelFit skeleton() const {
    ModelFit fit;
    fit.covariate_names = data_.covariate_names();
    fit.bandwidths = bandwidths_;
    for (Transition t : kTransitions) {
      TransitionFit& tf = fit[t];
      tf.transition = t;
      tf.columns = columns_[index(t)];
      for (std::size_t c : tf.columns) tf.names.push_back(data_.covariate_names()[c]);
      tf.beta.assign(tf.columns.size(), 0.0);
      const TransitionData& td = td_[index(t)];
      for (std::size_t l = 0; l < td.p; ++l) {
        bool constant = true;
        for (std::size_t j = 1; j < td.size() && constant; ++j)
          constant = td.x[j * td.p + l] == td.x[l];
        if (constant)
          fit.warnings.push_back("covariate " + tf.names[l] + " is constant on transition " +
                                 std::string(to_string(t)) +
                                 "; its coefficient is not identified (flat objective)");
      }
    }
    const std::size_t n = data_.size();
    fit.estep = {std::vector<double>(n, 1.0), std::vector<double>(n, 0.0)};
    return fit;
  }

  // β maximisation for one transition at the given E1, warm-started at
  // tf.beta. Returns whether the optimiser reported convergence.
  //
  // The optimiser works on u = β·sd(x) so that the step cap means the same
  // thing for a covariate in [0, 1] and one in the thousands.
  bool update_beta(TransitionFit& tf, std::span<const double> e1) const {
    const TransitionData& td = td_[index(tf.transition)];
    if (td.p == 0) return true;
    const std::vector<double>& scale = scale_[index(tf.transition)];
    const std::vector<double> e1m = gather(td, e1);
    const KernelBandwidth bw = bandwidths_.beta[index(tf.transition)];
    const Kernel kernel = cfg_.kernel;
    std::vector<double> b(td.p);
    auto objective = [&](std::span<const double> u, std::span<double> g) {
      for (std::size_t l = 0; l < td.p; ++l) b[l] = u[l] / scale[l];
      const double v = profile_loglik(td, b, e1m, bw, kernel, g);
      for (std::size_t l = 0; l < g.size(); ++l) g[l] /= scale[l];
      return v;
    };
    std::vector<double> u0(td.p);
    for (std::size_t l = 0; l < td.p; ++l) u0[l] = tf.beta[l] * scale[l];
    BfgsOptions opts;
    opts.gradient_tol = 1e-9;
    opts.step_tol = 0.1 * cfg_.tol_beta;
    opts.max_step = 0.5;
    opts.max_iterations = 200;
    const VectorMaximum best = maximize_multivariate(objective, u0, opts, &tf.bfgs);
    for (std::size_t l = 0; l < td.p; ++l) tf.beta[l] = best.argmax[l] / scale[l];
    return best.converged;
  }

  void update_hazard(TransitionFit& tf, std::span<const double> e1) const {
    const TransitionData& td = td_[index(tf.transition)];
    tf.hazard = estimate_hazard(td, tf.beta, gather(td, e1), bandwidths_.hazard[index(tf.transition)],
                                cfg_.kernel, cfg_.grid);
  }

  ModelFit step0() const {
    ModelFit fit = skeleton();
    const std::vector<double>& e1 = fit.estep.e1;
    bool ok = true;
    ok &= update_beta(fit[Transition::T01], e1);
    ok &= update_beta(fit[Transition::T02], e1);
    for (Transition t : kTransitions) update_hazard(fit[t], e1);
    if (!ok) fit.warnings.push_back("initial beta maximisation hit its iteration cap");
    fit.sigma = cfg_.sigma_init;
    return fit;
  }

  ModelFit no_frailty() const {
    ModelFit fit = skeleton();
    const std::vector<double>& e1 = fit.estep.e1;
    bool ok = true;
    for (Transition t : kTransitions) ok &= update_beta(fit[t], e1);
    for (Transition t : kTransitions) update_hazard(fit[t], e1);
    fit.sigma.reset();
    fit.iterations = 1;
    fit.converged = ok;
    if (!ok) fit.warnings.push_back("beta maximisation hit its iteration cap");
    TraceEntry te;
    te.iteration = 1;
    for (Transition t : kTransitions) te.beta[index(t)] = fit[t].beta;
    fit.trace.push_back(std::move(te));
    finish(fit);
    return fit;
  }

  // One EM iteration; returns true when every convergence criterion holds.
  bool iterate(ModelFit& fit) const {
    EStepState es = update_estep(data_, fit);
    double sigma = *fit.sigma;
    if (cfg_.estimate_sigma)
      sigma = maximize_sigma(D_, es, weights_, cfg_.sigma_lower, cfg_.sigma_upper);

    std::array<TransitionFit, 3> next = fit.transitions;
    for (Transition t : kTransitions) update_beta(next[index(t)], es.e1);
    for (Transition t : kTransitions) update_hazard(next[index(t)], es.e1);

    TraceEntry te;
    te.iteration = fit.iterations + 1;
    te.sigma = sigma;
    te.delta_sigma = std::abs(sigma - *fit.sigma);
    for (Transition t : kTransitions) {
      const TransitionFit& old_tf = fit[t];
      const TransitionFit& new_tf = next[index(t)];
      te.beta[index(t)] = new_tf.beta;
      for (std::size_t l = 0; l < new_tf.beta.size(); ++l)
        te.max_delta_beta = std::max(te.max_delta_beta, std::abs(new_tf.beta[l] - old_tf.beta[l]));
      te.delta_hazard[index(t)] = hazard_change(t, old_tf.hazard, new_tf.hazard, new_tf.beta);
    }
    const bool done = te.max_delta_beta < cfg_.tol_beta && te.delta_sigma < cfg_.tol_sigma &&
                      std::all_of(te.delta_hazard.begin(), te.delta_hazard.end(),
                                  [&](double d) { return d < cfg_.tol_hazard; });
    fit.transitions = std::move(next);
    fit.sigma = sigma;
    fit.estep = std::move(es);
    fit.iterations += 1;
    fit.trace.push_back(std::move(te));
    return done;
  }

  ModelFit run(ModelFit fit) const {
    fit.converged = false;
    for (int it = 0; it < cfg_.max_iterations; ++it) {
      if (iterate(fit)) {
        fit.converged = true;
        break;
      }
    }
    if (!fit.converged)
      fit.warnings.push_back("EM did not converge within " + std::to_string(cfg_.max_iterations) +
                             " iterations");
    finish(fit);
    return fit;
  }

  ModelFit adopt(const ModelFit& warm) const {
    ModelFit fit = skeleton();
    if (warm.covariate_names != fit.covariate_names)
      throw Error(ErrorKind::ConfigError, "warm start was fitted on different covariates");
    for (Transition t : kTransitions) {
      if (warm[t].columns != fit[t].columns)
        throw Error(ErrorKind::ConfigError, "warm start uses different covariate subsets");
      fit[t].beta = warm[t].beta;
      fit[t].hazard = warm[t].hazard;
      fit[t].bfgs = warm[t].bfgs;
    }
    fit.sigma = warm.sigma ? *warm.sigma : cfg_.sigma_init;
    return fit;
  }

 private:
  double hazard_change(Transition t, const CumulativeHazard& before, const CumulativeHazard& after,
                       std::span<const double> beta) const {
    const TransitionData& td = td_[index(t)];
    const std::vector<double> r = exit_residuals(td, beta);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < td.size(); ++j) {
      if (!td.event[j]) continue;
      const double tt = std::exp(r[j]);
      sum += std::abs(after(tt) - before(tt));
      ++count;
    }
    return count ? sum / static_cast<double>(count) : 0.0;
  }

  void finish(ModelFit& fit) const {
    for (Transition t : kTransitions) {
      if (const auto* bh = std::get_if<BaselineHazard>(&fit[t].hazard.get());
          bh && bh->degenerate_points() > 0)
        fit.warnings.push_back("transition " + std::string(to_string(t)) +
                               ": hazard denominator below 1e-10 at " +
                               std::to_string(bh->degenerate_points()) +
                               " quadrature nodes; hazard set to 0 there");
    }
  }

  const Dataset& data_;
  FitConfig cfg_;
  std::vector<double> weights_;
  BandwidthSet bandwidths_;
  std::array<std::vector<std::size_t>, 3> columns_;
  std::array<TransitionData, 3> td_;
  std::array<std::vector<double>, 3> scale_;
  std::vector<int> D_;
};

}  // namespace

ModelFit initialize(const Dataset& data, const FitConfig& cfg) {
  return Estimator(data, {}, cfg).step0();
}

ModelFit em_iterate(const ModelFit& fit, const Dataset& data, const FitConfig& cfg) {
  if (!fit.sigma) throw Error(ErrorKind::DomainError, "em_iterate needs a frailty fit");
  ModelFit next = fit;
  Estimator(data, {}, cfg).iterate(next);
  return next;
}

ModelFit fit(const Dataset& data, const FitConfig& cfg) {
  const Estimator est(data, {}, cfg);
  return est.run(est.step0());
}

ModelFit fit_no_frailty(const Dataset& data, const FitConfig& cfg) {
  return Estimator(data, {}, cfg).no_frailty();
}

ModelFit weighted_fit(const Dataset& data, std::span<const double> weights,
                      const FitConfig& cfg, const ModelFit* warm_start) {
  const Estimator est(data, weights, cfg);
  return est.run(warm_start ? est.adopt(*warm_start) : est.step0());
}

ModelFit weighted_fit_no_frailty(const Dataset& data, std::span<const double> weights,
                                 const FitConfig& cfg) {
  return Estimator(data, weights, cfg).no_frailty();
}

}  // namespace idm
