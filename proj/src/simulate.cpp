#include "idm/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "idm/bootstrap.hpp"
#include "idm/error.hpp"
#include "idm/fit.hpp"
#include "idm/io.hpp"
#include "idm/numerics.hpp"

namespace idm {

namespace {

std::vector<double> parse_arguments(std::string_view text, std::string_view what) {
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')')
    throw Error(ErrorKind::ConfigError, "cannot parse " + std::string(what) + " '" + std::string(text) + "'");
  std::vector<double> out;
  std::string_view rest = text.substr(open + 1, text.size() - open - 2);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view tok = rest.substr(0, comma);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw Error(ErrorKind::ConfigError, "bad number in " + std::string(what) + " '" + std::string(text) + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

CovariateSpec CovariateSpec::parse(std::string name, std::string_view law) {
  while (!law.empty() && law.front() == ' ') law.remove_prefix(1);
  while (!law.empty() && law.back() == ' ') law.remove_suffix(1);
  CovariateSpec spec;
  spec.name = std::move(name);
  const auto args = parse_arguments(law, "covariate law");
  if (law.starts_with("uniform(")) {
    if (args.size() != 2 || !(args[0] < args[1]))
      throw Error(ErrorKind::ConfigError, "uniform(a,b) needs a < b");
    spec.law = Law::Uniform;
    spec.a = args[0];
    spec.b = args[1];
  } else if (law.starts_with("bernoulli(")) {
    if (args.size() != 1 || !(args[0] >= 0.0 && args[0] <= 1.0))
      throw Error(ErrorKind::ConfigError, "bernoulli(p) needs p in [0,1]");
    spec.law = Law::Bernoulli;
    spec.a = args[0];
  } else {
    throw Error(ErrorKind::ConfigError, "unknown covariate law '" + std::string(law) + "'");
  }
  return spec;
}

std::string CovariateSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (law == Law::Uniform)
    os << "uniform(" << a << ',' << b << ')';
  else
    os << "bernoulli(" << a << ')';
  return os.str();
}

Scenario Scenario::reference(std::optional<double> sigma) {
  Scenario sc;
  sc.sigma = sigma;
  sc.covariates = {CovariateSpec::parse("x1", "uniform(-1,1)"),
                   CovariateSpec::parse("x2", "bernoulli(0.5)"),
                   CovariateSpec::parse("x3", "uniform(-1,1)"),
                   CovariateSpec::parse("x4", "uniform(-1,1)")};
  sc.transition_covariates = {std::vector<std::string>{"x1", "x2"},
                              std::vector<std::string>{"x2", "x3"},
                              std::vector<std::string>{"x1", "x2", "x4"}};
  sc.beta = {std::vector<double>{1.0, 0.5}, std::vector<double>{1.0, 1.0},
             std::vector<double>{0.5, 0.5, 1.0}};
  sc.hazards = {ParametricHazard{HazardFamily::Linear, 2.0},
                ParametricHazard{HazardFamily::Linear, 3.0},
                ParametricHazard{HazardFamily::Linear, 2.0}};
  return sc;
}

void Scenario::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::ConfigError, what);
  };
  need(n >= 1, "scenario needs n >= 1");
  need(replicates >= 1, "scenario needs replicates >= 1");
  need(!sigma || (*sigma > 0.0 && std::isfinite(*sigma)), "sigma must be positive");
  need(censor_max > 0.0, "censor_max must be positive");
  need(!covariates.empty(), "scenario needs at least one covariate");
  for (std::size_t k = 0; k < 3; ++k) {
    need(transition_covariates[k].size() == beta[k].size(),
         "transition " + std::string(to_string(kTransitions[k])) +
             ": covariates and beta differ in length");
    for (const auto& name : transition_covariates[k])
      need(std::any_of(covariates.begin(), covariates.end(),
                       [&](const CovariateSpec& c) { return c.name == name; }),
           "unknown covariate '" + name + "'");
    for (double b : beta[k]) need(std::isfinite(b), "beta must be finite");
    need(hazards[k].c > 0.0 && std::isfinite(hazards[k].c), "hazard parameter must be positive");
  }
  for (double t : time_points) need(t > 0.0 && std::isfinite(t), "time points must be positive");
}

double sample_frailty(std::optional<double> sigma, Rng& rng) {
  if (!sigma) return 1.0;
  std::gamma_distribution<double> g(1.0 / *sigma, *sigma);
  return g(rng);
}

double invert_time(double U, double gamma, double eta, const ParametricHazard& H,
                   std::optional<double> t1) {
  if (!(U > 0.0 && U < 1.0)) throw Error(ErrorKind::DomainError, "U must lie in (0, 1)");
  if (!(gamma > 0.0)) throw Error(ErrorKind::DomainError, "gamma must be positive");
  const double scale = std::exp(-eta);
  const double base = t1 ? H.cumulative(*t1 * scale) : 0.0;
  const double target = base - std::log(U) / gamma;
  double t = H.inverse_cumulative(target) / scale;
  if (t1 && !(t > *t1)) t = std::nextafter(*t1, std::numeric_limits<double>::infinity());
  return t;
}

SimulatedData simulate_dataset(const Scenario& sc, std::uint64_t seed) {
  sc.validate();
  const std::size_t p = sc.covariates.size();
  std::array<std::vector<std::size_t>, 3> cols;
  for (std::size_t k = 0; k < 3; ++k)
    for (const auto& name : sc.transition_covariates[k])
      for (std::size_t c = 0; c < p; ++c)
        if (sc.covariates[c].name == name) cols[k].push_back(c);

  std::vector<Observation> obs(sc.n);
  LatentTruth truth;
  truth.t1.resize(sc.n);
  truth.t2.resize(sc.n);
  truth.gamma.resize(sc.n);
  truth.censor.resize(sc.n);
  for (std::size_t i = 0; i < sc.n; ++i) {
    Rng rng = make_rng(seed, i);
    Observation& o = obs[i];
    o.x.resize(p);
    for (std::size_t c = 0; c < p; ++c) {
      const CovariateSpec& cs = sc.covariates[c];
      const double u = uniform_open(rng);
      o.x[c] = cs.law == CovariateSpec::Law::Uniform ? cs.a + (cs.b - cs.a) * u
                                                     : (u < cs.a ? 1.0 : 0.0);
    }
    std::array<double, 3> eta{};
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t l = 0; l < cols[k].size(); ++l) eta[k] += sc.beta[k][l] * o.x[cols[k][l]];

    const double gamma = sample_frailty(sc.sigma, rng);
    const double t1 = invert_time(uniform_open(rng), gamma, eta[0], sc.hazards[0]);
    double t2 = invert_time(uniform_open(rng), gamma, eta[1], sc.hazards[1]);
    const bool diagnosed = t1 < t2;
    const double u_trunc = uniform_open(rng);
    if (diagnosed) t2 = invert_time(u_trunc, gamma, eta[2], sc.hazards[2], t1);
    const double c = std::isfinite(sc.censor_max) ? sc.censor_max * uniform_open(rng)
                                                  : std::numeric_limits<double>::infinity();

    if (diagnosed && t1 <= c) {
      o.v = t1;
      o.delta1 = 1;
      o.w = std::min(t2, c);
      o.delta3 = t2 <= c ? 1 : 0;
    } else if (!diagnosed && t2 <= c) {
      o.v = t2;
      o.delta2 = 1;
    } else {
      o.v = c;
    }
    truth.t1[i] = t1;
    truth.t2[i] = t2;
    truth.gamma[i] = gamma;
    truth.censor[i] = c;
  }
  std::vector<std::string> names;
  for (const auto& cs : sc.covariates) names.push_back(cs.name);
  return {Dataset(std::move(obs), std::move(names)), std::move(truth)};
}

CensoringRates censoring_rates(const Dataset& data) {
  std::size_t cens0 = 0, diag = 0, cens1 = 0;
  for (const Observation& o : data.observations()) {
    if (!o.delta1 && !o.delta2) ++cens0;
    if (o.delta1) {
      ++diag;
      if (!o.delta3) ++cens1;
    }
  }
  CensoringRates r;
  r.before_first_event = static_cast<double>(cens0) / static_cast<double>(data.size());
  r.after_diagnosis = diag ? static_cast<double>(cens1) / static_cast<double>(diag) : 0.0;
  return r;
}

ModelFit true_model(const Scenario& sc, const Dataset& data) {
  ModelFit m;
  m.covariate_names = data.covariate_names();
  m.sigma = sc.sigma;
  for (std::size_t k = 0; k < 3; ++k) {
    TransitionFit& tf = m.transitions[k];
    tf.transition = kTransitions[k];
    tf.names = sc.transition_covariates[k];
    for (const auto& name : tf.names) tf.columns.push_back(data.covariate_index(name));
    tf.beta = sc.beta[k];
    tf.hazard = sc.hazards[k];
  }
  m.converged = true;
  return m;
}

FitConfig fit_config_for(const Scenario& sc, FitConfig base) {
  base.covariates = sc.transition_covariates;
  return base;
}

ExperimentSummary run_experiment(const Scenario& sc, const FitConfig& base,
                                 const ExperimentOptions& opts) {
  sc.validate();
  if (sc.replicates < 2) throw Error(ErrorKind::ConfigError, "an experiment needs replicates >= 2");
  if (!(opts.level > 0.0 && opts.level < 1.0)) throw Error(ErrorKind::ConfigError, "level must lie in (0,1)");
  if (opts.bootstrap == 1 || opts.bootstrap < 0)
    throw Error(ErrorKind::ConfigError, "bootstrap B must be 0 or at least 2");
  const FitConfig cfg = fit_config_for(sc, base);

  ExperimentSummary out;
  std::vector<ParameterId> ids;
  std::vector<double> truth;
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t l = 0; l < sc.beta[k].size(); ++l) {
      ids.push_back({sc.transition_covariates[k][l], std::string(to_string(kTransitions[k]))});
      truth.push_back(sc.beta[k][l]);
    }
  if (!opts.no_frailty) {
    ids.push_back({"sigma", ""});
    truth.push_back(sc.sigma.value_or(0.0));
  }

  const std::uint64_t boot_master = splitmix64(sc.seed ^ 0x5bd1e995ULL);
  for (int r = 0; r < sc.replicates; ++r) {
    ReplicateOutcome rep;
    rep.index = static_cast<std::size_t>(r);
    rep.seed = derive_seed(sc.seed, static_cast<std::uint64_t>(r));
    try {
      const SimulatedData sim = simulate_dataset(sc, rep.seed);
      rep.censoring = censoring_rates(sim.data);
      const ModelFit f = opts.no_frailty ? fit_no_frailty(sim.data, cfg) : fit(sim.data, cfg);
      rep.estimates = parameter_values(f);
      rep.iterations = f.iterations;
      for (std::size_t k = 0; k < 3; ++k)
        for (double t : sc.time_points) rep.hazard_at[k].push_back(f.transitions[k].hazard(t));
      if (opts.bootstrap > 0) {
        BootstrapOptions bo;
        bo.no_frailty = opts.no_frailty;
        bo.time_points = sc.time_points;
        const BootstrapResult br = bootstrap(sim.data, cfg, opts.bootstrap,
                                             derive_seed(boot_master, rep.index), bo, &f);
        rep.se = br.se;
        rep.hazard_se = br.hazard_se;
      }
      rep.ok = true;
    } catch (const Error& e) {
      rep.error = e.what();
      ++out.failures;
    }
    if (opts.on_replicate) opts.on_replicate(rep);
    out.outcomes.push_back(std::move(rep));
  }

  const double zq = normal_quantile(0.5 * (1.0 + opts.level));
  std::vector<const ReplicateOutcome*> good;
  for (const auto& o : out.outcomes)
    if (o.ok) good.push_back(&o);
  const double m = static_cast<double>(good.size());
  auto summarise = [&](auto value, auto se_of, double tru, double& mean, double& sd,
                       double& se, double& cr) {
    mean = sd = cr = 0.0;
    se = std::nan("");
    if (good.empty()) return;
    for (const auto* o : good) mean += value(*o);
    mean /= m;
    for (const auto* o : good) sd += (value(*o) - mean) * (value(*o) - mean);
    sd = good.size() > 1 ? std::sqrt(sd / (m - 1.0)) : 0.0;
    if (opts.bootstrap > 0) {
      se = 0.0;
      for (const auto* o : good) se += se_of(*o);
      se /= m;
    }
    for (const auto* o : good) {
      const double s = opts.bootstrap > 0 ? se_of(*o) : sd;
      cr += std::abs(value(*o) - tru) <= zq * s ? 1.0 : 0.0;
    }
    cr /= m;
  };

  for (std::size_t q = 0; q < ids.size(); ++q) {
    ParameterSummary ps;
    ps.parameter = ids[q].name;
    ps.transition = ids[q].transition;
    ps.truth = truth[q];
    ps.count = good.size();
    summarise([q](const ReplicateOutcome& o) { return o.estimates[q]; },
              [q](const ReplicateOutcome& o) { return o.se[q]; }, ps.truth, ps.mean, ps.sd, ps.se,
              ps.cr);
    out.parameters.push_back(ps);
  }
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t q = 0; q < sc.time_points.size(); ++q) {
      HazardSummary hs;
      hs.transition = kTransitions[k];
      hs.time = sc.time_points[q];
      hs.truth = sc.hazards[k].cumulative(hs.time);
      summarise([k, q](const ReplicateOutcome& o) { return o.hazard_at[k][q]; },
                [k, q](const ReplicateOutcome& o) { return o.hazard_se[k][q]; }, hs.truth, hs.mean,
                hs.sd, hs.se, hs.cr);
      out.hazards.push_back(hs);
    }
  return out;
}

void write_parameter_summary_csv(std::ostream& out, const ExperimentSummary& s) {
  out << "parameter,transition,truth,mean,bias,sd,se,cr,count\n";
  for (const auto& p : s.parameters) {
    out << p.parameter << ',' << p.transition;
    for (double v : {p.truth, p.mean, p.mean - p.truth, p.sd, p.se, p.cr}) {
      out << ',';
      write_number(out, v);
    }
    out << ',' << p.count << '\n';
  }
}

void write_hazard_summary_csv(std::ostream& out, const ExperimentSummary& s) {
  out << "transition,time,truth,mean,sd,se,cr\n";
  for (const auto& h : s.hazards) {
    out << to_string(h.transition);
    for (double v : {h.time, h.truth, h.mean, h.sd, h.se, h.cr}) {
      out << ',';
      write_number(out, v);
    }
    out << '\n';
  }
}

}  // namespace idm
