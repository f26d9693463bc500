#include "idm/bootstrap.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>

#include "idm/error.hpp"
#include "idm/fit.hpp"
#include "idm/io.hpp"
#include "idm/numerics.hpp"

namespace idm {

std::vector<ParameterId> parameter_ids(const ModelFit& fit) {
  std::vector<ParameterId> ids;
  for (Transition t : kTransitions)
    for (const auto& name : fit[t].names) ids.push_back({name, std::string(to_string(t))});
  if (fit.sigma) ids.push_back({"sigma", ""});
  return ids;
}

std::vector<double> parameter_values(const ModelFit& fit) {
  std::vector<double> v;
  for (Transition t : kTransitions) v.insert(v.end(), fit[t].beta.begin(), fit[t].beta.end());
  if (fit.sigma) v.push_back(*fit.sigma);
  return v;
}

std::vector<double> draw_weights(std::size_t n, Rng& rng) {
  if (n == 0) throw Error(ErrorKind::DomainError, "draw_weights needs n >= 1");
  std::vector<double> w(n);
  for (double& g : w) g = -std::log(uniform_open(rng));
  return w;
}

std::vector<double> column_sd(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t k = rows.front().size();
  std::vector<double> sd(k, 0.0);
  if (rows.size() < 2) return sd;
  const double m = static_cast<double>(rows.size());
  for (std::size_t c = 0; c < k; ++c) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[c];
    mean /= m;
    double ss = 0.0;
    for (const auto& r : rows) ss += (r[c] - mean) * (r[c] - mean);
    sd[c] = std::sqrt(ss / (m - 1.0));
  }
  return sd;
}

BootstrapResult bootstrap(const Dataset& data, const FitConfig& cfg, int B, std::uint64_t seed,
                          const BootstrapOptions& opts, const ModelFit* full_fit) {
  if (B < 2) throw Error(ErrorKind::ConfigError, "bootstrap needs B >= 2");
  ModelFit own;
  if (!full_fit) {
    own = opts.no_frailty ? fit_no_frailty(data, cfg) : fit(data, cfg);
    full_fit = &own;
  }

  BootstrapResult out;
  out.parameters = parameter_ids(*full_fit);
  out.time_points = opts.time_points;
  out.requested = static_cast<std::size_t>(B);
  out.seed = seed;

  for (int r = 0; r < B; ++r) {
    ReplicateSummary rep;
    rep.index = static_cast<std::size_t>(r);
    rep.seed = derive_seed(seed, static_cast<std::uint64_t>(r));
    Rng rng(rep.seed);
    const std::vector<double> w = draw_weights(data.size(), rng);
    try {
      ModelFit f = opts.no_frailty
                       ? weighted_fit_no_frailty(data, w, cfg)
                       : weighted_fit(data, w, cfg, opts.warm_start ? full_fit : nullptr);
      if (!f.converged) {
        out.failures.push_back("replicate " + std::to_string(r) + ": did not converge");
        ++out.n_failed;
        continue;
      }
      rep.parameters = parameter_values(f);
      for (Transition t : kTransitions)
        for (double tp : opts.time_points) rep.hazard_at[index(t)].push_back(f[t].hazard(tp));
      rep.iterations = f.iterations;
      out.replicates.push_back(std::move(rep));
    } catch (const Error& e) {
      out.failures.push_back("replicate " + std::to_string(r) + ": " + e.what());
      ++out.n_failed;
    }
  }
  if (2 * out.n_failed > out.requested)
    throw Error(ErrorKind::TooManyFailures,
                std::to_string(out.n_failed) + " of " + std::to_string(B) +
                    " bootstrap replicates failed");

  std::vector<std::vector<double>> rows;
  for (const auto& rep : out.replicates) rows.push_back(rep.parameters);
  out.se = column_sd(rows);
  if (out.se.empty()) out.se.assign(out.parameters.size(), 0.0);
  for (Transition t : kTransitions) {
    std::vector<std::vector<double>> hz;
    for (const auto& rep : out.replicates) hz.push_back(rep.hazard_at[index(t)]);
    out.hazard_se[index(t)] = column_sd(hz);
  }
  return out;
}

std::vector<double> holm_adjust(const std::vector<double>& p) {
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::DomainError, "p-values must lie in [0, 1]");
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double adj = std::min(1.0, static_cast<double>(m - k) * p[order[k]]);
    running = std::max(running, adj);
    out[order[k]] = running;
  }
  return out;
}

InferenceTable wald_table(const std::vector<ParameterId>& ids, const std::vector<double>& estimates,
                          const std::vector<double>& se, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::ConfigError, "level must lie in (0, 1)");
  if (ids.size() != estimates.size() || se.size() != estimates.size())
    throw Error(ErrorKind::DimensionMismatch, "estimates and standard errors differ in length");
  const double zq = normal_quantile(0.5 * (1.0 + level));
  InferenceTable table;
  table.level = level;
  std::vector<double> beta_p;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    InferenceRow row;
    row.parameter = ids[k].name;
    row.transition = ids[k].transition;
    row.estimate = estimates[k];
    row.se = se[k];
    const bool is_beta = !ids[k].transition.empty();
    row.exp_estimate = is_beta ? std::exp(row.estimate) : std::nan("");
    if (row.se > 0.0) {
      row.z = row.estimate / row.se;
      row.p = std::min(1.0, 2.0 * normal_upper_tail(std::abs(row.z)));
    } else {
      row.z = row.estimate == 0.0 ? 0.0 : std::copysign(INFINITY, row.estimate);
      row.p = row.estimate == 0.0 ? 1.0 : 0.0;
    }
    row.ci_lo = row.estimate - zq * row.se;
    row.ci_hi = row.estimate + zq * row.se;
    row.p_holm = row.p;
    if (is_beta) beta_p.push_back(row.p);
    table.rows.push_back(row);
  }
  const std::vector<double> adj = holm_adjust(beta_p);
  std::size_t q = 0;
  for (auto& row : table.rows)
    if (!row.transition.empty()) row.p_holm = adj[q++];
  return table;
}

InferenceTable wald_table(const ModelFit& fit, const BootstrapResult& boot, double level) {
  return wald_table(parameter_ids(fit), parameter_values(fit), boot.se, level);
}

void write_inference_csv(std::ostream& out, const InferenceTable& table) {
  out << "parameter,transition,estimate,exp,se,z,p,p_holm,ci_lo,ci_hi\n";
  for (const auto& r : table.rows) {
    out << r.parameter << ',' << r.transition;
    for (double v : {r.estimate, r.exp_estimate, r.se, r.z, r.p, r.p_holm, r.ci_lo, r.ci_hi}) {
      out << ',';
      write_number(out, v);
    }
    out << '\n';
  }
}

nlohmann::ordered_json inference_to_json(const InferenceTable& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"parameter", r.parameter},
                    {"transition", r.transition},
                    {"estimate", json_number(r.estimate)},
                    {"exp", json_number(r.exp_estimate)},
                    {"se", json_number(r.se)},
                    {"z", json_number(r.z)},
                    {"p", json_number(r.p)},
                    {"p_holm", json_number(r.p_holm)},
                    {"ci_lo", json_number(r.ci_lo)},
                    {"ci_hi", json_number(r.ci_hi)}});
  }
  return {{"level", table.level}, {"rows", rows}};
}

}  // namespace idm
