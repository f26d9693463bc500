#include "idm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace idm {

void write_number(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "NA";
    return;
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

Json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

namespace {

TabulatedHazard grid_of(const TransitionFit& tf) {
  if (const auto* b = std::get_if<BaselineHazard>(&tf.hazard.get())) return b->grid();
  if (const auto* t = std::get_if<TabulatedHazard>(&tf.hazard.get())) return *t;
  return tf.hazard.tabulate();
}

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorKind::ParseError, "malformed fit document: " + what);
}

}  // namespace

Json fit_to_json(const ModelFit& fit) {
  Json j;
  j["model"] = fit.sigma ? "frailty" : "no-frailty";
  j["covariate_names"] = fit.covariate_names;
  if (fit.sigma) j["sigma"] = *fit.sigma;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  Json transitions = Json::array();
  for (const TransitionFit& tf : fit.transitions) {
    const TabulatedHazard g = grid_of(tf);
    Json t;
    t["transition"] = std::string(to_string(tf.transition));
    t["covariates"] = tf.names;
    t["beta"] = tf.beta;
    t["hazard_grid"] = {{"t", g.times()}, {"H", g.values()}};
    transitions.push_back(std::move(t));
  }
  j["transitions"] = std::move(transitions);
  Json bw = Json::array();
  for (std::size_t k = 0; k < 3; ++k)
    bw.push_back({{"transition", std::string(to_string(kTransitions[k]))},
                  {"beta_density", fit.bandwidths.beta[k].density},
                  {"beta_cumulative", fit.bandwidths.beta[k].cumulative},
                  {"hazard", fit.bandwidths.hazard[k].density}});
  j["bandwidths"] = {{"zeta_beta", fit.bandwidths.zeta_beta},
                     {"zeta_hazard", fit.bandwidths.zeta_hazard},
                     {"transitions", std::move(bw)}};
  Json trace = Json::array();
  for (const TraceEntry& te : fit.trace) {
    Json e;
    e["iteration"] = te.iteration;
    if (te.sigma) e["sigma"] = *te.sigma;
    e["beta01"] = te.beta[0];
    e["beta02"] = te.beta[1];
    e["beta12"] = te.beta[2];
    e["max_delta_beta"] = json_number(te.max_delta_beta);
    e["delta_hazard"] = {json_number(te.delta_hazard[0]), json_number(te.delta_hazard[1]),
                         json_number(te.delta_hazard[2])};
    if (te.sigma) e["delta_sigma"] = json_number(te.delta_sigma);
    trace.push_back(std::move(e));
  }
  j["trace"] = std::move(trace);
  j["warnings"] = fit.warnings;
  return j;
}

ModelFit fit_from_json(const Json& j) {
  ModelFit fit;
  try {
    fit.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
    if (j.contains("sigma")) fit.sigma = j.at("sigma").get<double>();
    fit.iterations = j.value("iterations", 0);
    fit.converged = j.value("converged", false);
    const Json& ts = j.at("transitions");
    if (!ts.is_array() || ts.size() != 3) malformed("expected three transitions");
    for (const Json& t : ts) {
      const Transition tr = transition_from_string(t.at("transition").get<std::string>());
      TransitionFit& tf = fit[tr];
      tf.transition = tr;
      tf.names = t.at("covariates").get<std::vector<std::string>>();
      tf.beta = t.at("beta").get<std::vector<double>>();
      if (tf.beta.size() != tf.names.size()) malformed("beta and covariates differ in length");
      for (const auto& name : tf.names) {
        const auto it = std::find(fit.covariate_names.begin(), fit.covariate_names.end(), name);
        if (it == fit.covariate_names.end()) malformed("unknown covariate '" + name + "'");
        tf.columns.push_back(static_cast<std::size_t>(it - fit.covariate_names.begin()));
      }
      const Json& g = t.at("hazard_grid");
      tf.hazard = TabulatedHazard(g.at("t").get<std::vector<double>>(),
                                  g.at("H").get<std::vector<double>>());
    }
    if (j.contains("bandwidths")) {
      const Json& b = j.at("bandwidths");
      fit.bandwidths.zeta_beta = b.value("zeta_beta", fit.bandwidths.zeta_beta);
      fit.bandwidths.zeta_hazard = b.value("zeta_hazard", fit.bandwidths.zeta_hazard);
      for (const Json& e : b.value("transitions", Json::array())) {
        const std::size_t k = index(transition_from_string(e.at("transition").get<std::string>()));
        fit.bandwidths.beta[k] = {e.at("beta_density").get<double>(),
                                  e.at("beta_cumulative").get<double>()};
        const double a = e.at("hazard").get<double>();
        fit.bandwidths.hazard[k] = {a, a};
      }
    }
    fit.warnings = j.value("warnings", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    malformed(e.what());
  }
  return fit;
}

void save_fit(const std::string& path, const ModelFit& fit) {
  write_text_file(path, fit_to_json(fit).dump(2) + "\n");
}

ModelFit load_fit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, "'" + path + "' is not valid JSON: " + e.what());
  }
  return fit_from_json(j);
}

void write_hazard_grid_csv(std::ostream& out, const TransitionFit& tf) {
  const TabulatedHazard g = grid_of(tf);
  out << "t,H\n";
  for (std::size_t k = 0; k < g.times().size(); ++k) {
    write_number(out, g.times()[k]);
    out << ',';
    write_number(out, g.values()[k]);
    out << '\n';
  }
}

Json error_json(ErrorKind kind, const std::string& message) {
  return {{"error", std::string(to_string(kind))}, {"message", message}};
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
}

}  // namespace idm
