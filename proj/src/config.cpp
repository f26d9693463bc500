#include "idm/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "idm/error.hpp"

namespace idm {

namespace {

namespace pt = boost::property_tree;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::ConfigError, where + ": " + what);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "Inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size() || t.empty())
    bad(where, "'" + t + "' is not a number");
  return v;
}

long long to_integer(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size() || t.empty())
    bad(where, "'" + t + "' is not an integer");
  return v;
}

bool to_bool(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  bad(where, "'" + t + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string_view rest = text;
  while (true) {
    const auto comma = rest.find(',');
    const std::string item = trim(rest.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& where, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_double(where, item));
  return out;
}

// Runs `fn` on each key of a section after checking it is one of `allowed`.
template <class Fn>
void each_key(const std::string& section, const pt::ptree& tree,
              const std::set<std::string>& allowed, Fn fn) {
  for (const auto& [key, node] : tree) {
    if (!node.empty()) bad(section, "nested keys are not supported");
    if (!allowed.count(key)) bad(section, "unknown key '" + key + "'");
    fn(key, node.data(), section + "." + key);
  }
}

void read_scenario(const pt::ptree& t, RunConfig& rc) {
  Scenario& sc = rc.scenario;
  each_key("scenario", t,
           {"n", "sigma", "censor_max", "replicates", "seed", "time_points"},
           [&](const std::string& k, const std::string& v, const std::string& where) {
             if (k == "n") {
               const long long n = to_integer(where, v);
               if (n < 1) bad(where, "must be at least 1");
               sc.n = static_cast<std::size_t>(n);
             } else if (k == "sigma") {
               if (trim(v) == "none") sc.sigma.reset();
               else sc.sigma = to_double(where, v);
             } else if (k == "censor_max") {
               sc.censor_max = to_double(where, v);
             } else if (k == "replicates") {
               sc.replicates = static_cast<int>(to_integer(where, v));
             } else if (k == "seed") {
               const long long s = to_integer(where, v);
               if (s < 0) bad(where, "must be non-negative");
               rc.seed = static_cast<std::uint64_t>(s);
             } else {
               sc.time_points = to_doubles(where, v);
             }
           });
}

void read_covariates(const pt::ptree& t, RunConfig& rc) {
  rc.scenario.covariates.clear();
  for (const auto& [name, node] : t) {
    try {
      rc.scenario.covariates.push_back(CovariateSpec::parse(name, trim(node.data())));
    } catch (const Error& e) {
      bad("covariates." + name, e.what());
    }
  }
}

void read_transition(Transition tr, const std::string& section, const pt::ptree& t,
                     RunConfig& rc) {
  const std::size_t k = index(tr);
  each_key(section, t, {"covariates", "beta", "hazard"},
           [&](const std::string& key, const std::string& v, const std::string& where) {
             if (key == "covariates") {
               rc.scenario.transition_covariates[k] = split_list(v);
             } else if (key == "beta") {
               rc.scenario.beta[k] = to_doubles(where, v);
             } else {
               try {
                 rc.scenario.hazards[k] = ParametricHazard::parse(trim(v));
               } catch (const Error& e) {
                 bad(where, e.what());
               }
             }
           });
}

void read_fit(const pt::ptree& t, RunConfig& rc) {
  FitConfig& f = rc.fit;
  each_key("fit", t,
           {"zeta_beta", "zeta_hazard", "sigma_init", "estimate_sigma", "sigma_lower",
            "sigma_upper", "max_iterations", "tol_beta", "tol_hazard", "tol_sigma", "kernel",
            "grid_points", "no_frailty", "covariates_01", "covariates_02", "covariates_12"},
           [&](const std::string& k, const std::string& v, const std::string& where) {
             if (k == "zeta_beta") f.zeta_beta = to_double(where, v);
             else if (k == "zeta_hazard") f.zeta_hazard = to_double(where, v);
             else if (k == "sigma_init") f.sigma_init = to_double(where, v);
             else if (k == "estimate_sigma") f.estimate_sigma = to_bool(where, v);
             else if (k == "sigma_lower") f.sigma_lower = to_double(where, v);
             else if (k == "sigma_upper") f.sigma_upper = to_double(where, v);
             else if (k == "max_iterations") f.max_iterations = static_cast<int>(to_integer(where, v));
             else if (k == "tol_beta") f.tol_beta = to_double(where, v);
             else if (k == "tol_hazard") f.tol_hazard = to_double(where, v);
             else if (k == "tol_sigma") f.tol_sigma = to_double(where, v);
             else if (k == "no_frailty") rc.no_frailty = to_bool(where, v);
             else if (k == "grid_points") {
               const long long p = to_integer(where, v);
               if (p < 2) bad(where, "must be at least 2");
               f.grid.points = static_cast<std::size_t>(p);
             } else if (k == "kernel") {
               try {
                 f.kernel = Kernel::from_name(trim(v));
               } catch (const Error& e) {
                 bad(where, e.what());
               }
             } else {
               f.covariates[index(transition_from_string(k.substr(11)))] = split_list(v);
             }
           });
}

void read_bootstrap(const pt::ptree& t, RunConfig& rc) {
  each_key("bootstrap", t, {"B", "level", "warm_start"},
           [&](const std::string& k, const std::string& v, const std::string& where) {
             if (k == "B") rc.bootstrap = static_cast<int>(to_integer(where, v));
             else if (k == "level") rc.level = to_double(where, v);
             else rc.warm_start = to_bool(where, v);
           });
}

void read_gof(const pt::ptree& t, RunConfig& rc) {
  each_key("gof", t, {"bins"},
           [&](const std::string&, const std::string& v, const std::string& where) {
             const long long b = to_integer(where, v);
             if (b < 2) bad(where, "must be at least 2");
             rc.bins = static_cast<std::size_t>(b);
           });
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::ConfigError, std::string("config: ") + e.what());
  }
  RunConfig rc;
  for (const auto& [name, node] : tree) {
    if (node.empty() && !node.data().empty()) bad(name, "keys must sit inside a [section]");
    if (name == "scenario") read_scenario(node, rc);
    else if (name == "covariates") read_covariates(node, rc);
    else if (name == "transition.01") read_transition(Transition::T01, name, node, rc);
    else if (name == "transition.02") read_transition(Transition::T02, name, node, rc);
    else if (name == "transition.12") read_transition(Transition::T12, name, node, rc);
    else if (name == "fit") read_fit(node, rc);
    else if (name == "bootstrap") read_bootstrap(node, rc);
    else if (name == "gof") read_gof(node, rc);
    else bad(name, "unknown section");
  }
  rc.scenario.seed = rc.seed;
  rc.fit.validate();
  if (!(rc.level > 0.0 && rc.level < 1.0)) bad("bootstrap.level", "must lie in (0,1)");
  if (rc.bootstrap < 0) bad("bootstrap.B", "must be non-negative");
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config '" + path + "'");
  return parse_config(in);
}

}  // namespace idm
