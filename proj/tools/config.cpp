#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fwlcli {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("key '" + key + "': not a number: '" + raw + "'");
  return v;
}

long to_long(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("key '" + key + "': not an integer: '" + raw + "'");
  return v;
}

std::vector<double> to_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

Setter dbl(double RunConfig::*f) {
  return [f](RunConfig& c, const std::string& k, const std::string& v) { c.*f = to_double(k, v); };
}
Setter integer(int RunConfig::*f) {
  return [f](RunConfig& c, const std::string& k, const std::string& v) { c.*f = int(to_long(k, v)); };
}
template <class S>
Setter sub_dbl(S RunConfig::*s, double S::*f) {
  return [s, f](RunConfig& c, const std::string& k, const std::string& v) { (c.*s).*f = to_double(k, v); };
}
template <class S>
Setter sub_int(S RunConfig::*s, int S::*f) {
  return [s, f](RunConfig& c, const std::string& k, const std::string& v) { (c.*s).*f = int(to_long(k, v)); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = {
      {"model.m", sub_dbl(&RunConfig::model, &fwl_pcb_params::m)},
      {"model.c_w", sub_dbl(&RunConfig::model, &fwl_pcb_params::c_w)},
      {"model.f0", sub_dbl(&RunConfig::model, &fwl_pcb_params::f0)},
      {"model.f1", sub_dbl(&RunConfig::model, &fwl_pcb_params::f1)},
      {"model.t0", sub_dbl(&RunConfig::model, &fwl_pcb_params::t0)},
      {"model.t1", sub_dbl(&RunConfig::model, &fwl_pcb_params::t1)},
      {"model.delta", sub_dbl(&RunConfig::model, &fwl_pcb_params::delta)},
      {"model.mu", sub_dbl(&RunConfig::model, &fwl_pcb_params::mu)},
      {"numerics.L_z", sub_dbl(&RunConfig::numerics, &fwl_numerics::L)},
      {"numerics.core_h", sub_dbl(&RunConfig::numerics, &fwl_numerics::core_h)},
      {"numerics.degree", sub_int(&RunConfig::numerics, &fwl_numerics::degree)},
      {"numerics.refine", sub_int(&RunConfig::numerics, &fwl_numerics::refine)},
      {"numerics.tol", sub_dbl(&RunConfig::numerics, &fwl_numerics::tol)},
      {"numerics.max_iter", sub_int(&RunConfig::numerics, &fwl_numerics::max_iter)},
      {"numerics.kernel_tol", sub_dbl(&RunConfig::spectral, &fwl_spectral_options::kernel_tol)},
      {"numerics.gamma0", sub_dbl(&RunConfig::spectral, &fwl_spectral_options::gamma0)},
      {"numerics.k_max", sub_dbl(&RunConfig::spectral, &fwl_spectral_options::k_max)},
      {"numerics.k_points", sub_int(&RunConfig::spectral, &fwl_spectral_options::k_points)},
      {"numerics.re_min", sub_dbl(&RunConfig::spectral, &fwl_spectral_options::re_min)},
      {"numerics.re_max", sub_dbl(&RunConfig::spectral, &fwl_spectral_options::re_max)},
      {"numerics.im_max", sub_dbl(&RunConfig::spectral, &fwl_spectral_options::im_max)},
      {"numerics.n_fast", integer(&RunConfig::n_fast)},
      {"numerics.L_fast", dbl(&RunConfig::L_fast)},
      {"numerics.rho_samples", integer(&RunConfig::rho_samples)},
      {"numerics.check_points", integer(&RunConfig::check_points)},
      {"task.root", integer(&RunConfig::root)},
      {"task.s_min", dbl(&RunConfig::s_min)},
      {"task.s_max", dbl(&RunConfig::s_max)},
      {"task.d", integer(&RunConfig::d)},
      {"task.R", dbl(&RunConfig::R)},
      {"task.ell", dbl(&RunConfig::ell)},
      {"task.eps", [](RunConfig& c, const std::string& k, const std::string& v) { c.eps = to_list(k, v); }},
      {"task.ladder", [](RunConfig& c, const std::string& k, const std::string& v) { c.ladder = to_list(k, v); }},
      {"task.dmu", dbl(&RunConfig::dmu)},
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_long(k, v); }},
      {"output_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = trim(v); }},
  };
  return m;
}

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void validate(const RunConfig& c) {
  check(c.numerics.tol > 0, "numerics.tol must be positive");
  check(c.spectral.kernel_tol > 0, "numerics.kernel_tol must be positive");
  check(c.spectral.k_max > 0, "numerics.k_max must be positive");
  check(c.spectral.gamma0 > 0, "numerics.gamma0 must be positive");
  check(c.numerics.core_h > 0, "numerics.core_h must be positive");
  check(c.numerics.max_iter > 0, "numerics.max_iter must be positive");
  check(c.numerics.degree >= 3, "numerics.degree must be at least 3");
  check(c.numerics.refine >= 1, "numerics.refine must be at least 1");
  check(c.spectral.k_points >= 64, "numerics.k_points must be at least 64");
  check(c.n_fast >= 64, "numerics.n_fast must be at least 64");
  check(c.rho_samples >= 64, "numerics.rho_samples must be at least 64");
  check(c.check_points >= 64, "numerics.check_points must be at least 64");
  check(c.L_fast > 0, "numerics.L_fast must be positive");
  check(c.d >= 1 && c.d <= 3, "task.d must be 1, 2 or 3");
  check(c.R > 0 && c.ell > 0, "task.R and task.ell must be positive");
  for (double e : c.eps) check(e > 0, "task.eps entries must be positive");
  for (double e : c.ladder) check(e > 0, "task.ladder entries must be positive");
  check(c.ladder.size() >= 5, "task.ladder needs at least five entries");
  check(c.dmu > 0, "task.dmu must be positive");
  check(c.root >= 0, "task.root must be non-negative");
  check(!c.output_dir.empty(), "output_dir must not be empty");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  fwl_pcb_default_params(&c.model);
  fwl_default_numerics(&c.numerics);
  fwl_default_spectral_options(&c.spectral);
  c.text = text;
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  const auto& table = setters();
  auto apply = [&](const std::string& key, const std::string& value) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(c, key, value);
  };
  for (const auto& [name, node] : tree) {
    const bool section = name == "model" || name == "numerics" || name == "task";
    if (node.empty()) {
      if (!(section && node.data().empty())) apply(name, node.data());
      continue;
    }
    if (!section) throw ConfigError("unknown config section '" + name + "'");
    for (const auto& [key, leaf] : node) {
      if (!leaf.empty()) throw ConfigError("nested key '" + name + "." + key + "'");
      apply(name + "." + key, leaf.data());
    }
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace fwlcli
