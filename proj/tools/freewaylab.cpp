#include <freewaylab/freewaylab.h>
#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, internal = 1, config_error = 2, no_convergence = 3, violation = 4, io_error = 5 };

struct Failure {
  int code;
  std::string message;
};

int exit_for(fwl_status s) {
  switch (s) {
    case FWL_OK:
      return ok;
    case FWL_ERR_ARGUMENT:
    case FWL_ERR_DOMAIN:
    case FWL_ERR_PRECONDITION:
      return config_error;
    case FWL_ERR_NO_CONVERGENCE:
    case FWL_ERR_EXISTENCE:
    case FWL_ERR_NUMERICAL:
      return no_convergence;
    case FWL_ERR_DEGENERATE:
      return violation;
    case FWL_ERR_IO:
      return io_error;
    case FWL_ERR_INTERNAL:
      break;
  }
  return internal;
}

void call(fwl_status s) {
  if (s != FWL_OK) throw Failure{exit_for(s), std::string(fwl_status_name(s)) + ": " + fwl_last_error()};
}

struct Text {
  char* p = nullptr;
  ~Text() { fwl_free(p); }
  json parse() const { return json::parse(p); }
};

std::string canonical(const json& j) {
  Text t;
  call(fwl_json_canonical(j.dump().c_str(), &t.p));
  return t.p;
}

struct ModelHandle {
  fwl_model* m = nullptr;
  explicit ModelHandle(const fwl_pcb_params& p) { call(fwl_model_create_pcb(&p, &m)); }
  ~ModelHandle() { fwl_model_free(m); }
};

struct OrbitHandle {
  fwl_orbit* o = nullptr;
  ~OrbitHandle() { fwl_orbit_free(o); }
};

class Run {
 public:
  Run(std::string command, fwlcli::RunConfig cfg) : cmd_(std::move(command)), cfg_(std::move(cfg)) {
    dir_ = cfg_.output_dir;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Failure{io_error, "cannot create output directory '" + dir_.string() + "': " + ec.message()};
  }

  void write(const std::string& name, const std::string& body) {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << body;
    if (!out) throw Failure{io_error, "cannot write '" + (dir_ / name).string() + "'"};
    artifacts_.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, canonical(j)); }

  void write_csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& cols, const std::string& plot_x = "",
                 const std::string& plot_y = "") {
    std::string s;
    for (size_t c = 0; c < header.size(); ++c) s += (c ? "," : "") + header[c];
    s += "\n";
    const size_t n = cols.empty() ? 0 : cols.front().size();
    char buf[40];
    for (size_t i = 0; i < n; ++i) {
      for (size_t c = 0; c < cols.size(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", cols[c][i]);
        s += (c ? "," : "") + std::string(buf);
      }
      s += "\n";
    }
    write(name, s);
    if (!plot_x.empty()) write_plot_stub(name, plot_x, plot_y);
  }

  void write_plot_stub(const std::string& csv, const std::string& x, const std::string& y) {
    const std::string stem = fs::path(csv).stem().string();
    std::ostringstream py;
    py << "import csv\nimport matplotlib.pyplot as plt\n\n"
       << "rows = list(csv.DictReader(open('" << csv << "')))\n"
       << "x = [float(r['" << x << "']) for r in rows]\n"
       << "y = [float(r['" << y << "']) for r in rows]\n"
       << "plt.plot(x, y)\nplt.xlabel('" << x << "')\nplt.ylabel('" << y << "')\n"
       << "plt.savefig('" << stem << ".png')\n";
    write("plot_" + stem + ".py", py.str());
  }

  // manifest.json keeps one entry per command; wall time and clock live under "timestamp"
  void finish(int code, double wall) {
    json man;
    {
      std::ifstream in(dir_ / "manifest.json");
      if (in) {
        try {
          man = json::parse(in);
        } catch (const json::exception&) {
          man = json::object();
        }
      }
    }
    std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    man["tool"] = "freewaylab";
    man["tool_version"] = fwl_version();
    man["runs"][cmd_] = {{"config_sha256", sha256(cfg_.text)},
                         {"seed", cfg_.seed},
                         {"exit_code", code},
                         {"artifacts", artifacts_}};
    man["timestamp"][cmd_] = {{"utc", stamp}, {"wall_time_s", wall}};
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << canonical(man);
    if (!out) throw Failure{io_error, "cannot write manifest"};
  }

  const fwlcli::RunConfig& cfg() const { return cfg_; }
  const fs::path& dir() const { return dir_; }

 private:
  static std::string sha256(const std::string& s) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(s.data(), s.size(), md, &len, EVP_sha256(), nullptr);
    std::string hex;
    char b[3];
    for (unsigned i = 0; i < len; ++i) {
      std::snprintf(b, sizeof b, "%02x", md[i]);
      hex += b;
    }
    return hex;
  }

  std::string cmd_;
  fwlcli::RunConfig cfg_;
  fs::path dir_;
  std::vector<std::string> artifacts_;
};

std::vector<double> col(const json& a) { return a.get<std::vector<double>>(); }

void orbit_out(Run& run, fwl_orbit* o, const std::string& stem, json& j) {
  Text info;
  call(fwl_orbit_info(o, &info.p));
  j = info.parse();
  const int n = fwl_orbit_nodes(o), m = fwl_orbit_dim(o);
  std::vector<double> z(n), u(n * m), v(n * m);
  call(fwl_orbit_copy(o, z.data(), u.data(), v.data()));
  std::vector<std::string> header{"z"};
  std::vector<std::vector<double>> cols{z};
  const bool tr = j.value("tollroad", false);
  for (int k = 0; k < m; ++k) {
    header.push_back("u" + std::to_string(k + 1));
    std::vector<double> c(n);
    for (int i = 0; i < n; ++i) c[i] = u[i * m + k];
    cols.push_back(c);
  }
  if (tr)
    for (int k = 0; k < m; ++k) {
      header.push_back("v" + std::to_string(k + 1));
      std::vector<double> c(n);
      for (int i = 0; i < n; ++i) c[i] = v[i * m + k];
      cols.push_back(c);
    }
  run.write_csv(stem + ".csv", header, cols, "z", "u1");
}

void freeway(const fwlcli::RunConfig& c, ModelHandle& mh, OrbitHandle& oh) {
  call(fwl_connect_freeway(mh.m, c.root, &c.numerics, &oh.o));
}

int cmd_model_check(Run& run) {
  ModelHandle mh(run.cfg().model);
  Text t;
  call(fwl_model_check(mh.m, run.cfg().check_points, &t.p));
  json j = t.parse();
  if (j.contains("fast_sl")) {
    Text f;
    call(fwl_fast_sl_spectrum(mh.m, j["fast_sl"]["s"].get<double>(), run.cfg().n_fast, run.cfg().L_fast, &f.p));
    j["fast_sl"] = f.parse();
  }
  run.write_json("model-check.json", j);
  return j["hyperbolic"].get<bool>() ? ok : violation;
}

int cmd_rho_scan(Run& run) {
  const auto& c = run.cfg();
  ModelHandle mh(c.model);
  Text mc;
  call(fwl_model_check(mh.m, 2, &mc.p));
  const double b = c.s_max > 0 ? c.s_max : mc.parse()["u1_max"].get<double>() - 1e-3;
  Text t;
  call(fwl_rho_scan(mh.m, c.s_min, b, c.rho_samples, &t.p));
  json j = t.parse();
  run.write_json("rho-scan.json", j);
  run.write_csv("rho_scan.csv", {"s", "rho", "rho_prime"}, {col(j["s"]), col(j["rho"]), col(j["rho_prime"])}, "s",
                "rho");
  std::vector<double> s, rp, ok_;
  for (const auto& r : j["roots"]) {
    s.push_back(r["s"]);
    rp.push_back(r["rho_prime"]);
    ok_.push_back(r["condition_ok"].get<bool>() ? 1 : 0);
  }
  run.write_csv("rho_roots.csv", {"s", "rho_prime", "condition_ok"}, {s, rp, ok_});
  return ok;
}

int cmd_connect_freeway(Run& run) {
  ModelHandle mh(run.cfg().model);
  OrbitHandle oh;
  freeway(run.cfg(), mh, oh);
  json j;
  orbit_out(run, oh.o, "freeway_orbit", j);
  run.write_json("connect-freeway.json", j);
  return ok;
}

int cmd_connect_tollroad(Run& run) {
  ModelHandle mh(run.cfg().model);
  OrbitHandle oh;
  call(fwl_connect_tollroad(mh.m, run.cfg().dmu, &oh.o));
  json j;
  orbit_out(run, oh.o, "tollroad_orbit", j);
  run.write_json("connect-tollroad.json", j);
  return ok;
}

int cmd_spectrum(Run& run) {
  ModelHandle mh(run.cfg().model);
  OrbitHandle oh;
  freeway(run.cfg(), mh, oh);
  Text t;
  call(fwl_spectrum(oh.o, &run.cfg().spectral, &t.p));
  json j = t.parse();
  Text info;
  call(fwl_orbit_info(oh.o, &info.p));
  j["orbit"] = info.parse();
  run.write_json("spectrum.json", j);
  std::vector<double> re, im, even, res;
  for (const auto& e : j["eigenvalues"]) {
    re.push_back(e["k"][0]);
    im.push_back(e["k"][1]);
    even.push_back(e["even"].get<bool>() ? 1 : 0);
    res.push_back(e["residual"]);
  }
  run.write_csv("spectrum.csv", {"re", "im", "even", "residual"}, {re, im, even, res}, "re", "im");
  if (j["verdict"] == "degenerate") {
    std::cerr << "spectrum: degenerate verdict (" << j["reason"].get<std::string>() << ")\n";
    return violation;
  }
  return ok;
}

int cmd_coercivity(Run& run) {
  ModelHandle mh(run.cfg().model);
  OrbitHandle oh;
  freeway(run.cfg(), mh, oh);
  Text t;
  call(fwl_coercivity(oh.o, &run.cfg().spectral, &t.p));
  json j = t.parse();
  run.write_json("coercivity.json", j);
  run.write_csv("coercivity.csv", {"k", "sigma"}, {col(j["k"]), col(j["sigma"])}, "k", "sigma");
  if (!(j["margin"].get<double>() > 0) || j["warning"].get<bool>()) {
    std::cerr << "coercivity: margin is not positive\n";
    return violation;
  }
  return ok;
}

int cmd_energy_dress(Run& run) {
  const auto& c = run.cfg();
  ModelHandle mh(c.model);
  OrbitHandle oh;
  freeway(c, mh, oh);
  Text t;
  call(fwl_energy_dress(oh.o, c.d, c.R, c.ell, c.eps.data(), int(c.eps.size()), &t.p));
  json j = t.parse();
  run.write_json("energy-dress.json", j);
  std::vector<double> eps, E, P, ratio, cr;
  for (const auto& r : j["rows"]) {
    eps.push_back(r["eps"]);
    E.push_back(r["energy"]);
    P.push_back(r["prediction"]);
    ratio.push_back(r["ratio"].is_null() ? NAN : r["ratio"].get<double>());
    cr.push_back(r["curvature_ratio"].is_null() ? NAN : r["curvature_ratio"].get<double>());
  }
  run.write_csv("energy_dress.csv", {"eps", "energy", "prediction", "ratio", "curvature_ratio"},
                {eps, E, P, ratio, cr}, "eps", "ratio");
  return ok;
}

int cmd_bifurcate(Run& run) {
  const auto& c = run.cfg();
  ModelHandle mh(c.model);
  Text t;
  call(fwl_bifurcate(mh.m, c.ladder.data(), int(c.ladder.size()), &t.p));
  json j = t.parse();
  run.write_json("bifurcate.json", j);
  run.write_csv("bifurcate.csv", {"mu", "F1"}, {col(j["samples"]["mu"]), col(j["samples"]["F1"])}, "mu", "F1");
  if (j["ladder_warning"].get<bool>()) std::cerr << "bifurcate: quadratic fit R^2 below 0.99; shrink the ladder\n";
  return ok;
}

json load(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return nullptr;
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    throw Failure{io_error, "malformed artifact '" + p.string() + "'"};
  }
}

json check(bool available, bool pass, json value) {
  return {{"available", available}, {"pass", available && pass}, {"value", std::move(value)}};
}

int cmd_report(Run& run) {
  const fs::path d = run.dir();
  const json mc = load(d / "model-check.json"), fw = load(d / "connect-freeway.json"),
             tr = load(d / "connect-tollroad.json"), sp = load(d / "spectrum.json"),
             co = load(d / "coercivity.json"), en = load(d / "energy-dress.json"), bi = load(d / "bifurcate.json");
  if (mc.is_null() && fw.is_null() && tr.is_null() && sp.is_null() && co.is_null() && en.is_null() && bi.is_null())
    throw Failure{io_error, "report: no artifacts in '" + d.string() + "'"};
  json checks;
  if (!mc.is_null()) {
    const double e = mc["delta_p_check"]["max_abs_error"];
    checks["jump_closed_form"] = check(true, e <= 1e-8, e);
    if (mc.contains("fast_sl")) {
      auto ev = col(mc["fast_sl"]["eigenvalues"]);
      std::sort(ev.begin(), ev.end());
      const double worst = std::max({std::abs(ev[0] + 0.75), std::abs(ev[1]), std::abs(ev[2] - 1.25)});
      checks["fast_sturm_liouville"] = check(true, worst <= 1e-3, mc["fast_sl"]["eigenvalues"]);
    }
  }
  if (!fw.is_null())
    checks["freeway_connection"] =
        check(true, fw["residual"].get<double>() <= 1e-10 && fw["F1"].get<double>() <= 1e-14,
              {{"residual", fw["residual"]}, {"F1", fw["F1"]}, {"max_u1", fw["max_u1"]}, {"s_star", fw["s_star"]}});
  if (!tr.is_null())
    checks["tollroad_connection"] = check(
        true, tr["max_abs_hamiltonian"].get<double>() <= 1e-8 && tr["energy_discrepancy"].get<double>() <= 1e-10,
        {{"F1", tr["F1"]}, {"max_abs_hamiltonian", tr["max_abs_hamiltonian"]}});
  if (!sp.is_null())
    checks["pearling_verdict"] = check(true, sp["verdict"] == "robust",
                                       {{"verdict", sp["verdict"]},
                                        {"bounded_verdict", sp["bounded_verdict"]},
                                        {"positive_real", sp["positive_real"]},
                                        {"root_index", sp["orbit"].value("root_index", -1)}});
  if (!co.is_null()) checks["coercivity_margin"] = check(true, co["margin"].get<double>() > 0, co["margin"]);
  if (!en.is_null()) {
    std::vector<double> ratios;
    for (const auto& r : en["rows"]) ratios.push_back(r["ratio"].is_null() ? NAN : r["ratio"].get<double>());
    bool pass = !en["orders"].empty();
    for (const auto& o : en["orders"]) pass = pass && !o.is_null() && o.get<double>() >= 1;
    checks["energy_audit"] = check(true, pass, {{"ratios", ratios}, {"orders", en["orders"]}});
  }
  if (!bi.is_null()) {
    const double r = bi["ratio"];
    checks["quadratic_law"] = check(true, r >= 0.7 && r <= 1.3,
                                    {{"ratio", r}, {"ratio_orthogonal", bi["ratio_orthogonal"]}});
    const double gap = std::abs(bi["mu_fold"].get<double>() - bi["mu_sn"].get<double>());
    checks["fold_consistency"] = check(true, gap <= 1e-4, {{"mu_fold", bi["mu_fold"]}, {"mu_sn", bi["mu_sn"]}});
  }
  int passed = 0, total = 0;
  for (const auto& [k, v] : checks.items()) {
    total += v["available"].get<bool>();
    passed += v["pass"].get<bool>();
  }
  json rep = {{"checks", checks}, {"passed", passed}, {"available", total}};
  run.write_json("report.json", rep);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"freewaylab: freeway and toll-road connections of multicomponent functionalized energies"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(Run&);
  };
  const std::vector<Command> commands = {
      {"model-check", "verify the fast equation and the pressure jump", cmd_model_check},
      {"rho-scan", "sample the existence function and locate its roots", cmd_rho_scan},
      {"connect-freeway", "solve for the freeway connection at a root", cmd_connect_freeway},
      {"connect-tollroad", "solve for a toll-road connection off the root", cmd_connect_tollroad},
      {"spectrum", "linearized spectrum and pearling verdict", cmd_spectrum},
      {"coercivity", "coercivity margin over the wavenumber grid", cmd_coercivity},
      {"energy-dress", "dressed-interface energies against the reduced law", cmd_energy_dress},
      {"bifurcate", "saddle-node normal form and the quadratic law", cmd_bifurcate},
      {"report", "collect earlier artifacts into a pass/fail summary", cmd_report}};
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "INI run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : config_error;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  int (*fn)(Run&) = nullptr;
  for (const auto& c : commands)
    if (cmd == c.name) fn = c.fn;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    fwlcli::RunConfig cfg = fwlcli::load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    Run run(cmd, std::move(cfg));
    int code = ok;
    try {
      code = fn(run);
    } catch (const Failure& f) {
      std::cerr << "freewaylab " << cmd << ": " << f.message << "\n";
      code = f.code;
    }
    run.finish(code, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return code;
  } catch (const fwlcli::ConfigError& e) {
    std::cerr << "freewaylab: config error: " << e.what() << "\n";
    return config_error;
  } catch (const fwlcli::IoError& e) {
    std::cerr << "freewaylab: " << e.what() << "\n";
    return io_error;
  } catch (const Failure& f) {
    std::cerr << "freewaylab " << cmd << ": " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "freewaylab " << cmd << ": " << e.what() << "\n";
    return internal;
  }
}
