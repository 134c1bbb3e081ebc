#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <freewaylab/freewaylab.h>
#include <json.hpp>
#include <memory>
#include <string>

#include "bvp.hpp"
#include "energy.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "normalform.hpp"
#include "singular.hpp"
#include "spectral.hpp"

using nlohmann::json;

struct fwl_model {
  std::shared_ptr<fwl::PcbModel> model;
};

struct fwl_orbit {
  std::shared_ptr<const fwl::PcbModel> model;
  fwl::ConnectionOrbit orbit;
  json meta;
};

namespace {

thread_local std::string last_error;

fwl_status status_of(fwl::ErrorCode c) {
  switch (c) {
    case fwl::ErrorCode::domain:
      return FWL_ERR_DOMAIN;
    case fwl::ErrorCode::precondition:
      return FWL_ERR_PRECONDITION;
    case fwl::ErrorCode::no_convergence:
      return FWL_ERR_NO_CONVERGENCE;
    case fwl::ErrorCode::numerical:
      return FWL_ERR_NUMERICAL;
    case fwl::ErrorCode::existence:
      return FWL_ERR_EXISTENCE;
    case fwl::ErrorCode::degenerate:
      return FWL_ERR_DEGENERATE;
    case fwl::ErrorCode::io:
      return FWL_ERR_IO;
    case fwl::ErrorCode::config:
    case fwl::ErrorCode::argument:
      return FWL_ERR_ARGUMENT;
  }
  return FWL_ERR_INTERNAL;
}

template <class Fn>
fwl_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return FWL_OK;
  } catch (const fwl::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const json::exception& e) {
    last_error = e.what();
    return FWL_ERR_ARGUMENT;
  } catch (const std::exception& e) {
    last_error = e.what();
    return FWL_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw fwl::Error(fwl::ErrorCode::argument, std::string(what) + " must not be null");
}

void dump(const json& j, std::string& out, int indent) {
  const std::string pad(indent * 2, ' '), pad_in((indent + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in + json(it.key()).dump() + ": ";
        dump(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      bool scalar = true;
      for (const auto& e : j) scalar = scalar && !e.is_structured();
      out += scalar ? "[" : "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += scalar ? ", " : ",\n";
        first = false;
        if (!scalar) out += pad_in;
        dump(e, out, indent + 1);
      }
      out += scalar ? "]" : "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

std::string canonical(const json& j) {
  std::string s;
  dump(j, s, 0);
  s += "\n";
  return s;
}

void emit(const json& j, char** out) {
  need(out, "output pointer");
  const std::string s = canonical(j);
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  *out = p;
}

json cplx_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

fwl::PcbParams to_params(const fwl_pcb_params& p) {
  fwl::PcbParams q;
  q.m = p.m;
  q.c_w = p.c_w;
  q.f0 = p.f0;
  q.f1 = p.f1;
  q.t0 = p.t0;
  q.t1 = p.t1;
  q.delta = p.delta;
  q.mu = p.mu;
  return q;
}

json params_json(const fwl::PcbParams& p) {
  return {{"m", p.m}, {"c_w", p.c_w}, {"f0", p.f0}, {"f1", p.f1}, {"t0", p.t0},
          {"t1", p.t1}, {"delta", p.delta}, {"mu", p.mu}};
}

fwl::SpectralOptions to_options(const fwl_spectral_options* o) {
  fwl::SpectralOptions s;
  if (!o) return s;
  s.kernel_tol = o->kernel_tol;
  s.gamma0 = o->gamma0;
  s.k_max = o->k_max;
  s.k_points = o->k_points;
  s.re_min = o->re_min;
  s.re_max = o->re_max;
  s.im_max = o->im_max;
  if (!(s.kernel_tol > 0) || !(s.k_max > 0) || s.k_points < 2)
    throw fwl::Error(fwl::ErrorCode::argument, "spectral options: kernel_tol, k_max must be positive, k_points >= 2");
  return s;
}

fwl::MeshSpec mesh_spec(const fwl::PcbModel& m, const fwl_numerics& n) {
  fwl::MeshSpec spec = fwl::default_mesh_spec(m);
  if (n.L > 0) spec.L = n.L;
  if (!(n.core_h > 0) || n.degree < 3 || n.refine < 1)
    throw fwl::Error(fwl::ErrorCode::argument, "numerics: need core_h > 0, degree >= 3, refine >= 1");
  spec.core_h = n.core_h * m.delta();
  spec.degree = n.degree;
  spec.refine = n.refine;
  return spec;
}

std::vector<fwl::RhoRoot> admissible_roots(const fwl::PcbModel& m, double& a, double& b) {
  a = 1e-3;
  b = m.u0() - 1e-3;
  fwl::RhoScan sc = fwl::rho_scan(m, a, b, 400);
  std::vector<fwl::RhoRoot> out;
  for (const auto& r : sc.roots)
    if (r.condition_ok) out.push_back(r);
  return out;
}

json orbit_summary(const fwl_orbit& o) {
  const fwl::ConnectionOrbit& c = o.orbit;
  json j = o.meta;
  j["nodes"] = c.mesh.n_nodes();
  j["L"] = c.mesh.right();
  j["tollroad"] = c.tollroad;
  j["mu"] = c.mu;
  j["delta"] = c.delta;
  j["eta"] = c.eta;
  j["residual"] = c.residual_norm;
  j["iterations"] = c.iterations;
  j["max_u1"] = c.u.col(0).maxCoeff();
  j["F1"] = fwl::reduced_energy(*o.model, c);
  if (c.tollroad) {
    j["half_v_norm_sq"] = fwl::half_v_norm_sq(c);
    j["max_abs_hamiltonian"] = fwl::hamiltonian_trace(*o.model, c).max_abs;
  }
  return j;
}

json inner_json(const fwl::InnerProducts& ip) {
  return {{"dF_psi0", ip.dF_psi0}, {"dag_psi0", ip.dag_psi0}, {"dag_norm_sq", ip.dag_norm_sq}};
}

}  // namespace

extern "C" {

const char* fwl_version(void) { return "1.0.0"; }

const char* fwl_status_name(fwl_status s) {
  switch (s) {
    case FWL_OK:
      return "ok";
    case FWL_ERR_ARGUMENT:
      return "argument";
    case FWL_ERR_DOMAIN:
      return "domain";
    case FWL_ERR_PRECONDITION:
      return "precondition";
    case FWL_ERR_NO_CONVERGENCE:
      return "no-convergence";
    case FWL_ERR_NUMERICAL:
      return "numerical";
    case FWL_ERR_EXISTENCE:
      return "existence";
    case FWL_ERR_DEGENERATE:
      return "degenerate";
    case FWL_ERR_IO:
      return "io";
    case FWL_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* fwl_last_error(void) { return last_error.c_str(); }

void fwl_free(void* p) { std::free(p); }

void fwl_pcb_default_params(fwl_pcb_params* out) {
  if (!out) return;
  const fwl::PcbParams p;
  *out = {p.m, p.c_w, p.f0, p.f1, p.t0, p.t1, p.delta, p.mu};
}

void fwl_default_numerics(fwl_numerics* out) {
  if (!out) return;
  *out = {0.0, 1.5, 10, 1, 1e-10, 40};
}

void fwl_default_spectral_options(fwl_spectral_options* out) {
  if (!out) return;
  const fwl::SpectralOptions s;
  *out = {s.kernel_tol, s.gamma0, s.k_max, s.k_points, s.re_min, s.re_max, s.im_max};
}

fwl_status fwl_model_create_pcb(const fwl_pcb_params* p, fwl_model** out) {
  return guarded([&] {
    need(p, "params");
    need(out, "output handle");
    *out = nullptr;
    auto m = std::make_unique<fwl_model>();
    m->model = std::make_shared<fwl::PcbModel>(to_params(*p));
    *out = m.release();
  });
}

void fwl_model_free(fwl_model* m) { delete m; }

fwl_status fwl_model_check(const fwl_model* mh, int n_grid, char** out) {
  return guarded([&] {
    need(mh, "model");
    if (n_grid < 2) throw fwl::Error(fwl::ErrorCode::argument, "model check: grid needs at least two points");
    const fwl::PcbModel& m = *mh->model;
    json j;
    j["params"] = params_json(m.params());
    j["u1_max"] = m.u0();
    const fwl::Vec a = m.rest_state();
    j["rest_state"] = {a[0], a[1]};
    auto hr = fwl::normal_hyperbolicity(m, a);
    j["hyperbolic"] = hr.hyperbolic;
    json ev = json::array();
    for (auto z : hr.eigenvalues) ev.push_back(cplx_json(z));
    j["rest_eigenvalues"] = ev;
    // quadrature of the jump against -2 T_o on an interior grid
    double worst = 0;
    for (int i = 0; i < n_grid; ++i) {
      const double s = m.u0() * (i + 1) / (n_grid + 1);
      worst = std::max(worst, std::abs(fwl::delta_p(m, s) + 2 * m.To(s, m.mu())));
    }
    j["delta_p_check"] = {{"points", n_grid}, {"max_abs_error", worst}};
    double a0, b0;
    auto roots = admissible_roots(m, a0, b0);
    if (!roots.empty()) {
      auto sl = fwl::fast_sl_spectrum(m, roots.front().s, 2000, 40);
      j["fast_sl"] = {{"s", roots.front().s},
                      {"eigenvalues", {sl.eig[0], sl.eig[1], sl.eig[2]}},
                      {"parity", {sl.parity[0], sl.parity[1], sl.parity[2]}}};
    }
    emit(j, out);
  });
}

fwl_status fwl_rho_scan(const fwl_model* mh, double a, double b, int n, char** out) {
  return guarded([&] {
    need(mh, "model");
    const fwl::PcbModel& m = *mh->model;
    fwl::RhoScan sc = fwl::rho_scan(m, a, b, n);
    json j;
    j["interval"] = {a, b};
    j["s"] = sc.s;
    j["rho"] = sc.rho;
    j["rho_prime"] = sc.rho_prime;
    json roots = json::array();
    for (const auto& r : sc.roots) {
      auto g = fwl::geometric_criterion(m, r.s);
      roots.push_back({{"s", r.s},
                       {"rho", r.rho},
                       {"rho_prime", r.rho_prime},
                       {"condition_ok", r.condition_ok},
                       {"delta_p", g.delta_p},
                       {"robust_geometry", g.both}});
    }
    j["roots"] = roots;
    j["tangencies"] = sc.tangencies;
    emit(j, out);
  });
}

fwl_status fwl_fast_sl_spectrum(const fwl_model* mh, double s, int n, double L, char** out) {
  return guarded([&] {
    need(mh, "model");
    auto sl = fwl::fast_sl_spectrum(*mh->model, s, n, L);
    json j = {{"s", s},
              {"n", n},
              {"L", L},
              {"eigenvalues", {sl.eig[0], sl.eig[1], sl.eig[2]}},
              {"parity", {sl.parity[0], sl.parity[1], sl.parity[2]}}};
    emit(j, out);
  });
}

fwl_status fwl_connect_freeway(const fwl_model* mh, int root_index, const fwl_numerics* num, fwl_orbit** out) {
  return guarded([&] {
    need(mh, "model");
    need(out, "output handle");
    *out = nullptr;
    const fwl::PcbModel& m = *mh->model;
    fwl_numerics n;
    fwl_default_numerics(&n);
    if (num) n = *num;
    double a, b;
    auto roots = admissible_roots(m, a, b);
    if (roots.empty()) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "no admissible root of rho in [%.6g, %.6g]", a, b);
      throw fwl::Error(fwl::ErrorCode::existence, buf);
    }
    if (root_index < 0 || root_index >= int(roots.size()))
      throw fwl::Error(fwl::ErrorCode::argument, "root index out of range");
    const fwl::RhoRoot r = roots[root_index];
    fwl::SingularOrbit so = fwl::assemble_singular_orbit(m, r.s);
    fwl::Mesh mesh = fwl::default_mesh(m, mesh_spec(m, n));
    fwl::SolverOptions opts;
    opts.tol = n.tol;
    opts.max_iter = n.max_iter;
    auto o = std::make_unique<fwl_orbit>();
    o->model = mh->model;
    o->orbit =
        fwl::solve_freeway(m, fwl::orbit_from_profile(m, mesh, [&](double z) { return so(z); }), opts);
    o->meta = {{"s_star", r.s}, {"rho_prime", r.rho_prime}, {"root_index", root_index}};
    *out = o.release();
  });
}

fwl_status fwl_connect_tollroad(const fwl_model* mh, double dmu, fwl_orbit** out) {
  return guarded([&] {
    need(mh, "model");
    need(out, "output handle");
    *out = nullptr;
    if (!(dmu > 0)) throw fwl::Error(fwl::ErrorCode::argument, "toll-road offset must be positive");
    const fwl::PcbModel& m = *mh->model;
    fwl::FoldData fd = fwl::numeric_fold(m);
    // freeway orbits lie below the fold, so the toll-road side is mu_fold + dmu
    const double mu = fd.mu_sn + dmu;
    fwl::PcbParams p = m.params();
    p.mu = mu;
    auto mm = std::make_shared<fwl::PcbModel>(p);
    auto o = std::make_unique<fwl_orbit>();
    o->model = mm;
    o->orbit = fwl::solve_tollroad(*mm, fwl::tollroad_seed(m, fd, dmu, true));
    auto te = fwl::tollroad_energy(*mm, o->orbit, 1.0);
    o->meta = {{"mu_fold", fd.mu_sn}, {"dmu", dmu}, {"energy_discrepancy", te.discrepancy}};
    *out = o.release();
  });
}

void fwl_orbit_free(fwl_orbit* o) { delete o; }

fwl_status fwl_orbit_info(const fwl_orbit* o, char** out) {
  return guarded([&] {
    need(o, "orbit");
    emit(orbit_summary(*o), out);
  });
}

int fwl_orbit_nodes(const fwl_orbit* o) { return o ? o->orbit.mesh.n_nodes() : 0; }
int fwl_orbit_dim(const fwl_orbit* o) { return o ? o->orbit.n : 0; }

fwl_status fwl_orbit_copy(const fwl_orbit* o, double* z, double* u, double* v) {
  return guarded([&] {
    need(o, "orbit");
    const auto& c = o->orbit;
    const fwl::Vec nodes = c.mesh.nodes();
    for (int i = 0; i < nodes.size(); ++i) {
      if (z) z[i] = nodes[i];
      for (int k = 0; k < c.n; ++k) {
        if (u) u[i * c.n + k] = c.u(i, k);
        if (v) v[i * c.n + k] = c.v(i, k);
      }
    }
  });
}

fwl_status fwl_spectrum(const fwl_orbit* o, const fwl_spectral_options* opts, char** out) {
  return guarded([&] {
    need(o, "orbit");
    if (o->orbit.tollroad) throw fwl::Error(fwl::ErrorCode::argument, "spectrum: needs a freeway orbit");
    auto rep = fwl::pencil_spectrum(*o->model, o->orbit, to_options(opts));
    json j;
    j["verdict"] = fwl::verdict_name(rep.verdict);
    j["reason"] = rep.reason;
    j["bounded_verdict"] = fwl::verdict_name(rep.bounded_verdict);
    j["bounded_k"] = rep.bounded_k;
    j["kernel_even"] = rep.kernel_even;
    j["kernel_odd"] = rep.kernel_odd;
    j["kernel_dim"] = rep.kernel_dim;
    json pr = json::array();
    for (auto z : rep.positive_real) pr.push_back(z.real());
    j["positive_real"] = pr;
    json ev = json::array();
    for (const auto& e : rep.eigs)
      ev.push_back({{"k", cplx_json(e.k)}, {"even", e.even}, {"residual", e.residual}});
    j["eigenvalues"] = ev;
    j["max_residual"] = rep.max_residual;
    j["translational_residual"] = rep.translational_residual;
    if (o->meta.contains("s_star")) {
      auto g = fwl::geometric_criterion(*o->model, o->meta["s_star"].get<double>());
      j["geometric"] = {{"cond1", g.cond1}, {"cond2", g.cond2}, {"both", g.both}, {"degenerate", g.degenerate}};
    }
    emit(j, out);
  });
}

fwl_status fwl_coercivity(const fwl_orbit* o, const fwl_spectral_options* opts, char** out) {
  return guarded([&] {
    need(o, "orbit");
    auto c = fwl::coercivity_margin(*o->model, o->orbit, to_options(opts));
    json j = {{"margin", c.margin}, {"argmin_k", c.argmin_k}, {"warning", c.warning}, {"k", c.k}, {"sigma", c.sigma}};
    emit(j, out);
  });
}

fwl_status fwl_energy_dress(const fwl_orbit* o, int d, double R, double ell, const double* eps, int n_eps,
                            char** out) {
  return guarded([&] {
    need(o, "orbit");
    need(eps, "eps list");
    if (n_eps < 1) throw fwl::Error(fwl::ErrorCode::argument, "energy dressing: need at least one eps");
    const auto& m = *o->model;
    json rows = json::array();
    std::vector<double> dev;
    for (int i = 0; i < n_eps; ++i) {
      auto dp = fwl::dress(o->orbit, m, d, R, eps[i], ell);
      const double E = fwl::full_energy_radial(m, dp);
      const double P = fwl::sharp_interface_prediction(m, o->orbit, d, R, eps[i]);
      const double Q = fwl::curvature_energy_leading(m, o->orbit, d, R, eps[i]);
      rows.push_back({{"eps", eps[i]},
                      {"energy", E},
                      {"prediction", P},
                      {"ratio", P != 0 ? E / P : NAN},
                      {"curvature_leading", Q},
                      {"curvature_ratio", Q != 0 ? E / Q : NAN},
                      {"eps_ge_delta", dp.eps_flag}});
      dev.push_back(P != 0 ? std::abs(E / P - 1) : NAN);
    }
    json orders = json::array();
    for (size_t i = 1; i < dev.size(); ++i) orders.push_back(std::log(dev[i - 1] / dev[i]) / std::log(eps[i - 1] / eps[i]));
    json j = {{"d", d}, {"R", R}, {"ell", ell}, {"rows", rows}, {"orders", orders}};
    emit(j, out);
  });
}

fwl_status fwl_bifurcate(const fwl_model* mh, const double* ladder, int n_ladder, char** out) {
  return guarded([&] {
    need(mh, "model");
    need(ladder, "ladder");
    const fwl::PcbModel& m = *mh->model;
    auto sn = fwl::saddle_node_data(m);
    auto fd = fwl::numeric_fold(m);
    auto fit = fwl::verify_quadratic_law(m, fd, sn, std::vector<double>(ladder, ladder + n_ladder));
    json j;
    j["s_sn"] = sn.location.s_sn;
    j["mu_sn"] = sn.location.mu_sn;
    j["mu_fold"] = fd.mu_sn;
    j["s1"] = sn.s1;
    j["F1_coeff"] = sn.F1_coeff;
    j["F1_coeff_quadrature"] = sn.F1_coeff_quadrature;
    j["inner_closed"] = inner_json(sn.closed);
    j["inner_quadrature"] = inner_json(sn.quadrature);
    j["inner_profile"] = inner_json(sn.profile);
    j["fitted_coeff"] = fit.coefficient;
    j["predicted_coeff"] = fit.predicted;
    j["ratio"] = fit.ratio;
    j["r_squared"] = fit.r_squared;
    j["ladder_warning"] = fit.warning;
    j["predicted_orthogonal"] = fit.predicted_orthogonal;
    j["ratio_orthogonal"] = fit.ratio_orthogonal;
    j["max_abs_hamiltonian"] = fit.max_hamiltonian;
    j["psi0_distance"] = fwl::profile_distance(fd.orbit.mesh, fd.psi0, [&](double z) { return sn.psi0(z); });
    j["psi0_dag_distance"] =
        fwl::profile_distance(fd.orbit.mesh, fd.psi0_dag, [&](double z) { return sn.psi0_dag(z); });
    std::vector<double> mu;
    for (double s : fit.dmu) mu.push_back(fd.mu_sn + s);
    j["samples"] = {{"mu", mu}, {"F1", fit.energy}};
    emit(j, out);
  });
}

fwl_status fwl_json_canonical(const char* text, char** out) {
  return guarded([&] {
    need(text, "text");
    emit(json::parse(text), out);
  });
}

}  // extern "C"
