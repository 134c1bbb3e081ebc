// Desk-scale acceptance run: one PASS/FAIL line per criterion, exit status is the failure count.
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "energy.hpp"
#include "errors.hpp"
#include "normalform.hpp"
#include "singular.hpp"
#include "spectral.hpp"

using namespace fwl;

namespace tol {
constexpr double jump = 1e-8;
constexpr double jump_seconds = 1.0;
constexpr double bvp_residual = 1e-10;
constexpr double gap_shrink = 1.5;
constexpr double solve_seconds = 30.0;
constexpr int solve_nodes = 4000;
constexpr double freeway_energy = 1e-14;
constexpr double hamiltonian = 1e-8;
constexpr double energy_identity = 1e-10;
constexpr double fast_sl = 1e-3;
constexpr double fast_sl_seconds = 5.0;
constexpr double positive_k = 1e-6;
constexpr double scalar_k = 1e-3;
constexpr double margin_change = 0.05;
constexpr int margin_points = 200;
constexpr double energy_order = 1.0;
constexpr double energy_seconds = 60.0;
constexpr double adjoint_residual = 1e-10;
constexpr double adjoint_constant = 1e-8;
constexpr double law_band = 0.30;
constexpr double law_seconds = 600.0;
constexpr double fold_gap = 1e-4;
constexpr double null_vector_c = 1.0;  // distance <= c sqrt(delta)
}  // namespace tol

namespace {

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::shared_ptr<PcbModel> pcb(double delta) {
  PcbParams p;
  p.delta = delta;
  return std::make_shared<PcbModel>(p);
}

MeshSpec spec_with_nodes(const PcbModel& m, int target) {
  MeshSpec s = default_mesh_spec(m);
  const int base = default_mesh(m, s).n_nodes();
  s.refine = std::max(1, int(std::lround(double(target) / base)));
  return s;
}

ConnectionOrbit freeway(const PcbModel& m, double s_star, const MeshSpec& spec) {
  auto so = assemble_singular_orbit(m, s_star);
  Mesh mesh = default_mesh(m, spec);
  return solve_freeway(m, orbit_from_profile(m, mesh, [&](double z) { return so(z); }));
}

ConnectionOrbit left_freeway(const PcbModel& m, int refine = 1) {
  auto sc = rho_scan(m, 1e-3, m.u0() - 1e-3, 400);
  MeshSpec s = default_mesh_spec(m);
  s.refine = refine;
  return freeway(m, sc.roots.at(0).s, s);
}

// per-delta fold data shared by the last two criteria and the toll-road check
struct FoldRun {
  double delta = 0;
  SaddleNodeData sn;
  FoldData fold;
  QuadraticLawFit fit;
  double psi0_distance = 0, psi0_dag_distance = 0;
  double seconds = 0;
};

const std::vector<FoldRun>& fold_sweep() {
  static const std::vector<FoldRun> runs = [] {
    std::vector<FoldRun> out;
    for (double d : {0.1, 0.05, 0.025}) {
      auto t0 = Clock::now();
      FoldRun r;
      r.delta = d;
      auto m = pcb(d);
      r.sn = saddle_node_data(*m);
      r.fold = numeric_fold(*m);
      r.fit = verify_quadratic_law(*m, r.fold, r.sn, {1e-4, 2e-4, 4e-4, 8e-4, 16e-4});
      const Mesh& mesh = r.fold.orbit.mesh;
      r.psi0_distance = profile_distance(mesh, r.fold.psi0, [&](double z) { return r.sn.psi0(z); });
      r.psi0_dag_distance = profile_distance(mesh, r.fold.psi0_dag, [&](double z) { return r.sn.psi0_dag(z); });
      r.seconds = since(t0);
      out.push_back(std::move(r));
    }
    return out;
  }();
  return runs;
}

const FoldRun& at_delta(double d) {
  for (const auto& r : fold_sweep())
    if (r.delta == d) return r;
  throw Error(ErrorCode::argument, "no fold run at this delta");
}

Outcome jump_closed_form() {
  auto t0 = Clock::now();
  auto m = pcb(0.05);
  double worst = 0;
  const double a = 1e-3, b = m->u0() - 1e-3;
  for (int i = 0; i < 100; ++i) {
    const double s = a + (b - a) * i / 99.0;
    worst = std::max(worst, std::abs(delta_p(*m, s) + 2 * m->To(s, m->mu())));
  }
  const double t = since(t0);
  return {worst <= tol::jump && t < tol::jump_seconds,
          fmt("max |dp + 2 T_o| = %.2e (tol %.0e), %.3f s (limit %.0f s)", worst, tol::jump, t, tol::jump_seconds)};
}

Outcome freeway_existence() {
  bool ok = true;
  std::string d;
  auto m = pcb(0.05), mh = pcb(0.025);
  auto sc = rho_scan(*m, 1e-3, m->u0() - 1e-3, 400);
  if (sc.roots.empty()) return {false, "no transverse root"};
  for (size_t i = 0; i < sc.roots.size(); ++i) {
    const double s = sc.roots[i].s;
    auto t0 = Clock::now();
    MeshSpec big = spec_with_nodes(*m, tol::solve_nodes);
    auto o = freeway(*m, s, big);
    const double t = since(t0);
    auto oc = freeway(*m, s, default_mesh_spec(*m));
    auto oh = freeway(*mh, s, default_mesh_spec(*mh));
    const double g = std::abs(oc.u.col(0).maxCoeff() - s), gh = std::abs(oh.u.col(0).maxCoeff() - s);
    const bool pass = o.residual_norm <= tol::bvp_residual && oc.residual_norm <= tol::bvp_residual &&
                      g / gh >= tol::gap_shrink && t < tol::solve_seconds;
    ok = ok && pass;
    d += fmt("root %zu s*=%.6f: N=%d residual %.1e in %.2f s, gap %.2e -> %.2e (x%.2f); ", i, s, o.mesh.n_nodes(),
             o.residual_norm, t, g, gh, g / gh);
  }
  d += fmt("limits residual %.0e, shrink %.1f, %.0f s", tol::bvp_residual, tol::gap_shrink, tol::solve_seconds);
  return {ok, d};
}

Outcome energy_dichotomy() {
  auto m = pcb(0.05);
  auto o = left_freeway(*m);
  const double F = reduced_energy(*m, o);
  const auto& run = at_delta(0.05);
  double H = 0, disc = 0;
  for (const auto& t : run.fit.orbits) {
    auto mt = m->with_mu(t.mu);
    H = std::max(H, hamiltonian_trace(*mt, t).max_abs);
    disc = std::max(disc, std::abs(reduced_energy(*mt, t) - half_v_norm_sq(t)));
  }
  const bool ok = F <= tol::freeway_energy && H <= tol::hamiltonian && disc <= tol::energy_identity &&
                  !run.fit.orbits.empty();
  return {ok, fmt("freeway F1 = %.1e (tol %.0e); toll-road max|H| = %.1e (tol %.0e), |F1 - |v|^2/2| = %.1e (tol %.0e) "
                  "over %zu orbits",
                  F, tol::freeway_energy, H, tol::hamiltonian, disc, tol::energy_identity, run.fit.orbits.size())};
}

Outcome fast_spectrum() {
  auto t0 = Clock::now();
  auto m = pcb(0.05);
  auto sp = fast_sl_spectrum(*m, 0.1, 2000, 40);
  const double t = since(t0);
  const double ref[3] = {-0.75, 0.0, 1.25};
  double err = 0;
  for (int j = 0; j < 3; ++j) err = std::max(err, std::abs(sp.eig[j] - ref[j]));
  // the reduction: sech^3, sech^2 tanh and sech (5 tanh^2 - 1) in x = zeta / 2
  auto sech = [](double x) { return 1 / std::cosh(x); };
  std::function<double(double)> modes[3] = {
      [&](double z) { return sech(z / 2) * (5 * std::pow(std::tanh(z / 2), 2) - 1); },
      [&](double z) { return std::pow(sech(z / 2), 2) * std::tanh(z / 2); },
      [&](double z) { return std::pow(sech(z / 2), 3); }};
  double red = 0;
  for (int j = 0; j < 3; ++j)
    for (double z = -20; z <= 20; z += 0.25) {
      const double h = 1e-3, f = modes[j](z);
      const double Lf = (modes[j](z + h) - 2 * f + modes[j](z - h)) / (h * h) - f + 3 * std::pow(sech(z / 2), 2) * f;
      red = std::max(red, std::abs(Lf - ref[j] * f));
    }
  const bool parity = sp.parity[0] == 1 && sp.parity[1] == -1 && sp.parity[2] == 1;
  const bool ok = err <= tol::fast_sl && red <= tol::fast_sl && parity && t < tol::fast_sl_seconds;
  return {ok, fmt("eigenvalues %.6f %.6f %.6f, max error %.1e (tol %.0e), reduction residual %.1e, %.2f s", sp.eig[0],
                  sp.eig[1], sp.eig[2], err, tol::fast_sl, red, t)};
}

Outcome pearling_verdict() {
  auto m = pcb(0.05);
  SpectralOptions opts;
  opts.kernel_tol = 1e-6;
  std::string d;
  bool ok = true;
  for (int refine : {1, 2}) {
    auto o = left_freeway(*m, refine);
    auto rep = pencil_spectrum(*m, o, opts);
    double kpos = 0;
    for (auto k : rep.positive_real) kpos = std::max(kpos, k.real());
    const bool pass = rep.verdict == Verdict::robust && rep.kernel_dim == 1 && rep.kernel_odd == 1;
    ok = ok && pass;
    d += fmt("PCB N=%d: %s, kernel %d odd/%d even, largest real k %.4g (bounded-k verdict %s up to %.0f); ",
             o.mesh.n_nodes(), verdict_name(rep.verdict), rep.kernel_odd, rep.kernel_even, kpos,
             verdict_name(rep.bounded_verdict), rep.bounded_k);
  }
  ScalarSechModel sm;
  for (int refine : {1, 2}) {
    MeshSpec s;
    s.core_halfwidth = 2;
    s.core_h = 0.5;
    s.refine = refine;
    Mesh mesh = symmetric_mesh(s, 30);
    auto o = solve_freeway(sm, orbit_from_profile(sm, mesh, [](double z) {
                             const double c = 1 / std::cosh(z / 2);
                             return Vec::Constant(1, c * c);
                           }));
    auto rep = pencil_spectrum(sm, o, opts);
    const double k = rep.positive_real.empty() ? NAN : rep.positive_real.front().real();
    const bool pass = rep.verdict == Verdict::not_robust && std::abs(k - 1.25) <= tol::scalar_k;
    ok = ok && pass;
    d += fmt("scalar N=%d: %s k=%.6f; ", mesh.n_nodes(), verdict_name(rep.verdict), k);
  }
  d += fmt("positive threshold %.0e", tol::positive_k);
  return {ok, d};
}

Outcome coercivity() {
  auto m = pcb(0.05);
  SpectralOptions opts;
  opts.k_max = 10;
  opts.k_points = tol::margin_points;
  auto o1 = left_freeway(*m, 1), o2 = left_freeway(*m, 2);
  auto c1 = coercivity_margin(*m, o1, opts), c2 = coercivity_margin(*m, o2, opts);
  const double change = std::abs(c2.margin - c1.margin) / c1.margin;
  const bool ok = c1.margin > 0 && c2.margin > 0 && change <= tol::margin_change;
  return {ok, fmt("margin %.6g at k=%.3f (N=%d), %.6g (N=%d), change %.2f%% (limit %.0f%%)", c1.margin, c1.argmin_k,
                  o1.mesh.n_nodes(), c2.margin, o2.mesh.n_nodes(), 100 * change, 100 * tol::margin_change)};
}

Outcome dressed_energy() {
  auto t0 = Clock::now();
  auto m = pcb(0.05);
  auto o = left_freeway(*m);
  const std::vector<double> eps{0.02, 0.01, 0.005};
  std::vector<double> dev, dev_leading;
  std::string d;
  for (double e : eps) {
    auto dp = dress(o, *m, 2, 1.0, e, 0.2);
    const double E = full_energy_radial(*m, dp);
    const double P = sharp_interface_prediction(*m, o, 2, 1.0, e);
    const double Q = curvature_energy_leading(*m, o, 2, 1.0, e);
    dev.push_back(std::abs(E / P - 1));
    dev_leading.push_back(std::abs(E / Q - 1));
    d += fmt("eps %.3g ratio %.5f; ", e, E / P);
  }
  double order = INFINITY, order_leading = INFINITY;
  for (size_t i = 0; i + 1 < eps.size(); ++i) {
    order = std::min(order, std::log(dev[i] / dev[i + 1]) / std::log(eps[i] / eps[i + 1]));
    order_leading = std::min(order_leading, std::log(dev_leading[i] / dev_leading[i + 1]) / std::log(eps[i] / eps[i + 1]));
  }
  const double t = since(t0);
  const bool ok = order >= tol::energy_order && dev.back() < dev.front() && t < tol::energy_seconds;
  d += fmt("empirical order %.2f (need %.1f), %.1f s; with the D^2-weighted half-norm law: final deviation %.1e, order "
           "%.2f",
           order, tol::energy_order, t, dev_leading.back(), order_leading);
  return {ok, d};
}

Outcome adjoint_solution() {
  double worst = 0;
  for (double fT : {0.2, 0.7, 1.5})
    for (double z = -40; z <= 40; z += 0.005) worst = std::max(worst, std::abs(adjoint_fast_residual(fT, z)));
  double q = 0;
  for (double a = -80; a < 80; a += 4)
    q += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [](double x) { return std::pow(adjoint_fast_shape(x), 2); }, a, a + 4, 10, 1e-15);
  const double c = 4.0 / 3.0 + 2 * M_PI * M_PI / 45;
  const bool ok = worst <= tol::adjoint_residual && std::abs(q - c) <= tol::adjoint_constant;
  return {ok, fmt("max residual %.1e (tol %.0e); quadrature %.15f vs %.15f, error %.1e (tol %.0e)", worst,
                  tol::adjoint_residual, q, c, std::abs(q - c), tol::adjoint_constant)};
}

Outcome quadratic_law() {
  std::string d;
  double seconds = 0;
  std::vector<double> dev;
  for (const auto& r : fold_sweep()) {
    seconds += r.seconds;
    dev.push_back(std::abs(r.fit.ratio - 1));
    d += fmt("delta %.3g: fitted %.5g vs %.5g ratio %.4f (R^2 %.6f; orthogonal pairing ratio %.4f); ", r.delta,
             r.fit.coefficient, r.fit.predicted, r.fit.ratio, r.fit.r_squared, r.fit.ratio_orthogonal);
  }
  const bool in_band = std::abs(at_delta(0.05).fit.ratio - 1) <= tol::law_band;
  const bool tightening = dev[0] > dev[1] && dev[1] > dev[2];
  d += fmt("band +-%.0f%% at delta 0.05: %s, tightening: %s, sweep %.1f s (limit %.0f s)", 100 * tol::law_band,
           in_band ? "yes" : "no", tightening ? "yes" : "no", seconds, tol::law_seconds);
  return {in_band && tightening && seconds < tol::law_seconds, d};
}

Outcome fold_consistency() {
  const auto& r = at_delta(0.05);
  const double gap = std::abs(r.fold.mu_sn - r.sn.location.mu_sn);
  std::string d = fmt("delta 0.05: continued %.7f vs reduced %.7f, gap %.2e (tol %.0e); null vectors:", r.fold.mu_sn,
                      r.sn.location.mu_sn, gap, tol::fold_gap);
  bool vec_ok = true;
  double prev = INFINITY;
  for (const auto& f : fold_sweep()) {
    const double dist = std::max(f.psi0_distance, f.psi0_dag_distance);
    vec_ok = vec_ok && dist <= tol::null_vector_c * std::sqrt(f.delta) && dist < prev;
    prev = dist;
    d += fmt(" delta %.3g %.4f/%.4f (fold gap %.3g);", f.delta, f.psi0_distance, f.psi0_dag_distance,
             f.fold.mu_sn - f.sn.location.mu_sn);
  }
  d += fmt(" bound %.1f sqrt(delta), decreasing: %s", tol::null_vector_c, vec_ok ? "yes" : "no");
  return {gap <= tol::fold_gap && vec_ok, d};
}

}  // namespace

int main() {
  struct Item {
    const char* name;
    Outcome (*run)();
  };
  const Item items[] = {
      {"jump closed form", jump_closed_form},
      {"freeway existence", freeway_existence},
      {"energy dichotomy and Hamiltonian", energy_dichotomy},
      {"fast Sturm-Liouville spectrum", fast_spectrum},
      {"pearling verdict", pearling_verdict},
      {"coercivity margin", coercivity},
      {"dressed-energy law", dressed_energy},
      {"adjoint explicit solution", adjoint_solution},
      {"quadratic toll-road law", quadratic_law},
      {"fold consistency", fold_consistency},
  };
  int failures = 0, idx = 0;
  for (const auto& it : items) {
    ++idx;
    Outcome o;
    try {
      o = it.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%2d] %s %s: %s\n", idx, o.pass ? "PASS" : "FAIL", it.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", idx - failures, idx);
  return failures;
}
