#include "normalform.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <sstream>

#include "energy.hpp"
#include "errors.hpp"
#include "singular.hpp"

namespace fwl {

namespace {

constexpr double pi = boost::math::constants::pi<double>();
using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

double sech2(double x) {
  const double c = std::cosh(x);
  return 1.0 / (c * c);
}

Error not_saddle(const std::string& why) { return Error(ErrorCode::degenerate, "not a saddle node: " + why); }

double integrate(const std::function<double(double)>& f, double a, double b) {
  return GK::integrate(f, a, b, 6, 1e-11);
}

}  // namespace

RhoFamily pcb_rho_family(const PcbModel& model) {
  auto m = std::static_pointer_cast<const PcbModel>(model.with_mu(model.mu()));
  RhoFamily fam;
  fam.rho = [m](double s, double mu) {
    const double T = m->To(s, mu);
    return m->W(s) - 0.5 * T * T;
  };
  fam.rho_s = [m](double s, double mu) { return m->Wp(s) - m->To(s, mu) * m->To_s(s, mu); };
  fam.rho_ss = [m](double s, double mu) {
    const double Ts = m->To_s(s, mu);
    return m->Wpp(s) - Ts * Ts;  // T_o is linear in s
  };
  fam.rho_mu = [m](double s, double mu) { return -m->To(s, mu) * m->To_mu(s); };
  fam.rho_smu = [m](double s, double mu) {
    return -(m->To_s(s, mu) * m->To_mu(s) + m->To(s, mu) * m->params().t1);
  };
  return fam;
}

SaddleNode locate_saddle_node(const RhoFamily& fam, double s, double mu, int orientation) {
  if (orientation != 1 && orientation != -1) throw Error(ErrorCode::argument, "orientation must be +1 or -1");
  auto res = [&](double s_, double mu_) { return Eigen::Vector2d(fam.rho(s_, mu_), fam.rho_s(s_, mu_)); };
  Eigen::Vector2d r = res(s, mu);
  SaddleNode out;
  int it = 0;
  for (; it < 60 && r.lpNorm<Eigen::Infinity>() > 1e-14; ++it) {
    Eigen::Matrix2d J;
    J << fam.rho_s(s, mu), fam.rho_mu(s, mu), fam.rho_ss(s, mu), fam.rho_smu(s, mu);
    if (!std::isfinite(J.determinant()) || std::abs(J.determinant()) < 1e-300)
      throw not_saddle("singular Newton matrix");
    Eigen::Vector2d step = J.partialPivLu().solve(-r);
    double lam = 1;
    for (int k = 0; k < 30; ++k, lam *= 0.5) {
      Eigen::Vector2d rn = res(s + lam * step[0], mu + lam * step[1]);
      if (rn.allFinite() && rn.norm() < (1 - 1e-4 * lam) * r.norm()) break;
    }
    s += lam * step[0];
    mu += lam * step[1];
    r = res(s, mu);
  }
  out.s_sn = s;
  out.mu_sn = mu;
  out.residual = r.lpNorm<Eigen::Infinity>();
  out.iterations = it;
  if (!(out.residual <= 1e-12)) {
    std::ostringstream os;
    os << "Newton on (rho, rho_s) stalled at residual " << out.residual;
    throw not_saddle(os.str());
  }
  out.rho_ss = fam.rho_ss(s, mu);
  out.rho_mu = orientation * fam.rho_mu(s, mu);
  if (!(out.rho_ss * out.rho_mu < 0)) {
    std::ostringstream os;
    os << "sign condition fails: rho_ss = " << out.rho_ss << ", rho_mu = " << out.rho_mu;
    throw not_saddle(os.str());
  }
  return out;
}

double adjoint_norm_constant() { return 4.0 / 3.0 + 2 * pi * pi / 45; }

double adjoint_fast_shape(double zeta, int deriv) {
  const double t = zeta / 2, S = sech2(t), T = std::tanh(t);
  if (deriv == 0) return S * (1 - t * T);
  // second derivative in zeta
  return 0.25 * (8 * S - 12 * S * S + t * T * S * (12 * S - 4));
}

double adjoint_fast_residual(double fT, double zeta) {
  const double S = sech2(zeta / 2);
  const double p = -fT * adjoint_fast_shape(zeta, 0), pzz = -fT * adjoint_fast_shape(zeta, 2);
  return pzz - p + 3 * S * p + fT * S;
}

InnerProducts closed_form_inner_products(const FoldScalars& c) {
  InnerProducts ip;
  ip.dF_psi0 = -2 * c.To_mu;
  ip.dag_psi0 = c.slow_integral / c.W + 3 * c.fp / c.f * c.To;
  ip.dag_norm_sq = c.f * c.f * c.To * c.To * adjoint_norm_constant() / c.delta;
  return ip;
}

double tollroad_energy_coefficient(const FoldScalars& c) {
  const double den = c.slow_integral / c.W + 3 * c.fp / c.f * c.To;
  if (std::abs(den) <= 1e-10) throw Error(ErrorCode::degenerate, "degenerate pairing <psi0_dag, psi0> = 0");
  const double q = 2 * c.f * c.To * c.To_mu / den;
  return q * q * adjoint_norm_constant();
}

double pairing_energy_coefficient(const InnerProducts& ip) {
  if (std::abs(ip.dag_psi0) <= 1e-10) throw Error(ErrorCode::degenerate, "degenerate pairing <psi0_dag, psi0> = 0");
  return ip.dF_psi0 * ip.dF_psi0 * ip.dag_norm_sq / (ip.dag_psi0 * ip.dag_psi0);
}

struct SaddleNodeData::Tail {
  double z_max = 0;
  std::shared_ptr<boost::math::interpolators::cubic_hermite<std::vector<double>>> spline;
};

double SaddleNodeData::uhat(double z) const {
  z = std::abs(z);
  if (z >= tail->z_max) return 0.0;
  return (*tail->spline)(z);
}

double SaddleNodeData::uhat_prime(double z) const {
  const double u = uhat(z);
  return -std::copysign(std::sqrt(2 * std::max(model->W(u), 0.0)), u);
}

Vec SaddleNodeData::psi0(double z) const {
  const double a = std::abs(z), d = scalars.delta;
  Vec v(2);
  if (a < std::sqrt(d)) {
    v << 1.0, -scalars.fp / scalars.f * model->u2h(location.s_sn, a / d);
  } else {
    v << uhat_prime(a) / uhat_prime0, 0.0;
  }
  return v;
}

Vec SaddleNodeData::psi0_dag(double z) const {
  const double a = std::abs(z), d = scalars.delta;
  Vec v(2);
  if (a < std::sqrt(d)) {
    v << 1.0, -scalars.f * scalars.To * adjoint_fast_shape(a / d) / d;
  } else {
    v << uhat_prime(a) / uhat_prime0, 0.0;
  }
  return v;
}

SaddleNodeData saddle_node_data(const PcbModel& model, int orientation) {
  SaddleNodeData sn;
  sn.orientation = orientation;
  sn.model = std::static_pointer_cast<const PcbModel>(model.with_mu(model.mu()));
  RhoFamily fam = pcb_rho_family(model);

  // start from the maximum of rho on (0, u0) at the model's mu
  const double mu0 = model.mu();
  double s_guess = 0, best = -INFINITY;
  for (int i = 1; i < 400; ++i) {
    const double s = model.u0() * i / 400.0;
    const double r = fam.rho(s, mu0);
    if (r > best) best = r, s_guess = s;
  }
  sn.location = locate_saddle_node(fam, s_guess, mu0, orientation);
  const double s = sn.location.s_sn, mu = sn.location.mu_sn;
  if (!(s > 0 && s < model.u0())) throw not_saddle("tangency outside (0, u0)");

  FoldScalars& c = sn.scalars;
  c.delta = model.delta();
  c.f = model.f(s);
  c.fp = model.fp(s);
  c.To = model.To(s, mu);
  c.To_mu = orientation * model.To_mu(s);
  c.W = model.W(s);
  c.slow_integral = integrate([&](double u) { return std::sqrt(2 * std::max(model.W(u), 0.0)); }, 0.0, s);

  const double rho_mu = sn.location.rho_mu, rho_ss = sn.location.rho_ss;
  sn.s1 = std::abs(std::sqrt(2.0) * rho_mu / std::sqrt(-rho_ss * rho_mu));
  const double Ts = model.To_s(s, mu);
  const double TTm = c.To * c.To_mu;
  sn.s1_alt = std::abs(std::sqrt(2.0) * TTm / std::sqrt(TTm * (model.Wpp(s) - Ts * Ts)));

  // slow tail from u' = -sqrt(2 W(u)), stable in forward z
  {
    namespace ode = boost::numeric::odeint;
    using State = std::array<double, 1>;
    // the sign keeps rounding below zero from running away
    auto slope = [&](double u) { return -std::copysign(std::sqrt(2 * std::max(model.W(u), 0.0)), u); };
    auto rhs = [&](const State& x, State& dx, double) { dx[0] = slope(x[0]); };
    std::vector<double> zs, us, ps;
    State x{s};
    auto stepper = ode::make_dense_output(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
    const double z_max = 60;
    ode::integrate_const(stepper, rhs, x, 0.0, z_max, 5e-3, [&](const State& st, double z) {
      zs.push_back(z);
      us.push_back(st[0]);
      ps.push_back(slope(st[0]));
    });
    auto t = std::make_shared<SaddleNodeData::Tail>();
    t->z_max = zs.back();
    t->spline = std::make_shared<boost::math::interpolators::cubic_hermite<std::vector<double>>>(
        std::move(zs), std::move(us), std::move(ps));
    sn.tail = t;
  }
  sn.uhat_prime0 = -std::sqrt(2 * c.W);

  sn.closed = closed_form_inner_products(c);
  sn.F1_coeff = tollroad_energy_coefficient(c);

  const double d = c.delta, sd = std::sqrt(d);
  const double zt = sn.tail->z_max;
  auto half_line = [&](const std::function<double(double)>& g, double from, double to, double piece) {
    double r = 0;
    for (double a = from; a < to; a += piece) r += integrate(g, a, std::min(a + piece, to));
    return r;
  };

  // the leading-order integrals behind the closed forms: fast parts over R in zeta,
  // slow part over z >= 0 along the tail
  {
    auto fast = [&](const std::function<double(double)>& g) { return 2 * half_line(g, 0.0, 80.0, 4.0); };
    const double u2u2 = fast([&](double x) {
      const double u2 = model.u2h(s, x);
      return u2 * u2;
    });
    sn.quadrature.dF_psi0 = -c.f * c.f * c.To_mu * u2u2 / 3;
    const double slow = 2 * half_line([&](double z) { return std::pow(sn.uhat_prime(z) / sn.uhat_prime0, 2); }, 0.0, zt, 2.0);
    const double cross = fast([&](double x) { return c.fp / c.f * model.u2h(s, x) * c.f * c.To * adjoint_fast_shape(x); });
    sn.quadrature.dag_psi0 = slow + cross;
    sn.quadrature.dag_norm_sq =
        fast([&](double x) { return std::pow(c.f * c.To * adjoint_fast_shape(x), 2); }) / d;
  }

  // the piecewise profiles themselves, cut at sqrt(delta)
  auto u_sn = [&](double z) {
    Vec u(2);
    if (z < sd)
      u << s, model.u2h(s, z / d);
    else
      u << sn.uhat(z), 0.0;
    return u;
  };
  auto both = [&](const std::function<double(double)>& g) {
    const double fast = d * (integrate([&](double x) { return g(d * x); }, 0, 1.0 / (2 * sd)) +
                             integrate([&](double x) { return g(d * x); }, 1.0 / (2 * sd), 1.0 / sd));
    return 2 * (fast + half_line(g, sd, zt, 2.0));
  };
  sn.profile.dF_psi0 = both([&](double z) { return orientation * model.dmu_F(u_sn(z), mu).dot(sn.psi0(z)); });
  sn.profile.dag_psi0 = both([&](double z) { return sn.psi0_dag(z).dot(sn.psi0(z)); });
  sn.profile.dag_norm_sq = both([&](double z) { return sn.psi0_dag(z).squaredNorm(); });
  sn.F1_coeff_quadrature = d * pairing_energy_coefficient(sn.quadrature);
  return sn;
}

double profile_distance(const Mesh& mesh, const Mat& numeric, const std::function<Vec(double)>& ref) {
  const Vec z = mesh.nodes(), w = mesh.weights();
  double num = 0, den = 0;
  for (int i = 0; i < z.size(); ++i) {
    const Vec r = ref(z[i]);
    num += w[i] * (numeric.row(i).transpose() - r).squaredNorm();
    den += w[i] * numeric.row(i).squaredNorm();
  }
  return std::sqrt(num / den);
}

FoldData numeric_fold(const PcbModel& model, double mu_max) {
  RhoScan sc = rho_scan(model, 1e-3, model.u0() - 1e-3, 400);
  const RhoRoot* left = nullptr;
  for (const auto& r : sc.roots)
    if (r.condition_ok && r.rho_prime > 0) {
      left = &r;
      break;
    }
  if (!left) throw Error(ErrorCode::existence, "numeric fold: no admissible root with rho' > 0");
  SingularOrbit so = assemble_singular_orbit(model, left->s);
  Mesh mesh = default_mesh(model, default_mesh_spec(model));
  ConnectionOrbit o = solve_freeway(model, orbit_from_profile(model, mesh, [&](double z) { return so(z); }));
  ContinuationOptions co;
  co.mu_max = mu_max;
  co.stop_after_fold = true;
  Branch br = continue_branch(model, o, co);
  if (!br.fold) throw Error(ErrorCode::no_convergence, "numeric fold: continuation found no fold; " + br.diagnostic);
  return *br.fold;
}

namespace {

// weighted pairing of two nodal profiles
double pair(const Mesh& mesh, const Mat& a, const Mat& b) {
  const Vec w = mesh.weights();
  double s = 0;
  for (int i = 0; i < w.size(); ++i) s += w[i] * a.row(i).dot(b.row(i));
  return s;
}

Mat dmu_F_nodal(const VectorFieldModel& model, const ConnectionOrbit& o) {
  Mat r(o.u.rows(), o.n);
  for (int i = 0; i < r.rows(); ++i) r.row(i) = model.dmu_F(o.u.row(i).transpose(), o.mu).transpose();
  return r;
}

}  // namespace

ConnectionOrbit tollroad_seed(const VectorFieldModel& model, const FoldData& fold, double dmu, bool orthogonal) {
  const Mesh& mesh = fold.orbit.mesh;
  const Mat dF = dmu_F_nodal(model, fold.orbit);
  const double c = orthogonal ? pair(mesh, dF, fold.psi0_dag) / pair(mesh, fold.psi0_dag, fold.psi0_dag)
                              : pair(mesh, dF, fold.psi0) / pair(mesh, fold.psi0_dag, fold.psi0);
  ConnectionOrbit g = fold.orbit;
  g.tollroad = true;
  g.v = -dmu * c * fold.psi0_dag;
  return g;
}

QuadraticLawFit verify_quadratic_law(const PcbModel& model, const FoldData& fold, const SaddleNodeData& sn,
                                     const std::vector<double>& ladder) {
  if (ladder.size() < 5) throw Error(ErrorCode::argument, "quadratic law: need at least five ladder values");
  QuadraticLawFit fit;
  const int o = sn.orientation;
  const Mesh& mesh = fold.orbit.mesh;
  const Mat dF = dmu_F_nodal(model, fold.orbit);
  const double a = pair(mesh, dF, fold.psi0_dag), b = pair(mesh, fold.psi0_dag, fold.psi0_dag);
  const double c0 = pair(mesh, dF, fold.psi0), pr = pair(mesh, fold.psi0_dag, fold.psi0);
  fit.predicted_orthogonal = 0.5 * a * a / b;
  fit.predicted_numeric_oblique = 0.5 * c0 * c0 * b / (pr * pr);
  fit.predicted = sn.F1_coeff / (2 * model.delta());

  ConnectionOrbit guess;
  bool have = false;
  double sxx = 0, sxy = 0;
  for (double step : ladder) {
    if (!(step > 0)) throw Error(ErrorCode::argument, "quadratic law: ladder values must be positive");
    // toll-road side: oriented parameter negative
    const double mu_ext = fold.mu_sn - o * step;
    auto m = model.with_mu(mu_ext);
    ConnectionOrbit seed = have ? guess : tollroad_seed(model, fold, mu_ext - fold.mu_sn, true);
    seed.mu = mu_ext;
    if (have) seed.v *= step / fit.dmu.back();
    ConnectionOrbit tr = solve_tollroad(*m, seed);
    const TollroadEnergy te = tollroad_energy(*m, tr, 1.0);
    const HamiltonianTrace ht = hamiltonian_trace(*m, tr);
    fit.max_hamiltonian = std::max(fit.max_hamiltonian, ht.max_abs);
    fit.max_energy_discrepancy = std::max(fit.max_energy_discrepancy, te.discrepancy);
    fit.dmu.push_back(step);
    fit.energy.push_back(te.residual_form);
    fit.orbits.push_back(tr);
    guess = tr;
    have = true;
    const double x = step * step;
    sxx += x * x;
    sxy += x * te.residual_form;
  }
  fit.coefficient = sxy / sxx;
  double mean = 0;
  for (double e : fit.energy) mean += e;
  mean /= fit.energy.size();
  double ss_res = 0, ss_tot = 0;
  for (size_t i = 0; i < fit.energy.size(); ++i) {
    const double r = fit.energy[i] - fit.coefficient * fit.dmu[i] * fit.dmu[i];
    ss_res += r * r;
    ss_tot += (fit.energy[i] - mean) * (fit.energy[i] - mean);
  }
  fit.r_squared = ss_tot > 0 ? 1 - ss_res / ss_tot : 0;
  fit.warning = fit.r_squared < 0.99;
  fit.ratio = fit.coefficient / fit.predicted;
  fit.ratio_orthogonal = fit.coefficient / fit.predicted_orthogonal;
  return fit;
}

}  // namespace fwl
