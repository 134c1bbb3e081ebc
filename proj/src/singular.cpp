#include "singular.hpp"

#include <Eigen/SparseLU>
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <sstream>

#include "collocation.hpp"
#include "errors.hpp"

namespace fwl {

namespace gk = boost::math::quadrature;

namespace {

const PcbModel* as_pcb(const SlowFastModel& m) { return dynamic_cast<const PcbModel*>(&m); }

double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
  double err = 0;
  double v = gk::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol, &err);
  if (!std::isfinite(v)) throw Error(ErrorCode::numerical, "quadrature did not converge");
  return v;
}

// nonzero root of int_0^b F2(s, x) dx, the fast homoclinic amplitude
double fast_amplitude(const SlowFastModel& model, double s) {
  auto V2 = [&](double b) { return integrate([&](double x) { return model.F2(s, x).v; }, 0, b); };
  double prev = V2(1e-3), step = 1e-3;
  for (double b = 2e-3; b < 1e3; b += step, step *= 1.05) {
    double cur = V2(b);
    if (prev * cur < 0) {
      double lo = b - step, hi = b, flo = prev;
      for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        double mid = 0.5 * (lo + hi), fm = V2(mid);
        if (fm * flo <= 0)
          hi = mid;
        else
          lo = mid, flo = fm;
      }
      return 0.5 * (lo + hi);
    }
    prev = cur;
  }
  throw Error(ErrorCode::existence, "fast subsystem has no homoclinic amplitude");
}

}  // namespace

double FastProfile::operator()(double zeta) const {
  if (closed_form) return model->u2h(s, zeta);
  const double a = std::abs(zeta);
  if (a >= mesh.right()) return 0.0;
  return eval_at(mesh, values, a)[0];
}

FastProfile fast_homoclinic(const SlowFastModel& model, double s) {
  if (!std::isfinite(s)) throw Error(ErrorCode::domain, "fast_homoclinic: non-finite slow value");
  FastProfile fp;
  fp.s = s;
  fp.model = &model;
  if (model.has_closed_fast()) {
    if (auto pcb = as_pcb(model); pcb && !(pcb->f(s) > 0))
      throw Error(ErrorCode::existence, "fast_homoclinic: f(s) must be positive");
    fp.closed_form = true;
    return fp;
  }
  // even solution on the half line with a decaying end condition
  const double lam2 = model.F2(s, 0.0).d2;
  if (!(lam2 > 0)) throw Error(ErrorCode::existence, "fast subsystem rest state is not hyperbolic");
  const double lam = std::sqrt(lam2);
  const double L = std::log(1e14) / lam;
  std::vector<double> br;
  const int ne = std::max(8, int(std::ceil(L / 1.0)));
  for (int i = 0; i <= ne; ++i) br.push_back(L * i / ne);
  fp.mesh = make_mesh(br, 10);
  const double b = fast_amplitude(model, s);
  Vec z = fp.mesh.nodes();
  Vec x(z.size());
  for (int i = 0; i < z.size(); ++i) x[i] = b / std::pow(std::cosh(lam * z[i] / 2), 2);
  PointFn fn = [&](int, const Vec& w, const Vec&, bool jac, PointEval& pe) {
    auto part = model.F2(s, w[0]);
    pe.G = Vec::Constant(1, part.v);
    if (!jac) return;
    pe.Gw = Mat::Constant(1, 1, part.d2);
    pe.Gwz = Mat::Zero(1, 1);
    pe.Geta = Vec::Zero(1);
    pe.Gmu = Vec::Zero(1);
  };
  Mat M = first_order_matrix(Vec::Ones(1), Mat::Constant(1, 1, lam2), Mat::Zero(1, 1));
  EndSpec left{EndKind::even, Mat(), Vec::Zero(1)};
  EndSpec right{EndKind::projection, projection_rows(M, false), Vec::Zero(1)};
  Vec A = Vec::Ones(1);
  double res = INFINITY;
  for (int it = 0; it < 50; ++it) {
    Assembly as = assemble(fp.mesh, A, x, fn, left, right, true);
    res = as.R.lpNorm<Eigen::Infinity>();
    if (res < 1e-12) break;
    Eigen::SparseLU<SpMat> lu(as.J);
    if (lu.info() != Eigen::Success) break;
    Vec dx = lu.solve(-as.R);
    if (!dx.allFinite()) break;
    x += dx;
  }
  if (!(res < 1e-10) || x.cwiseAbs().maxCoeff() < 1e-6) {
    std::ostringstream os;
    os << "fast homoclinic not found at s = " << s << " (residual " << res << ")";
    throw Error(ErrorCode::existence, os.str());
  }
  fp.values = x;
  return fp;
}

double slow_potential(const SlowFastModel& model, double s) {
  if (auto pcb = as_pcb(model)) return pcb->W(s);
  return integrate([&](double u) { return model.F11(u); }, 0, s);
}

double delta_p(const SlowFastModel& model, double s) {
  FastProfile fp = fast_homoclinic(model, s);
  const double mu = model.mu();
  if (fp.closed_form) {
    double err = 0;
    auto f = [&](double z) { return model.F12(s, fp(z), mu).v; };
    double v = gk::gauss_kronrod<double, 61>::integrate(f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-14,
                                                        &err);
    if (!std::isfinite(v)) throw Error(ErrorCode::numerical, "delta_p: quadrature failed");
    return 2 * v;
  }
  Vec w = fp.mesh.weights();
  double v = 0;
  for (int i = 0; i < w.size(); ++i) v += w[i] * model.F12(s, fp.values(i, 0), mu).v;
  return 2 * v;
}

double rho(const SlowFastModel& model, double s) {
  if (auto pcb = as_pcb(model)) {
    const double T = pcb->To(s, pcb->mu());
    return pcb->W(s) - 0.5 * T * T;
  }
  return rho_generic(model, s);
}

double rho_generic(const SlowFastModel& model, double s) {
  const double V = integrate([&](double u) { return model.F11(u); }, 0, s);
  const double dp = delta_p(model, s);
  return V - dp * dp / 8;
}

double rho_prime(const SlowFastModel& model, double s) {
  if (auto pcb = as_pcb(model)) {
    const double mu = pcb->mu();
    return pcb->Wp(s) - pcb->To(s, mu) * pcb->To_s(s, mu);
  }
  const double h = 1e-3;
  return (8 * (rho(model, s + h) - rho(model, s - h)) - (rho(model, s + 2 * h) - rho(model, s - 2 * h))) / (12 * h);
}

bool takeoff_condition(const SlowFastModel& model, double s_star) {
  const double V = slow_potential(model, s_star);
  if (!(V > 0)) return false;
  const double slope = -std::sqrt(2 * V);
  const double dp = delta_p(model, s_star);
  return (slope > 0 ? 1.0 : -1.0) * dp > 0;
}

RhoScan rho_scan(const SlowFastModel& model, double a, double b, int n) {
  if (!(b > a) || n < 2) throw Error(ErrorCode::argument, "rho_scan: need a < b and at least two samples");
  RhoScan sc;
  sc.a = a;
  sc.b = b;
  for (int i = 0; i < n; ++i) {
    const double s = a + (b - a) * i / (n - 1);
    sc.s.push_back(s);
    sc.rho.push_back(rho(model, s));
    sc.rho_prime.push_back(rho_prime(model, s));
  }
  for (int i = 0; i + 1 < n; ++i) {
    double lo = sc.s[i], hi = sc.s[i + 1], flo = sc.rho[i], fhi = sc.rho[i + 1];
    if (flo == 0.0 && i > 0) continue;  // counted as the right end of the previous bracket
    if (!(flo * fhi < 0 || fhi == 0.0)) continue;
    while (hi - lo > 1e-8) {
      const double mid = 0.5 * (lo + hi), fm = rho(model, mid);
      if ((fm < 0) == (flo < 0))
        lo = mid, flo = fm;
      else
        hi = mid;
    }
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 20; ++it) {
      const double r = rho(model, s);
      if (std::abs(r) <= 1e-13) break;
      const double d = rho_prime(model, s);
      if (d == 0.0) break;
      const double sn = s - r / d;
      if (sn < lo - 1e-8 || sn > hi + 1e-8) break;
      s = sn;
    }
    RhoRoot rt;
    rt.s = s;
    rt.rho = rho(model, s);
    rt.rho_prime = rho_prime(model, s);
    if (std::abs(rt.rho_prime) <= 1e-10) {
      sc.tangencies.push_back(s);
      continue;
    }
    rt.condition_ok = takeoff_condition(model, s);
    sc.roots.push_back(rt);
  }
  // touching zeros without a sign change
  for (int i = 1; i + 1 < n; ++i) {
    const double r = std::abs(sc.rho[i]);
    if (r < 1e-8 && r <= std::abs(sc.rho[i - 1]) && r <= std::abs(sc.rho[i + 1]) && sc.rho[i - 1] * sc.rho[i + 1] > 0)
      sc.tangencies.push_back(sc.s[i]);
  }
  return sc;
}

// ---- singular orbit ----

struct SingularOrbit::Interp {
  boost::math::interpolators::cubic_hermite<std::vector<double>> spline;
  double z_max;
  explicit Interp(std::vector<double> z, std::vector<double> u, std::vector<double> p)
      : spline(std::move(z), std::move(u), std::move(p)), z_max(0) {}
};

double SingularOrbit::slow_tail(double z) const {
  const double a = std::abs(z);
  if (a >= interp_->z_max) {
    if (tail_u.back() == 0.0) return 0.0;
    return tail_u.back() * std::exp((a - interp_->z_max) * tail_p.back() / tail_u.back());
  }
  return interp_->spline(a);
}

double SingularOrbit::slow_tail_prime(double z) const {
  const double a = std::abs(z);
  const double sg = z < 0 ? -1 : 1;
  if (a >= interp_->z_max) {
    if (tail_u.back() == 0.0) return 0.0;
    const double k = tail_p.back() / tail_u.back();
    return sg * k * tail_u.back() * std::exp((a - interp_->z_max) * k);
  }
  return sg * interp_->spline.prime(a);
}

Vec SingularOrbit::operator()(double z) const {
  const double a = std::abs(z);
  const double sd = std::sqrt(delta);
  const double lo = sd - 0.5 * blend_width, hi = sd + 0.5 * blend_width;
  auto inner = [&](double x) {
    const double zeta = x / delta;
    Vec r(2);
    r[0] = s_star;
    if (inner_correction) {
      const double t = std::tanh(zeta / 2);
      const double lc = zeta / 2 + std::log1p(std::exp(-zeta)) - std::log(2.0);
      r[0] += delta * 0.5 * delta_p * (2 * lc + 0.5 * t * t);
    }
    r[1] = fast(zeta);
    return r;
  };
  auto outer = [&](double x) {
    Vec r(2);
    r << slow_tail(x), 0.0;
    return r;
  };
  if (a <= lo) return inner(a);
  if (a >= hi) return outer(a);
  const double t = (a - lo) / (hi - lo);
  return (1 - t) * inner(a) + t * outer(a);
}

SingularOrbit assemble_singular_orbit(const SlowFastModel& model, double s_star, double tail_length) {
  const double r = rho(model, s_star);
  if (std::abs(r) > 1e-8) {
    std::ostringstream os;
    os << "assemble_singular_orbit: s* = " << s_star << " is not a root of rho (rho = " << r << ")";
    throw Error(ErrorCode::precondition, os.str());
  }
  if (!takeoff_condition(model, s_star))
    throw Error(ErrorCode::precondition, "assemble_singular_orbit: take-off condition fails at this root");
  SingularOrbit so;
  so.s_star = s_star;
  so.delta = model.delta();
  so.delta_p = delta_p(model, s_star);
  so.rho_prime = rho_prime(model, s_star);
  so.condition_ok = true;
  so.blend_width = model.delta();
  so.inner_correction = model.has_closed_fast();
  so.fast = fast_homoclinic(model, s_star);

  // slow tail on the level set p = -sqrt(2 V11(u)), decaying for z > 0
  using State = std::array<double, 1>;
  // the sign keeps overshoot below zero from running away
  auto slope = [&](double u) { return -std::copysign(std::sqrt(std::max(0.0, 2 * slow_potential(model, u))), u); };
  auto rhs = [&](const State& x, State& dx, double) { dx[0] = slope(x[0]); };
  namespace ode = boost::numeric::odeint;
  State x{s_star};
  const double dz = 2e-3;
  auto stepper = ode::make_dense_output(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
  ode::integrate_const(stepper, rhs, x, 0.0, tail_length, dz, [&](const State& st, double z) {
    so.tail_z.push_back(z);
    so.tail_u.push_back(st[0]);
    so.tail_p.push_back(slope(st[0]));
  });
  auto ip = std::make_shared<SingularOrbit::Interp>(so.tail_z, so.tail_u, so.tail_p);
  ip->z_max = so.tail_z.back();
  so.interp_ = ip;
  return so;
}

}  // namespace fwl
