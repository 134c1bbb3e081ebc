#include "model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace fwl {

Vec VectorFieldModel::eval_field(const Vec& u) const {
  if (u.size() != n()) throw Error(ErrorCode::argument, "eval_field: wrong vector length");
  if (!u.allFinite()) throw Error(ErrorCode::domain, "eval_field: non-finite input");
  return F(u, mu());
}

// ---- slow/fast assembly ----

Vec SlowFastModel::d_entries() const {
  Vec d(2);
  d << 1.0, delta_;
  return d;
}

std::vector<Vec> SlowFastModel::zeros() const { return {Vec::Zero(2)}; }

Vec SlowFastModel::F(const Vec& u, double mu) const {
  Part a = F12(u[0], u[1], mu);
  Part b = F2(u[0], u[1]);
  Vec r(2);
  r << F11(u[0]) + a.v / delta_, b.v;
  return r;
}

Mat SlowFastModel::jac(const Vec& u, double mu) const {
  Part a = F12(u[0], u[1], mu);
  Part b = F2(u[0], u[1]);
  Mat J(2, 2);
  J << F11p(u[0]) + a.d1 / delta_, a.d2 / delta_, b.d1, b.d2;
  return J;
}

std::vector<Mat> SlowFastModel::hess(const Vec& u, double mu) const {
  Part a = F12(u[0], u[1], mu);
  Part b = F2(u[0], u[1]);
  Mat H0(2, 2), H1(2, 2);
  H0 << F11pp(u[0]) + a.d11 / delta_, a.d12 / delta_, a.d12 / delta_, a.d22 / delta_;
  H1 << b.d11, b.d12, b.d12, b.d22;
  return {H0, H1};
}

Vec SlowFastModel::dmu_F(const Vec& u, double mu) const {
  MuPart a = F12_mu(u[0], u[1], mu);
  Vec r(2);
  r << a.v / delta_, 0.0;
  return r;
}

Mat SlowFastModel::dmu_jac(const Vec& u, double mu) const {
  MuPart a = F12_mu(u[0], u[1], mu);
  Mat J = Mat::Zero(2, 2);
  J(0, 0) = a.d1 / delta_;
  J(0, 1) = a.d2 / delta_;
  return J;
}

// ---- PCB ----

void validate_pcb(const PcbParams& p) {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::argument, "pcb parameters: " + msg); };
  for (double x : {p.m, p.c_w, p.f0, p.f1, p.t0, p.t1, p.delta, p.mu})
    if (!std::isfinite(x)) bad("non-finite value");
  if (!(p.m > 0 && p.m < 0.5)) bad("m must lie in (0, 1/2) so that W(1) < 0");
  if (!(p.c_w > 0)) bad("c_w must be positive");
  if (!(p.f0 > 0)) bad("f0 must be positive");
  if (!(p.f1 >= 0)) bad("f1 must be non-negative");
  if (!(p.delta > 0 && p.delta < 1)) bad("delta must lie in (0, 1)");
}

PcbModel::PcbModel(const PcbParams& p) : SlowFastModel(p.delta, p.mu), p_(p) { validate_pcb(p); }

PcbModel::PcbModel(const PcbParams& p, Unchecked) : SlowFastModel(p.delta, p.mu), p_(p) {}

std::shared_ptr<PcbModel> PcbModel::unchecked(const PcbParams& p) {
  return std::shared_ptr<PcbModel>(new PcbModel(p, Unchecked{}));
}

double PcbModel::W(double u) const {
  const double m = p_.m;
  return p_.c_w * u * u * (u * u / 4 - (1 + m) * u / 3 + m / 2);
}
double PcbModel::Wp(double u) const { return p_.c_w * u * (u - p_.m) * (u - 1); }
double PcbModel::Wpp(double u) const { return p_.c_w * (3 * u * u - 2 * (1 + p_.m) * u + p_.m); }
double PcbModel::Wppp(double u) const { return p_.c_w * (6 * u - 2 * (1 + p_.m)); }

double PcbModel::f(double s) const { return p_.f0 * std::exp(-p_.f1 * s); }
double PcbModel::fp(double s) const { return -p_.f1 * f(s); }
double PcbModel::fpp(double s) const { return p_.f1 * p_.f1 * f(s); }

double PcbModel::To(double s, double mu) const { return (1 + mu) * (p_.t0 + p_.t1 * s); }
double PcbModel::To_s(double, double mu) const { return (1 + mu) * p_.t1; }
double PcbModel::To_mu(double s) const { return p_.t0 + p_.t1 * s; }

double PcbModel::u0() const {
  const double m = p_.m;
  const double a = (1 + m) / 3;
  return 2 * (a - std::sqrt(a * a - m / 2));
}

SlowFastModel::Part PcbModel::F12(double u1, double u2, double mu) const {
  // F12 = -(1/3) g(u1) u2^2 with g = f^2 T_o
  const double f2 = f(u1) * f(u1);
  const double f2p = -2 * p_.f1 * f2;
  const double f2pp = 4 * p_.f1 * p_.f1 * f2;
  const double T = To(u1, mu), Tp = To_s(u1, mu);
  const double g = f2 * T;
  const double gp = f2p * T + f2 * Tp;
  const double gpp = f2pp * T + 2 * f2p * Tp;
  Part r;
  r.v = -g * u2 * u2 / 3;
  r.d1 = -gp * u2 * u2 / 3;
  r.d2 = -2 * g * u2 / 3;
  r.d11 = -gpp * u2 * u2 / 3;
  r.d12 = -2 * gp * u2 / 3;
  r.d22 = -2 * g / 3;
  return r;
}

SlowFastModel::MuPart PcbModel::F12_mu(double u1, double u2, double) const {
  const double f2 = f(u1) * f(u1);
  const double Tm = To_mu(u1);
  const double gm = f2 * Tm;
  const double gmp = -2 * p_.f1 * f2 * Tm + f2 * p_.t1;
  MuPart r;
  r.v = -gm * u2 * u2 / 3;
  r.d1 = -gmp * u2 * u2 / 3;
  r.d2 = -2 * gm * u2 / 3;
  return r;
}

SlowFastModel::Part PcbModel::F2(double u1, double u2) const {
  const double fv = f(u1);
  Part r;
  r.v = u2 - fv * u2 * u2;
  r.d1 = p_.f1 * fv * u2 * u2;
  r.d2 = 1 - 2 * fv * u2;
  r.d11 = -p_.f1 * p_.f1 * fv * u2 * u2;
  r.d12 = 2 * p_.f1 * fv * u2;
  r.d22 = -2 * fv;
  return r;
}

double PcbModel::u2h(double s, double zeta) const {
  const double c = 1.0 / std::cosh(zeta / 2);
  return 1.5 / f(s) * c * c;
}

std::shared_ptr<const VectorFieldModel> PcbModel::with_mu(double mu) const {
  PcbParams q = p_;
  q.mu = mu;
  return unchecked(q);
}

// ---- fixtures ----

Vec ScalarSechModel::F(const Vec& u, double) const { return (u.array() - 1.5 * u.array().square()).matrix(); }
Mat ScalarSechModel::jac(const Vec& u, double) const { return Mat::Constant(1, 1, 1 - 3 * u[0]); }
std::vector<Mat> ScalarSechModel::hess(const Vec&, double) const { return {Mat::Constant(1, 1, -3)}; }
Vec ScalarSechModel::dmu_F(const Vec&, double) const { return Vec::Zero(1); }
Mat ScalarSechModel::dmu_jac(const Vec&, double) const { return Mat::Zero(1, 1); }
std::shared_ptr<const VectorFieldModel> ScalarSechModel::with_mu(double) const {
  return std::make_shared<ScalarSechModel>();
}

std::vector<Mat> LinearModel::hess(const Vec&, double) const {
  return std::vector<Mat>(d_.size(), Mat::Zero(d_.size(), d_.size()));
}
std::shared_ptr<const VectorFieldModel> LinearModel::with_mu(double) const {
  return std::make_shared<LinearModel>(d_, A_);
}

std::vector<Mat> ScaledModel::hess(const Vec& u, double mu) const {
  auto h = base_->hess(u, mu);
  for (auto& m : h) m *= c_ * c_;
  return h;
}
std::shared_ptr<const VectorFieldModel> ScaledModel::with_mu(double mu) const {
  return std::make_shared<ScaledModel>(base_->with_mu(mu), c_);
}

HyperbolicityReport normal_hyperbolicity(const VectorFieldModel& model, const Vec& a) {
  Vec Fa = model.F(a, model.mu());
  if (Fa.lpNorm<Eigen::Infinity>() > 1e-10) {
    std::ostringstream os;
    os << "normal_hyperbolicity: |F(a)| = " << Fa.lpNorm<Eigen::Infinity>() << " exceeds 1e-10";
    throw Error(ErrorCode::precondition, os.str());
  }
  Mat M = model.D2().cwiseInverse().asDiagonal() * model.jac(a, model.mu());
  Eigen::EigenSolver<Mat> es(M, false);
  HyperbolicityReport r;
  r.hyperbolic = true;
  for (int i = 0; i < M.rows(); ++i) {
    std::complex<double> ev = es.eigenvalues()[i];
    r.eigenvalues.push_back(ev);
    if (std::abs(ev.imag()) <= 1e-10 && ev.real() <= 0) r.hyperbolic = false;
  }
  std::sort(r.eigenvalues.begin(), r.eigenvalues.end(),
            [](auto x, auto y) { return x.real() < y.real() || (x.real() == y.real() && x.imag() < y.imag()); });
  return r;
}

}  // namespace fwl
