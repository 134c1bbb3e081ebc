#include "energy.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace fwl {

namespace {

constexpr double pi = boost::math::constants::pi<double>();

double surface(int d, double r) {
  switch (d) {
    case 1:
      return 1.0;
    case 2:
      return 2 * pi * r;
    default:
      return 4 * pi * r * r;
  }
}

}  // namespace

double reduced_energy(const VectorFieldModel& model, const ConnectionOrbit& orbit) {
  Mat R = freeway_residual(model, orbit);
  Vec gw = orbit.mesh.gauss_weights();
  return 0.5 * gw.dot(R.rowwise().squaredNorm());
}

double half_v_norm_sq(const ConnectionOrbit& orbit) {
  if (!orbit.tollroad) return 0.0;
  Vec w = orbit.mesh.weights();
  return 0.5 * w.dot(orbit.v.rowwise().squaredNorm());
}

TollroadEnergy tollroad_energy(const VectorFieldModel& model, const ConnectionOrbit& orbit, double tol) {
  TollroadEnergy t;
  t.residual_form = reduced_energy(model, orbit);
  t.v_form = half_v_norm_sq(orbit);
  t.discrepancy = std::abs(t.residual_form - t.v_form);
  if (t.discrepancy > tol) {
    std::ostringstream os;
    os << "toll-road energy forms disagree by " << t.discrepancy;
    throw Error(ErrorCode::numerical, os.str());
  }
  return t;
}

HamiltonianTrace hamiltonian_trace(const VectorFieldModel& model, const ConnectionOrbit& orbit) {
  HamiltonianTrace h;
  const int N = orbit.mesh.n_nodes();
  h.H = Vec::Zero(N);
  if (!orbit.tollroad) return h;
  const Vec A = model.D2();
  const Mat p = orbit.p(), q = orbit.q();
  for (int i = 0; i < N; ++i) {
    const Vec u = orbit.u.row(i).transpose(), v = orbit.v.row(i).transpose();
    h.H[i] = (A.array() * p.row(i).transpose().array() * q.row(i).transpose().array()).sum() - 0.5 * v.squaredNorm() -
             v.dot(model.F(u, orbit.mu));
  }
  h.max_abs = h.H.cwiseAbs().maxCoeff();
  return h;
}

double cutoff(double x, double ell, int deriv) {
  const double a = std::abs(x);
  if (a <= ell || a >= 2 * ell) {
    if (deriv > 0) return 0.0;
    return a <= ell ? 1.0 : 0.0;
  }
  const double t = (a - ell) / ell;
  const double sg = x < 0 ? -1.0 : 1.0;
  const double t2 = t * t, t3 = t2 * t;
  switch (deriv) {
    case 0:
      return 1 - t2 * t2 * (35 - 84 * t + 70 * t2 - 20 * t3);
    case 1:
      return -sg * t3 * (140 - 420 * t + 420 * t2 - 140 * t3) / ell;
    default:
      return -t2 * (420 - 1680 * t + 2100 * t2 - 840 * t3) / (ell * ell);
  }
}

Vec DressedProfile::at(double r, int deriv) const {
  const double z = (r - R) / eps;
  const double x = eps * z;
  const int n = int(rest.size());
  auto ustar = [&](int k) -> Vec {
    if (std::abs(z) >= orbit.mesh.right()) return k == 0 ? rest : Vec::Zero(n);
    return eval_at(orbit.mesh, orbit.u, z, k);
  };
  const Vec u0 = ustar(0) - rest;
  const double xi = cutoff(x, ell, 0);
  if (deriv == 0) return rest + xi * u0;
  const double xi1 = cutoff(x, ell, 1);
  const Vec u1 = ustar(1);
  // d/dr = (1/eps) d/dz
  if (deriv == 1) return (u1 * xi + u0 * eps * xi1) / eps;
  const double xi2 = cutoff(x, ell, 2);
  return (ustar(2) * xi + 2 * eps * u1 * xi1 + u0 * eps * eps * xi2) / (eps * eps);
}

DressedProfile dress(const ConnectionOrbit& orbit, const VectorFieldModel& model, int d, double R, double eps,
                     double ell, int n_samples) {
  if (d < 1 || d > 3) throw Error(ErrorCode::argument, "dress: dimension must be 1, 2 or 3");
  if (!(R > 0) || !(eps > 0) || !(ell > 0)) throw Error(ErrorCode::argument, "dress: R, eps and ell must be positive");
  if (d > 1 && !(2 * ell / R < 1)) throw Error(ErrorCode::precondition, "dress: admissibility requires 2 ell K < 1");
  if (d > 1 && !(2 * ell < R / 2)) throw Error(ErrorCode::precondition, "dress: cutoff must satisfy 2 ell < R/2");
  DressedProfile dp;
  dp.d = d;
  dp.R = R;
  dp.eps = eps;
  dp.ell = ell;
  dp.eps_flag = eps >= model.delta();
  dp.orbit = orbit;
  dp.rest = model.rest_state();
  dp.r = Vec::LinSpaced(n_samples, 0.0, R + 4 * ell);
  dp.values.resize(n_samples, model.n());
  for (int i = 0; i < n_samples; ++i) dp.values.row(i) = dp.at(dp.r[i]).transpose();
  return dp;
}

double full_energy_radial(const VectorFieldModel& model, const DressedProfile& dp, double pad) {
  const double eps = dp.eps, R = dp.R;
  const Vec A = model.D2();
  const double zmax = std::min(2 * dp.ell / eps, dp.orbit.mesh.right()) + pad / eps;
  const double zmin = -std::min(zmax, R / eps);  // r >= 0
  std::vector<double> cuts{zmin, zmax};
  for (double b : dp.orbit.mesh.breaks)
    if (b > zmin && b < zmax) cuts.push_back(b);
  for (double s : {-2 * dp.ell / eps, -dp.ell / eps, dp.ell / eps, 2 * dp.ell / eps})
    if (s > zmin && s < zmax) cuts.push_back(s);
  std::sort(cuts.begin(), cuts.end());
  auto integrand = [&](double z) {
    const double r = R + eps * z;
    if (r <= 0) return 0.0;
    const Vec u = dp.at(r, 0);
    const Vec ur = dp.at(r, 1), urr = dp.at(r, 2);
    // eps^2 Lap u = eps^2 (u_rr + (d-1)/r u_r)
    Vec lap = eps * eps * (urr + (dp.d - 1) / r * ur);
    Vec res = A.cwiseProduct(lap) - model.F(u, dp.orbit.mu);
    return 0.5 * res.squaredNorm() * surface(dp.d, r) * eps;
  };
  double total = 0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] < 1e-14) continue;
    double err = 0;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, cuts[i], cuts[i + 1], 12, 1e-12,
                                                                          &err);
  }
  return total;
}

double dressed_mass(const DressedProfile& dp, int component) {
  const double eps = dp.eps;
  const double zmax = std::min(2 * dp.ell / eps, dp.orbit.mesh.right());
  const double zmin = -std::min(zmax, dp.R / eps);
  std::vector<double> cuts{zmin, zmax};
  for (double b : dp.orbit.mesh.breaks)
    if (b > zmin && b < zmax) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  auto f = [&](double z) {
    const double r = dp.R + eps * z;
    return (dp.at(r)[component] - dp.rest[component]) * surface(dp.d, r) * eps;
  };
  double total = 0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i)
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 12, 1e-12);
  return total;
}

double curvature_factor(int d, double R) {
  if (!(R > 0)) throw Error(ErrorCode::argument, "curvature factor: R must be positive");
  switch (d) {
    case 1:
      return 0.0;
    case 2:
      return 2 * pi / R;  // H = 1/R over length 2 pi R
    case 3:
      return 16 * pi;  // H = 2/R over area 4 pi R^2
    default:
      throw Error(ErrorCode::argument, "curvature factor: dimension must be 1, 2 or 3");
  }
}

namespace {

// sum_c A_c^power int (u_c')^2
double weighted_slope_norm(const VectorFieldModel& model, const ConnectionOrbit& orbit, int power) {
  Mat pg = at_gauss(orbit.mesh, orbit.u, 1);
  Vec gw = orbit.mesh.gauss_weights();
  Vec A = model.D2().array().pow(power);
  double nrm = 0;
  for (int q = 0; q < gw.size(); ++q) nrm += gw[q] * (A.array() * pg.row(q).transpose().array().square()).sum();
  return nrm;
}

}  // namespace

double sharp_interface_prediction(const VectorFieldModel& model, const ConnectionOrbit& orbit, int d, double R,
                                  double eps) {
  return eps * eps * eps * weighted_slope_norm(model, orbit, 1) * curvature_factor(d, R);
}

double curvature_energy_leading(const VectorFieldModel& model, const ConnectionOrbit& orbit, int d, double R,
                                double eps) {
  return 0.5 * eps * eps * eps * weighted_slope_norm(model, orbit, 2) * curvature_factor(d, R);
}

}  // namespace fwl
