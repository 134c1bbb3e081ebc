#pragma once

#include "bvp.hpp"

namespace fwl {

// 1/2 int |D^2 u_zz - F(u)|^2 dz by the collocation Gauss rule
double reduced_energy(const VectorFieldModel& model, const ConnectionOrbit& orbit);
// 1/2 int |v|^2 dz by the nodal rule
double half_v_norm_sq(const ConnectionOrbit& orbit);

struct TollroadEnergy {
  double residual_form = 0;  // reduced_energy
  double v_form = 0;         // half_v_norm_sq
  double discrepancy = 0;
};
// both forms of the toll-road energy; throws numerical error above `tol`
TollroadEnergy tollroad_energy(const VectorFieldModel& model, const ConnectionOrbit& orbit, double tol = 1e-9);

struct HamiltonianTrace {
  Vec H;  // per node
  double max_abs = 0;
};
// H = <D^2 u', v'> - |v|^2/2 - <v, F(u)>, conserved along toll-road orbits
HamiltonianTrace hamiltonian_trace(const VectorFieldModel& model, const ConnectionOrbit& orbit);

// C^2 cutoff: 1 on |x| <= ell, 0 on |x| >= 2 ell, degree-7 smoothstep between
double cutoff(double x, double ell, int deriv = 0);

struct DressedProfile {
  int d = 2;
  double R = 1, eps = 0.01, ell = 0.2;
  bool eps_flag = false;  // eps >= delta
  ConnectionOrbit orbit;
  Vec rest;
  Vec r;       // radial sample grid on [0, R + 4 ell]
  Mat values;  // samples of u(r)

  // u(r) and its first two r-derivatives
  Vec at(double r, int deriv = 0) const;
};

DressedProfile dress(const ConnectionOrbit& orbit, const VectorFieldModel& model, int d, double R, double eps,
                     double ell, int n_samples = 801);

// int over the ball of 1/2 |D^2 eps^2 Lap u - F(u)|^2 in radial coordinates;
// `pad` widens the integration window beyond the dressing support
double full_energy_radial(const VectorFieldModel& model, const DressedProfile& dp, double pad = 0);

// int (u_c - a_c) over the ball
double dressed_mass(const DressedProfile& dp, int component);

// eps^3 ||D u*'||^2 int |H|^2 J_0 with H the sum of principal curvatures
double sharp_interface_prediction(const VectorFieldModel& model, const ConnectionOrbit& orbit, int d, double R,
                                  double eps);
double curvature_factor(int d, double R);
// eps^3 ||D^2 u*'||^2 int |H|^2 J_0 / 2, the curvature term of the residual at leading order
double curvature_energy_leading(const VectorFieldModel& model, const ConnectionOrbit& orbit, int d, double R,
                                double eps);

}  // namespace fwl
