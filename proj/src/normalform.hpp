#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "bvp.hpp"
#include "model.hpp"

namespace fwl {

// rho(s; mu) and the derivatives the fold Newton needs
struct RhoFamily {
  std::function<double(double, double)> rho, rho_s, rho_ss, rho_mu, rho_smu;
};

// PCB: rho = W - T_o^2/2 with mu the model's external parameter
RhoFamily pcb_rho_family(const PcbModel& model);

struct SaddleNode {
  double s_sn = 0, mu_sn = 0;
  double rho_ss = 0, rho_mu = 0;  // rho_mu in the oriented parameter
  double residual = 0;
  int iterations = 0;
};

// Newton on (rho, rho_s) = 0. The oriented parameter is orientation * (mu - mu_sn);
// the sign condition rho_ss * rho_mu < 0 is checked in that parameter.
SaddleNode locate_saddle_node(const RhoFamily& fam, double s_guess, double mu_guess, int orientation = 1);

struct InnerProducts {
  double dF_psi0 = 0;      // <dmu F(u0), psi0>
  double dag_psi0 = 0;     // <psi0_dag, psi0>
  double dag_norm_sq = 0;  // ||psi0_dag||^2
};

// scalars entering the closed forms, all at (s_sn; fold)
struct FoldScalars {
  double delta = 0;
  double f = 0, fp = 0;
  double To = 0, To_mu = 0;  // To_mu in the oriented parameter
  double W = 0;
  double slow_integral = 0;  // int_0^s sqrt(2 W)
};

// int sech^4(x/2)(1 - (x/2) tanh(x/2))^2 over R
double adjoint_norm_constant();
// sech^2(x/2)(1 - (x/2) tanh(x/2)) and its second derivative
double adjoint_fast_shape(double zeta, int deriv = 0);
// [d^2 - 1 + 3 sech^2(x/2)] p + f T_o sech^2(x/2) with p = -f T_o * shape
double adjoint_fast_residual(double fT, double zeta);

InnerProducts closed_form_inner_products(const FoldScalars& c);
// F1^0 = (2 f T_o dT_o / <psi0_dag, psi0>)^2 (4/3 + 2 pi^2/45)
double tollroad_energy_coefficient(const FoldScalars& c);
// <dF, psi0>^2 ||psi0_dag||^2 / <psi0_dag, psi0>^2, the mu^2/2 coefficient
double pairing_energy_coefficient(const InnerProducts& ip);

struct SaddleNodeData {
  SaddleNode location;
  int orientation = -1;
  FoldScalars scalars;
  double s1 = 0, s1_alt = 0;
  // closed forms; quadrature of the same leading-order integrals; quadrature of
  // the piecewise profiles, which also carries the O(1) slow contributions
  InnerProducts closed, quadrature, profile;
  double F1_coeff = 0;             // closed form
  double F1_coeff_quadrature = 0;  // delta * pairing coefficient from quadratured products
  double uhat_prime0 = 0;

  // leading-order kernel profiles, even in z
  Vec psi0(double z) const;
  Vec psi0_dag(double z) const;
  // slow tail u1 from s_sn at z = 0
  double uhat(double z) const;
  double uhat_prime(double z) const;

  struct Tail;
  std::shared_ptr<const Tail> tail;
  std::shared_ptr<const PcbModel> model;
};

// PCB saddle node from the rho family; orientation -1 puts freeway orbits at mu < mu_sn
SaddleNodeData saddle_node_data(const PcbModel& model, int orientation = -1);

// relative L2 distance between a nodal profile and a reference function
double profile_distance(const Mesh& mesh, const Mat& numeric, const std::function<Vec(double)>& ref);

// freeway fold of the left-root branch by pseudo-arclength continuation in mu
FoldData numeric_fold(const PcbModel& model, double mu_max = 2.0);

// u at the fold and v = -dmu Pi dmuF along psi0_dag, dmu = mu - mu_sn; the
// oblique projection pairs with psi0, the orthogonal one with psi0_dag
ConnectionOrbit tollroad_seed(const VectorFieldModel& model, const FoldData& fold, double dmu, bool orthogonal);

struct QuadraticLawFit {
  std::vector<double> dmu, energy;  // external mu - mu_sn and F1
  double coefficient = 0;           // F1 ~ coefficient * dmu^2
  double predicted = 0;             // F1^0 / (2 delta)
  double ratio = 0;
  double r_squared = 0;
  bool warning = false;
  double predicted_orthogonal = 0;  // from numeric null vectors, orthogonal pairing
  double ratio_orthogonal = 0;
  double predicted_numeric_oblique = 0;  // the theorem's pairing on numeric null vectors
  double max_hamiltonian = 0;
  double max_energy_discrepancy = 0;
  std::vector<ConnectionOrbit> orbits;
};

// toll-road orbits at mu_sn + dmu on the toll-road side, fit F1 against dmu^2
QuadraticLawFit verify_quadratic_law(const PcbModel& model, const FoldData& fold, const SaddleNodeData& sn,
                                     const std::vector<double>& ladder = {1e-4, 2e-4, 4e-4, 8e-4, 16e-4});

}  // namespace fwl
