#pragma once

#include <memory>
#include <vector>

#include "lgl.hpp"
#include "model.hpp"

namespace fwl {

// even fast homoclinic u2h(zeta; s) of u2'' = F2(s, u2), stored for zeta >= 0
struct FastProfile {
  double s = 0;
  bool closed_form = false;
  const SlowFastModel* model = nullptr;
  Mesh mesh;
  Mat values;
  double operator()(double zeta) const;
};

FastProfile fast_homoclinic(const SlowFastModel& model, double s);

// V11(s) = int_0^s F11
double slow_potential(const SlowFastModel& model, double s);
double delta_p(const SlowFastModel& model, double s);

// existence function; the PCB closed form and the generic integral path
double rho(const SlowFastModel& model, double s);
double rho_generic(const SlowFastModel& model, double s);
double rho_prime(const SlowFastModel& model, double s);

struct RhoRoot {
  double s = 0;
  double rho = 0;
  double rho_prime = 0;
  bool condition_ok = false;
};

struct RhoScan {
  double a = 0, b = 0;
  std::vector<double> s, rho, rho_prime;
  std::vector<RhoRoot> roots;
  std::vector<double> tangencies;  // saddle-node candidates
};

RhoScan rho_scan(const SlowFastModel& model, double a, double b, int n_samples);

bool takeoff_condition(const SlowFastModel& model, double s_star);

struct SingularOrbit {
  double s_star = 0;
  double delta = 0;
  double delta_p = 0;
  double rho_prime = 0;
  bool condition_ok = false;
  double blend_width = 0;
  bool inner_correction = false;
  FastProfile fast;
  std::vector<double> tail_z, tail_u, tail_p;  // slow tail for z >= 0

  double slow_tail(double z) const;
  double slow_tail_prime(double z) const;
  // (u1, u2) of the leading-order concatenation
  Vec operator()(double z) const;

 private:
  struct Interp;
  std::shared_ptr<const Interp> interp_;
  friend SingularOrbit assemble_singular_orbit(const SlowFastModel&, double, double);
};

SingularOrbit assemble_singular_orbit(const SlowFastModel& model, double s_star, double tail_length = 40);

}  // namespace fwl
