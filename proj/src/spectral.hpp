#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "bvp.hpp"
#include "model.hpp"

namespace fwl {

using cplx = std::complex<double>;

struct PencilEig {
  cplx k;
  bool even = true;
  double residual = 0;    // relative residual of K psi = k B psi
  double visibility = 0;  // Gauss-point norm / nodal norm of the eigenvector
};

struct SpectralOptions {
  double re_min = -10, re_max = 1e4, im_max = 1e4;  // reporting window
  double kernel_tol = 1e-6;
  double gamma0 = 1.0;
  double k_max = 10.0;
  int k_points = 200;
  int dense_limit = 4000;  // unknowns per parity; shift-invert Arnoldi above
  double bounded_k = 0;    // cap for the bounded-k verdict; <= 0 means max(1/delta, k_max)
};

enum class Verdict { robust, not_robust, degenerate };
const char* verdict_name(Verdict v);

struct SpectralReport {
  std::vector<PencilEig> eigs;  // finite eigenvalues inside the window
  int kernel_even = 0, kernel_odd = 0;
  int kernel_dim = 0;
  std::vector<cplx> positive_real;
  Verdict verdict = Verdict::degenerate;
  std::string reason;
  double max_residual = 0;
  double translational_residual = 0;
  // same test restricted to real k <= bounded_k, away from the fast scale 1/delta^2
  Verdict bounded_verdict = Verdict::degenerate;
  double bounded_k = 0;
};

// discretized L on the full orbit; requires a converged orbit
ParityOperator linearize(const VectorFieldModel& model, const ConnectionOrbit& orbit);

// relative size of L applied to the discrete derivative of the orbit
double translational_residual(const VectorFieldModel& model, const ConnectionOrbit& orbit);

// finite generalized eigenvalues of (K, B)
std::vector<PencilEig> pencil_eigs(const ParityOperator& op, const SpectralOptions& opts = {});

SpectralReport pencil_spectrum(const VectorFieldModel& model, const ConnectionOrbit& orbit,
                               const SpectralOptions& opts = {});

// eigenvalues of D^-2 (D^2 d_zz - grad F(a)) on [-L, L] with Dirichlet ends, by second differences
std::vector<cplx> constant_state_pencil(const VectorFieldModel& model, const Vec& a, double L, int N);

struct GeometricCriterion {
  bool cond1 = false, cond2 = false, both = false;
  bool degenerate = false;
  double rho_prime = 0, delta_p = 0;
};
GeometricCriterion geometric_criterion(const SlowFastModel& model, double s_star);

struct CoercivityResult {
  double margin = 0;
  double argmin_k = 0;
  std::vector<double> k, sigma;
  bool warning = false;
};

// smallest singular value of K - k B from constrained W-weighted functions to
// Gauss-weighted residuals; with deflation the right kernel is removed from the
// domain and the left kernel from the range
double deflated_sigma_min(const ParityOperator& op, double k, bool deflate);

CoercivityResult coercivity_margin(const VectorFieldModel& model, const ConnectionOrbit& orbit,
                                   const SpectralOptions& opts = {});

struct FastSlSpectrum {
  std::array<double, 3> eig{};
  std::array<int, 3> parity{};  // +1 even, -1 odd
};
// top three eigenvalues of d_zeta^2 - dF2/du2 along the fast homoclinic
FastSlSpectrum fast_sl_spectrum(const SlowFastModel& model, double s, int N = 2000, double L = 40);

}  // namespace fwl
