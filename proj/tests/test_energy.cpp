#include <doctest.h>

#include <cmath>

#include "energy.hpp"
#include "errors.hpp"
#include "singular.hpp"

using namespace fwl;

namespace {

struct Fixture {
  std::shared_ptr<PcbModel> model;
  ConnectionOrbit orbit;
};

const Fixture& freeway() {
  static const Fixture f = [] {
    Fixture r;
    r.model = std::make_shared<PcbModel>(PcbParams{});
    auto sc = rho_scan(*r.model, 1e-3, r.model->u0() - 1e-3, 400);
    auto so = assemble_singular_orbit(*r.model, sc.roots[0].s);
    Mesh mesh = default_mesh(*r.model, default_mesh_spec(*r.model));
    r.orbit = solve_freeway(*r.model, orbit_from_profile(*r.model, mesh, [&](double z) { return so(z); }));
    return r;
  }();
  return f;
}

}  // namespace

TEST_CASE("freeway orbits carry no reduced energy") {
  const auto& f = freeway();
  CHECK(reduced_energy(*f.model, f.orbit) <= 1e-14);
  CHECK(half_v_norm_sq(f.orbit) == 0.0);
  CHECK(hamiltonian_trace(*f.model, f.orbit).max_abs <= 1e-12);
}

TEST_CASE("reduced energy of a non-solution is the squared residual") {
  // u = a sech^2(z/2) for the scalar field: residual (a - a^2 * 3/2 ... ) is known in closed form
  ScalarSechModel sm;
  MeshSpec s;
  s.core_halfwidth = 2;
  s.core_h = 0.25;
  Mesh mesh = symmetric_mesh(s, 40);
  const double a = 0.5;
  auto o = orbit_from_profile(sm, mesh, [&](double z) {
    const double c = 1 / std::cosh(z / 2);
    return Vec::Constant(1, a * c * c);
  });
  // exact: u'' - u + 3u^2/2 = (3/2)(a^2 - a) sech^4, and int sech^8(z/2) = 2 * 32/35
  const double exact = 0.5 * std::pow(1.5 * (a * a - a), 2) * 2 * 32.0 / 35.0;
  CHECK(reduced_energy(sm, o) == doctest::Approx(exact).epsilon(1e-8));
}

TEST_CASE("cutoff is C2 with the stated support") {
  const double ell = 0.2;
  CHECK(cutoff(0.0, ell) == 1.0);
  CHECK(cutoff(ell, ell) == 1.0);
  CHECK(cutoff(-ell, ell) == 1.0);
  CHECK(cutoff(2 * ell, ell) == 0.0);
  CHECK(cutoff(0.5, ell) == 0.0);
  const double h = 1e-6;
  for (double x : {0.23, 0.3, 0.37}) {
    CHECK(cutoff(x, ell, 1) == doctest::Approx((cutoff(x + h, ell) - cutoff(x - h, ell)) / (2 * h)).epsilon(1e-6));
    CHECK(cutoff(x, ell, 2) ==
          doctest::Approx((cutoff(x + h, ell, 1) - cutoff(x - h, ell, 1)) / (2 * h)).epsilon(1e-5));
  }
  for (double x : {ell, 2 * ell}) {
    CHECK(std::abs(cutoff(x, ell, 1)) <= 1e-12);
    CHECK(std::abs(cutoff(x, ell, 2)) <= 1e-9);
  }
  CHECK(cutoff(-0.3, ell) == doctest::Approx(cutoff(0.3, ell)));
}

TEST_CASE("curvature factors of line, circle and sphere") {
  CHECK(curvature_factor(1, 1.0) == 0.0);
  CHECK(curvature_factor(2, 2.0) == doctest::Approx(M_PI));
  CHECK(curvature_factor(3, 1.0) == doctest::Approx(16 * M_PI));
  CHECK(curvature_factor(3, 5.0) == doctest::Approx(16 * M_PI));
  CHECK_THROWS_AS(curvature_factor(4, 1.0), Error);
  CHECK_THROWS_AS(curvature_factor(2, 0.0), Error);
}

TEST_CASE("flat dressing of a freeway orbit has negligible energy") {
  const auto& f = freeway();
  auto dp = dress(f.orbit, *f.model, 1, 1.0, 0.01, 0.2);
  CHECK(full_energy_radial(*f.model, dp) <= 1e-12);
}

TEST_CASE("curved dressing energy follows the curvature law at second order") {
  const auto& f = freeway();
  std::vector<double> eps{0.02, 0.01, 0.005}, err;
  for (double e : eps) {
    auto dp = dress(f.orbit, *f.model, 2, 1.0, e, 0.2);
    const double E = full_energy_radial(*f.model, dp);
    const double Q = curvature_energy_leading(*f.model, f.orbit, 2, 1.0, e);
    err.push_back(std::abs(E / Q - 1));
    CHECK(E > 0);
    // energy is insensitive to widening the window past the dressing support
    CHECK(full_energy_radial(*f.model, dp, 0.05) == doctest::Approx(E).epsilon(1e-10));
  }
  for (size_t i = 0; i + 1 < err.size(); ++i) CHECK(std::log2(err[i] / err[i + 1]) >= 1.5);
  CHECK(err.back() <= 1e-4);
}

TEST_CASE("the two curvature laws differ only through the weighting of D") {
  const auto& f = freeway();
  const double eps = 0.01;
  const double P = sharp_interface_prediction(*f.model, f.orbit, 2, 1.0, eps);
  const double Q = curvature_energy_leading(*f.model, f.orbit, 2, 1.0, eps);
  // both scale as eps^3
  CHECK(sharp_interface_prediction(*f.model, f.orbit, 2, 1.0, 2 * eps) == doctest::Approx(8 * P));
  CHECK(curvature_energy_leading(*f.model, f.orbit, 2, 1.0, 2 * eps) == doctest::Approx(8 * Q));
  // with D = identity they would differ by exactly one half
  ScalarSechModel sm;
  MeshSpec s;
  s.core_halfwidth = 2;
  s.core_h = 0.5;
  Mesh mesh = symmetric_mesh(s, 30);
  auto o = solve_freeway(sm, orbit_from_profile(sm, mesh, [](double z) {
                           const double c = 1 / std::cosh(z / 2);
                           return Vec::Constant(1, c * c);
                         }));
  CHECK(curvature_energy_leading(sm, o, 2, 1.0, eps) ==
        doctest::Approx(0.5 * sharp_interface_prediction(sm, o, 2, 1.0, eps)));
}

TEST_CASE("dressed mass of a circle is the line mass times the perimeter") {
  const auto& f = freeway();
  const Vec w = f.orbit.mesh.weights();
  for (int c = 0; c < 2; ++c) {
    const double line = w.dot(f.orbit.u.col(c));
    for (double eps : {0.02, 0.01}) {
      auto dp = dress(f.orbit, *f.model, 2, 1.0, eps, 0.2);
      CHECK(dressed_mass(dp, c) == doctest::Approx(2 * M_PI * eps * line).epsilon(1e-6));
    }
  }
}

TEST_CASE("dressing validates its geometry") {
  const auto& f = freeway();
  auto code = [&](int d, double R, double eps, double ell) {
    try {
      dress(f.orbit, *f.model, d, R, eps, ell);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode(0);
  };
  CHECK(code(4, 1, 0.01, 0.2) == ErrorCode::argument);
  CHECK(code(2, 1, -0.01, 0.2) == ErrorCode::argument);
  CHECK(code(2, 1, 0.01, 0.3) == ErrorCode::precondition);
  CHECK(code(2, 1, 0.01, 0.2) == ErrorCode(0));
  auto dp = dress(f.orbit, *f.model, 2, 1.0, 0.1, 0.2);
  CHECK(dp.eps_flag);
}
