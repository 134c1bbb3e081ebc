#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>

#include "energy.hpp"
#include "errors.hpp"
#include "normalform.hpp"

using namespace fwl;

namespace {

double sech2(double x) {
  const double c = 1.0 / std::cosh(x);
  return c * c;
}

double line_integral(const std::function<double(double)>& f) {
  double total = 0;
  for (double a = -80; a < 80; a += 4)
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, a + 4, 10, 1e-15);
  return total;
}

// rho = a (s - s0)^2 + b mu, fold at (s0, 0)
RhoFamily parabola(double a, double b, double s0) {
  RhoFamily f;
  f.rho = [=](double s, double mu) { return a * (s - s0) * (s - s0) + b * mu; };
  f.rho_s = [=](double s, double) { return 2 * a * (s - s0); };
  f.rho_ss = [=](double, double) { return 2 * a; };
  f.rho_mu = [=](double, double) { return b; };
  f.rho_smu = [=](double, double) { return 0.0; };
  return f;
}

struct FoldFixture {
  std::shared_ptr<PcbModel> model;
  SaddleNodeData sn;
  FoldData fold;
};

const FoldFixture& default_fold() {
  static const FoldFixture f = [] {
    FoldFixture r;
    r.model = std::make_shared<PcbModel>(PcbParams{});
    r.sn = saddle_node_data(*r.model);
    r.fold = numeric_fold(*r.model);
    return r;
  }();
  return f;
}

}  // namespace

TEST_CASE("fold Newton finds the vertex of a constructed family") {
  auto sn = locate_saddle_node(parabola(-1.0, 1.0, 0.3), 0.2, 0.1, 1);
  CHECK(sn.s_sn == doctest::Approx(0.3));
  CHECK(std::abs(sn.mu_sn) <= 1e-12);
  CHECK(sn.residual <= 1e-12);
  CHECK(sn.rho_ss == doctest::Approx(-2.0));
  CHECK(sn.rho_mu == doctest::Approx(1.0));
}

TEST_CASE("orientation decides the sign condition") {
  auto fam = parabola(1.0, 1.0, 0.3);
  try {
    locate_saddle_node(fam, 0.2, 0.1, 1);
    FAIL("expected a degenerate fold");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate);
    CHECK(std::string(e.what()).find("not a saddle node") != std::string::npos);
  }
  auto sn = locate_saddle_node(fam, 0.2, 0.1, -1);
  CHECK(sn.rho_mu == doctest::Approx(-1.0));
  CHECK(sn.s_sn == doctest::Approx(0.3));
}

TEST_CASE("a family without curvature is degenerate") {
  CHECK_THROWS_AS(locate_saddle_node(parabola(0.0, 1.0, 0.3), 0.2, 0.1, 1), Error);
}

TEST_CASE("default fold agrees with the minimum of the root curve") {
  PcbModel m(PcbParams{});
  auto sn = saddle_node_data(m);
  // a root exists at s iff (1 + mu) <= sqrt(2 W(s)) / (t0 + t1 s); the fold minimises the negative
  const auto& p = m.params();
  auto neg = [&](double s) { return -std::sqrt(2 * m.W(s)) / (p.t0 + p.t1 * s); };
  auto best = boost::math::tools::brent_find_minima(neg, 0.01, m.u0() - 0.01, 50);
  CHECK(sn.location.s_sn == doctest::Approx(best.first).epsilon(1e-7));
  CHECK(sn.location.mu_sn == doctest::Approx(-best.second - 1).epsilon(1e-10));
  CHECK(sn.location.mu_sn == doctest::Approx(0.430403).epsilon(1e-6));
  CHECK(sn.location.s_sn == doctest::Approx(0.191673).epsilon(1e-6));
  CHECK(sn.location.residual <= 1e-12);
}

TEST_CASE("explicit adjoint fast profile solves its equation") {
  for (double fT : {0.3, 0.7, 1.9}) {
    double worst = 0;
    for (double z = -30; z <= 30; z += 0.01) worst = std::max(worst, std::abs(adjoint_fast_residual(fT, z)));
    CHECK(worst <= 1e-10);
  }
  const double h = 1e-4;
  for (double z : {0.0, 0.8, 3.0, -2.2}) {
    const double fd =
        (adjoint_fast_shape(z + h) - 2 * adjoint_fast_shape(z) + adjoint_fast_shape(z - h)) / (h * h);
    CHECK(adjoint_fast_shape(z, 2) == doctest::Approx(fd).epsilon(1e-6).scale(1));
  }
}

TEST_CASE("adjoint shape integrals by quadrature") {
  auto g = [](double x) { return adjoint_fast_shape(x); };
  CHECK(line_integral([&](double x) { return g(x) * g(x); }) ==
        doctest::Approx(adjoint_norm_constant()).epsilon(1e-12));
  CHECK(adjoint_norm_constant() == doctest::Approx(4.0 / 3.0 + 2 * M_PI * M_PI / 45).epsilon(1e-15));
  CHECK(line_integral([&](double x) { return sech2(x / 2) * g(x); }) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(line_integral(g) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("leading-order quadrature reproduces the closed forms") {
  for (double f1 : {0.5, 0.0}) {
    PcbParams p;
    p.f1 = f1;
    PcbModel m(p);
    auto sn = saddle_node_data(m);
    CHECK(sn.quadrature.dF_psi0 == doctest::Approx(sn.closed.dF_psi0).epsilon(1e-8));
    CHECK(sn.quadrature.dag_psi0 == doctest::Approx(sn.closed.dag_psi0).epsilon(1e-6));
    CHECK(sn.quadrature.dag_norm_sq == doctest::Approx(sn.closed.dag_norm_sq).epsilon(1e-8));
    CHECK(sn.F1_coeff_quadrature == doctest::Approx(sn.F1_coeff).epsilon(1e-5));
    if (f1 == 0.0) {
      // no fast correction: the pairing is the slow integral alone
      CHECK(sn.closed.dag_psi0 == doctest::Approx(sn.scalars.slow_integral / sn.scalars.W));
      CHECK(sn.psi0(0.0)[1] == 0.0);
    }
  }
}

TEST_CASE("energy coefficient vanishes when the parameter does not enter the take-off") {
  PcbModel m(PcbParams{});
  auto sn = saddle_node_data(m);
  FoldScalars c = sn.scalars;
  c.To_mu = 0;
  CHECK(tollroad_energy_coefficient(c) == 0.0);
  CHECK(closed_form_inner_products(c).dF_psi0 == 0.0);
}

TEST_CASE("pairing coefficient is invariant under rescaling either null vector") {
  InnerProducts ip{0.35, 0.52, 1.87};
  const double base = pairing_energy_coefficient(ip);
  for (double a : {0.1, -2.0, 7.0})
    for (double b : {0.5, -3.0}) {
      InnerProducts q{a * ip.dF_psi0, a * b * ip.dag_psi0, b * b * ip.dag_norm_sq};
      CHECK(pairing_energy_coefficient(q) == doctest::Approx(base).epsilon(1e-13));
    }
  CHECK_THROWS_AS(pairing_energy_coefficient(InnerProducts{1, 0, 1}), Error);
}

TEST_CASE("fold curvature scale agrees between its two forms") {
  for (double d : {0.1, 0.05}) {
    PcbParams p;
    p.delta = d;
    auto sn = saddle_node_data(PcbModel(p));
    CHECK(sn.s1 == doctest::Approx(sn.s1_alt).epsilon(1e-12));
    CHECK(sn.s1 == doctest::Approx(0.200065).epsilon(1e-5));
  }
}

TEST_CASE("kernel profiles are even and normalised at the centre") {
  PcbModel m(PcbParams{});
  auto sn = saddle_node_data(m);
  for (double z : {0.01, 0.1, 0.5, 3.0}) {
    CHECK(sn.psi0(z).isApprox(sn.psi0(-z)));
    CHECK(sn.psi0_dag(z).isApprox(sn.psi0_dag(-z)));
  }
  CHECK(sn.psi0(0)[0] == 1.0);
  CHECK(sn.psi0_dag(0)[0] == 1.0);
  CHECK(sn.uhat(0) == doctest::Approx(sn.location.s_sn));
  CHECK(sn.uhat(10) < 1e-6);
  CHECK(sn.uhat_prime(0) == doctest::Approx(sn.uhat_prime0));
}

TEST_CASE("continued fold lies above the reduced fold by order delta") {
  const auto& f = default_fold();
  const double d = f.model->delta();
  const double gap = f.fold.mu_sn - f.sn.location.mu_sn;
  CHECK(gap > 0);
  CHECK(gap <= 2 * d);
  CHECK(f.fold.sigma_min <= 1e-6);
  CHECK(f.fold.pairing != 0.0);
  const Mesh& mesh = f.fold.orbit.mesh;
  CHECK(profile_distance(mesh, f.fold.psi0, [&](double z) { return f.sn.psi0(z); }) <= 2 * std::sqrt(d));
  CHECK(profile_distance(mesh, f.fold.psi0_dag, [&](double z) { return f.sn.psi0_dag(z); }) <= 2 * std::sqrt(d));
}

TEST_CASE("toll-road seed points along the adjoint kernel") {
  const auto& f = default_fold();
  auto seed = tollroad_seed(*f.model, f.fold, 4e-4, true);
  CHECK(seed.tollroad);
  CHECK(seed.u.isApprox(f.fold.orbit.u));
  // v is a scalar multiple of psi0_dag
  const double c = seed.v.col(0).dot(f.fold.psi0_dag.col(0)) / f.fold.psi0_dag.col(0).squaredNorm();
  CHECK((seed.v - c * f.fold.psi0_dag).norm() <= 1e-10 * seed.v.norm());
  auto seed2 = tollroad_seed(*f.model, f.fold, 8e-4, true);
  CHECK(seed2.v.isApprox(2.0 * seed.v));
}

TEST_CASE("toll-road energies grow quadratically past the fold") {
  const auto& f = default_fold();
  auto fit = verify_quadratic_law(*f.model, f.fold, f.sn);
  REQUIRE(fit.energy.size() == 5);
  for (size_t i = 1; i < fit.energy.size(); ++i) CHECK(fit.energy[i] > fit.energy[i - 1]);
  CHECK(fit.r_squared >= 0.99);
  CHECK_FALSE(fit.warning);
  CHECK(fit.max_hamiltonian <= 1e-8);
  CHECK(fit.max_energy_discrepancy <= 1e-10);
  CHECK(fit.ratio_orthogonal == doctest::Approx(1.0).epsilon(0.05));
  CHECK(fit.predicted == doctest::Approx(f.sn.F1_coeff / (2 * f.model->delta())));
  for (const auto& o : fit.orbits) {
    CHECK(o.residual_norm <= 1e-10);
    CHECK(hamiltonian_trace(*f.model->with_mu(o.mu), o).max_abs <= 1e-8);
  }
}
