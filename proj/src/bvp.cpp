#include "bvp.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace fwl {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct System {
  int m = 0;
  Vec A;
  EndSpec left, right;
  std::function<PointFn(double eta, double mu)> make_fn;
};

System freeway_system(const VectorFieldModel& model, double mu) {
  System s;
  const int n = model.n();
  s.m = n;
  s.A = model.D2();
  Vec a = model.rest_state();
  Mat M = first_order_matrix(s.A, model.jac(a, mu), Mat::Zero(n, n));
  s.left = {EndKind::projection, projection_rows(M, true), a};
  s.right = {EndKind::projection, projection_rows(M, false), a};
  s.make_fn = [&model, n](double eta, double mu) -> PointFn {
    return [&model, n, eta, mu](int, const Vec& w, const Vec& wz, bool jac, PointEval& pe) {
      pe.G = model.F(w, mu) + eta * wz;
      if (!jac) return;
      pe.Gw = model.jac(w, mu);
      pe.Gwz = eta * Mat::Identity(n, n);
      pe.Geta = wz;
      pe.Gmu = model.dmu_F(w, mu);
    };
  };
  return s;
}

System tollroad_system(const VectorFieldModel& model, double mu) {
  System s;
  const int n = model.n();
  s.m = 2 * n;
  s.A.resize(2 * n);
  s.A << model.D2(), model.D2();
  Vec a = model.rest_state();
  Mat J = model.jac(a, mu);
  Mat G0 = Mat::Zero(2 * n, 2 * n);
  G0.topLeftCorner(n, n) = J;
  G0.topRightCorner(n, n).setIdentity();
  G0.bottomRightCorner(n, n) = J.transpose();
  Mat M = first_order_matrix(s.A, G0, Mat::Zero(2 * n, 2 * n));
  Vec rest = Vec::Zero(2 * n);
  rest.head(n) = a;
  s.left = {EndKind::projection, projection_rows(M, true), rest};
  s.right = {EndKind::projection, projection_rows(M, false), rest};
  s.make_fn = [&model, n](double eta, double mu) -> PointFn {
    return [&model, n, eta, mu](int, const Vec& w, const Vec& wz, bool jac, PointEval& pe) {
      Vec u = w.head(n), v = w.tail(n);
      Mat Ju = model.jac(u, mu);
      pe.G.resize(2 * n);
      pe.G.head(n) = model.F(u, mu) + v;
      pe.G.tail(n) = Ju.transpose() * v + eta * wz.head(n);
      if (!jac) return;
      auto H = model.hess(u, mu);
      Mat Hv = Mat::Zero(n, n);
      for (int c = 0; c < n; ++c) Hv += v[c] * H[c];
      pe.Gw = Mat::Zero(2 * n, 2 * n);
      pe.Gw.topLeftCorner(n, n) = Ju;
      pe.Gw.topRightCorner(n, n).setIdentity();
      pe.Gw.bottomLeftCorner(n, n) = Hv;
      pe.Gw.bottomRightCorner(n, n) = Ju.transpose();
      pe.Gwz = Mat::Zero(2 * n, 2 * n);
      pe.Gwz.bottomLeftCorner(n, n) = eta * Mat::Identity(n, n);
      pe.Geta = Vec::Zero(2 * n);
      pe.Geta.tail(n) = wz.head(n);
      pe.Gmu.resize(2 * n);
      pe.Gmu.head(n) = model.dmu_F(u, mu);
      pe.Gmu.tail(n) = model.dmu_jac(u, mu).transpose() * v;
    };
  };
  return s;
}

Vec replicate(const Vec& w, int m) {
  Vec out(w.size() * m);
  for (int i = 0; i < w.size(); ++i) out.segment(i * m, m).setConstant(w[i]);
  return out;
}

void append(Triplets& t, const SpMat& J, int row0 = 0, int col0 = 0) {
  for (int k = 0; k < J.outerSize(); ++k)
    for (SpMat::InnerIterator it(J, k); it; ++it) t.emplace_back(row0 + it.row(), col0 + it.col(), it.value());
}

struct NewtonOutcome {
  Vec X;
  double residual = INFINITY;
  int iterations = 0;
  bool converged = false;
};

// Row weights that express the discrete equations in reference-element units:
// (h/2)^2 on collocation rows, h/2 on interface rows, 1 on end and extra rows.
// Without them rounding in the second derivative grows like p^4 / h^2.
Vec residual_scale(const Mesh& mesh, int m, int extra) {
  const int N = mesh.n_nodes(), p = mesh.p;
  Vec s = Vec::Ones(N * m + extra);
  for (int e = 0; e < mesh.n_el(); ++e) {
    const double h2 = 0.25 * mesh.h(e) * mesh.h(e);
    for (int j = 1; j < p; ++j) s.segment(mesh.node(e, j) * m, m).setConstant(h2);
    if (e > 0) s.segment(mesh.node(e, 0) * m, m).setConstant(0.5 * std::min(mesh.h(e - 1), mesh.h(e)));
  }
  return s;
}

// damped Newton on a square sparse system; convergence is judged on scale .* R
template <class Fn>
NewtonOutcome newton(Fn&& fn, Vec X, double tol, int max_iter, const Vec& scale) {
  NewtonOutcome out;
  Vec R;
  SpMat J;
  fn(X, true, R, J);
  auto norm_inf = [&](const Vec& r) { return scale.cwiseProduct(r).lpNorm<Eigen::Infinity>(); };
  double res = norm_inf(R);
  Eigen::SparseLU<SpMat> lu;
  for (int it = 0; it < max_iter && std::isfinite(res); ++it) {
    if (res <= tol) {
      out.converged = true;
      break;
    }
    lu.compute(J);
    if (lu.info() != Eigen::Success) break;
    Vec dX = lu.solve(-R);
    if (!dX.allFinite()) break;
    const double r2 = scale.cwiseProduct(R).squaredNorm();
    double lam = 1;
    Vec Xn, Rn;
    SpMat Jn;
    for (int ls = 0; ls < 8; ++ls) {
      Xn = X + lam * dX;
      fn(Xn, true, Rn, Jn);
      if (Rn.allFinite() && (scale.cwiseProduct(Rn).squaredNorm() < r2 || ls == 7)) break;
      lam *= 0.5;
    }
    X = Xn;
    R = Rn;
    J = Jn;
    res = norm_inf(R);
    out.iterations = it + 1;
  }
  if (res <= tol) out.converged = true;
  // one polishing step; a scaled tolerance can stop a step short of rounding level
  if (out.converged) {
    lu.compute(J);
    if (lu.info() == Eigen::Success) {
      Vec dX = lu.solve(-R);
      if (dX.allFinite()) {
        Vec Xn = X + dX, Rn;
        SpMat Jn;
        fn(Xn, false, Rn, Jn);
        const double rn = Rn.allFinite() ? norm_inf(Rn) : INFINITY;
        if (rn <= res) X = Xn, res = rn;
      }
    }
  }
  out.X = X;
  out.residual = res;
  return out;
}

struct FixedMuProblem {
  const System* sys;
  const Mesh* mesh;
  double mu;
  Vec ref, ref_z, wrep;
};

void fixed_mu_residual(const FixedMuProblem& P, const Vec& X, bool jac, Vec& R, SpMat& J) {
  const int Nm = int(P.ref.size());
  const double eta = X[Nm];
  Vec x = X.head(Nm);
  Assembly a = assemble(*P.mesh, P.sys->A, x, P.sys->make_fn(eta, P.mu), P.sys->left, P.sys->right, jac);
  R.resize(Nm + 1);
  R.head(Nm) = a.R;
  Vec wz = P.wrep.cwiseProduct(P.ref_z);
  R[Nm] = wz.dot(x - P.ref);
  if (!jac) return;
  Triplets t;
  append(t, a.J);
  for (int i = 0; i < Nm; ++i) {
    if (a.R_eta[i] != 0.0) t.emplace_back(i, Nm, a.R_eta[i]);
    if (wz[i] != 0.0) t.emplace_back(Nm, i, wz[i]);
  }
  J.resize(Nm + 1, Nm + 1);
  J.setFromTriplets(t.begin(), t.end());
}

void check_rest(const VectorFieldModel& model, double mu) {
  auto m = model.with_mu(mu);
  auto hyp = normal_hyperbolicity(*m, m->rest_state());
  if (!hyp.hyperbolic) throw Error(ErrorCode::precondition, "rest state is not normally hyperbolic");
}

double center_value(const ConnectionOrbit& o) {
  return o.u((o.mesh.n_nodes() - 1) / 2, 0);
}

}  // namespace

Mat ConnectionOrbit::w() const {
  if (!tollroad) return u;
  Mat W(u.rows(), 2 * n);
  W << u, v;
  return W;
}

MeshSpec default_mesh_spec(const VectorFieldModel& model) {
  MeshSpec s;
  const double d = model.delta();
  s.core_halfwidth = 24 * d;
  s.core_h = 1.5 * d;
  s.h_max = 2.0;
  s.growth = 1.5;
  return s;
}

Mesh default_mesh(const VectorFieldModel& model, MeshSpec spec) {
  const double L = spec.L > 0 ? spec.L : truncation_length(model);
  return symmetric_mesh(spec, L);
}

ConnectionOrbit orbit_from_profile(const VectorFieldModel& model, const Mesh& mesh,
                                   const std::function<Vec(double)>& u_of_z, bool tollroad,
                                   const std::function<Vec(double)>& v_of_z) {
  ConnectionOrbit o;
  o.mesh = mesh;
  o.n = model.n();
  o.mu = model.mu();
  o.delta = model.delta();
  o.u = sample(mesh, o.n, u_of_z);
  o.v = v_of_z ? sample(mesh, o.n, v_of_z) : Mat::Zero(mesh.n_nodes(), o.n);
  o.tollroad = tollroad;
  return o;
}

namespace {

ConnectionOrbit solve_common(const VectorFieldModel& model, const ConnectionOrbit& guess, const SolverOptions& opts,
                             bool tollroad) {
  check_rest(model, model.mu());
  const double mu = model.mu();
  System sys = tollroad ? tollroad_system(model, mu) : freeway_system(model, mu);
  const Mesh& mesh = guess.mesh;
  const int m = sys.m;
  Mat W0 = tollroad ? [&] {
    Mat W(guess.u.rows(), m);
    W << guess.u, (guess.v.size() ? guess.v : Mat::Zero(guess.u.rows(), guess.n));
    return W;
  }()
                    : guess.u;
  Mat Wref = W0;
  if (opts.phase_shift != 0.0) {
    Vec z = mesh.nodes();
    for (int i = 0; i < z.size(); ++i) Wref.row(i) = eval_at(mesh, W0, z[i] - opts.phase_shift).transpose();
  }
  FixedMuProblem P{&sys, &mesh, mu, flatten(Wref), flatten(nodal_derivative(mesh, Wref)),
                   replicate(mesh.weights(), m)};
  Vec X(P.ref.size() + 1);
  X << P.ref, 0.0;
  auto out = newton([&](const Vec& Xv, bool jac, Vec& R, SpMat& J) { fixed_mu_residual(P, Xv, jac, R, J); }, X,
                    opts.tol, opts.max_iter, residual_scale(mesh, m, 1));
  if (!out.converged) {
    std::ostringstream os;
    os << (tollroad ? "toll-road" : "freeway") << " Newton did not converge after " << out.iterations
       << " iterations; last residual " << out.residual;
    throw NoConvergence(os.str(), out.residual);
  }
  ConnectionOrbit o;
  o.mesh = mesh;
  o.n = model.n();
  o.mu = mu;
  o.delta = model.delta();
  Mat W = unflatten(out.X.head(P.ref.size()), m);
  o.u = W.leftCols(o.n);
  o.v = tollroad ? Mat(W.rightCols(o.n)) : Mat::Zero(W.rows(), o.n);
  o.tollroad = tollroad;
  o.eta = out.X[P.ref.size()];
  o.residual_norm = out.residual;
  o.phase_anchor = opts.phase_shift;
  o.iterations = out.iterations;
  o.freeway_degenerate = tollroad && o.v.lpNorm<Eigen::Infinity>() <= 1e-12;
  return o;
}

}  // namespace

ConnectionOrbit solve_freeway(const VectorFieldModel& model, const ConnectionOrbit& guess, const SolverOptions& opts) {
  if (guess.tollroad) throw Error(ErrorCode::argument, "solve_freeway: guess must be of freeway type");
  return solve_common(model, guess, opts, false);
}

ConnectionOrbit solve_tollroad(const VectorFieldModel& model, const ConnectionOrbit& guess, const SolverOptions& opts) {
  return solve_common(model, guess, opts, true);
}

Mat freeway_residual(const VectorFieldModel& model, const ConnectionOrbit& orbit) {
  Mat U = at_gauss(orbit.mesh, orbit.u, 0), Uzz = at_gauss(orbit.mesh, orbit.u, 2);
  Vec A = model.D2();
  Mat R(U.rows(), orbit.n);
  for (int q = 0; q < U.rows(); ++q)
    R.row(q) = (A.cwiseProduct(Uzz.row(q).transpose()) - model.F(U.row(q).transpose(), orbit.mu)).transpose();
  return R;
}

Mat half_values(const ConnectionOrbit& orbit, const Mat& full) {
  const int N = int(full.rows());
  if (N % 2 == 0) throw Error(ErrorCode::argument, "orbit mesh is not symmetric");
  const int off = (N - 1) / 2;
  return full.bottomRows(N - off);
}

Mat even_extension(const Mesh& full, const Mat& half) {
  const int N = full.n_nodes();
  const int off = (N - 1) / 2;
  if (half.rows() != N - off) throw Error(ErrorCode::argument, "even_extension: size mismatch");
  Mat out(N, half.cols());
  out.bottomRows(N - off) = half;
  for (int i = 0; i < off; ++i) out.row(i) = half.row(off - i);
  return out;
}

namespace {

ParityOperator linear_operator(const VectorFieldModel& model, const ConnectionOrbit& orbit, const Mesh& mesh,
                               const Mat& U, EndSpec left, bool adjoint) {
  const int n = orbit.n;
  const double mu = orbit.mu;
  Mat Ug = at_gauss(mesh, U, 0);
  std::vector<Mat> Jq(Ug.rows());
  for (int q = 0; q < Ug.rows(); ++q) {
    Mat J = model.jac(Ug.row(q).transpose(), mu);
    Jq[q] = adjoint ? Mat(J.transpose()) : J;
  }
  PointFn fn = [&Jq, n](int q, const Vec& w, const Vec&, bool jac, PointEval& pe) {
    pe.G = Jq[q] * w;
    if (!jac) return;
    pe.Gw = Jq[q];
    pe.Gwz = Mat::Zero(n, n);
    pe.Geta = Vec::Zero(n);
    pe.Gmu = Vec::Zero(n);
  };
  Vec A = model.D2();
  Vec a = model.rest_state();
  Mat Ja = model.jac(a, mu);
  if (adjoint) Ja.transposeInPlace();
  Mat M = first_order_matrix(A, Ja, Mat::Zero(n, n));
  EndSpec right{EndKind::projection, projection_rows(M, false), Vec::Zero(n)};
  if (left.kind == EndKind::projection) left.rows = projection_rows(M, true);
  left.rest = Vec::Zero(n);
  Assembly as = assemble(mesh, A, Vec::Zero(mesh.n_nodes() * n), fn, left, right, true);
  ParityOperator op;
  op.mesh = mesh;
  op.m = n;
  op.K = as.J;
  op.B = mass_rows(mesh, A);
  op.A = A;
  return op;
}

}  // namespace

ParityOperator parity_operator(const VectorFieldModel& model, const ConnectionOrbit& orbit, bool even, bool adjoint) {
  auto mm = model.with_mu(orbit.mu);
  Mesh half = half_mesh(orbit.mesh);
  EndSpec left{even ? EndKind::even : EndKind::odd, Mat(), Vec()};
  ParityOperator op = linear_operator(*mm, orbit, half, half_values(orbit, orbit.u), left, adjoint);
  op.even = even;
  return op;
}

ParityOperator full_operator(const VectorFieldModel& model, const ConnectionOrbit& orbit, bool adjoint) {
  auto mm = model.with_mu(orbit.mu);
  EndSpec left{EndKind::projection, Mat(), Vec()};
  return linear_operator(*mm, orbit, orbit.mesh, orbit.u, left, adjoint);
}

double smallest_singular_value(const SpMat& K, int iters) {
  Eigen::SparseLU<SpMat> lu;
  lu.compute(K);
  if (lu.info() != Eigen::Success) return 0.0;
  Vec x = Vec::Ones(K.cols()).normalized();
  double lam = 0;
  for (int it = 0; it < iters; ++it) {
    Vec y = lu.transpose().solve(x);
    Vec z = lu.solve(y);
    const double nz = z.norm();
    if (!std::isfinite(nz) || nz == 0) return 0.0;
    const double lam_new = nz;
    x = z / nz;
    if (it > 3 && std::abs(lam_new - lam) <= 1e-12 * lam_new) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
  }
  return 1 / std::sqrt(lam);
}

namespace {

Mat inverse_iteration_kernel(const ParityOperator& op) {
  Eigen::SparseLU<SpMat> lu;
  lu.compute(op.K);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::numerical, "null vector: factorization failed");
  Vec x = Vec::Ones(op.K.cols()).normalized();
  for (int it = 0; it < 60; ++it) {
    Vec y = lu.solve(op.B * x);
    if (!y.allFinite()) throw Error(ErrorCode::numerical, "null vector: inverse iteration breakdown");
    y.normalize();
    if (y.dot(x) < 0) y = -y;
    const double d = (y - x).norm();
    x = y;
    if (d < 1e-13) break;
  }
  Mat V = unflatten(x, op.m);
  if (V(0, 0) == 0.0) throw Error(ErrorCode::degenerate, "null vector has zero first component at z = 0");
  return V / V(0, 0);
}

}  // namespace

void fold_null_vectors(const VectorFieldModel& model, const ConnectionOrbit& orbit, FoldData& out) {
  ParityOperator L = parity_operator(model, orbit, true, false);
  ParityOperator Ld = parity_operator(model, orbit, true, true);
  out.psi0 = even_extension(orbit.mesh, inverse_iteration_kernel(L));
  out.psi0_dag = even_extension(orbit.mesh, inverse_iteration_kernel(Ld));
  out.sigma_min = smallest_singular_value(L.K);
  Vec w = orbit.mesh.weights();
  out.pairing = 0;
  for (int i = 0; i < w.size(); ++i) out.pairing += w[i] * out.psi0.row(i).dot(out.psi0_dag.row(i));
}

// ---- continuation ----

namespace {

struct Palc {
  const System* sys;
  const Mesh* mesh;
  Vec wrep;  // weights per unknown in x
  int Nm;

  double wdot(const Vec& a, const Vec& b) const {
    return wrep.cwiseProduct(a.head(Nm)).dot(b.head(Nm)) + a[Nm + 1] * b[Nm + 1];
  }
  Vec wrow(const Vec& t) const {
    Vec r(Nm + 2);
    r.head(Nm) = wrep.cwiseProduct(t.head(Nm));
    r[Nm] = 0;
    r[Nm + 1] = t[Nm + 1];
    return r;
  }

  // rows: collocation, phase (against ref), last row supplied by caller
  void system(const Vec& X, const Vec& ref, const Vec& ref_z, bool jac, Vec& R, Triplets& t) const {
    const double eta = X[Nm], mu = X[Nm + 1];
    Vec x = X.head(Nm);
    Assembly a = assemble(*mesh, sys->A, x, sys->make_fn(eta, mu), sys->left, sys->right, jac);
    R.resize(Nm + 2);
    R.head(Nm) = a.R;
    Vec wz = wrep.cwiseProduct(ref_z);
    R[Nm] = wz.dot(x - ref);
    if (!jac) return;
    append(t, a.J);
    for (int i = 0; i < Nm; ++i) {
      if (a.R_eta[i] != 0.0) t.emplace_back(i, Nm, a.R_eta[i]);
      if (a.R_mu[i] != 0.0) t.emplace_back(i, Nm + 1, a.R_mu[i]);
      if (wz[i] != 0.0) t.emplace_back(Nm, i, wz[i]);
    }
  }

  Vec tangent(const Vec& X, const Vec& ref, const Vec& ref_z, const Vec& orient) const {
    Vec R;
    Triplets t;
    system(X, ref, ref_z, true, R, t);
    Vec row = wrow(orient);
    for (int i = 0; i < Nm + 2; ++i)
      if (row[i] != 0.0) t.emplace_back(Nm + 1, i, row[i]);
    SpMat J(Nm + 2, Nm + 2);
    J.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<SpMat> lu(J);
    if (lu.info() != Eigen::Success) throw Error(ErrorCode::numerical, "tangent: factorization failed");
    Vec e = Vec::Zero(Nm + 2);
    e[Nm + 1] = 1;
    Vec tau = lu.solve(e);
    return tau / std::sqrt(wdot(tau, tau));
  }

  NewtonOutcome correct(const Vec& X0, const Vec& tau, double ds, const Vec& ref, const Vec& ref_z, double tol,
                        int max_iter) const {
    Vec row = wrow(tau);
    auto fn = [&](const Vec& X, bool jac, Vec& R, SpMat& J) {
      Triplets t;
      system(X, ref, ref_z, jac, R, t);
      R[Nm + 1] = row.dot(X - X0) - ds;
      if (!jac) return;
      for (int i = 0; i < Nm + 2; ++i)
        if (row[i] != 0.0) t.emplace_back(Nm + 1, i, row[i]);
      J.resize(Nm + 2, Nm + 2);
      J.setFromTriplets(t.begin(), t.end());
    };
    return newton(fn, X0 + ds * tau, tol, max_iter, residual_scale(*mesh, sys->m, 2));
  }
};

ConnectionOrbit orbit_from_state(const VectorFieldModel& model, const Mesh& mesh, const Vec& X, int Nm,
                                 double residual) {
  ConnectionOrbit o;
  o.mesh = mesh;
  o.n = model.n();
  o.u = unflatten(X.head(Nm), o.n);
  o.v = Mat::Zero(o.u.rows(), o.n);
  o.eta = X[Nm];
  o.mu = X[Nm + 1];
  o.delta = model.delta();
  o.residual_norm = residual;
  return o;
}

double reduced_energy_of(const VectorFieldModel& model, const ConnectionOrbit& o) {
  Mat R = freeway_residual(model, o);
  Vec gw = o.mesh.gauss_weights();
  return 0.5 * gw.dot(R.rowwise().squaredNorm());
}

}  // namespace

Branch continue_branch(const VectorFieldModel& model, const ConnectionOrbit& start, const ContinuationOptions& opts) {
  Branch br;
  SolverOptions so;
  so.tol = opts.tol;
  auto m0 = model.with_mu(start.mu);
  ConnectionOrbit first = solve_freeway(*m0, start, so);
  // the end rows only see the rest state, which does not move with mu
  System sys = freeway_system(model, start.mu);
  const Mesh& mesh = first.mesh;
  const int Nm = mesh.n_nodes() * model.n();
  Palc P{&sys, &mesh, replicate(mesh.weights(), model.n()), Nm};

  Vec X(Nm + 2);
  X << flatten(first.u), first.eta, first.mu;
  Vec ref = X.head(Nm), ref_z = flatten(nodal_derivative(mesh, first.u));
  Vec e_mu = Vec::Zero(Nm + 2);
  e_mu[Nm + 1] = 1;
  Vec tau = P.tangent(X, ref, ref_z, e_mu);

  double arc = 0;
  br.points.push_back({first.mu, center_value(first), reduced_energy_of(model, first), 0.0, false});
  double ds = opts.ds;
  int after_fold = 0;
  for (int step = 0; step < opts.max_steps; ++step) {
    auto out = P.correct(X, tau, ds, ref, ref_z, opts.tol, 12);
    if (!out.converged) {
      ds *= 0.5;
      if (ds < opts.ds_min) {
        std::ostringstream os;
        os << "step collapse at mu = " << X[Nm + 1] << " (ds < " << opts.ds_min << ")";
        br.diagnostic = os.str();
        break;
      }
      continue;
    }
    Vec Xn = out.X;
    Vec refn = Xn.head(Nm);
    ConnectionOrbit on = orbit_from_state(model, mesh, Xn, Nm, out.residual);
    Vec refn_z = flatten(nodal_derivative(mesh, on.u));
    Vec taun = P.tangent(Xn, refn, refn_z, tau);

    if (!br.fold && tau[Nm + 1] * taun[Nm + 1] < 0) {
      // bisect the step length on the sign of dmu/ds
      const double sgn = tau[Nm + 1] > 0 ? 1 : -1;
      double lo = 0, hi = ds;
      Vec Xf = Xn;
      double resf = out.residual;
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        auto o2 = P.correct(X, tau, mid, ref, ref_z, opts.tol, 12);
        if (!o2.converged) break;
        ConnectionOrbit om = orbit_from_state(model, mesh, o2.X, Nm, o2.residual);
        Vec tm = P.tangent(o2.X, o2.X.head(Nm), flatten(nodal_derivative(mesh, om.u)), tau);
        Xf = o2.X;
        resf = o2.residual;
        if (tm[Nm + 1] * sgn > 0)
          lo = mid;
        else
          hi = mid;
      }
      FoldData fd;
      fd.orbit = orbit_from_state(model, mesh, Xf, Nm, resf);
      fd.mu_sn = fd.orbit.mu;
      fold_null_vectors(model, fd.orbit, fd);
      br.points.push_back({fd.mu_sn, center_value(fd.orbit), reduced_energy_of(model, fd.orbit),
                           arc + 0.5 * (lo + hi), true});
      br.fold = std::move(fd);
    }

    arc += ds;
    br.points.push_back({Xn[Nm + 1], center_value(on), reduced_energy_of(model, on), arc, false});
    X = Xn;
    ref = refn;
    ref_z = refn_z;
    tau = taun;
    if (out.iterations <= 3) ds = std::min(ds * 1.5, opts.ds_max);
    if (out.iterations >= 8) ds *= 0.5;
    if (X[Nm + 1] < opts.mu_min || X[Nm + 1] > opts.mu_max) break;
    if (br.fold && (opts.stop_after_fold || ++after_fold >= opts.steps_after_fold)) break;
  }
  return br;
}

}  // namespace fwl
