#include "spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <random>

#include "errors.hpp"
#include "parallel.hpp"
#include "singular.hpp"

namespace fwl {

namespace {

using SpMatC = Eigen::SparseMatrix<cplx>;

constexpr double kMinVisibility = 1e-2;

double inf_norm(const SpMat& A) {
  Vec s = Vec::Zero(A.rows());
  for (int c = 0; c < A.outerSize(); ++c)
    for (SpMat::InnerIterator it(A, c); it; ++it) s[it.row()] += std::abs(it.value());
  return s.size() ? s.maxCoeff() : 0.0;
}

// Gauss-point norm over nodal norm of an eigenvector; functions that nearly
// vanish at every Gauss point carry the eigenvalues at infinity
double gauss_visibility(const ParityOperator& op, const CVec& v) {
  const Mesh& mesh = op.mesh;
  const int m = op.m;
  Vec gw = mesh.gauss_weights(), nw = mesh.weights();
  Vec br = op.B * Vec(v.real()), bi = op.B * Vec(v.imag());
  double ng = 0, nn = 0;
  for (int q = 0; q < gw.size(); ++q)
    for (int c = 0; c < m; ++c) {
      const int row = mesh.gauss_row(q) * m + c;
      ng += gw[q] * (br[row] * br[row] + bi[row] * bi[row]) / (op.A[c] * op.A[c]);
    }
  for (int i = 0; i < nw.size(); ++i)
    for (int c = 0; c < m; ++c) nn += nw[i] * std::norm(v[i * m + c]);
  return nn > 0 ? std::sqrt(ng / nn) : 0.0;
}

double pencil_residual(const SpMat& K, const SpMat& B, cplx k, const CVec& v, double kn, double bn) {
  Vec re = v.real(), im = v.imag();
  CVec Kv = (K * re).cast<cplx>() + cplx(0, 1) * (K * im).cast<cplx>();
  CVec Bv = (B * re).cast<cplx>() + cplx(0, 1) * (B * im).cast<cplx>();
  const double vn = v.cwiseAbs().maxCoeff();
  if (vn == 0) return INFINITY;
  return (Kv - k * Bv).cwiseAbs().maxCoeff() / (vn * (kn + std::abs(k) * bn));
}

// a few steps of shifted inverse iteration with Rayleigh-quotient updates
void polish(const SpMat& K, const SpMat& B, PencilEig& e, CVec& v, double kn, double bn) {
  SpMatC Kc = K.cast<cplx>(), Bc = B.cast<cplx>();
  for (int it = 0; it < 3; ++it) {
    SpMatC S = Kc - e.k * Bc;
    Eigen::SparseLU<SpMatC> lu(S);
    if (lu.info() != Eigen::Success) return;
    CVec y = lu.solve(Bc * v);
    if (!y.allFinite() || y.norm() == 0) return;
    y /= y.norm();
    CVec By = Bc * y, Ky = Kc * y;
    const double bb = By.squaredNorm();
    if (bb == 0) return;
    const cplx k = By.dot(Ky) / bb;
    PencilEig cand = e;
    cand.k = k;
    cand.residual = pencil_residual(K, B, k, y, kn, bn);
    if (!(cand.residual < e.residual)) return;
    e = cand;
    v = y;
    if (e.residual < 1e-13) return;
  }
}

// Dense shift-invert: eigenvalues theta of (K - sigma B)^-1 B give k = sigma + 1/theta.
// Constraint rows make theta = 0, the eigenvalues at infinity.
std::vector<PencilEig> dense_eigs(const ParityOperator& op, const SpectralOptions& opts) {
  const int n = int(op.K.rows());
  double sigma = -0.37;
  Eigen::SparseLU<SpMat> lu;
  for (int attempt = 0; attempt < 4; ++attempt, sigma *= 1.618) {
    lu.compute(op.K - sigma * op.B);
    if (lu.info() == Eigen::Success) break;
  }
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::numerical, "pencil: shifted operator is singular");
  Mat T = lu.solve(Mat(op.B));
  if (!T.allFinite()) throw Error(ErrorCode::numerical, "pencil: shifted solve failed");
  Eigen::EigenSolver<Mat> es(T, true);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::numerical, "pencil eigensolver did not converge");
  const CVec th = es.eigenvalues();
  const double tmax = th.cwiseAbs().maxCoeff();
  const double kn = inf_norm(op.K), bn = inf_norm(op.B);
  std::vector<PencilEig> out;
  for (int j = 0; j < n; ++j) {
    if (std::abs(th[j]) <= 1e-12 * tmax) continue;
    PencilEig e;
    e.k = sigma + 1.0 / th[j];
    e.even = op.even;
    if (std::abs(e.k) > 1e12) continue;
    CVec v = es.eigenvectors().col(j);
    e.visibility = gauss_visibility(op, v);
    if (e.visibility < kMinVisibility) continue;
    e.residual = pencil_residual(op.K, op.B, e.k, v, kn, bn);
    const bool in_window = e.k.real() >= opts.re_min && e.k.real() <= opts.re_max && std::abs(e.k.imag()) <= opts.im_max;
    if (in_window && e.residual > 1e-10) polish(op.K, op.B, e, v, kn, bn);
    out.push_back(e);
  }
  return out;
}

// eigenvalues of (K, B) nearest a real shift by Arnoldi on (K - sigma B)^-1 B
std::vector<PencilEig> arnoldi_eigs(const ParityOperator& op, double sigma, int nev, int ncv) {
  const int n = int(op.K.rows());
  ncv = std::min(ncv, n);
  SpMat S = op.K - sigma * op.B;
  Eigen::SparseLU<SpMat> lu(S);
  if (lu.info() != Eigen::Success) return {};
  Mat V = Mat::Zero(n, ncv + 1);
  Mat H = Mat::Zero(ncv + 1, ncv);
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  Vec v0(n);
  for (int i = 0; i < n; ++i) v0[i] = nd(rng);
  V.col(0) = v0.normalized();
  int m = ncv;
  for (int j = 0; j < ncv; ++j) {
    Vec w = lu.solve(op.B * V.col(j));
    if (!w.allFinite()) return {};
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) {
        const double h = V.col(i).dot(w);
        H(i, j) += h;
        w -= h * V.col(i);
      }
    H(j + 1, j) = w.norm();
    if (H(j + 1, j) < 1e-14) {
      m = j + 1;
      break;
    }
    V.col(j + 1) = w / H(j + 1, j);
  }
  Eigen::EigenSolver<Mat> es(H.topLeftCorner(m, m));
  const double kn = inf_norm(op.K), bn = inf_norm(op.B);
  std::vector<std::pair<double, PencilEig>> cand;
  for (int i = 0; i < m; ++i) {
    const cplx th = es.eigenvalues()[i];
    if (std::abs(th) < 1e-14) continue;
    PencilEig e;
    e.k = sigma + 1.0 / th;
    e.even = op.even;
    CVec y = V.leftCols(m).cast<cplx>() * es.eigenvectors().col(i);
    e.residual = pencil_residual(op.K, op.B, e.k, y, kn, bn);
    e.visibility = gauss_visibility(op, y);
    if (e.visibility < kMinVisibility) continue;
    cand.push_back({-std::abs(th), e});
  }
  std::sort(cand.begin(), cand.end(), [](auto& a, auto& b) { return a.first < b.first; });
  std::vector<PencilEig> out;
  for (int i = 0; i < int(cand.size()) && i < nev; ++i) out.push_back(cand[i].second);
  return out;
}

std::vector<PencilEig> sparse_eigs(const ParityOperator& op, const SpectralOptions& opts) {
  std::vector<PencilEig> out;
  const double shifts[] = {0.013, 0.77, 7.3, 61.0, 530.0, 4700.0};
  for (double s : shifts) {
    if (s > opts.re_max) break;
    for (auto& e : arnoldi_eigs(op, s, 30, 90)) {
      if (e.residual > 1e-6) continue;
      bool dup = false;
      for (auto& f : out) dup = dup || std::abs(f.k - e.k) <= 1e-8 * std::max(1.0, std::abs(e.k));
      if (!dup) out.push_back(e);
    }
  }
  return out;
}

bool is_real(cplx k) { return std::abs(k.imag()) <= 1e-8 * std::max(1.0, std::abs(k)); }

Vec kernel_vector(const SpMat& K, bool transpose) {
  Eigen::SparseLU<SpMat> lu(K);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::numerical, "kernel vector: factorization failed");
  Vec x = Vec::Ones(K.cols()).normalized();
  for (int it = 0; it < 8; ++it) {
    Vec y = transpose ? Vec(lu.transpose().solve(x)) : Vec(lu.solve(x));
    if (!y.allFinite() || y.norm() == 0) break;
    x = y.normalized();
  }
  return x;
}

// largest eigenvalue of a symmetric positive operator by Lanczos with full reorthogonalization
double lanczos_max(const std::function<Vec(const Vec&)>& op, int n, int steps) {
  steps = std::min(steps, n);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd;
  Vec q(n);
  for (int i = 0; i < n; ++i) q[i] = nd(rng);
  q.normalize();
  Mat Q(n, steps);
  std::vector<double> alpha, beta;
  for (int j = 0; j < steps; ++j) {
    Q.col(j) = q;
    Vec w = op(q);
    const double a = q.dot(w);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
    const double b = w.norm();
    if (b < 1e-14 * std::abs(a) || j + 1 == steps) break;
    beta.push_back(b);
    q = w / b;
  }
  const int m = int(alpha.size());
  Mat T = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    T(i, i) = alpha[i];
    if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(T, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

struct Deflation {
  Vec right, left;  // discrete right and left kernel vectors of K
};

double sigma_min_impl(const ParityOperator& op, double k, const Deflation* dfl) {
  const Mesh& mesh = op.mesh;
  const int m = op.m;
  const int n = int(op.K.cols());
  Vec gw = mesh.gauss_weights();
  const int nq = int(gw.size());
  std::vector<int> rows;
  Vec rw(nq * m);
  for (int q = 0; q < nq; ++q)
    for (int c = 0; c < m; ++c) {
      rows.push_back(mesh.gauss_row(q) * m + c);
      rw[q * m + c] = gw[q];
    }
  const int nf = int(rows.size());
  Vec wd(n);
  Vec nw = mesh.weights();
  for (int i = 0; i < nw.size(); ++i)
    for (int c = 0; c < m; ++c) wd[i * m + c] = nw[i];
  const Vec sd = wd.cwiseSqrt(), sg = rw.cwiseSqrt();

  SpMat Kk = op.K - k * op.B;
  const int nb = dfl ? n + 1 : n;
  SpMat M(nb, nb);
  Vec rt;  // range direction removed in scaled coordinates
  if (dfl) {
    std::vector<Eigen::Triplet<double>> tr;
    for (int c = 0; c < Kk.outerSize(); ++c)
      for (SpMat::InnerIterator it(Kk, c); it; ++it) tr.emplace_back(it.row(), it.col(), it.value());
    Vec lcol(nf);
    for (int i = 0; i < nf; ++i) lcol[i] = dfl->left[rows[i]];
    for (int i = 0; i < nf; ++i) tr.emplace_back(rows[i], n, lcol[i] / rw[i]);
    for (int j = 0; j < n; ++j) tr.emplace_back(n, j, wd[j] * dfl->right[j]);
    M.setFromTriplets(tr.begin(), tr.end());
    rt = lcol.cwiseQuotient(sg);
    rt.normalize();
  } else {
    M = Kk;
  }
  Eigen::SparseLU<SpMat> lu(M);
  if (lu.info() != Eigen::Success) return 0.0;
  auto project = [&](Vec f) {
    if (dfl) f -= rt * rt.dot(f);
    return f;
  };
  auto G = [&](const Vec& ft) {
    Vec f = project(ft).cwiseQuotient(sg);
    Vec rhs = Vec::Zero(nb);
    for (int i = 0; i < nf; ++i) rhs[rows[i]] = f[i];
    Vec x = lu.solve(rhs);
    return Vec(sd.cwiseProduct(x.head(n)));
  };
  auto Gt = [&](const Vec& y) {
    Vec rhs = Vec::Zero(nb);
    rhs.head(n) = sd.cwiseProduct(y);
    Vec z = lu.transpose().solve(rhs);
    Vec g(nf);
    for (int i = 0; i < nf; ++i) g[i] = z[rows[i]];
    return project(g.cwiseQuotient(sg));
  };
  const double lmax = lanczos_max([&](const Vec& f) { return Gt(G(f)); }, nf, 80);
  if (!(lmax > 0) || !std::isfinite(lmax)) return 0.0;
  return 1.0 / std::sqrt(lmax);
}

}  // namespace

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::robust:
      return "robust";
    case Verdict::not_robust:
      return "not-robust";
    default:
      return "degenerate";
  }
}

ParityOperator linearize(const VectorFieldModel& model, const ConnectionOrbit& orbit) {
  if (!(orbit.residual_norm <= 1e-8)) throw Error(ErrorCode::precondition, "linearize: orbit is not converged");
  return full_operator(model, orbit);
}

double translational_residual(const VectorFieldModel& model, const ConnectionOrbit& orbit) {
  ParityOperator L = linearize(model, orbit);
  Vec x = flatten(orbit.p());
  Vec r = L.K * x;
  return r.cwiseAbs().maxCoeff() / (inf_norm(L.K) * x.cwiseAbs().maxCoeff());
}

std::vector<PencilEig> pencil_eigs(const ParityOperator& op, const SpectralOptions& opts) {
  if (op.K.rows() <= opts.dense_limit) return dense_eigs(op, opts);
  return sparse_eigs(op, opts);
}

SpectralReport pencil_spectrum(const VectorFieldModel& model, const ConnectionOrbit& orbit,
                               const SpectralOptions& opts) {
  if (!(orbit.residual_norm <= 1e-8)) throw Error(ErrorCode::precondition, "pencil_spectrum: orbit is not converged");
  SpectralReport rep;
  bool ambiguous = false;
  for (bool even : {true, false}) {
    ParityOperator op = parity_operator(model, orbit, even);
    for (const PencilEig& e : pencil_eigs(op, opts)) {
      const double a = std::abs(e.k);
      if (a <= opts.kernel_tol)
        (even ? rep.kernel_even : rep.kernel_odd)++;
      else if (a <= 100 * opts.kernel_tol)
        ambiguous = true;
      else if (is_real(e.k) && e.k.real() > opts.kernel_tol)
        rep.positive_real.push_back(e.k);
      const bool in_window =
          e.k.real() >= opts.re_min && e.k.real() <= opts.re_max && std::abs(e.k.imag()) <= opts.im_max;
      if (in_window) {
        rep.eigs.push_back(e);
        rep.max_residual = std::max(rep.max_residual, e.residual);
      }
    }
  }
  std::sort(rep.eigs.begin(), rep.eigs.end(), [](const PencilEig& a, const PencilEig& b) {
    if (a.k.real() != b.k.real()) return a.k.real() > b.k.real();
    return a.k.imag() > b.k.imag();
  });
  std::sort(rep.positive_real.begin(), rep.positive_real.end(),
            [](cplx a, cplx b) { return a.real() > b.real(); });
  rep.kernel_dim = rep.kernel_even + rep.kernel_odd;
  rep.translational_residual = translational_residual(model, orbit);
  if (ambiguous) {
    rep.verdict = Verdict::degenerate;
    rep.reason = "eigenvalue at the kernel tolerance boundary";
  } else if (rep.kernel_even > 0 || rep.kernel_odd != 1) {
    rep.verdict = Verdict::degenerate;
    rep.reason = "kernel is not the simple translational mode";
  } else if (!rep.positive_real.empty()) {
    rep.verdict = Verdict::not_robust;
    rep.reason = "positive real pencil eigenvalue";
  } else {
    rep.verdict = Verdict::robust;
  }
  rep.bounded_k = opts.bounded_k > 0 ? opts.bounded_k : std::max(1.0 / model.delta(), opts.k_max);
  if (rep.verdict == Verdict::degenerate)
    rep.bounded_verdict = Verdict::degenerate;
  else if (!rep.positive_real.empty() && rep.positive_real.back().real() <= rep.bounded_k)
    rep.bounded_verdict = Verdict::not_robust;
  else
    rep.bounded_verdict = Verdict::robust;
  return rep;
}

std::vector<cplx> constant_state_pencil(const VectorFieldModel& model, const Vec& a, double L, int N) {
  const int n = model.n();
  const double h = 2 * L / (N + 1);
  Mat DJ = model.D2().cwiseInverse().asDiagonal() * model.jac(a, model.mu());
  Mat M = Mat::Zero(n * N, n * N);
  for (int c = 0; c < n; ++c) {
    for (int i = 0; i < N; ++i) {
      M(c * N + i, c * N + i) = -2 / (h * h);
      if (i > 0) M(c * N + i, c * N + i - 1) = 1 / (h * h);
      if (i + 1 < N) M(c * N + i, c * N + i + 1) = 1 / (h * h);
    }
    for (int b = 0; b < n; ++b)
      for (int i = 0; i < N; ++i) M(c * N + i, b * N + i) -= DJ(c, b);
  }
  Eigen::EigenSolver<Mat> es(M, false);
  std::vector<cplx> out(es.eigenvalues().data(), es.eigenvalues().data() + n * N);
  return out;
}

GeometricCriterion geometric_criterion(const SlowFastModel& model, double s_star) {
  GeometricCriterion g;
  g.rho_prime = rho_prime(model, s_star);
  g.delta_p = delta_p(model, s_star);
  g.degenerate = std::abs(g.rho_prime) <= 1e-10;
  g.cond1 = g.rho_prime > 0 && !g.degenerate;
  g.cond2 = g.delta_p < 0;
  g.both = g.cond1 && g.cond2;
  return g;
}

double deflated_sigma_min(const ParityOperator& op, double k, bool deflate) {
  if (!deflate) return sigma_min_impl(op, k, nullptr);
  Deflation d{kernel_vector(op.K, false), kernel_vector(op.K, true)};
  return sigma_min_impl(op, k, &d);
}

CoercivityResult coercivity_margin(const VectorFieldModel& model, const ConnectionOrbit& orbit,
                                   const SpectralOptions& opts) {
  if (opts.k_points < 2 || !(opts.k_max > 0)) throw Error(ErrorCode::argument, "coercivity: need k_max > 0 and two points");
  ParityOperator ev = parity_operator(model, orbit, true);
  ParityOperator od = parity_operator(model, orbit, false);
  Deflation d{kernel_vector(od.K, false), kernel_vector(od.K, true)};
  CoercivityResult res;
  res.k.resize(opts.k_points);
  res.sigma.resize(opts.k_points);
  parallel_for(opts.k_points, [&](int i) {
    const double k = opts.k_max * i / (opts.k_points - 1);
    res.k[i] = k;
    const double se = sigma_min_impl(ev, k, nullptr);
    const double so = sigma_min_impl(od, k, k <= opts.gamma0 ? &d : nullptr);
    res.sigma[i] = std::min(se, so);
  });
  auto it = std::min_element(res.sigma.begin(), res.sigma.end());
  res.margin = *it;
  res.argmin_k = res.k[it - res.sigma.begin()];
  res.warning = res.margin < 1e-8;
  return res;
}

FastSlSpectrum fast_sl_spectrum(const SlowFastModel& model, double s, int N, double L) {
  if (N < 10 || !(L > 0)) throw Error(ErrorCode::argument, "fast_sl_spectrum: need N >= 10 and L > 0");
  FastProfile fp = fast_homoclinic(model, s);
  const double h = 2 * L / (N + 1);
  Vec d(N), e = Vec::Constant(N - 1, 1 / (h * h));
  for (int i = 0; i < N; ++i) {
    const double zeta = -L + (i + 1) * h;
    d[i] = -2 / (h * h) - model.F2(s, fp(zeta)).d2;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es;
  es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::numerical, "fast Sturm-Liouville eigensolve failed");
  FastSlSpectrum out;
  std::vector<Eigen::Triplet<double>> tr;
  for (int i = 0; i < N; ++i) {
    tr.emplace_back(i, i, d[i]);
    if (i + 1 < N) tr.emplace_back(i, i + 1, e[i]), tr.emplace_back(i + 1, i, e[i]);
  }
  SpMat T(N, N);
  T.setFromTriplets(tr.begin(), tr.end());
  SpMat I(N, N);
  I.setIdentity();
  for (int j = 0; j < 3; ++j) {
    const double lam = es.eigenvalues()[N - 3 + j];
    out.eig[j] = lam;
    // eigenvector by inverse iteration for the parity label
    const double gap = std::min(j > 0 ? lam - es.eigenvalues()[N - 4 + j] : INFINITY,
                                j < 2 ? es.eigenvalues()[N - 2 + j] - lam : INFINITY);
    Eigen::SparseLU<SpMat> lu(T - (lam + 1e-6 * std::min(1.0, gap)) * I);
    Vec v = Vec::LinSpaced(N, 1.0, 2.0);
    for (int it = 0; it < 4 && lu.info() == Eigen::Success; ++it) v = Vec(lu.solve(v)).normalized();
    double sym = 0;
    for (int i = 0; i < N; ++i) sym += v[i] * v[N - 1 - i];
    out.parity[j] = sym > 0 ? 1 : -1;
  }
  return out;
}

}  // namespace fwl
