#include "lgl.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "errors.hpp"

namespace fwl {

namespace {

LglRule build_rule(int p) {
  if (p < 2) throw Error(ErrorCode::argument, "element degree must be at least 2");
  LglRule r;
  r.p = p;
  const int N = p + 1;
  Vec x(N);
  for (int j = 0; j < N; ++j) x[j] = -std::cos(M_PI * j / p);
  Mat P(N, N);
  Vec xold = Vec::Constant(N, 2.0);
  for (int it = 0; it < 100 && (x - xold).cwiseAbs().maxCoeff() > 1e-16; ++it) {
    xold = x;
    P.col(0).setOnes();
    P.col(1) = x;
    for (int k = 2; k < N; ++k)
      P.col(k) = ((2.0 * k - 1) * x.cwiseProduct(P.col(k - 1)) - (k - 1.0) * P.col(k - 2)) / k;
    x = xold - (x.cwiseProduct(P.col(p)) - P.col(p - 1)).cwiseQuotient(N * P.col(p));
  }
  x[0] = -1;
  x[p] = 1;
  P.col(0).setOnes();
  P.col(1) = x;
  for (int k = 2; k < N; ++k)
    P.col(k) = ((2.0 * k - 1) * x.cwiseProduct(P.col(k - 1)) - (k - 1.0) * P.col(k - 2)) / k;
  Vec Lp = P.col(p);
  r.x = x;
  r.w = (2.0 / (p * (p + 1.0))) * Lp.cwiseAbs2().cwiseInverse();
  r.D1 = Mat::Zero(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i != j) r.D1(i, j) = Lp[i] / (Lp[j] * (x[i] - x[j]));
  r.D1(0, 0) = -p * (p + 1.0) / 4;
  r.D1(p, p) = p * (p + 1.0) / 4;

  gauss_legendre(p - 1, r.g, r.gw);
  r.E0.resize(p - 1, N);
  for (int q = 0; q < p - 1; ++q) r.E0.row(q) = lagrange_row(x, r.g[q]).transpose();
  r.E1 = r.E0 * r.D1;
  r.E2 = r.E1 * r.D1;
  return r;
}

}  // namespace

void gauss_legendre(int n, Vec& x, Vec& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = -std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 1;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    double p0 = 1, p1 = t;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1) * t * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (t * p1 - p0) / (t * t - 1);
    x[i] = t;
    w[i] = 2 / ((1 - t * t) * dp * dp);
  }
}

Vec lagrange_row(const Vec& x, double t) {
  const int N = int(x.size());
  Vec lam(N), row(N);
  for (int j = 0; j < N; ++j) {
    double prod = 1;
    for (int k = 0; k < N; ++k)
      if (k != j) prod *= x[j] - x[k];
    lam[j] = 1 / prod;
  }
  for (int j = 0; j < N; ++j)
    if (t == x[j]) {
      row.setZero();
      row[j] = 1;
      return row;
    }
  double s = 0;
  for (int j = 0; j < N; ++j) {
    row[j] = lam[j] / (t - x[j]);
    s += row[j];
  }
  return row / s;
}

const LglRule& lgl_rule(int p) {
  static std::mutex mtx;
  static std::map<int, LglRule> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(p);
  if (it == cache.end()) it = cache.emplace(p, build_rule(p)).first;
  return it->second;
}

// ---- mesh ----

int Mesh::element_of(double z) const {
  auto it = std::upper_bound(breaks.begin(), breaks.end(), z);
  int e = int(it - breaks.begin()) - 1;
  return std::clamp(e, 0, n_el() - 1);
}

Vec Mesh::nodes() const {
  const LglRule& r = lgl_rule(p);
  Vec z(n_nodes());
  for (int e = 0; e < n_el(); ++e)
    for (int j = 0; j <= p; ++j) z[node(e, j)] = 0.5 * (breaks[e] + breaks[e + 1]) + 0.5 * h(e) * r.x[j];
  for (int e = 0; e <= n_el(); ++e) z[e * p] = breaks[e];
  return z;
}

Vec Mesh::weights() const {
  const LglRule& r = lgl_rule(p);
  Vec w = Vec::Zero(n_nodes());
  for (int e = 0; e < n_el(); ++e)
    for (int j = 0; j <= p; ++j) w[node(e, j)] += 0.5 * h(e) * r.w[j];
  return w;
}

Vec Mesh::gauss_points() const {
  const LglRule& r = lgl_rule(p);
  Vec g(n_el() * (p - 1));
  for (int e = 0; e < n_el(); ++e)
    for (int q = 0; q < p - 1; ++q) g[e * (p - 1) + q] = 0.5 * (breaks[e] + breaks[e + 1]) + 0.5 * h(e) * r.g[q];
  return g;
}

Vec Mesh::gauss_weights() const {
  const LglRule& r = lgl_rule(p);
  Vec w(n_el() * (p - 1));
  for (int e = 0; e < n_el(); ++e)
    for (int q = 0; q < p - 1; ++q) w[e * (p - 1) + q] = 0.5 * h(e) * r.gw[q];
  return w;
}

Mesh make_mesh(std::vector<double> breaks, int p) {
  if (breaks.size() < 2) throw Error(ErrorCode::argument, "mesh needs at least one element");
  for (size_t i = 1; i < breaks.size(); ++i)
    if (!(breaks[i] > breaks[i - 1])) throw Error(ErrorCode::argument, "mesh breaks must increase strictly");
  lgl_rule(p);
  Mesh m;
  m.breaks = std::move(breaks);
  m.p = p;
  return m;
}

Mesh symmetric_mesh(const MeshSpec& spec, double L) {
  if (!(L > 0)) throw Error(ErrorCode::argument, "mesh half-length must be positive");
  std::vector<double> half{0.0};
  const double core = std::min(spec.core_halfwidth, L);
  const int n_core = std::max(1, int(std::ceil(core / spec.core_h - 1e-9)));
  for (int i = 1; i <= n_core; ++i) half.push_back(core * i / n_core);
  if (L > core) {
    std::vector<double> steps;
    double h = core / n_core, acc = 0;
    while (acc < L - core) {
      h = std::min(h * spec.growth, spec.h_max);
      steps.push_back(h);
      acc += h;
    }
    if (steps.size() > 1 && acc - (L - core) > 0.5 * steps.back()) {
      acc -= steps.back();
      steps.pop_back();
    }
    const double scale = (L - core) / acc;
    double z = core;
    for (double s : steps) half.push_back(z += s * scale);
    half.back() = L;
  }
  std::vector<double> full;
  for (auto it = half.rbegin(); it != half.rend(); ++it)
    if (*it > 0) full.push_back(-*it);
  full.insert(full.end(), half.begin(), half.end());
  return refined(make_mesh(full, spec.degree), spec.refine);
}

Mesh half_mesh(const Mesh& full) {
  std::vector<double> b;
  for (double x : full.breaks)
    if (x >= 0) b.push_back(x);
  if (b.empty() || b.front() != 0.0) throw Error(ErrorCode::argument, "mesh has no element boundary at 0");
  return make_mesh(b, full.p);
}

Mesh refined(const Mesh& m, int factor) {
  if (factor <= 1) return m;
  std::vector<double> b;
  for (int e = 0; e < m.n_el(); ++e)
    for (int k = 0; k < factor; ++k) b.push_back(m.breaks[e] + m.h(e) * k / factor);
  b.push_back(m.breaks.back());
  return make_mesh(b, m.p);
}

Vec eval_at(const Mesh& mesh, const Mat& values, double z, int deriv) {
  const LglRule& r = lgl_rule(mesh.p);
  z = std::clamp(z, mesh.left(), mesh.right());
  const int e = mesh.element_of(z);
  const double h = mesh.h(e);
  const double t = std::clamp((2 * z - mesh.breaks[e] - mesh.breaks[e + 1]) / h, -1.0, 1.0);
  Vec row = lagrange_row(r.x, t);
  Mat blk = values.middleRows(mesh.node(e, 0), mesh.p + 1);
  for (int d = 0; d < deriv; ++d) blk = (2 / h) * r.D1 * blk;
  return blk.transpose() * row;
}

Mat nodal_derivative(const Mesh& mesh, const Mat& values) {
  const LglRule& r = lgl_rule(mesh.p);
  Mat d = Mat::Zero(values.rows(), values.cols());
  for (int e = 0; e < mesh.n_el(); ++e) {
    Mat blk = (2 / mesh.h(e)) * r.D1 * values.middleRows(mesh.node(e, 0), mesh.p + 1);
    for (int j = 0; j <= mesh.p; ++j) {
      const bool shared = (j == 0 && e > 0) || (j == mesh.p && e < mesh.n_el() - 1);
      d.row(mesh.node(e, j)) += (shared ? 0.5 : 1.0) * blk.row(j);
    }
  }
  return d;
}

Mat at_gauss(const Mesh& mesh, const Mat& values, int deriv) {
  const LglRule& r = lgl_rule(mesh.p);
  const Mat& E = deriv == 0 ? r.E0 : deriv == 1 ? r.E1 : r.E2;
  Mat out(mesh.n_el() * (mesh.p - 1), values.cols());
  for (int e = 0; e < mesh.n_el(); ++e)
    out.middleRows(e * (mesh.p - 1), mesh.p - 1) =
        std::pow(2 / mesh.h(e), deriv) * E * values.middleRows(mesh.node(e, 0), mesh.p + 1);
  return out;
}

Mat sample(const Mesh& mesh, int m, const std::function<Vec(double)>& f) {
  Vec z = mesh.nodes();
  Mat out(z.size(), m);
  for (int i = 0; i < z.size(); ++i) out.row(i) = f(z[i]).transpose();
  return out;
}

double truncation_length(const VectorFieldModel& model, double tol) {
  Vec a = model.rest_state();
  Mat M = model.D2().cwiseInverse().asDiagonal() * model.jac(a, model.mu());
  Eigen::EigenSolver<Mat> es(M, false);
  double lam = INFINITY;
  for (int i = 0; i < M.rows(); ++i) lam = std::min(lam, std::sqrt(std::complex<double>(es.eigenvalues()[i])).real());
  if (!(lam > 0)) throw Error(ErrorCode::precondition, "rest state is not normally hyperbolic");
  return std::log(1 / tol) / lam;
}

}  // namespace fwl
