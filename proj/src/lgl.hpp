#pragma once

#include <functional>
#include <vector>

#include "model.hpp"

namespace fwl {

// Legendre-Gauss-Lobatto element of degree p on [-1, 1], with the p-1 Gauss
// points used for collocation and the nodal-to-Gauss interpolation matrices.
struct LglRule {
  int p = 0;
  Vec x, w;
  Mat D1;
  Vec g, gw;
  Mat E0, E1, E2;
};

const LglRule& lgl_rule(int p);

void gauss_legendre(int n, Vec& x, Vec& w);
// barycentric Lagrange row: values of the basis on nodes x at point t
Vec lagrange_row(const Vec& x, double t);

struct MeshSpec {
  double L = 0;              // half-length; <= 0 means derived from decay rates
  double core_halfwidth = 1.2;
  double core_h = 0.125;
  double growth = 1.5;
  double h_max = 2.0;
  int degree = 10;
  int refine = 1;
};

struct Mesh {
  std::vector<double> breaks;
  int p = 0;

  int n_el() const { return int(breaks.size()) - 1; }
  int n_nodes() const { return n_el() * p + 1; }
  int node(int e, int j) const { return e * p + j; }
  double h(int e) const { return breaks[e + 1] - breaks[e]; }
  double left() const { return breaks.front(); }
  double right() const { return breaks.back(); }
  int element_of(double z) const;

  Vec nodes() const;
  // LGL quadrature weights at the nodes
  Vec weights() const;
  // collocation (Gauss) points and weights, ordered by element
  Vec gauss_points() const;
  Vec gauss_weights() const;
  // index of the node whose row carries Gauss point q
  int gauss_row(int q) const { return (q / (p - 1)) * p + q % (p - 1) + 1; }
};

Mesh make_mesh(std::vector<double> breaks, int p);
// symmetric about 0 with an element boundary at 0
Mesh symmetric_mesh(const MeshSpec& spec, double L);
// the z >= 0 half of a symmetric mesh
Mesh half_mesh(const Mesh& full);
Mesh refined(const Mesh& m, int factor);

// values: n_nodes x m, row per node
Vec eval_at(const Mesh& mesh, const Mat& values, double z, int deriv = 0);
Mat nodal_derivative(const Mesh& mesh, const Mat& values);
Mat at_gauss(const Mesh& mesh, const Mat& values, int deriv = 0);
// samples f(z) at the mesh nodes
Mat sample(const Mesh& mesh, int m, const std::function<Vec(double)>& f);

// decay-based truncation length: exp(-lambda_min L) = tol
double truncation_length(const VectorFieldModel& model, double tol = 1e-12);

}  // namespace fwl
