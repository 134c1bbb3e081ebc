#pragma once

#include <Eigen/Sparse>
#include <functional>

#include "lgl.hpp"

namespace fwl {

using SpMat = Eigen::SparseMatrix<double>;

// Second-order system A w'' = G(w, w'; eta, mu), collocated at the Gauss
// points of each element. Unknowns are nodal values, index node*m + comp.
// Rows follow the same index: Gauss point rows on interior nodes, C1 jump rows
// on element interfaces and boundary rows on the two end nodes.
struct PointEval {
  Vec G;
  Mat Gw, Gwz;
  Vec Geta, Gmu;
};

// q is the global Gauss point index
using PointFn = std::function<void(int q, const Vec& w, const Vec& wz, bool jac, PointEval& out)>;

enum class EndKind { projection, even, odd };

struct EndSpec {
  EndKind kind = EndKind::projection;
  Mat rows;  // m x 2m, acting on (w - rest, w')
  Vec rest;
};

struct Assembly {
  Vec R;
  SpMat J;
  Vec R_eta, R_mu;
};

Assembly assemble(const Mesh& mesh, const Vec& A, const Vec& x, const PointFn& fn, const EndSpec& left,
                  const EndSpec& right, bool want_jac);

// B: A on collocation rows, zero on constraint rows
SpMat mass_rows(const Mesh& mesh, const Vec& A);

// linearization Y' = M Y of A w'' = G about a rest state, Y = (w, w')
Mat first_order_matrix(const Vec& A, const Mat& Gw, const Mat& Gwz);
Mat matrix_sign(const Mat& M);
// rows whose null space is the unstable (left end) or stable (right end) subspace
Mat projection_rows(const Mat& M, bool left_end);

// x <-> node-by-component matrix
Mat unflatten(const Vec& x, int m);
Vec flatten(const Mat& W);

}  // namespace fwl
