#pragma once

#include <optional>
#include <string>

#include "collocation.hpp"

namespace fwl {

struct ConnectionOrbit {
  Mesh mesh;
  int n = 0;
  Mat u, v;  // n_nodes x n; v is zero for freeway orbits
  bool tollroad = false;
  double mu = 0;
  double delta = 0;
  double eta = 0;  // unfolding parameter, zero at a true connection
  double residual_norm = INFINITY;
  double phase_anchor = 0;
  int iterations = 0;
  bool freeway_degenerate = false;

  Vec grid() const { return mesh.nodes(); }
  Mat p() const { return nodal_derivative(mesh, u); }
  Mat q() const { return nodal_derivative(mesh, v); }
  Mat w() const;
  Vec at(double z, int deriv = 0) const { return eval_at(mesh, u, z, deriv); }
};

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 40;
  double phase_shift = 0;  // translate the phase reference by this amount
};

MeshSpec default_mesh_spec(const VectorFieldModel& model);
Mesh default_mesh(const VectorFieldModel& model, MeshSpec spec);

// orbit on `mesh` sampled from a profile z -> (u, v)
ConnectionOrbit orbit_from_profile(const VectorFieldModel& model, const Mesh& mesh,
                                   const std::function<Vec(double)>& u_of_z, bool tollroad = false,
                                   const std::function<Vec(double)>& v_of_z = nullptr);

ConnectionOrbit solve_freeway(const VectorFieldModel& model, const ConnectionOrbit& guess,
                              const SolverOptions& opts = {});
ConnectionOrbit solve_tollroad(const VectorFieldModel& model, const ConnectionOrbit& guess,
                               const SolverOptions& opts = {});

// collocation residual of the freeway system at the Gauss points, eta excluded
Mat freeway_residual(const VectorFieldModel& model, const ConnectionOrbit& orbit);

// Linearization about a symmetric orbit restricted to z >= 0 with a parity
// condition at z = 0. adjoint = true gives D^2 d_zz - grad F^T.
struct ParityOperator {
  Mesh mesh;
  int m = 0;
  SpMat K, B;
  Vec A;  // D^2 diagonal
  bool even = true;
};
ParityOperator parity_operator(const VectorFieldModel& model, const ConnectionOrbit& orbit, bool even,
                               bool adjoint = false);
// same operator on the full line with projection conditions at both ends
ParityOperator full_operator(const VectorFieldModel& model, const ConnectionOrbit& orbit, bool adjoint = false);

Mat half_values(const ConnectionOrbit& orbit, const Mat& full);
Mat even_extension(const Mesh& full, const Mat& half);

struct ContinuationOptions {
  double ds = 0.02;
  double ds_min = 1e-7;
  double ds_max = 0.2;
  int max_steps = 400;
  double mu_min = -INFINITY;
  double mu_max = INFINITY;
  bool stop_after_fold = false;
  int steps_after_fold = 1 << 30;
  double fold_tol = 1e-8;
  double tol = 1e-10;
};

struct BranchPoint {
  double mu = 0;
  double s = 0;  // u1(0)
  double energy = 0;
  double arclength = 0;
  bool fold = false;
};

struct FoldData {
  double mu_sn = 0;
  ConnectionOrbit orbit;
  Mat psi0, psi0_dag;  // full mesh, even, first component 1 at z = 0
  double sigma_min = 0;
  double pairing = 0;  // <psi0_dag, psi0>
};

struct Branch {
  std::vector<BranchPoint> points;
  std::optional<FoldData> fold;
  std::string diagnostic;
};

Branch continue_branch(const VectorFieldModel& model, const ConnectionOrbit& start, const ContinuationOptions& opts);

// even null vectors of L and its adjoint at a (near-)fold orbit
void fold_null_vectors(const VectorFieldModel& model, const ConnectionOrbit& orbit, FoldData& out);

// smallest singular value of a square sparse matrix by inverse iteration on K^T K
double smallest_singular_value(const SpMat& K, int iters = 60);

}  // namespace fwl
