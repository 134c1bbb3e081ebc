#include "collocation.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "errors.hpp"

namespace fwl {

Mat unflatten(const Vec& x, int m) {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(x.data(),
                                                                                                  x.size() / m, m);
}

Vec flatten(const Mat& W) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = W;
  return Eigen::Map<const Vec>(R.data(), R.size());
}

Assembly assemble(const Mesh& mesh, const Vec& A, const Vec& x, const PointFn& fn, const EndSpec& left,
                  const EndSpec& right, bool want_jac) {
  const LglRule& r = lgl_rule(mesh.p);
  const int m = int(A.size());
  const int p = mesh.p;
  const int N = mesh.n_nodes();
  if (x.size() != N * m) throw Error(ErrorCode::argument, "assemble: unknown vector has wrong length");

  Assembly out;
  out.R = Vec::Zero(N * m);
  out.R_eta = Vec::Zero(N * m);
  out.R_mu = Vec::Zero(N * m);
  std::vector<Eigen::Triplet<double>> trip;
  if (want_jac) trip.reserve(size_t(N) * m * (p + 1) * m * 2);

  PointEval pe;
  Vec w(m), wz(m), wzz(m);
  for (int e = 0; e < mesh.n_el(); ++e) {
    const double h = mesh.h(e);
    const double s1 = 2 / h, s2 = s1 * s1;
    const int base = mesh.node(e, 0);
    for (int q = 0; q < p - 1; ++q) {
      w.setZero();
      wz.setZero();
      wzz.setZero();
      for (int k = 0; k <= p; ++k)
        for (int c = 0; c < m; ++c) {
          const double xv = x[(base + k) * m + c];
          w[c] += r.E0(q, k) * xv;
          wz[c] += s1 * r.E1(q, k) * xv;
          wzz[c] += s2 * r.E2(q, k) * xv;
        }
      const int gq = e * (p - 1) + q;
      fn(gq, w, wz, want_jac, pe);
      const int row_node = base + q + 1;
      for (int c = 0; c < m; ++c) {
        const int row = row_node * m + c;
        out.R[row] = A[c] * wzz[c] - pe.G[c];
        if (want_jac) {
          out.R_eta[row] = -pe.Geta[c];
          out.R_mu[row] = -pe.Gmu[c];
        }
      }
      if (!want_jac) continue;
      for (int k = 0; k <= p; ++k)
        for (int c = 0; c < m; ++c) {
          const int row = row_node * m + c;
          for (int a = 0; a < m; ++a) {
            double v = -pe.Gw(c, a) * r.E0(q, k) - pe.Gwz(c, a) * s1 * r.E1(q, k);
            if (a == c) v += A[c] * s2 * r.E2(q, k);
            if (v != 0.0) trip.emplace_back(row, (base + k) * m + a, v);
          }
        }
    }
  }

  // C1 continuity across interfaces
  for (int e = 1; e < mesh.n_el(); ++e) {
    const int node = mesh.node(e, 0);
    const double sl = 2 / mesh.h(e - 1), sr = 2 / mesh.h(e);
    const int bl = mesh.node(e - 1, 0), br = node;
    for (int c = 0; c < m; ++c) {
      const int row = node * m + c;
      double v = 0;
      for (int k = 0; k <= p; ++k) {
        v += sl * r.D1(p, k) * x[(bl + k) * m + c] - sr * r.D1(0, k) * x[(br + k) * m + c];
        if (want_jac) {
          trip.emplace_back(row, (bl + k) * m + c, sl * r.D1(p, k));
          trip.emplace_back(row, (br + k) * m + c, -sr * r.D1(0, k));
        }
      }
      out.R[row] = v;
    }
  }

  auto end_rows = [&](const EndSpec& spec, bool is_left) {
    const int e = is_left ? 0 : mesh.n_el() - 1;
    const int j = is_left ? 0 : p;
    const int node = mesh.node(e, j);
    const int base = mesh.node(e, 0);
    const double s1 = 2 / mesh.h(e);
    Vec wv(m), wd = Vec::Zero(m);
    for (int c = 0; c < m; ++c) wv[c] = x[node * m + c];
    for (int k = 0; k <= p; ++k)
      for (int c = 0; c < m; ++c) wd[c] += s1 * r.D1(j, k) * x[(base + k) * m + c];
    Vec rest = spec.rest.size() == m ? spec.rest : Vec::Zero(m);
    for (int i = 0; i < m; ++i) {
      const int row = node * m + i;
      if (spec.kind == EndKind::projection) {
        out.R[row] = spec.rows.row(i).head(m).dot(wv - rest) + spec.rows.row(i).tail(m).dot(wd);
        if (!want_jac) continue;
        for (int a = 0; a < m; ++a) {
          if (spec.rows(i, a) != 0.0) trip.emplace_back(row, node * m + a, spec.rows(i, a));
          for (int k = 0; k <= p; ++k) {
            const double v = spec.rows(i, m + a) * s1 * r.D1(j, k);
            if (v != 0.0) trip.emplace_back(row, (base + k) * m + a, v);
          }
        }
      } else if (spec.kind == EndKind::even) {
        out.R[row] = wd[i];
        if (want_jac)
          for (int k = 0; k <= p; ++k) trip.emplace_back(row, (base + k) * m + i, s1 * r.D1(j, k));
      } else {
        out.R[row] = wv[i] - rest[i];
        if (want_jac) trip.emplace_back(row, node * m + i, 1.0);
      }
    }
  };
  end_rows(left, true);
  end_rows(right, false);

  if (want_jac) {
    out.J.resize(N * m, N * m);
    out.J.setFromTriplets(trip.begin(), trip.end());
  }
  return out;
}

SpMat mass_rows(const Mesh& mesh, const Vec& A) {
  const LglRule& r = lgl_rule(mesh.p);
  const int m = int(A.size());
  const int p = mesh.p;
  std::vector<Eigen::Triplet<double>> trip;
  for (int e = 0; e < mesh.n_el(); ++e) {
    const int base = mesh.node(e, 0);
    for (int q = 0; q < p - 1; ++q)
      for (int k = 0; k <= p; ++k)
        for (int c = 0; c < m; ++c)
          if (r.E0(q, k) != 0.0) trip.emplace_back((base + q + 1) * m + c, (base + k) * m + c, A[c] * r.E0(q, k));
  }
  SpMat B(mesh.n_nodes() * m, mesh.n_nodes() * m);
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

Mat first_order_matrix(const Vec& A, const Mat& Gw, const Mat& Gwz) {
  const int m = int(A.size());
  Mat M = Mat::Zero(2 * m, 2 * m);
  M.topRightCorner(m, m).setIdentity();
  M.bottomLeftCorner(m, m) = A.cwiseInverse().asDiagonal() * Gw;
  M.bottomRightCorner(m, m) = A.cwiseInverse().asDiagonal() * Gwz;
  return M;
}

Mat matrix_sign(const Mat& M) {
  Mat S = M;
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<Mat> lu(S);
    Mat Si = lu.inverse();
    // determinant scaling speeds up the early iterations
    const double g = std::pow(std::abs(lu.determinant()), -1.0 / S.rows());
    Mat Sn = 0.5 * (g * S + Si / g);
    if (!Sn.allFinite()) break;
    const double d = (Sn - S).norm();
    S = Sn;
    if (d <= 1e-14 * S.norm()) return S;
  }
  // finish without scaling
  for (int it = 0; it < 20; ++it) {
    Mat Sn = 0.5 * (S + S.inverse());
    const double d = (Sn - S).norm();
    S = Sn;
    if (d <= 1e-15 * S.norm()) break;
  }
  if (!S.allFinite() || ((S * S) - Mat::Identity(S.rows(), S.cols())).norm() > 1e-8)
    throw Error(ErrorCode::precondition, "endpoint linearization has eigenvalues on the imaginary axis");
  return S;
}

Mat projection_rows(const Mat& M, bool left_end) {
  const int n2 = int(M.rows());
  Mat S = matrix_sign(M);
  Mat I = Mat::Identity(n2, n2);
  // at the left end the solution lives in the unstable subspace: P_s Y = 0
  Mat P = left_end ? Mat(0.5 * (I - S)) : Mat(0.5 * (I + S));
  Eigen::JacobiSVD<Mat> svd(P, Eigen::ComputeFullV);
  const int m = n2 / 2;
  if (svd.singularValues()[m - 1] < 1e-8 || (m < n2 && svd.singularValues()[m] > 1e-8))
    throw Error(ErrorCode::precondition, "endpoint linearization does not split into equal stable/unstable parts");
  return svd.matrixV().leftCols(m).transpose();
}

}  // namespace fwl
