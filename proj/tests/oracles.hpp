#pragma once

// Independent reference implementations the engine's solvers are checked
// against. Deliberately naive: explicit loops, Gauss-Jordan elimination,
// exact coordinate descent -- no shared code paths with the library.

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace testutil {

// Gauss-Jordan with partial pivoting.
inline Eigen::MatrixXd gj_solve(Eigen::MatrixXd A, Eigen::MatrixXd B) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || B.rows() != n) throw std::invalid_argument("gj_solve shape");
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(A(r, col)) > std::abs(A(pivot, col))) pivot = r;
    if (std::abs(A(pivot, col)) < 1e-14) throw std::runtime_error("gj_solve: singular");
    if (pivot != col) {
      A.row(pivot).swap(A.row(col));
      B.row(pivot).swap(B.row(col));
    }
    double inv = 1.0 / A(col, col);
    A.row(col) *= inv;
    B.row(col) *= inv;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = A(r, col);
      if (f != 0.0) {
        A.row(r) -= f * A.row(col);
        B.row(r) -= f * B.row(col);
      }
    }
  }
  return B;
}

// Primal ridge read-out: W = (S^T S + lambda I)^{-1} S^T Y, logits = tau Q W.
inline Eigen::MatrixXd ridge_primal_logits(const Eigen::MatrixXd& S,
                                           const std::vector<int>& labels,
                                           const Eigen::MatrixXd& Q, int n_way,
                                           double lambda, double tau) {
  const int d = static_cast<int>(S.cols());
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(S.rows(), n_way);
  for (Eigen::Index i = 0; i < S.rows(); ++i) Y(i, labels[static_cast<size_t>(i)]) = 1.0;
  Eigen::MatrixXd G = S.transpose() * S + lambda * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd W = gj_solve(G, S.transpose() * Y);
  return tau * (Q * W);
}

// Squared-distance prototype logits with explicit loops.
inline Eigen::MatrixXd proto_bruteforce_logits(const Eigen::MatrixXd& S,
                                               const std::vector<int>& labels,
                                               const Eigen::MatrixXd& Q, int n_way,
                                               double tau) {
  const int d = static_cast<int>(S.cols());
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n_way, d);
  std::vector<int> counts(static_cast<size_t>(n_way), 0);
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    C.row(labels[static_cast<size_t>(i)]) += S.row(i);
    counts[static_cast<size_t>(labels[static_cast<size_t>(i)])]++;
  }
  for (int k = 0; k < n_way; ++k) {
    if (counts[static_cast<size_t>(k)] == 0)
      throw std::runtime_error("proto oracle: empty class");
    C.row(k) /= static_cast<double>(counts[static_cast<size_t>(k)]);
  }
  Eigen::MatrixXd logits(Q.rows(), n_way);
  for (Eigen::Index q = 0; q < Q.rows(); ++q)
    for (int k = 0; k < n_way; ++k) {
      double dist2 = 0.0;
      for (int j = 0; j < d; ++j) {
        double diff = Q(q, j) - C(k, j);
        dist2 += diff * diff;
      }
      logits(q, k) = -tau * dist2;
    }
  return logits;
}

// Two-class Crammer-Singer dual. Rows of alpha live in
//   {a : a_k <= C [k == y_i], sum_k a_k = 0},
// which for two classes is a(i, y_i) = t_i in [0, C], a(i, other) = -t_i.
// The dual descent objective becomes the box QP
//   q(t) = t^T G t - sum_i t_i,  G_ij = s_i s_j <x_i, x_j>,  s_i = +-1 by class,
// solved exactly by cyclic coordinate minimization (convex, separable box).
// Returns the ascent-form optimum D* = sum t* - t*^T G t*.
inline double svm_twoway_oracle_dual(const Eigen::MatrixXd& S,
                                     const std::vector<int>& labels, double C,
                                     Eigen::VectorXd* t_opt = nullptr) {
  const int n = static_cast<int>(S.rows());
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) {
    if (labels[static_cast<size_t>(i)] != 0 && labels[static_cast<size_t>(i)] != 1)
      throw std::invalid_argument("svm oracle expects two classes");
    s(i) = labels[static_cast<size_t>(i)] == 0 ? 1.0 : -1.0;
  }
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = s(i) * s(j) * S.row(i).dot(S.row(j));
  Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double max_delta = 0.0;
    for (int i = 0; i < n; ++i) {
      if (G(i, i) <= 0.0) throw std::runtime_error("svm oracle: zero support vector");
      double rest = G.row(i).dot(t) - G(i, i) * t(i);
      double cand = (1.0 - 2.0 * rest) / (2.0 * G(i, i));
      cand = std::min(std::max(cand, 0.0), C);
      max_delta = std::max(max_delta, std::abs(cand - t(i)));
      t(i) = cand;
    }
    if (max_delta < 1e-14) break;
  }
  if (t_opt) *t_opt = t;
  return t.sum() - t.dot(G * t);
}

}  // namespace testutil
