#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <string>
#include <variant>
#include <vector>

namespace fsml {

enum class LearnerKind { Proto, Ridge, Svm };

const char* learner_kind_name(LearnerKind kind);
LearnerKind learner_kind_from_name(const std::string& name);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::Proto;
  double temperature = 1.0;  // learnable scalar applied to logits
  double ridge_lambda = 50.0;
  double svm_c = 0.1;
  int svm_max_iter = 15;
};

// Solver state retained for the backward pass. `raw` is the pre-temperature
// logit matrix (n_query x n_way); logits = temperature * raw.
struct ProtoState {
  Eigen::MatrixXd S, Q, C;     // support, query, prototypes (n_way x d)
  Eigen::MatrixXd dist2;       // n_query x n_way
  Eigen::MatrixXd raw;
  std::vector<int> labels;
  std::vector<int> counts;     // support rows per class
};

struct RidgeState {
  Eigen::MatrixXd S, Q, Y;     // Y: one-hot (n*m x n_way)
  Eigen::MatrixXd A;           // G^{-1} Y, G = S S^T + lambda I
  Eigen::MatrixXd Wmap;        // d x n_way
  Eigen::MatrixXd raw;
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
};

struct SvmState {
  Eigen::MatrixXd S, Q, Y, K;  // K = S S^T
  std::vector<int> labels;
  double eta = 0.0;            // 1 / max(trace K, floor)
  bool eta_clamped = false;
  std::vector<Eigen::MatrixXd> alphas;  // iterates 0..max_iter
  std::vector<Eigen::MatrixXd> masks;   // free sets of each projection
  Eigen::MatrixXd Wsvm;        // n_way x d
  Eigen::MatrixXd raw;
};

struct LearnerOutput {
  Eigen::MatrixXd logits;  // n_query x n_way
  std::variant<ProtoState, RidgeState, SvmState> state;
};

// support: (n*m) x d with labels in [0, n_way); query: n_q x d.
LearnerOutput learner_forward(const LearnerConfig& cfg, const Eigen::MatrixXd& support,
                              const std::vector<int>& labels, const Eigen::MatrixXd& query,
                              int n_way);

struct LearnerGrads {
  Eigen::MatrixXd dS, dQ;
  double dtau = 0.0;
};

LearnerGrads learner_backward(const LearnerConfig& cfg, const LearnerOutput& out,
                              const Eigen::MatrixXd& grad_logits);

// Crammer–Singer dual objective in ascent form,
//   D(alpha) = sum_i alpha[i, y_i] - 0.5 ||alpha^T S||_F^2,
// non-decreasing across solver iterates.
double svm_dual_objective(const Eigen::MatrixXd& support, const std::vector<int>& labels,
                          const Eigen::MatrixXd& alpha);

// Euclidean projection onto {b >= 0, sum b = total}; sort-based, stable
// (lower index wins ties). Optionally reports the free set.
Eigen::VectorXd simplex_project(const Eigen::VectorXd& u, double total,
                                Eigen::VectorXd* free_mask = nullptr);

}  // namespace fsml
