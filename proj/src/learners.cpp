#include "fsml/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fsml/error.hpp"

namespace fsml {

const char* learner_kind_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Proto: return "proto";
    case LearnerKind::Ridge: return "ridge";
    case LearnerKind::Svm: return "svm";
  }
  return "?";
}

LearnerKind learner_kind_from_name(const std::string& name) {
  if (name == "proto") return LearnerKind::Proto;
  if (name == "ridge") return LearnerKind::Ridge;
  if (name == "svm") return LearnerKind::Svm;
  throw ValidationError("unknown learner '" + name + "' (expected proto|ridge|svm)");
}

namespace {

void check_inputs(const LearnerConfig& cfg, const Eigen::MatrixXd& S,
                  const std::vector<int>& labels, const Eigen::MatrixXd& Q, int n_way) {
  if (n_way < 2) throw ValidationError("learner needs n_way >= 2");
  if (S.rows() == 0) throw ValidationError("learner needs at least one support row");
  if (static_cast<int>(labels.size()) != S.rows())
    throw ValidationError("support labels / rows mismatch");
  if (Q.cols() != S.cols()) throw ValidationError("support/query dim mismatch");
  if (!(cfg.temperature > 0.0) || !std::isfinite(cfg.temperature))
    throw ValidationError("temperature must be positive and finite");
  for (int y : labels)
    if (y < 0 || y >= n_way) throw ValidationError("support label out of range");
}

std::vector<int> class_counts(const std::vector<int>& labels, int n_way) {
  std::vector<int> counts(n_way, 0);
  for (int y : labels) ++counts[y];
  return counts;
}

Eigen::MatrixXd onehot(const std::vector<int>& labels, int n_way) {
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), n_way);
  for (size_t i = 0; i < labels.size(); ++i) Y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return Y;
}

LearnerOutput proto_forward(const LearnerConfig& cfg, const Eigen::MatrixXd& S,
                            const std::vector<int>& labels, const Eigen::MatrixXd& Q,
                            int n_way) {
  ProtoState st;
  st.S = S;
  st.Q = Q;
  st.labels = labels;
  st.counts = class_counts(labels, n_way);
  for (int k = 0; k < n_way; ++k)
    if (st.counts[k] == 0)
      throw ValidationError("proto: class " + std::to_string(k) + " has no support rows");

  st.C = Eigen::MatrixXd::Zero(n_way, S.cols());
  for (Eigen::Index i = 0; i < S.rows(); ++i) st.C.row(labels[i]) += S.row(i);
  for (int k = 0; k < n_way; ++k) st.C.row(k) /= static_cast<double>(st.counts[k]);

  st.dist2 = -2.0 * Q * st.C.transpose();
  st.dist2.colwise() += Q.rowwise().squaredNorm();
  st.dist2.rowwise() += st.C.rowwise().squaredNorm().transpose();
  st.raw = -st.dist2;

  LearnerOutput out;
  out.logits = cfg.temperature * st.raw;
  out.state = std::move(st);
  return out;
}

LearnerOutput ridge_forward(const LearnerConfig& cfg, const Eigen::MatrixXd& S,
                            const std::vector<int>& labels, const Eigen::MatrixXd& Q,
                            int n_way) {
  if (cfg.ridge_lambda < 0) throw ValidationError("ridge_lambda must be >= 0");
  RidgeState st;
  st.S = S;
  st.Q = Q;
  st.Y = onehot(labels, n_way);

  // Woodbury/dual form: the (n*m)x(n*m) system instead of d x d.
  Eigen::MatrixXd G = S * S.transpose();
  G.diagonal().array() += cfg.ridge_lambda;
  st.ldlt.compute(G);
  if (st.ldlt.info() != Eigen::Success || st.ldlt.rcond() < 1e-12)
    throw NumericError("ridge system ill-conditioned (rcond < 1e-12); raise ridge_lambda");
  st.A = st.ldlt.solve(st.Y);
  st.Wmap = S.transpose() * st.A;
  st.raw = Q * st.Wmap;

  LearnerOutput out;
  out.logits = cfg.temperature * st.raw;
  out.state = std::move(st);
  return out;
}

LearnerOutput svm_forward(const LearnerConfig& cfg, const Eigen::MatrixXd& S,
                          const std::vector<int>& labels, const Eigen::MatrixXd& Q,
                          int n_way) {
  if (!(cfg.svm_c > 0)) throw ValidationError("svm_c must be positive");
  if (cfg.svm_max_iter < 1) throw ValidationError("svm_max_iter must be >= 1");
  auto counts = class_counts(labels, n_way);
  for (int k = 0; k < n_way; ++k)
    if (counts[k] == 0)
      throw ValidationError("svm: class " + std::to_string(k) + " has no support rows");

  SvmState st;
  st.S = S;
  st.Q = Q;
  st.labels = labels;
  st.Y = onehot(labels, n_way);
  st.K = S * S.transpose();

  // Projected gradient ascent on the Crammer–Singer dual, step 1/L with
  // L = trace(K) >= lambda_max(K), exactly max_iter iterations from alpha = 0.
  double trace = st.K.trace();
  st.eta_clamped = !(trace > 1e-12);
  st.eta = 1.0 / std::max(trace, 1e-12);

  const Eigen::Index nm = S.rows();
  const double C = cfg.svm_c;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nm, n_way);
  st.alphas.push_back(A);
  for (int t = 0; t < cfg.svm_max_iter; ++t) {
    Eigen::MatrixXd grad = st.K * A - st.Y;  // gradient of the descent form
    Eigen::MatrixXd V = A - st.eta * grad;
    Eigen::MatrixXd mask(nm, n_way);
    for (Eigen::Index i = 0; i < nm; ++i) {
      // Feasible set per point: {a : a_k <= C [k = y_i], sum_k a_k = 0}.
      // b = C e_{y_i} - a maps it onto the C-scaled simplex; projection there.
      Eigen::VectorXd u = -V.row(i).transpose();
      u(st.labels[i]) += C;
      Eigen::VectorXd free;
      Eigen::VectorXd b = simplex_project(u, C, &free);
      Eigen::VectorXd a = -b;
      a(st.labels[i]) += C;
      A.row(i) = a.transpose();
      mask.row(i) = free.transpose();
    }
    if (!A.allFinite())
      throw NumericError("svm solver produced non-finite dual at iteration " +
                         std::to_string(t + 1));
    st.alphas.push_back(A);
    st.masks.push_back(std::move(mask));
  }

  st.Wsvm = A.transpose() * S;  // n_way x d
  st.raw = Q * st.Wsvm.transpose();

  LearnerOutput out;
  out.logits = cfg.temperature * st.raw;
  out.state = std::move(st);
  return out;
}

LearnerGrads proto_backward(const LearnerConfig& cfg, const ProtoState& st,
                            const Eigen::MatrixXd& dZ) {
  LearnerGrads g;
  g.dtau = (dZ.array() * st.raw.array()).sum();
  Eigen::MatrixXd dD2 = -cfg.temperature * dZ;

  Eigen::VectorXd row_sum = dD2.rowwise().sum();
  Eigen::VectorXd col_sum = dD2.colwise().sum().transpose();
  g.dQ = 2.0 * (row_sum.asDiagonal() * st.Q - dD2 * st.C);
  Eigen::MatrixXd dC = 2.0 * (col_sum.asDiagonal() * st.C - dD2.transpose() * st.Q);
  g.dS.resize(st.S.rows(), st.S.cols());
  for (Eigen::Index i = 0; i < st.S.rows(); ++i)
    g.dS.row(i) = dC.row(st.labels[i]) / static_cast<double>(st.counts[st.labels[i]]);
  return g;
}

LearnerGrads ridge_backward(const LearnerConfig& cfg, const RidgeState& st,
                            const Eigen::MatrixXd& dZ) {
  LearnerGrads g;
  g.dtau = (dZ.array() * st.raw.array()).sum();
  Eigen::MatrixXd dRaw = cfg.temperature * dZ;

  Eigen::MatrixXd dWmap = st.Q.transpose() * dRaw;        // d x n
  g.dQ = dRaw * st.Wmap.transpose();
  // Wmap = S^T A with A = G^{-1} Y, G = S S^T + lambda I.
  Eigen::MatrixXd U = st.S * dWmap;                       // dL/dA
  Eigen::MatrixXd Gsolve = st.ldlt.solve(U);              // G^{-1} U
  Eigen::MatrixXd dG = -Gsolve * st.A.transpose();
  g.dS = st.A * dWmap.transpose() + (dG + dG.transpose()) * st.S;
  return g;
}

LearnerGrads svm_backward(const LearnerConfig& cfg, const SvmState& st,
                          const Eigen::MatrixXd& dZ) {
  LearnerGrads g;
  g.dtau = (dZ.array() * st.raw.array()).sum();
  Eigen::MatrixXd dRaw = cfg.temperature * dZ;

  // raw = Q Wsvm^T, Wsvm = A_T^T S.
  Eigen::MatrixXd dWsvm = dRaw.transpose() * st.Q;        // n x d
  g.dQ = dRaw * st.Wsvm;
  Eigen::MatrixXd dA = st.S * dWsvm.transpose();          // nm x n
  Eigen::MatrixXd dK = Eigen::MatrixXd::Zero(st.K.rows(), st.K.cols());
  g.dS = st.alphas.back() * dWsvm;
  double deta = 0.0;

  // Unroll the projected-gradient iterations in reverse. The projection's
  // Jacobian restricts to the free set and removes its mean there.
  const int T = static_cast<int>(st.masks.size());
  for (int t = T - 1; t >= 0; --t) {
    const Eigen::MatrixXd& A_t = st.alphas[static_cast<size_t>(t)];
    const Eigen::MatrixXd& mask = st.masks[static_cast<size_t>(t)];
    Eigen::MatrixXd dV(dA.rows(), dA.cols());
    for (Eigen::Index i = 0; i < dA.rows(); ++i) {
      double nfree = mask.row(i).sum();
      Eigen::ArrayXd masked = dA.row(i).transpose().array() * mask.row(i).transpose().array();
      double mean = masked.sum() / nfree;
      dV.row(i) = (masked - mean * mask.row(i).transpose().array()).transpose();
    }
    Eigen::MatrixXd grad_t = st.K * A_t - st.Y;
    deta -= (dV.array() * grad_t.array()).sum();
    dK.noalias() -= st.eta * dV * A_t.transpose();
    dA = dV - st.eta * (st.K * dV);
  }
  // A_0 = 0 is constant; remaining dA is dropped there.

  if (!st.eta_clamped) {
    // eta = 1/trace(K): route d eta into the diagonal of K.
    double dtrace = -st.eta * st.eta * deta;
    dK.diagonal().array() += dtrace;
  }
  g.dS += (dK + dK.transpose()) * st.S;
  return g;
}

}  // namespace

LearnerOutput learner_forward(const LearnerConfig& cfg, const Eigen::MatrixXd& support,
                              const std::vector<int>& labels, const Eigen::MatrixXd& query,
                              int n_way) {
  check_inputs(cfg, support, labels, query, n_way);
  switch (cfg.kind) {
    case LearnerKind::Proto: return proto_forward(cfg, support, labels, query, n_way);
    case LearnerKind::Ridge: return ridge_forward(cfg, support, labels, query, n_way);
    case LearnerKind::Svm: return svm_forward(cfg, support, labels, query, n_way);
  }
  throw ValidationError("unknown learner kind");
}

LearnerGrads learner_backward(const LearnerConfig& cfg, const LearnerOutput& out,
                              const Eigen::MatrixXd& grad_logits) {
  if (grad_logits.rows() != out.logits.rows() || grad_logits.cols() != out.logits.cols())
    throw ValidationError("learner_backward: grad_logits shape mismatch");
  if (std::holds_alternative<ProtoState>(out.state)) {
    if (cfg.kind != LearnerKind::Proto)
      throw ValidationError("learner_backward: state/kind mismatch");
    return proto_backward(cfg, std::get<ProtoState>(out.state), grad_logits);
  }
  if (std::holds_alternative<RidgeState>(out.state)) {
    if (cfg.kind != LearnerKind::Ridge)
      throw ValidationError("learner_backward: state/kind mismatch");
    return ridge_backward(cfg, std::get<RidgeState>(out.state), grad_logits);
  }
  if (cfg.kind != LearnerKind::Svm)
    throw ValidationError("learner_backward: state/kind mismatch");
  return svm_backward(cfg, std::get<SvmState>(out.state), grad_logits);
}

double svm_dual_objective(const Eigen::MatrixXd& support, const std::vector<int>& labels,
                          const Eigen::MatrixXd& alpha) {
  double lin = 0.0;
  for (size_t i = 0; i < labels.size(); ++i)
    lin += alpha(static_cast<Eigen::Index>(i), labels[i]);
  Eigen::MatrixXd W = alpha.transpose() * support;
  return lin - 0.5 * W.squaredNorm();
}

Eigen::VectorXd simplex_project(const Eigen::VectorXd& u, double total,
                                Eigen::VectorXd* free_mask) {
  const int n = static_cast<int>(u.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return u(a) > u(b); });
  double cum = 0.0;
  double theta = 0.0;
  for (int k = 0; k < n; ++k) {
    cum += u(order[k]);
    double cand = (cum - total) / static_cast<double>(k + 1);
    if (u(order[k]) - cand > 0) theta = cand;
  }
  Eigen::VectorXd b = (u.array() - theta).cwiseMax(0.0);
  if (free_mask) {
    free_mask->resize(n);
    for (int i = 0; i < n; ++i) (*free_mask)(i) = u(i) - theta > 0 ? 1.0 : 0.0;
  }
  return b;
}

}  // namespace fsml
