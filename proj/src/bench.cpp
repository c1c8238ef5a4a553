#include "fsml/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fsml/error.hpp"
#include "fsml/rng.hpp"
#include "fsml/threads.hpp"

namespace fsml {

MlpParams mlp_init(int in_dim, int hidden, int out_dim, uint64_t seed) {
  if (in_dim < 1 || hidden < 1 || out_dim < 1)
    throw ValidationError("mlp dims must be positive");
  MlpParams p;
  Rng rng(derive_seed(seed, "mlp-init"));
  auto glorot = [&](Eigen::MatrixXd& W, int rows, int cols) {
    double a = std::sqrt(6.0 / (rows + cols));
    W.resize(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) W(i, j) = (2.0 * rng.uniform01() - 1.0) * a;
  };
  glorot(p.W1, hidden, in_dim);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  glorot(p.W2, out_dim, hidden);
  p.b2 = Eigen::VectorXd::Zero(out_dim);
  return p;
}

Eigen::MatrixXd mlp_logits(const MlpParams& p, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd H = X * p.W1.transpose();
  H.rowwise() += p.b1.transpose();
  H = H.cwiseMax(0.0);
  Eigen::MatrixXd Z = H * p.W2.transpose();
  Z.rowwise() += p.b2.transpose();
  return Z;
}

double mlp_train(MlpParams& p, const Eigen::MatrixXd& X, const std::vector<int>& y,
                 int epochs, double lr, int batch_size, uint64_t seed) {
  const int N = static_cast<int>(X.rows());
  if (N == 0 || static_cast<int>(y.size()) != N)
    throw ValidationError("mlp_train: bad training set");
  if (epochs < 0 || batch_size < 1) throw ValidationError("mlp_train: bad schedule");
  const int n_classes = static_cast<int>(p.W2.rows());
  for (int label : y)
    if (label < 0 || label >= n_classes) throw ValidationError("mlp_train: label out of range");

  Rng rng(derive_seed(seed, "mlp-order"));
  std::vector<int> order(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) order[static_cast<size_t>(i)] = i;

  double last_epoch_loss = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    int n_batches = 0;
    for (int start = 0; start < N; start += batch_size) {
      int bs = std::min(batch_size, N - start);
      Eigen::MatrixXd Xb(bs, X.cols());
      std::vector<int> yb(static_cast<size_t>(bs));
      for (int i = 0; i < bs; ++i) {
        Xb.row(i) = X.row(order[static_cast<size_t>(start + i)]);
        yb[static_cast<size_t>(i)] = y[static_cast<size_t>(order[static_cast<size_t>(start + i)])];
      }
      // forward
      Eigen::MatrixXd Hpre = Xb * p.W1.transpose();
      Hpre.rowwise() += p.b1.transpose();
      Eigen::MatrixXd H = Hpre.cwiseMax(0.0);
      Eigen::MatrixXd Z = H * p.W2.transpose();
      Z.rowwise() += p.b2.transpose();
      // softmax cross-entropy
      Eigen::MatrixXd P(bs, n_classes);
      double loss = 0.0;
      for (int i = 0; i < bs; ++i) {
        double mx = Z.row(i).maxCoeff();
        Eigen::ArrayXd e = (Z.row(i).transpose().array() - mx).exp();
        double s = e.sum();
        P.row(i) = (e / s).transpose();
        loss += std::log(s) + mx - Z(i, yb[static_cast<size_t>(i)]);
      }
      loss /= bs;
      if (!std::isfinite(loss)) throw NumericError("non-finite mlp loss");
      epoch_loss += loss;
      ++n_batches;
      // backward
      Eigen::MatrixXd dZ = P;
      for (int i = 0; i < bs; ++i) dZ(i, yb[static_cast<size_t>(i)]) -= 1.0;
      dZ /= static_cast<double>(bs);
      Eigen::MatrixXd dW2 = dZ.transpose() * H;
      Eigen::VectorXd db2 = dZ.colwise().sum().transpose();
      Eigen::MatrixXd dH = dZ * p.W2;
      dH = dH.cwiseProduct((Hpre.array() > 0.0).cast<double>().matrix());
      Eigen::MatrixXd dW1 = dH.transpose() * Xb;
      Eigen::VectorXd db1 = dH.colwise().sum().transpose();
      p.W2 -= lr * dW2;
      p.b2 -= lr * db2;
      p.W1 -= lr * dW1;
      p.b1 -= lr * db1;
    }
    last_epoch_loss = epoch_loss / std::max(1, n_batches);
  }
  return last_epoch_loss;
}

double mlp_accuracy(const MlpParams& p, const Eigen::MatrixXd& X, const std::vector<int>& y) {
  if (X.rows() == 0) throw ValidationError("mlp_accuracy: empty evaluation set");
  Eigen::MatrixXd Z = mlp_logits(p, X);
  int correct = 0;
  for (Eigen::Index i = 0; i < Z.rows(); ++i)
    if (argmax_lowest(Z.row(i)) == y[static_cast<size_t>(i)]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(Z.rows());
}

SupervisedData part_data(const Eigen::MatrixXd& pooled, const SplitAssignment& split,
                         int part) {
  const auto& classes = split.part_classes[part];
  std::map<std::string, int> index;
  for (size_t i = 0; i < classes.size(); ++i) index[classes[i]] = static_cast<int>(i);
  SupervisedData d;
  d.X.resize(static_cast<Eigen::Index>(split.retained[part].size()), pooled.cols());
  Eigen::Index row = 0;
  for (const auto& [label, recs] : split.by_class[part])
    for (int rec : recs) {
      d.X.row(row++) = pooled.row(rec);
      d.y.push_back(index.at(label));
    }
  return d;
}

void shot_split(const Eigen::MatrixXd& pooled, const SplitAssignment& split, int part,
                int shots, uint64_t seed, SupervisedData& train, SupervisedData& heldout) {
  const auto& classes = split.part_classes[part];
  if (shots < 1) throw ValidationError("baseline needs shots >= 1");
  std::vector<Eigen::Index> train_rows, held_rows;
  std::vector<int> train_y, held_y;
  for (size_t k = 0; k < classes.size(); ++k) {
    const auto& recs = split.by_class[part].at(classes[k]);
    if (static_cast<int>(recs.size()) < shots)
      throw ValidationError("class '" + classes[k] + "' has " +
                            std::to_string(recs.size()) + " records, baseline needs " +
                            std::to_string(shots));
    Rng rng(derive_seed(seed, "shot-draw", static_cast<uint64_t>(k)));
    std::vector<int> picks =
        rng.sample_without_replacement(static_cast<int>(recs.size()), shots);
    std::vector<char> taken(recs.size(), 0);
    for (int idx : picks) taken[static_cast<size_t>(idx)] = 1;
    for (size_t i = 0; i < recs.size(); ++i) {
      if (taken[i]) {
        train_rows.push_back(recs[i]);
        train_y.push_back(static_cast<int>(k));
      } else {
        held_rows.push_back(recs[i]);
        held_y.push_back(static_cast<int>(k));
      }
    }
  }
  train.X.resize(static_cast<Eigen::Index>(train_rows.size()), pooled.cols());
  for (size_t i = 0; i < train_rows.size(); ++i)
    train.X.row(static_cast<Eigen::Index>(i)) = pooled.row(train_rows[i]);
  train.y = std::move(train_y);
  heldout.X.resize(static_cast<Eigen::Index>(held_rows.size()), pooled.cols());
  for (size_t i = 0; i < held_rows.size(); ++i)
    heldout.X.row(static_cast<Eigen::Index>(i)) = pooled.row(held_rows[i]);
  heldout.y = std::move(held_y);
}

void skyline_split(const Eigen::MatrixXd& pooled, const SplitAssignment& split, int part,
                   double holdout_fraction, uint64_t seed, SupervisedData& train,
                   SupervisedData& heldout) {
  const auto& classes = split.part_classes[part];
  std::vector<Eigen::Index> train_rows, held_rows;
  std::vector<int> train_y, held_y;
  for (size_t k = 0; k < classes.size(); ++k) {
    const auto& recs = split.by_class[part].at(classes[k]);
    int n = static_cast<int>(recs.size());
    int n_held = std::max(1, static_cast<int>(std::floor(holdout_fraction * n)));
    if (n_held >= n)
      throw ValidationError("class '" + classes[k] + "' has " + std::to_string(n) +
                            " records, too few to hold " + std::to_string(n_held) +
                            " out");
    Rng rng(derive_seed(seed, "skyline-holdout", static_cast<uint64_t>(k)));
    std::vector<int> picks = rng.sample_without_replacement(n, n_held);
    std::vector<char> held(recs.size(), 0);
    for (int idx : picks) held[static_cast<size_t>(idx)] = 1;
    for (size_t i = 0; i < recs.size(); ++i) {
      if (held[i]) {
        held_rows.push_back(recs[i]);
        held_y.push_back(static_cast<int>(k));
      } else {
        train_rows.push_back(recs[i]);
        train_y.push_back(static_cast<int>(k));
      }
    }
  }
  train.X.resize(static_cast<Eigen::Index>(train_rows.size()), pooled.cols());
  for (size_t i = 0; i < train_rows.size(); ++i)
    train.X.row(static_cast<Eigen::Index>(i)) = pooled.row(train_rows[i]);
  train.y = std::move(train_y);
  heldout.X.resize(static_cast<Eigen::Index>(held_rows.size()), pooled.cols());
  for (size_t i = 0; i < held_rows.size(); ++i)
    heldout.X.row(static_cast<Eigen::Index>(i)) = pooled.row(held_rows[i]);
  heldout.y = std::move(held_y);
}

EvalReport eval_supervised_episodic(const MlpParams& p, const Eigen::MatrixXd& pooled,
                                    const SplitAssignment& split, EpisodeSpec spec,
                                    int n_episodes, uint64_t eval_seed, int threads) {
  if (n_episodes < 1) throw ValidationError("episodic eval needs at least one episode");
  check_feasible(split, spec);
  const auto& classes = split.part_classes[spec.part];
  if (static_cast<int>(classes.size()) != static_cast<int>(p.W2.rows()))
    throw ValidationError("classifier was trained on " + std::to_string(p.W2.rows()) +
                          " classes but the split part has " +
                          std::to_string(classes.size()));
  std::map<std::string, int> index;
  for (size_t i = 0; i < classes.size(); ++i) index[classes[i]] = static_cast<int>(i);

  EvalReport rep;
  rep.n_way = spec.n_way;
  rep.m_shot = spec.m_shot;
  rep.q_query = spec.q_query;
  rep.n_episodes = n_episodes;
  rep.per_episode.assign(static_cast<size_t>(n_episodes), 0.0);

  parallel_for(n_episodes, threads, [&](int e) {
    Rng rng(derive_seed(eval_seed, "episode", static_cast<uint64_t>(e)));
    Episode ep = generate_episode(split, spec, rng);
    Eigen::MatrixXd Q(static_cast<Eigen::Index>(ep.query.size()), pooled.cols());
    for (size_t i = 0; i < ep.query.size(); ++i)
      Q.row(static_cast<Eigen::Index>(i)) = pooled.row(ep.query[i].first);
    Eigen::MatrixXd Z = mlp_logits(p, Q);
    int correct = 0;
    for (size_t i = 0; i < ep.query.size(); ++i) {
      int pred = argmax_lowest(Z.row(static_cast<Eigen::Index>(i)));
      int truth = index.at(ep.class_names[static_cast<size_t>(ep.query[i].second)]);
      if (pred == truth) ++correct;
    }
    rep.per_episode[static_cast<size_t>(e)] =
        static_cast<double>(correct) / static_cast<double>(ep.query.size());
  });

  double mean = 0;
  for (double a : rep.per_episode) mean += a;
  mean /= static_cast<double>(n_episodes);
  double ss = 0;
  for (double a : rep.per_episode) ss += (a - mean) * (a - mean);
  rep.mean_accuracy = mean;
  rep.std_accuracy = n_episodes > 1 ? std::sqrt(ss / (n_episodes - 1.0)) : 0.0;
  rep.ci95_halfwidth = 1.96 * rep.std_accuracy / std::sqrt(static_cast<double>(n_episodes));
  return rep;
}

}  // namespace fsml
