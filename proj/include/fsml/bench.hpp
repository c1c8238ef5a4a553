#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "fsml/meta.hpp"
#include "fsml/protocol.hpp"

namespace fsml {

// One hidden ReLU layer over pooled features, categorical cross-entropy.
struct MlpParams {
  Eigen::MatrixXd W1;  // hidden x feature_dim
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2;  // n_classes x hidden
  Eigen::VectorXd b2;
};

MlpParams mlp_init(int in_dim, int hidden, int out_dim, uint64_t seed);
Eigen::MatrixXd mlp_logits(const MlpParams& p, const Eigen::MatrixXd& X);

// Plain mini-batch SGD; deterministic given seed. Returns final epoch's mean
// train loss.
double mlp_train(MlpParams& p, const Eigen::MatrixXd& X, const std::vector<int>& y,
                 int epochs, double lr, int batch_size, uint64_t seed);

// Fraction correct under lowest-index argmax.
double mlp_accuracy(const MlpParams& p, const Eigen::MatrixXd& X, const std::vector<int>& y);

struct SupervisedData {
  Eigen::MatrixXd X;
  std::vector<int> y;  // indices into class order
};

// Records of one split part as (pooled features, global class index), class
// order = sorted part classes.
SupervisedData part_data(const Eigen::MatrixXd& pooled, const SplitAssignment& split,
                         int part);

// Draw m records per class (seeded, without replacement); rest is the
// held-out complement.
void shot_split(const Eigen::MatrixXd& pooled, const SplitAssignment& split, int part,
                int shots, uint64_t seed, SupervisedData& train, SupervisedData& heldout);

// Seeded per-class holdout of max(1, floor(fraction * n)) records; the rest
// trains. Every class must keep at least one record on each side.
void skyline_split(const Eigen::MatrixXd& pooled, const SplitAssignment& split, int part,
                   double holdout_fraction, uint64_t seed, SupervisedData& train,
                   SupervisedData& heldout);

// Scores the classifier on the same episode stream the episodic evaluation
// uses: per episode, queries are classified over the full class list and
// scored in global class space.
EvalReport eval_supervised_episodic(const MlpParams& p, const Eigen::MatrixXd& pooled,
                                    const SplitAssignment& split, EpisodeSpec spec,
                                    int n_episodes, uint64_t eval_seed, int threads);

}  // namespace fsml
