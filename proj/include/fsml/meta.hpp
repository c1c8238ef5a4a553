#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fsml/dataset.hpp"
#include "fsml/encoder.hpp"
#include "fsml/learners.hpp"
#include "fsml/protocol.hpp"
#include "json.hpp"

namespace fsml {

struct TrainConfig {
  int epochs = 30;
  int episodes_per_epoch = 1000;
  int episodes_per_batch = 8;
  int n_way = 5;
  int m_shot = 15;
  int q_query = 15;
  double lr = 0.01;
  double momentum = 0.9;
  bool nesterov = true;
  int lr_decay_every = 20;
  double lr_decay_factor = 0.1;
  double weight_decay = 5e-4;
  double alpha = 1.0;  // L_total = alpha L_meta + (1 - alpha) sum_w L_w
  std::vector<std::string> worker_names = {"frame_mean", "frame_logvar"};
  int val_episodes = 2000;
  int val_n_way = 5;
  int val_m_shot = 5;
  int val_q_query = 5;
};

// Self-supervised worker: linear regressor from the embedding back to a frame
// statistic of the raw input features.
struct Worker {
  std::string name;
  Eigen::MatrixXd V;  // target_dim x embedding_dim
  Eigen::VectorXd c;  // target_dim
};
using WorkerSet = std::vector<Worker>;

WorkerSet make_workers(const std::vector<std::string>& names, int feature_dim,
                       int embedding_dim, uint64_t seed);
// frame_mean: per-utterance mean frame. frame_logvar: elementwise
// log(population variance + 1e-12); single-frame utterances get 0.
Eigen::VectorXd worker_target(const std::string& name, const MatrixF& frames);

// Pooled features for every manifest record, computed once up front.
Eigen::MatrixXd pool_features(const DatasetManifest& mf, int threads);

inline int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (int j = 1; j < row.size(); ++j)
    if (row(j) > row(best)) best = j;
  return best;
}

// SGD-with-momentum convention: v = mu v + g; nesterov steps along g + mu v.
template <class T>
void nesterov_update(T& param, T& vel, const T& g, double lr, double mu, bool nesterov) {
  vel = mu * vel + g;
  if (nesterov)
    param -= lr * (g + mu * vel);
  else
    param -= lr * vel;
}

struct EpisodeGrads {
  Eigen::MatrixXd dW;
  Eigen::VectorXd db;
  double dtau = 0.0;
};

// Cross-entropy of query predictions; gradients back through the learner and
// the encoder. grads/accuracy may be null.
double episode_loss(const Eigen::MatrixXd& pooled, const Episode& ep,
                    const EncoderParams& enc, const LearnerConfig& lcfg,
                    EpisodeGrads* grads, double* accuracy);

struct EvalReport {
  int n_way = 0, m_shot = 0, q_query = 0, n_episodes = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;   // sample std over episodes
  double ci95_halfwidth = 0.0;  // 1.96 * std / sqrt(n_episodes)
  std::vector<double> per_episode;
};

// Episode i draws its generator from (eval_seed, i), so reports do not depend
// on scheduling. permute_labels shuffles each episode's query labels (chance
// calibration). dump, when set, receives every episode.
EvalReport evaluate(const Eigen::MatrixXd& pooled, const SplitAssignment& split,
                    const EncoderParams& enc, double temperature, LearnerConfig lcfg,
                    EpisodeSpec spec, int n_episodes, uint64_t eval_seed,
                    bool permute_labels, int threads, std::vector<Episode>* dump = nullptr);

struct TrainResult {
  Checkpoint best;
  int best_epoch = 0;
  double best_val_mean = -1.0;
  std::vector<nlohmann::ordered_json> log_lines;
};

// Full episodic meta-training: epochs x episodes_per_epoch, one optimizer step
// (SGD, Nesterov momentum, step-decayed lr, decoupled weight decay on W and b)
// per episodes_per_batch episodes, validation after every epoch, best
// checkpoint kept (first epoch wins ties). Writes out_dir/checkpoint.fsck,
// out_dir/log.jsonl and out_dir/train_config.json.
TrainResult run_training(const DatasetManifest& mf, const SplitAssignment& split,
                         const TrainConfig& cfg, const LearnerConfig& lcfg,
                         int embedding_dim, bool relu, uint64_t seed,
                         const std::filesystem::path& out_dir, int threads,
                         const nlohmann::ordered_json& resolved_config);

struct ConfusionResult {
  std::vector<std::string> class_names;  // global sorted order of the part's classes
  Eigen::MatrixXd matrix;                // rows: true class, normalized
  std::vector<int> row_episodes;         // episodes contributing to each row
  int n_episodes = 0;
};

// Per episode, per true class: the distribution of predicted classes over its
// queries; averaged over the episodes containing that class. n_way = 0 uses
// all classes of the part.
ConfusionResult confusion(const Eigen::MatrixXd& pooled, const SplitAssignment& split,
                          const EncoderParams& enc, double temperature, LearnerConfig lcfg,
                          int n_way, int m_shot, int q_query, int part, int n_episodes,
                          uint64_t eval_seed, int threads);

}  // namespace fsml
