#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "fsml/io.hpp"

namespace fsml {

struct EncoderParams {
  Eigen::MatrixXd W;  // embedding_dim x feature_dim
  Eigen::VectorXd b;  // embedding_dim
  bool relu = false;  // optional nonlinearity after the projection
};

// Glorot-uniform W with bound sqrt(6 / (feature_dim + embedding_dim)), zero b.
EncoderParams init_encoder(int feature_dim, int embedding_dim, uint64_t seed);

struct ForwardCache {
  Eigen::MatrixXd pooled;  // batch x feature_dim
  Eigen::MatrixXd mask;    // batch x embedding_dim, 1 where pre-activation > 0
  bool relu = false;
};

// embeddings = pooled W^T + b^T, optionally ReLU'd. Projection and mean
// pooling commute for the linear map, so callers pool first.
Eigen::MatrixXd encode_pooled(const EncoderParams& params, const Eigen::MatrixXd& pooled,
                              ForwardCache* cache);

// Convenience entry matching the module boundary: pools each frame matrix,
// then projects.
Eigen::MatrixXd encode(const EncoderParams& params, const std::vector<MatrixF>& frames,
                       ForwardCache* cache);

struct EncoderGrads {
  Eigen::MatrixXd dW;
  Eigen::VectorXd db;
};

// dW = sum_i grad_i pooled_i^T, db = sum_i grad_i (sum, not mean — averaging
// is the loss's job). Accumulates into grads.
void encode_backward(const ForwardCache& cache, const Eigen::MatrixXd& grad_embeddings,
                     EncoderGrads& grads);

}  // namespace fsml
