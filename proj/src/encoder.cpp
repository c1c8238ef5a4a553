#include "fsml/encoder.hpp"

#include "fsml/dataset.hpp"
#include "fsml/error.hpp"
#include "fsml/rng.hpp"

namespace fsml {

EncoderParams init_encoder(int feature_dim, int embedding_dim, uint64_t seed) {
  if (feature_dim < 1 || embedding_dim < 1)
    throw ValidationError("encoder dims must be positive");
  EncoderParams p;
  double a = std::sqrt(6.0 / (feature_dim + embedding_dim));
  Rng rng(derive_seed(seed, "encoder-init"));
  p.W.resize(embedding_dim, feature_dim);
  for (int i = 0; i < embedding_dim; ++i)
    for (int j = 0; j < feature_dim; ++j) p.W(i, j) = (2.0 * rng.uniform01() - 1.0) * a;
  p.b = Eigen::VectorXd::Zero(embedding_dim);
  return p;
}

Eigen::MatrixXd encode_pooled(const EncoderParams& params, const Eigen::MatrixXd& pooled,
                              ForwardCache* cache) {
  if (pooled.cols() != params.W.cols())
    throw ValidationError("encode: pooled input dim " + std::to_string(pooled.cols()) +
                          " does not match encoder feature_dim " +
                          std::to_string(params.W.cols()));
  Eigen::MatrixXd z = pooled * params.W.transpose();
  z.rowwise() += params.b.transpose();
  if (cache) {
    cache->pooled = pooled;
    cache->relu = params.relu;
  }
  if (params.relu) {
    Eigen::MatrixXd mask = (z.array() > 0.0).cast<double>();
    z = z.cwiseProduct(mask);
    if (cache) cache->mask = mask;
  }
  return z;
}

Eigen::MatrixXd encode(const EncoderParams& params, const std::vector<MatrixF>& frames,
                       ForwardCache* cache) {
  Eigen::MatrixXd pooled(static_cast<Eigen::Index>(frames.size()), params.W.cols());
  for (size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].cols() != params.W.cols())
      throw ValidationError("encode: frame matrix dim mismatch");
    pooled.row(static_cast<Eigen::Index>(i)) = mean_pool(frames[i]).transpose();
  }
  return encode_pooled(params, pooled, cache);
}

void encode_backward(const ForwardCache& cache, const Eigen::MatrixXd& grad_embeddings,
                     EncoderGrads& grads) {
  if (grad_embeddings.rows() != cache.pooled.rows())
    throw ValidationError("encode_backward: batch size mismatch");
  Eigen::MatrixXd g = cache.relu ? grad_embeddings.cwiseProduct(cache.mask).eval()
                                 : grad_embeddings;
  if (grads.dW.size() == 0) {
    grads.dW = Eigen::MatrixXd::Zero(g.cols(), cache.pooled.cols());
    grads.db = Eigen::VectorXd::Zero(g.cols());
  }
  grads.dW.noalias() += g.transpose() * cache.pooled;
  grads.db += g.colwise().sum().transpose();
}

}  // namespace fsml
