#include "fsml/meta.hpp"

#include <chrono>
#include <cmath>

#include "fsml/error.hpp"
#include "fsml/threads.hpp"

namespace fsml {

namespace {
using ordered_json = nlohmann::ordered_json;

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& pooled,
                            const std::vector<std::pair<int, int>>& entries) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(entries.size()), pooled.cols());
  for (size_t i = 0; i < entries.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = pooled.row(entries[i].first);
  return out;
}

std::vector<int> local_labels(const std::vector<std::pair<int, int>>& entries) {
  std::vector<int> y(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) y[i] = entries[i].second;
  return y;
}

// Row-wise softmax cross-entropy; fills P with probabilities.
double softmax_ce(const Eigen::MatrixXd& logits, const std::vector<int>& y,
                  Eigen::MatrixXd& P) {
  P.resize(logits.rows(), logits.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double mx = logits.row(i).maxCoeff();
    Eigen::ArrayXd e = (logits.row(i).transpose().array() - mx).exp();
    double s = e.sum();
    P.row(i) = (e / s).transpose();
    loss += std::log(s) + mx - logits(i, y[static_cast<size_t>(i)]);
  }
  loss /= static_cast<double>(logits.rows());
  if (!std::isfinite(loss)) throw NumericError("non-finite episode loss");
  return loss;
}

struct Stats {
  double mean = 0, stddev = 0, ci95 = 0;
};

Stats accuracy_stats(const std::vector<double>& acc) {
  Stats s;
  const auto n = static_cast<double>(acc.size());
  for (double a : acc) s.mean += a;
  s.mean /= n;
  if (acc.size() > 1) {
    double ss = 0;
    for (double a : acc) ss += (a - s.mean) * (a - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  s.ci95 = 1.96 * s.stddev / std::sqrt(n);
  return s;
}

}  // namespace

WorkerSet make_workers(const std::vector<std::string>& names, int feature_dim,
                       int embedding_dim, uint64_t seed) {
  WorkerSet ws;
  for (size_t i = 0; i < names.size(); ++i) {
    const std::string& name = names[i];
    if (name != "frame_mean" && name != "frame_logvar")
      throw ValidationError("unknown worker '" + name +
                            "' (supported: frame_mean, frame_logvar)");
    Worker w;
    w.name = name;
    int target_dim = feature_dim;
    double a = std::sqrt(6.0 / (embedding_dim + target_dim));
    Rng rng(derive_seed(seed, "worker-init", static_cast<uint64_t>(i)));
    w.V.resize(target_dim, embedding_dim);
    for (int r = 0; r < target_dim; ++r)
      for (int c = 0; c < embedding_dim; ++c) w.V(r, c) = (2.0 * rng.uniform01() - 1.0) * a;
    w.c = Eigen::VectorXd::Zero(target_dim);
    ws.push_back(std::move(w));
  }
  return ws;
}

Eigen::VectorXd worker_target(const std::string& name, const MatrixF& frames) {
  if (name == "frame_mean") return mean_pool(frames);
  if (name == "frame_logvar") {
    if (frames.rows() == 1) return Eigen::VectorXd::Zero(frames.cols());
    Eigen::VectorXd mean = mean_pool(frames);
    Eigen::VectorXd var = Eigen::VectorXd::Zero(frames.cols());
    for (Eigen::Index i = 0; i < frames.rows(); ++i)
      for (Eigen::Index j = 0; j < frames.cols(); ++j) {
        double d = static_cast<double>(frames(i, j)) - mean(j);
        var(j) += d * d;
      }
    var /= static_cast<double>(frames.rows());  // population variance
    return (var.array() + 1e-12).log();
  }
  throw ValidationError("unknown worker '" + name + "'");
}

Eigen::MatrixXd pool_features(const DatasetManifest& mf, int threads) {
  Eigen::MatrixXd pooled(static_cast<Eigen::Index>(mf.records.size()), mf.feature_dim);
  parallel_for(static_cast<int>(mf.records.size()), threads, [&](int i) {
    pooled.row(i) = mean_pool(read_features(mf.records[static_cast<size_t>(i)])).transpose();
  });
  return pooled;
}

double episode_loss(const Eigen::MatrixXd& pooled, const Episode& ep,
                    const EncoderParams& enc, const LearnerConfig& lcfg,
                    EpisodeGrads* grads, double* accuracy) {
  Eigen::MatrixXd Sp = gather_rows(pooled, ep.support);
  Eigen::MatrixXd Qp = gather_rows(pooled, ep.query);
  std::vector<int> ys = local_labels(ep.support);
  std::vector<int> yq = local_labels(ep.query);

  ForwardCache cache_s, cache_q;
  Eigen::MatrixXd Se = encode_pooled(enc, Sp, grads ? &cache_s : nullptr);
  Eigen::MatrixXd Qe = encode_pooled(enc, Qp, grads ? &cache_q : nullptr);
  LearnerOutput out = learner_forward(lcfg, Se, ys, Qe, ep.spec.n_way);

  Eigen::MatrixXd P;
  double loss = softmax_ce(out.logits, yq, P);
  if (accuracy) {
    int correct = 0;
    for (Eigen::Index i = 0; i < out.logits.rows(); ++i)
      if (argmax_lowest(out.logits.row(i)) == yq[static_cast<size_t>(i)]) ++correct;
    *accuracy = static_cast<double>(correct) / static_cast<double>(out.logits.rows());
  }
  if (!grads) return loss;

  Eigen::MatrixXd dZ = P;
  for (Eigen::Index i = 0; i < dZ.rows(); ++i) dZ(i, yq[static_cast<size_t>(i)]) -= 1.0;
  dZ /= static_cast<double>(dZ.rows());

  LearnerGrads lg = learner_backward(lcfg, out, dZ);
  EncoderGrads eg;
  encode_backward(cache_s, lg.dS, eg);
  encode_backward(cache_q, lg.dQ, eg);
  grads->dW = std::move(eg.dW);
  grads->db = std::move(eg.db);
  grads->dtau = lg.dtau;
  return loss;
}

EvalReport evaluate(const Eigen::MatrixXd& pooled, const SplitAssignment& split,
                    const EncoderParams& enc, double temperature, LearnerConfig lcfg,
                    EpisodeSpec spec, int n_episodes, uint64_t eval_seed,
                    bool permute_labels, int threads, std::vector<Episode>* dump) {
  if (n_episodes < 1) throw ValidationError("evaluation needs at least one episode");
  check_feasible(split, spec);
  lcfg.temperature = temperature;

  EvalReport rep;
  rep.n_way = spec.n_way;
  rep.m_shot = spec.m_shot;
  rep.q_query = spec.q_query;
  rep.n_episodes = n_episodes;
  rep.per_episode.assign(static_cast<size_t>(n_episodes), 0.0);
  if (dump) dump->resize(static_cast<size_t>(n_episodes));

  parallel_for(n_episodes, threads, [&](int i) {
    Rng rng(derive_seed(eval_seed, "episode", static_cast<uint64_t>(i)));
    Episode ep = generate_episode(split, spec, rng);
    if (permute_labels) {
      Rng prng(derive_seed(eval_seed, "permute", static_cast<uint64_t>(i)));
      std::vector<int> labels = local_labels(ep.query);
      prng.shuffle(labels);
      for (size_t k = 0; k < ep.query.size(); ++k) ep.query[k].second = labels[k];
    }
    double acc = 0.0;
    episode_loss(pooled, ep, enc, lcfg, nullptr, &acc);
    rep.per_episode[static_cast<size_t>(i)] = acc;
    if (dump) (*dump)[static_cast<size_t>(i)] = std::move(ep);
  });

  Stats st = accuracy_stats(rep.per_episode);
  rep.mean_accuracy = st.mean;
  rep.std_accuracy = st.stddev;
  rep.ci95_halfwidth = st.ci95;
  return rep;
}

namespace {

struct SgdBuffers {
  Eigen::MatrixXd vW;
  Eigen::VectorXd vb;
  double vtau = 0.0;
  std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> vworkers;
};

struct FullGrads {
  Eigen::MatrixXd dW;
  Eigen::VectorXd db;
  double dtau = 0.0;
  std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> dworkers;
};

}  // namespace

TrainResult run_training(const DatasetManifest& mf, const SplitAssignment& split,
                         const TrainConfig& cfg, const LearnerConfig& lcfg,
                         int embedding_dim, bool relu, uint64_t seed,
                         const std::filesystem::path& out_dir, int threads,
                         const ordered_json& resolved_config) {
  if (cfg.episodes_per_epoch % cfg.episodes_per_batch != 0)
    throw ValidationError("episodes_per_epoch must be divisible by episodes_per_batch");
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0) throw ValidationError("alpha must be in [0, 1]");
  const bool use_workers = cfg.alpha < 1.0;
  if (use_workers && cfg.worker_names.empty())
    throw ValidationError("alpha < 1 requires at least one worker");

  EpisodeSpec train_spec{cfg.n_way, cfg.m_shot, cfg.q_query, 0};
  EpisodeSpec val_spec{cfg.val_n_way, cfg.val_m_shot, cfg.val_q_query, 1};
  check_feasible(split, train_spec);
  if (cfg.val_episodes < 1) throw ValidationError("val_episodes must be >= 1");
  check_feasible(split, val_spec);

  std::filesystem::create_directories(out_dir);
  Eigen::MatrixXd pooled = pool_features(mf, threads);

  EncoderParams enc = init_encoder(mf.feature_dim, embedding_dim, seed);
  enc.relu = relu;
  double temperature = lcfg.temperature;
  WorkerSet workers;
  std::vector<Eigen::MatrixXd> worker_targets;  // per worker: n_records x feat
  if (use_workers) {
    workers = make_workers(cfg.worker_names, mf.feature_dim, embedding_dim, seed);
    for (const auto& w : workers) {
      Eigen::MatrixXd T(static_cast<Eigen::Index>(mf.records.size()), mf.feature_dim);
      parallel_for(static_cast<int>(mf.records.size()), threads, [&](int i) {
        T.row(i) =
            worker_target(w.name, read_features(mf.records[static_cast<size_t>(i)])).transpose();
      });
      worker_targets.push_back(std::move(T));
    }
  }

  SgdBuffers vel;
  vel.vW = Eigen::MatrixXd::Zero(enc.W.rows(), enc.W.cols());
  vel.vb = Eigen::VectorXd::Zero(enc.b.size());
  for (const auto& w : workers)
    vel.vworkers.emplace_back(Eigen::MatrixXd::Zero(w.V.rows(), w.V.cols()),
                              Eigen::VectorXd::Zero(w.c.size()));

  TrainResult result;
  const int batches = cfg.episodes_per_epoch / cfg.episodes_per_batch;
  const uint64_t val_seed = derive_seed(seed, "val");
  std::string log_text;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    double lr = cfg.lr * std::pow(cfg.lr_decay_factor, (epoch - 1) / cfg.lr_decay_every);
    double epoch_loss = 0.0;

    for (int b = 0; b < batches; ++b) {
      const int B = cfg.episodes_per_batch;
      std::vector<Episode> eps(static_cast<size_t>(B));
      std::vector<EpisodeGrads> grads(static_cast<size_t>(B));
      std::vector<double> losses(static_cast<size_t>(B), 0.0);
      LearnerConfig cur = lcfg;
      cur.temperature = temperature;
      parallel_for(B, threads, [&](int i) {
        uint64_t g = static_cast<uint64_t>(epoch - 1) * cfg.episodes_per_epoch +
                     static_cast<uint64_t>(b) * B + static_cast<uint64_t>(i);
        Rng rng(derive_seed(seed, "train-ep", g));
        eps[static_cast<size_t>(i)] = generate_episode(split, train_spec, rng);
        try {
          losses[static_cast<size_t>(i)] =
              episode_loss(pooled, eps[static_cast<size_t>(i)], enc, cur,
                           &grads[static_cast<size_t>(i)], nullptr);
        } catch (NumericError& e) {
          throw NumericError(std::string(e.what()) + " (episode " + std::to_string(g) +
                             ", learner " + learner_kind_name(lcfg.kind) + ")");
        }
      });

      FullGrads total;
      total.dW = Eigen::MatrixXd::Zero(enc.W.rows(), enc.W.cols());
      total.db = Eigen::VectorXd::Zero(enc.b.size());
      double meta_loss = 0.0;
      for (int i = 0; i < B; ++i) {
        total.dW += grads[static_cast<size_t>(i)].dW;
        total.db += grads[static_cast<size_t>(i)].db;
        total.dtau += grads[static_cast<size_t>(i)].dtau;
        meta_loss += losses[static_cast<size_t>(i)];
      }
      meta_loss /= B;
      total.dW *= cfg.alpha / B;
      total.db *= cfg.alpha / B;
      total.dtau *= cfg.alpha / B;

      double batch_loss = cfg.alpha * meta_loss;
      if (use_workers) {
        // Workers regress frame statistics from every embedding in the batch.
        std::vector<int> recs;
        for (const auto& ep : eps) {
          for (const auto& [r, l] : ep.support) recs.push_back(r);
          for (const auto& [r, l] : ep.query) recs.push_back(r);
        }
        Eigen::MatrixXd Pb(static_cast<Eigen::Index>(recs.size()), pooled.cols());
        for (size_t i = 0; i < recs.size(); ++i) Pb.row(static_cast<Eigen::Index>(i)) = pooled.row(recs[i]);
        ForwardCache cache;
        Eigen::MatrixXd E = encode_pooled(enc, Pb, &cache);
        Eigen::MatrixXd dE = Eigen::MatrixXd::Zero(E.rows(), E.cols());
        const double wscale = 1.0 - cfg.alpha;
        for (size_t w = 0; w < workers.size(); ++w) {
          Eigen::MatrixXd T(static_cast<Eigen::Index>(recs.size()), pooled.cols());
          for (size_t i = 0; i < recs.size(); ++i)
            T.row(static_cast<Eigen::Index>(i)) = worker_targets[w].row(recs[i]);
          Eigen::MatrixXd pred = E * workers[w].V.transpose();
          pred.rowwise() += workers[w].c.transpose();
          Eigen::MatrixXd diff = pred - T;
          double lw = diff.squaredNorm() / static_cast<double>(diff.size());
          batch_loss += wscale * lw;
          Eigen::MatrixXd dPred = (2.0 / static_cast<double>(diff.size())) * diff;
          total.dworkers.emplace_back(wscale * (dPred.transpose() * E),
                                      wscale * dPred.colwise().sum().transpose());
          dE.noalias() += wscale * (dPred * workers[w].V);
        }
        EncoderGrads weg;
        encode_backward(cache, dE, weg);
        total.dW += weg.dW;
        total.db += weg.db;
      }

      total.dW += cfg.weight_decay * enc.W;
      total.db += cfg.weight_decay * enc.b;

      nesterov_update(enc.W, vel.vW, total.dW, lr, cfg.momentum, cfg.nesterov);
      nesterov_update(enc.b, vel.vb, total.db, lr, cfg.momentum, cfg.nesterov);
      nesterov_update(temperature, vel.vtau, total.dtau, lr, cfg.momentum, cfg.nesterov);
      if (!(temperature > 0))
        throw NumericError("temperature left the positive domain during training");
      for (size_t w = 0; w < workers.size(); ++w) {
        nesterov_update(workers[w].V, vel.vworkers[w].first, total.dworkers[w].first, lr,
                        cfg.momentum, cfg.nesterov);
        nesterov_update(workers[w].c, vel.vworkers[w].second, total.dworkers[w].second, lr,
                        cfg.momentum, cfg.nesterov);
      }
      epoch_loss += batch_loss;
    }
    epoch_loss /= batches;

    EvalReport val = evaluate(pooled, split, enc, temperature, lcfg, val_spec,
                              cfg.val_episodes, val_seed, false, threads);
    auto t1 = std::chrono::steady_clock::now();
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();

    ordered_json line;
    line["epoch"] = epoch;
    line["lr"] = lr;
    line["train_loss"] = epoch_loss;
    line["val_mean"] = val.mean_accuracy;
    line["val_std"] = val.std_accuracy;
    line["val_ci95"] = val.ci95_halfwidth;
    line["wall_ms"] = static_cast<int64_t>(ms);
    result.log_lines.push_back(line);
    log_text += line.dump();
    log_text += '\n';

    if (val.mean_accuracy > result.best_val_mean) {
      result.best_val_mean = val.mean_accuracy;
      result.best_epoch = epoch;
      result.best.W = enc.W;
      result.best.b = enc.b;
      result.best.temperature = temperature;
      result.best.workers.clear();
      for (const auto& w : workers) result.best.workers.push_back({w.name, w.V, w.c});
    }
  }

  write_text_file(out_dir / "log.jsonl", log_text);
  write_fsck(out_dir / "checkpoint.fsck", result.best);
  ordered_json cj;
  cj["config"] = resolved_config;
  cj["seed"] = seed;
  cj["best_epoch"] = result.best_epoch;
  cj["best_val_mean"] = result.best_val_mean;
  write_text_file(out_dir / "train_config.json", cj.dump(2) + "\n");
  return result;
}

ConfusionResult confusion(const Eigen::MatrixXd& pooled, const SplitAssignment& split,
                          const EncoderParams& enc, double temperature, LearnerConfig lcfg,
                          int n_way, int m_shot, int q_query, int part, int n_episodes,
                          uint64_t eval_seed, int threads) {
  ConfusionResult res;
  res.class_names = split.part_classes[part];
  const int K = static_cast<int>(res.class_names.size());
  if (n_way == 0) n_way = K;
  EpisodeSpec spec{n_way, m_shot, q_query, part};
  check_feasible(split, spec);
  if (n_episodes < 1) throw ValidationError("confusion needs at least one episode");
  lcfg.temperature = temperature;

  std::map<std::string, int> global_index;
  for (int i = 0; i < K; ++i) global_index[res.class_names[i]] = i;

  // Per-episode row distributions, reduced in index order afterwards.
  std::vector<Eigen::MatrixXd> rows(static_cast<size_t>(n_episodes));
  std::vector<std::vector<int>> row_ids(static_cast<size_t>(n_episodes));
  parallel_for(n_episodes, threads, [&](int e) {
    Rng rng(derive_seed(eval_seed, "episode", static_cast<uint64_t>(e)));
    Episode ep = generate_episode(split, spec, rng);
    Eigen::MatrixXd Sp = gather_rows(pooled, ep.support);
    Eigen::MatrixXd Qp = gather_rows(pooled, ep.query);
    std::vector<int> ys = local_labels(ep.support);
    std::vector<int> yq = local_labels(ep.query);
    Eigen::MatrixXd Se = encode_pooled(enc, Sp, nullptr);
    Eigen::MatrixXd Qe = encode_pooled(enc, Qp, nullptr);
    LearnerOutput out = learner_forward(lcfg, Se, ys, Qe, spec.n_way);

    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(spec.n_way, K);
    for (Eigen::Index i = 0; i < out.logits.rows(); ++i) {
      int pred_local = argmax_lowest(out.logits.row(i));
      int true_local = yq[static_cast<size_t>(i)];
      dist(true_local, global_index.at(ep.class_names[static_cast<size_t>(pred_local)])) += 1.0;
    }
    dist /= static_cast<double>(spec.q_query);  // per-class query count
    rows[static_cast<size_t>(e)] = std::move(dist);
    std::vector<int> ids(static_cast<size_t>(spec.n_way));
    for (int l = 0; l < spec.n_way; ++l)
      ids[static_cast<size_t>(l)] = global_index.at(ep.class_names[static_cast<size_t>(l)]);
    row_ids[static_cast<size_t>(e)] = std::move(ids);
  });

  res.matrix = Eigen::MatrixXd::Zero(K, K);
  res.row_episodes.assign(static_cast<size_t>(K), 0);
  for (int e = 0; e < n_episodes; ++e)
    for (size_t l = 0; l < row_ids[static_cast<size_t>(e)].size(); ++l) {
      int row = row_ids[static_cast<size_t>(e)][l];
      res.matrix.row(row) += rows[static_cast<size_t>(e)].row(static_cast<Eigen::Index>(l));
      ++res.row_episodes[static_cast<size_t>(row)];
    }
  for (int r = 0; r < K; ++r)
    if (res.row_episodes[static_cast<size_t>(r)] > 0)
      res.matrix.row(r) /= static_cast<double>(res.row_episodes[static_cast<size_t>(r)]);
  res.n_episodes = n_episodes;
  return res;
}

}  // namespace fsml
