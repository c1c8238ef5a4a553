#include "fsml/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fsml/bench.hpp"
#include "fsml/config.hpp"
#include "fsml/dataset.hpp"
#include "fsml/error.hpp"
#include "fsml/io.hpp"
#include "fsml/learners.hpp"
#include "fsml/meta.hpp"
#include "fsml/protocol.hpp"
#include "fsml/rng.hpp"
#include "fsml/threads.hpp"

namespace fsml {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct Common {
  std::string config_path;
  uint64_t seed = 0;
  int threads = 0;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config file");
  c.seed_opt = sub->add_option("--seed", c.seed, "Seed (overrides the config's seed)");
  sub->add_option("--threads", c.threads, "Worker threads (0: all hardware threads)")
      ->check(CLI::NonNegativeNumber);
}

AppConfig load_common(const Common& c) {
  AppConfig cfg = c.config_path.empty() ? AppConfig{} : load_config(c.config_path);
  if (c.seed_opt->count() > 0) cfg.seed = c.seed;
  return cfg;
}

int resolve_threads(const Common& c) {
  return c.threads > 0 ? c.threads : default_threads();
}

void ensure_parent(const fs::path& p) {
  fs::path dir = p.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
}

void write_json(const fs::path& path, const ojson& j) {
  ensure_parent(path);
  write_text_file(path, j.dump(2) + "\n");
}

ojson matrix_rows(const Eigen::MatrixXd& M) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

EncoderParams encoder_from_checkpoint(const Checkpoint& ck, bool relu,
                                      const DatasetManifest& mf) {
  if (ck.W.cols() != mf.feature_dim)
    throw ValidationError("checkpoint expects feature_dim " + std::to_string(ck.W.cols()) +
                          " but the manifest has " + std::to_string(mf.feature_dim));
  EncoderParams enc;
  enc.W = ck.W;
  enc.b = ck.b;
  enc.relu = relu;
  return enc;
}

ojson stats_json(const EvalReport& rep) {
  return ojson{{"n_way", rep.n_way},
               {"m_shot", rep.m_shot},
               {"q_query", rep.q_query},
               {"n_episodes", rep.n_episodes},
               {"mean_accuracy", rep.mean_accuracy},
               {"std_accuracy", rep.std_accuracy},
               {"ci95_halfwidth", rep.ci95_halfwidth}};
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0));
  }
  return r;
}

void cmd_synth(const Common& common, const std::string& out_dir) {
  AppConfig cfg = load_common(common);
  finalize_config(cfg);
  validate_config(cfg);
  SyntheticSpec spec = cfg.synth;
  spec.seed = cfg.seed;
  DatasetManifest mf = generate_synthetic(spec, out_dir);
  ojson j{{"config", resolved_config_json(cfg)},
          {"seed", cfg.seed},
          {"n_records", mf.records.size()},
          {"n_classes", mf.classes.size()},
          {"n_speakers", mf.speakers.size()},
          {"feature_dim", mf.feature_dim}};
  write_json(fs::path(out_dir) / "synth_config.json", j);
  std::cout << "wrote " << mf.records.size() << " utterances (" << mf.classes.size()
            << " classes, " << mf.speakers.size() << " speakers) to " << out_dir << "\n";
}

void cmd_split(const Common& common, const std::string& manifest_path,
               const std::string& out_path, const std::string& mode_flag) {
  AppConfig cfg = load_common(common);
  if (!mode_flag.empty()) cfg.split_mode = split_mode_from_name(mode_flag);
  finalize_config(cfg);
  validate_config(cfg);
  DatasetManifest mf = load_manifest(manifest_path);
  SplitAssignment split =
      make_split(mf, cfg.split_counts, cfg.split_mode, cfg.speaker_ratios, cfg.seed);
  ensure_parent(out_path);
  save_split(out_path, mf, split, resolved_config_json(cfg));
  auto stats = split_stats(mf, split);
  std::cout << "part   classes  files  speakers\n";
  for (int p = 0; p < 3; ++p)
    std::printf("%-6s %7d %6d %9d\n", split_part_name(p), stats[p].n_classes,
                stats[p].n_files, stats[p].n_speakers);
  std::cout << "wrote " << out_path << "\n";
}

void cmd_train(const Common& common, const std::string& manifest_path,
               const std::string& split_path, const std::string& out_dir,
               const std::string& learner_flag) {
  AppConfig cfg = load_common(common);
  if (!learner_flag.empty()) cfg.learner.kind = learner_kind_from_name(learner_flag);
  finalize_config(cfg);
  validate_config(cfg);
  DatasetManifest mf = load_manifest(manifest_path);
  SplitAssignment split = load_split(split_path, mf);
  fs::create_directories(out_dir);
  TrainResult r = run_training(mf, split, cfg.train, cfg.learner, cfg.embedding_dim,
                               cfg.relu, cfg.seed, out_dir, resolve_threads(common),
                               resolved_config_json(cfg));
  std::cout << "best epoch " << r.best_epoch << " with val accuracy " << r.best_val_mean
            << "; checkpoint in " << out_dir << "\n";
}

void cmd_eval(const Common& common, const std::string& manifest_path,
              const std::string& split_path, const std::string& checkpoint_path,
              const std::string& out_path, const std::string& learner_flag,
              const CLI::App* sub, int n_way, int m_shot, int q_query, int episodes,
              const std::string& part_flag, bool permute, const std::string& dump_path) {
  AppConfig cfg = load_common(common);
  if (!learner_flag.empty()) cfg.learner.kind = learner_kind_from_name(learner_flag);
  if (sub->count("--n-way") > 0) cfg.eval.n_way = n_way;
  if (sub->count("--m-shot") > 0) cfg.eval.m_shot = m_shot;
  if (sub->count("--q-query") > 0) cfg.eval.q_query = q_query;
  if (sub->count("--episodes") > 0) cfg.eval.episodes = episodes;
  if (!part_flag.empty()) cfg.eval.part = parse_part(part_flag);
  finalize_config(cfg);
  validate_config(cfg);

  DatasetManifest mf = load_manifest(manifest_path);
  SplitAssignment split = load_split(split_path, mf);
  Checkpoint ck = read_fsck(checkpoint_path);
  EncoderParams enc = encoder_from_checkpoint(ck, cfg.relu, mf);
  EpisodeSpec spec{cfg.eval.n_way, cfg.eval.m_shot, cfg.eval.q_query, cfg.eval.part};
  int threads = resolve_threads(common);
  Eigen::MatrixXd pooled = pool_features(mf, threads);
  std::vector<Episode> dump;
  EvalReport rep = evaluate(pooled, split, enc, ck.temperature, cfg.learner, spec,
                            cfg.eval.episodes, cfg.seed, permute, threads,
                            dump_path.empty() ? nullptr : &dump);

  ojson j{{"config", resolved_config_json(cfg)},
          {"seed", cfg.seed},
          {"learner", learner_kind_name(cfg.learner.kind)},
          {"part", split_part_name(cfg.eval.part)},
          {"permuted_labels", permute}};
  ojson stats = stats_json(rep);
  for (auto& [k, v] : stats.items()) j[k] = v;
  write_json(out_path, j);

  if (!dump_path.empty()) {
    std::string lines;
    for (size_t e = 0; e < dump.size(); ++e) {
      const Episode& ep = dump[e];
      ojson rec{{"episode", e},
                {"classes", ep.class_names},
                {"accuracy", rep.per_episode[e]}};
      ojson support = ojson::array(), query = ojson::array();
      for (auto& [idx, local] : ep.support)
        support.push_back(mf.records[static_cast<size_t>(idx)].utterance_id);
      for (auto& [idx, local] : ep.query)
        query.push_back(mf.records[static_cast<size_t>(idx)].utterance_id);
      rec["support"] = support;
      rec["query"] = query;
      lines += rec.dump() + "\n";
    }
    ensure_parent(dump_path);
    write_text_file(dump_path, lines);
  }

  std::printf("%s %d-way %d-shot: %.4f +/- %.4f (%d episodes)\n",
              learner_kind_name(cfg.learner.kind), rep.n_way, rep.m_shot,
              rep.mean_accuracy, rep.ci95_halfwidth, rep.n_episodes);
  std::cout << "wrote " << out_path << "\n";
}

void cmd_baseline(const Common& common, const std::string& manifest_path,
                  const std::string& split_path, const std::string& out_path,
                  const CLI::App* sub, int shots, int draws, int episodes,
                  uint64_t eval_seed, const std::string& part_flag) {
  AppConfig cfg = load_common(common);
  if (sub->count("--shots") > 0) cfg.baseline.shots = shots;
  if (sub->count("--draws") > 0) cfg.baseline.draws = draws;
  if (sub->count("--episodes") > 0) cfg.baseline.episodes = episodes;
  int part = part_flag.empty() ? 2 : parse_part(part_flag);
  finalize_config(cfg);
  validate_config(cfg);
  if (sub->count("--eval-seed") == 0) eval_seed = cfg.seed;

  DatasetManifest mf = load_manifest(manifest_path);
  SplitAssignment split = load_split(split_path, mf);
  int threads = resolve_threads(common);
  Eigen::MatrixXd pooled = pool_features(mf, threads);
  int n_classes = static_cast<int>(split.part_classes[part].size());
  if (n_classes < 2)
    throw ValidationError("baseline needs at least 2 classes in the " +
                          std::string(split_part_name(part)) + " part");

  std::vector<double> held_accs, episodic_means;
  EpisodeSpec spec{cfg.eval.n_way, cfg.eval.m_shot, cfg.eval.q_query, part};
  for (int d = 0; d < cfg.baseline.draws; ++d) {
    uint64_t seed_d = derive_seed(cfg.seed, "baseline-draw", static_cast<uint64_t>(d));
    SupervisedData train, held;
    shot_split(pooled, split, part, cfg.baseline.shots, seed_d, train, held);
    MlpParams p = mlp_init(mf.feature_dim, cfg.baseline.hidden, n_classes, seed_d);
    mlp_train(p, train.X, train.y, cfg.baseline.epochs, cfg.baseline.lr,
              cfg.baseline.batch_size, seed_d);
    if (held.X.rows() > 0) held_accs.push_back(mlp_accuracy(p, held.X, held.y));
    if (cfg.baseline.episodes > 0) {
      EvalReport rep = eval_supervised_episodic(p, pooled, split, spec,
                                                cfg.baseline.episodes, eval_seed, threads);
      episodic_means.push_back(rep.mean_accuracy);
    }
  }
  if (held_accs.empty())
    throw ValidationError("baseline shots consume every record; nothing held out");

  MeanStd held_stats = mean_std(held_accs);
  ojson j{{"config", resolved_config_json(cfg)},
          {"seed", cfg.seed},
          {"mode", "baseline"},
          {"part", split_part_name(part)},
          {"shots", cfg.baseline.shots},
          {"draws", cfg.baseline.draws},
          {"per_draw_accuracy", held_accs},
          {"mean_accuracy", held_stats.mean},
          {"std_accuracy", held_stats.std}};
  if (!episodic_means.empty()) {
    MeanStd em = mean_std(episodic_means);
    j["episodic"] = ojson{{"eval_seed", eval_seed},
                          {"n_episodes", cfg.baseline.episodes},
                          {"n_way", spec.n_way},
                          {"m_shot", spec.m_shot},
                          {"q_query", spec.q_query},
                          {"per_draw_mean", episodic_means},
                          {"mean_accuracy", em.mean},
                          {"std_accuracy", em.std}};
  }
  write_json(out_path, j);
  std::printf("baseline %d-shot on %s: %.4f +/- %.4f (%d draws)\n", cfg.baseline.shots,
              split_part_name(part), held_stats.mean, held_stats.std, cfg.baseline.draws);
  std::cout << "wrote " << out_path << "\n";
}

void cmd_skyline(const Common& common, const std::string& manifest_path,
                 const std::string& split_path, const std::string& out_path,
                 const std::string& part_flag) {
  AppConfig cfg = load_common(common);
  int part = part_flag.empty() ? 2 : parse_part(part_flag);
  finalize_config(cfg);
  validate_config(cfg);

  DatasetManifest mf = load_manifest(manifest_path);
  SplitAssignment split = load_split(split_path, mf);
  int threads = resolve_threads(common);
  Eigen::MatrixXd pooled = pool_features(mf, threads);
  int n_classes = static_cast<int>(split.part_classes[part].size());
  if (n_classes < 2)
    throw ValidationError("skyline needs at least 2 classes in the " +
                          std::string(split_part_name(part)) + " part");

  SupervisedData train, held;
  skyline_split(pooled, split, part, cfg.skyline.holdout_fraction, cfg.seed, train, held);
  uint64_t seed_s = derive_seed(cfg.seed, "skyline");
  MlpParams p = mlp_init(mf.feature_dim, cfg.skyline.hidden, n_classes, seed_s);
  double loss = mlp_train(p, train.X, train.y, cfg.skyline.epochs, cfg.skyline.lr,
                          cfg.skyline.batch_size, seed_s);
  double acc = mlp_accuracy(p, held.X, held.y);

  ojson j{{"config", resolved_config_json(cfg)},
          {"seed", cfg.seed},
          {"mode", "skyline"},
          {"part", split_part_name(part)},
          {"train_size", train.y.size()},
          {"heldout_size", held.y.size()},
          {"final_train_loss", loss},
          {"accuracy", acc}};
  write_json(out_path, j);
  std::printf("skyline on %s: %.4f (%zu train / %zu held out)\n", split_part_name(part),
              acc, train.y.size(), held.y.size());
  std::cout << "wrote " << out_path << "\n";
}

void cmd_confusion(const Common& common, const std::string& manifest_path,
                   const std::string& split_path, const std::string& checkpoint_path,
                   const std::string& prefix, const std::string& learner_flag,
                   const CLI::App* sub, int n_way, int m_shot, int q_query, int episodes,
                   const std::string& part_flag) {
  AppConfig cfg = load_common(common);
  if (!learner_flag.empty()) cfg.learner.kind = learner_kind_from_name(learner_flag);
  if (sub->count("--n-way") > 0) cfg.confusion.n_way = n_way;
  if (sub->count("--m-shot") > 0) cfg.confusion.m_shot = m_shot;
  if (sub->count("--q-query") > 0) cfg.confusion.q_query = q_query;
  if (sub->count("--episodes") > 0) cfg.confusion.episodes = episodes;
  if (!part_flag.empty()) cfg.confusion.part = parse_part(part_flag);
  finalize_config(cfg);
  validate_config(cfg);

  DatasetManifest mf = load_manifest(manifest_path);
  SplitAssignment split = load_split(split_path, mf);
  Checkpoint ck = read_fsck(checkpoint_path);
  EncoderParams enc = encoder_from_checkpoint(ck, cfg.relu, mf);
  int threads = resolve_threads(common);
  Eigen::MatrixXd pooled = pool_features(mf, threads);
  ConfusionResult res =
      confusion(pooled, split, enc, ck.temperature, cfg.learner, cfg.confusion.n_way,
                cfg.confusion.m_shot, cfg.confusion.q_query, cfg.confusion.part,
                cfg.confusion.episodes, cfg.seed, threads);

  fs::path json_path = prefix + ".json";
  fs::path csv_path = prefix + ".csv";
  fs::path gp_path = prefix + ".gp";

  ojson j{{"config", resolved_config_json(cfg)},
          {"seed", cfg.seed},
          {"learner", learner_kind_name(cfg.learner.kind)},
          {"part", split_part_name(cfg.confusion.part)},
          {"n_way", cfg.confusion.n_way},
          {"m_shot", cfg.confusion.m_shot},
          {"q_query", cfg.confusion.q_query},
          {"n_episodes", res.n_episodes},
          {"classes", res.class_names},
          {"row_episodes", res.row_episodes},
          {"matrix", matrix_rows(res.matrix)}};
  write_json(json_path, j);

  std::string csv;
  for (const auto& name : res.class_names) csv += "," + name;
  csv += "\n";
  char cell[32];
  for (Eigen::Index i = 0; i < res.matrix.rows(); ++i) {
    csv += res.class_names[static_cast<size_t>(i)];
    for (Eigen::Index jj = 0; jj < res.matrix.cols(); ++jj) {
      std::snprintf(cell, sizeof(cell), ",%.6f", res.matrix(i, jj));
      csv += cell;
    }
    csv += "\n";
  }
  ensure_parent(csv_path);
  write_text_file(csv_path, csv);

  std::string gp;
  gp += "set datafile separator comma\n";
  gp += "set title 'Confusion (rows: true class)'\n";
  gp += "set xlabel 'predicted'\nset ylabel 'true'\n";
  gp += "set xtics rotate by -45\nset cbrange [0:1]\nset key off\n";
  gp += "plot '" + csv_path.filename().string() +
        "' matrix rowheaders columnheaders with image\n";
  write_text_file(gp_path, gp);

  double diag = res.matrix.rows() > 0 ? res.matrix.diagonal().mean() : 0.0;
  std::printf("confusion over %d episodes, mean diagonal %.4f\n", res.n_episodes, diag);
  std::cout << "wrote " << json_path.string() << ", " << csv_path.string() << ", "
            << gp_path.string() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Few-shot spoken-intent classification: episodic meta-learning over "
               "pooled acoustic features"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  Common synth_common;
  std::string synth_out;
  add_common(synth, synth_common);
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->callback([&]() { cmd_synth(synth_common, synth_out); });

  // split
  auto* split = app.add_subcommand("split", "Partition classes (and speakers) into train/val/test");
  Common split_common;
  std::string split_manifest, split_out, split_mode;
  add_common(split, split_common);
  split->add_option("--manifest", split_manifest, "Dataset manifest (JSONL)")->required();
  split->add_option("--out", split_out, "Output split file")->required();
  split->add_option("--mode", split_mode, "spo or no-spo (overrides the config)");
  split->callback(
      [&]() { cmd_split(split_common, split_manifest, split_out, split_mode); });

  // train
  auto* train = app.add_subcommand("train", "Meta-train the embedding head");
  Common train_common;
  std::string train_manifest, train_split, train_out, train_learner;
  add_common(train, train_common);
  train->add_option("--manifest", train_manifest, "Dataset manifest")->required();
  train->add_option("--split", train_split, "Split file")->required();
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--learner", train_learner, "proto, ridge or svm");
  train->callback([&]() {
    cmd_train(train_common, train_manifest, train_split, train_out, train_learner);
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Episodic evaluation of a checkpoint");
  Common eval_common;
  std::string eval_manifest, eval_split, eval_ck, eval_out, eval_learner, eval_part,
      eval_dump;
  int eval_n = 0, eval_m = 0, eval_q = 0, eval_eps = 0;
  bool eval_permute = false;
  add_common(eval, eval_common);
  eval->add_option("--manifest", eval_manifest, "Dataset manifest")->required();
  eval->add_option("--split", eval_split, "Split file")->required();
  eval->add_option("--checkpoint", eval_ck, "Trained checkpoint")->required();
  eval->add_option("--out", eval_out, "Output report (JSON)")->required();
  eval->add_option("--learner", eval_learner, "proto, ridge or svm");
  eval->add_option("--n-way", eval_n, "Classes per episode");
  eval->add_option("--m-shot", eval_m, "Support examples per class");
  eval->add_option("--q-query", eval_q, "Query examples per class");
  eval->add_option("--episodes", eval_eps, "Number of episodes");
  eval->add_option("--part", eval_part, "train, val or test");
  eval->add_flag("--permute-labels", eval_permute,
                 "Shuffle query labels within each episode (chance calibration)");
  eval->add_option("--dump-episodes", eval_dump, "Write per-episode JSONL here");
  eval->callback([&]() {
    cmd_eval(eval_common, eval_manifest, eval_split, eval_ck, eval_out, eval_learner,
             eval, eval_n, eval_m, eval_q, eval_eps, eval_part, eval_permute, eval_dump);
  });

  // baseline
  auto* baseline =
      app.add_subcommand("baseline", "Few-shot supervised baseline on a split part");
  Common base_common;
  std::string base_manifest, base_split, base_out, base_part;
  int base_shots = 0, base_draws = 0, base_eps = 0;
  uint64_t base_eval_seed = 0;
  add_common(baseline, base_common);
  baseline->add_option("--manifest", base_manifest, "Dataset manifest")->required();
  baseline->add_option("--split", base_split, "Split file")->required();
  baseline->add_option("--out", base_out, "Output report (JSON)")->required();
  baseline->add_option("--shots", base_shots, "Training examples per class");
  baseline->add_option("--draws", base_draws, "Independent shot draws");
  baseline->add_option("--episodes", base_eps,
                       "Episodes for episodic scoring (0: held-out scoring only)");
  baseline->add_option("--eval-seed", base_eval_seed,
                       "Episode stream seed (defaults to --seed)");
  baseline->add_option("--part", base_part, "train, val or test (default test)");
  baseline->callback([&]() {
    cmd_baseline(base_common, base_manifest, base_split, base_out, baseline, base_shots,
                 base_draws, base_eps, base_eval_seed, base_part);
  });

  // skyline
  auto* skyline =
      app.add_subcommand("skyline", "Fully supervised reference on a split part");
  Common sky_common;
  std::string sky_manifest, sky_split, sky_out, sky_part;
  add_common(skyline, sky_common);
  skyline->add_option("--manifest", sky_manifest, "Dataset manifest")->required();
  skyline->add_option("--split", sky_split, "Split file")->required();
  skyline->add_option("--out", sky_out, "Output report (JSON)")->required();
  skyline->add_option("--part", sky_part, "train, val or test (default test)");
  skyline->callback(
      [&]() { cmd_skyline(sky_common, sky_manifest, sky_split, sky_out, sky_part); });

  // confusion
  auto* conf = app.add_subcommand("confusion", "Aggregate episodic confusion matrix");
  Common conf_common;
  std::string conf_manifest, conf_split, conf_ck, conf_prefix, conf_learner, conf_part;
  int conf_n = 0, conf_m = 0, conf_q = 0, conf_eps = 0;
  add_common(conf, conf_common);
  conf->add_option("--manifest", conf_manifest, "Dataset manifest")->required();
  conf->add_option("--split", conf_split, "Split file")->required();
  conf->add_option("--checkpoint", conf_ck, "Trained checkpoint")->required();
  conf->add_option("--prefix", conf_prefix, "Output prefix (.json/.csv/.gp)")->required();
  conf->add_option("--learner", conf_learner, "proto, ridge or svm");
  conf->add_option("--n-way", conf_n, "Classes per episode (0: all)");
  conf->add_option("--m-shot", conf_m, "Support examples per class");
  conf->add_option("--q-query", conf_q, "Query examples per class");
  conf->add_option("--episodes", conf_eps, "Number of episodes");
  conf->add_option("--part", conf_part, "train, val or test");
  conf->callback([&]() {
    cmd_confusion(conf_common, conf_manifest, conf_split, conf_ck, conf_prefix,
                  conf_learner, conf, conf_n, conf_m, conf_q, conf_eps, conf_part);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace fsml
