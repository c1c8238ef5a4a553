#include "fsml/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "fsml/error.hpp"

namespace fsml {

namespace {

using ojson = nlohmann::ordered_json;

class Section {
 public:
  Section(const ojson& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object())
      throw ValidationError("config: " + label("") + " must be an object");
  }

  const ojson* take(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  int get_int(const std::string& key, int fallback) {
    const ojson* v = take(key);
    if (!v) return fallback;
    if (!v->is_number_integer())
      throw ValidationError("config: " + label(key) + " must be an integer");
    return v->get<int>();
  }

  uint64_t get_u64(const std::string& key, uint64_t fallback) {
    const ojson* v = take(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned())
      throw ValidationError("config: " + label(key) + " must be a non-negative integer");
    return v->get<uint64_t>();
  }

  double get_double(const std::string& key, double fallback) {
    const ojson* v = take(key);
    if (!v) return fallback;
    if (!v->is_number())
      throw ValidationError("config: " + label(key) + " must be a number");
    return v->get<double>();
  }

  bool get_bool(const std::string& key, bool fallback) {
    const ojson* v = take(key);
    if (!v) return fallback;
    if (!v->is_boolean())
      throw ValidationError("config: " + label(key) + " must be a boolean");
    return v->get<bool>();
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const ojson* v = take(key);
    if (!v) return fallback;
    if (!v->is_string())
      throw ValidationError("config: " + label(key) + " must be a string");
    return v->get<std::string>();
  }

  std::vector<std::string> get_string_array(const std::string& key,
                                            const std::vector<std::string>& fallback) {
    const ojson* v = take(key);
    if (!v) return fallback;
    if (!v->is_array())
      throw ValidationError("config: " + label(key) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : *v) {
      if (!e.is_string())
        throw ValidationError("config: " + label(key) + " must be an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::array<double, 3> get_ratio3(const std::string& key,
                                   const std::array<double, 3>& fallback) {
    const ojson* v = take(key);
    if (!v) return fallback;
    if (!v->is_array() || v->size() != 3)
      throw ValidationError("config: " + label(key) + " must be an array of 3 numbers");
    std::array<double, 3> out{};
    for (size_t i = 0; i < 3; ++i) {
      if (!(*v)[i].is_number())
        throw ValidationError("config: " + label(key) + " must be an array of 3 numbers");
      out[i] = (*v)[i].get<double>();
    }
    return out;
  }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ValidationError("config: unknown key " + label(it.key()));
  }

 private:
  std::string label(const std::string& key) const {
    std::string path = where_;
    if (!key.empty()) path += (path.empty() ? "" : ".") + key;
    return path.empty() ? "the top level" : "'" + path + "'";
  }

  const ojson& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void apply_preset(AppConfig& c, const std::string& preset) {
  if (preset == "google-commands") {
    c.split_counts = {18, 5, 5};
  } else if (preset == "fluent") {
    c.split_counts = {15, 8, 8};
  } else {
    throw ValidationError("config: unknown preset '" + preset +
                          "' (expected google-commands or fluent)");
  }
  c.preset = preset;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError("config: " + message);
}

}  // namespace

int parse_part(const std::string& name) {
  for (int p = 0; p < 3; ++p)
    if (name == split_part_name(p)) return p;
  throw ValidationError("unknown split part '" + name +
                        "' (expected train, val or test)");
}

SplitMode split_mode_from_name(const std::string& name) {
  if (name == "spo") return SplitMode::SPO;
  if (name == "no-spo") return SplitMode::NoSPO;
  throw ValidationError("unknown split mode '" + name + "' (expected spo or no-spo)");
}

const char* split_mode_name(SplitMode mode) {
  return mode == SplitMode::SPO ? "spo" : "no-spo";
}

AppConfig parse_config(const ojson& j) {
  AppConfig c;
  Section top(j, "");

  if (const ojson* s = top.take("synth")) {
    Section g(*s, "synth");
    c.synth.n_classes = g.get_int("n_classes", c.synth.n_classes);
    c.synth.n_speakers = g.get_int("n_speakers", c.synth.n_speakers);
    c.synth.utterances_per_class =
        g.get_int("utterances_per_class", c.synth.utterances_per_class);
    c.synth.feature_dim = g.get_int("feature_dim", c.synth.feature_dim);
    c.synth.frames_min = g.get_int("frames_min", c.synth.frames_min);
    c.synth.frames_max = g.get_int("frames_max", c.synth.frames_max);
    c.synth.class_separation = g.get_double("class_separation", c.synth.class_separation);
    c.synth.signal_dim = g.get_int("signal_dim", c.synth.signal_dim);
    g.finish();
  }

  if (const ojson* s = top.take("split")) {
    Section g(*s, "split");
    std::string preset = g.get_string("preset", "");
    if (!preset.empty()) apply_preset(c, preset);
    std::string mode = g.get_string("mode", split_mode_name(c.split_mode));
    c.split_mode = split_mode_from_name(mode);
    c.split_counts.n_train = g.get_int("n_train_classes", c.split_counts.n_train);
    c.split_counts.n_val = g.get_int("n_val_classes", c.split_counts.n_val);
    c.split_counts.n_test = g.get_int("n_test_classes", c.split_counts.n_test);
    c.speaker_ratios = g.get_ratio3("speaker_ratios", c.speaker_ratios);
    g.finish();
  }

  if (const ojson* s = top.take("learner")) {
    Section g(*s, "learner");
    std::string kind = g.get_string("kind", learner_kind_name(c.learner.kind));
    c.learner.kind = learner_kind_from_name(kind);
    c.learner.temperature = g.get_double("temperature", c.learner.temperature);
    c.learner.ridge_lambda = g.get_double("ridge_lambda", c.learner.ridge_lambda);
    c.learner.svm_c = g.get_double("svm_c", c.learner.svm_c);
    c.learner.svm_max_iter = g.get_int("svm_max_iter", c.learner.svm_max_iter);
    g.finish();
  }

  if (const ojson* s = top.take("encoder")) {
    Section g(*s, "encoder");
    c.embedding_dim = g.get_int("embedding_dim", c.embedding_dim);
    c.relu = g.get_bool("relu", c.relu);
    g.finish();
  }

  if (const ojson* s = top.take("train")) {
    Section g(*s, "train");
    c.train.epochs = g.get_int("epochs", c.train.epochs);
    c.train.episodes_per_epoch = g.get_int("episodes_per_epoch", c.train.episodes_per_epoch);
    c.train.episodes_per_batch = g.get_int("episodes_per_batch", c.train.episodes_per_batch);
    c.train.n_way = g.get_int("n_way", c.train.n_way);
    c.train.m_shot = g.get_int("m_shot", c.train.m_shot);
    c.train.q_query = g.get_int("q_query", c.train.q_query);
    c.train.lr = g.get_double("lr", c.train.lr);
    c.train.momentum = g.get_double("momentum", c.train.momentum);
    c.train.nesterov = g.get_bool("nesterov", c.train.nesterov);
    c.train.lr_decay_every = g.get_int("lr_decay_every", c.train.lr_decay_every);
    c.train.lr_decay_factor = g.get_double("lr_decay_factor", c.train.lr_decay_factor);
    c.train.weight_decay = g.get_double("weight_decay", c.train.weight_decay);
    c.train.alpha = g.get_double("alpha", c.train.alpha);
    c.train.worker_names = g.get_string_array("workers", c.train.worker_names);
    c.train.val_episodes = g.get_int("val_episodes", c.train.val_episodes);
    c.train.val_n_way = g.get_int("val_n_way", c.train.val_n_way);
    c.train.val_m_shot = g.get_int("val_m_shot", c.train.val_m_shot);
    c.train.val_q_query = g.get_int("val_q_query", c.train.val_q_query);
    g.finish();
  }

  if (const ojson* s = top.take("eval")) {
    Section g(*s, "eval");
    c.eval.n_way = g.get_int("n_way", c.eval.n_way);
    c.eval.m_shot = g.get_int("m_shot", c.eval.m_shot);
    c.eval.q_query = g.get_int("q_query", c.eval.q_query);
    c.eval.episodes = g.get_int("episodes", c.eval.episodes);
    c.eval.part = parse_part(g.get_string("part", split_part_name(c.eval.part)));
    g.finish();
  }

  if (const ojson* s = top.take("baseline")) {
    Section g(*s, "baseline");
    c.baseline.shots = g.get_int("shots", c.baseline.shots);
    c.baseline.draws = g.get_int("draws", c.baseline.draws);
    c.baseline.hidden = g.get_int("hidden", c.baseline.hidden);
    c.baseline.epochs = g.get_int("epochs", c.baseline.epochs);
    c.baseline.lr = g.get_double("lr", c.baseline.lr);
    c.baseline.batch_size = g.get_int("batch_size", c.baseline.batch_size);
    c.baseline.episodes = g.get_int("episodes", c.baseline.episodes);
    g.finish();
  }

  if (const ojson* s = top.take("skyline")) {
    Section g(*s, "skyline");
    c.skyline.hidden = g.get_int("hidden", c.skyline.hidden);
    c.skyline.epochs = g.get_int("epochs", c.skyline.epochs);
    c.skyline.lr = g.get_double("lr", c.skyline.lr);
    c.skyline.batch_size = g.get_int("batch_size", c.skyline.batch_size);
    c.skyline.holdout_fraction = g.get_double("holdout_fraction", c.skyline.holdout_fraction);
    g.finish();
  }

  if (const ojson* s = top.take("confusion")) {
    Section g(*s, "confusion");
    c.confusion.n_way = g.get_int("n_way", c.confusion.n_way);
    c.confusion.m_shot = g.get_int("m_shot", c.confusion.m_shot);
    c.confusion.q_query = g.get_int("q_query", c.confusion.q_query);
    c.confusion.episodes = g.get_int("episodes", c.confusion.episodes);
    c.confusion.part = parse_part(g.get_string("part", split_part_name(c.confusion.part)));
    g.finish();
  }

  c.seed = top.get_u64("seed", c.seed);
  top.finish();
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path.string() + "'");
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const std::exception& e) {
    throw ValidationError("config file '" + path.string() + "' is not valid JSON: " +
                          e.what());
  }
  return parse_config(j);
}

void finalize_config(AppConfig& c) {
  if (c.train.q_query < 0) c.train.q_query = c.train.m_shot;
  if (c.train.val_q_query < 0) c.train.val_q_query = c.train.val_m_shot;
  if (c.eval.q_query < 0) c.eval.q_query = c.eval.m_shot;
  if (c.confusion.q_query < 0) c.confusion.q_query = c.confusion.m_shot;
}

void validate_config(const AppConfig& c) {
  require(c.synth.n_classes >= 1, "'synth.n_classes' must be >= 1");
  require(c.synth.n_speakers >= 1, "'synth.n_speakers' must be >= 1");
  require(c.synth.utterances_per_class >= 1, "'synth.utterances_per_class' must be >= 1");
  require(c.synth.feature_dim >= 1, "'synth.feature_dim' must be >= 1");
  require(c.synth.frames_min >= 1, "'synth.frames_min' must be >= 1");
  require(c.synth.frames_max >= c.synth.frames_min,
          "'synth.frames_max' must be >= 'synth.frames_min'");
  require(c.synth.class_separation >= 0.0, "'synth.class_separation' must be >= 0");
  require(c.synth.signal_dim >= 0, "'synth.signal_dim' must be >= 0");
  require(c.synth.signal_dim <= c.synth.feature_dim,
          "'synth.signal_dim' must be <= 'synth.feature_dim'");

  require(c.split_counts.n_train >= 1, "'split.n_train_classes' must be >= 1");
  require(c.split_counts.n_val >= 1, "'split.n_val_classes' must be >= 1");
  require(c.split_counts.n_test >= 1, "'split.n_test_classes' must be >= 1");
  double ratio_sum = 0.0;
  for (double r : c.speaker_ratios) {
    require(r > 0.0, "'split.speaker_ratios' entries must be > 0");
    ratio_sum += r;
  }
  require(std::abs(ratio_sum - 1.0) <= 1e-6, "'split.speaker_ratios' must sum to 1");

  require(c.learner.temperature > 0.0, "'learner.temperature' must be > 0");
  require(c.learner.ridge_lambda > 0.0, "'learner.ridge_lambda' must be > 0");
  require(c.learner.svm_c > 0.0, "'learner.svm_c' must be > 0");
  require(c.learner.svm_max_iter >= 1, "'learner.svm_max_iter' must be >= 1");

  require(c.embedding_dim >= 1, "'encoder.embedding_dim' must be >= 1");

  require(c.train.epochs >= 1, "'train.epochs' must be >= 1");
  require(c.train.episodes_per_epoch >= 1, "'train.episodes_per_epoch' must be >= 1");
  require(c.train.episodes_per_batch >= 1, "'train.episodes_per_batch' must be >= 1");
  require(c.train.n_way >= 2, "'train.n_way' must be >= 2");
  require(c.train.m_shot >= 1, "'train.m_shot' must be >= 1");
  require(c.train.q_query >= 1, "'train.q_query' must be >= 1");
  require(c.train.lr > 0.0, "'train.lr' must be > 0");
  require(c.train.momentum >= 0.0 && c.train.momentum < 1.0,
          "'train.momentum' must be in [0, 1)");
  require(c.train.lr_decay_every >= 1, "'train.lr_decay_every' must be >= 1");
  require(c.train.lr_decay_factor > 0.0, "'train.lr_decay_factor' must be > 0");
  require(c.train.weight_decay >= 0.0, "'train.weight_decay' must be >= 0");
  require(c.train.alpha >= 0.0 && c.train.alpha <= 1.0, "'train.alpha' must be in [0, 1]");
  require(c.train.val_episodes >= 1, "'train.val_episodes' must be >= 1");
  require(c.train.val_n_way >= 2, "'train.val_n_way' must be >= 2");
  require(c.train.val_m_shot >= 1, "'train.val_m_shot' must be >= 1");
  require(c.train.val_q_query >= 1, "'train.val_q_query' must be >= 1");

  require(c.eval.n_way >= 2, "'eval.n_way' must be >= 2");
  require(c.eval.m_shot >= 1, "'eval.m_shot' must be >= 1");
  require(c.eval.q_query >= 1, "'eval.q_query' must be >= 1");
  require(c.eval.episodes >= 1, "'eval.episodes' must be >= 1");

  require(c.baseline.shots >= 1, "'baseline.shots' must be >= 1");
  require(c.baseline.draws >= 1, "'baseline.draws' must be >= 1");
  require(c.baseline.hidden >= 1, "'baseline.hidden' must be >= 1");
  require(c.baseline.epochs >= 1, "'baseline.epochs' must be >= 1");
  require(c.baseline.lr > 0.0, "'baseline.lr' must be > 0");
  require(c.baseline.batch_size >= 1, "'baseline.batch_size' must be >= 1");
  require(c.baseline.episodes >= 0, "'baseline.episodes' must be >= 0");

  require(c.skyline.hidden >= 1, "'skyline.hidden' must be >= 1");
  require(c.skyline.epochs >= 1, "'skyline.epochs' must be >= 1");
  require(c.skyline.lr > 0.0, "'skyline.lr' must be > 0");
  require(c.skyline.batch_size >= 1, "'skyline.batch_size' must be >= 1");
  require(c.skyline.holdout_fraction > 0.0 && c.skyline.holdout_fraction < 1.0,
          "'skyline.holdout_fraction' must be in (0, 1)");

  require(c.confusion.n_way >= 0, "'confusion.n_way' must be >= 0 (0: all classes)");
  require(c.confusion.n_way != 1, "'confusion.n_way' must not be 1");
  require(c.confusion.m_shot >= 1, "'confusion.m_shot' must be >= 1");
  require(c.confusion.q_query >= 1, "'confusion.q_query' must be >= 1");
  require(c.confusion.episodes >= 1, "'confusion.episodes' must be >= 1");
}

nlohmann::ordered_json resolved_config_json(const AppConfig& c) {
  ojson j;
  j["synth"] = {{"n_classes", c.synth.n_classes},
                {"n_speakers", c.synth.n_speakers},
                {"utterances_per_class", c.synth.utterances_per_class},
                {"feature_dim", c.synth.feature_dim},
                {"frames_min", c.synth.frames_min},
                {"frames_max", c.synth.frames_max},
                {"class_separation", c.synth.class_separation},
                {"signal_dim", c.synth.signal_dim}};
  ojson split = {{"mode", split_mode_name(c.split_mode)},
                 {"n_train_classes", c.split_counts.n_train},
                 {"n_val_classes", c.split_counts.n_val},
                 {"n_test_classes", c.split_counts.n_test},
                 {"speaker_ratios", c.speaker_ratios}};
  if (!c.preset.empty()) split["preset"] = c.preset;
  j["split"] = split;
  j["learner"] = {{"kind", learner_kind_name(c.learner.kind)},
                  {"temperature", c.learner.temperature},
                  {"ridge_lambda", c.learner.ridge_lambda},
                  {"svm_c", c.learner.svm_c},
                  {"svm_max_iter", c.learner.svm_max_iter}};
  j["encoder"] = {{"embedding_dim", c.embedding_dim}, {"relu", c.relu}};
  j["train"] = {{"epochs", c.train.epochs},
                {"episodes_per_epoch", c.train.episodes_per_epoch},
                {"episodes_per_batch", c.train.episodes_per_batch},
                {"n_way", c.train.n_way},
                {"m_shot", c.train.m_shot},
                {"q_query", c.train.q_query},
                {"lr", c.train.lr},
                {"momentum", c.train.momentum},
                {"nesterov", c.train.nesterov},
                {"lr_decay_every", c.train.lr_decay_every},
                {"lr_decay_factor", c.train.lr_decay_factor},
                {"weight_decay", c.train.weight_decay},
                {"alpha", c.train.alpha},
                {"workers", c.train.worker_names},
                {"val_episodes", c.train.val_episodes},
                {"val_n_way", c.train.val_n_way},
                {"val_m_shot", c.train.val_m_shot},
                {"val_q_query", c.train.val_q_query}};
  j["eval"] = {{"n_way", c.eval.n_way},
               {"m_shot", c.eval.m_shot},
               {"q_query", c.eval.q_query},
               {"episodes", c.eval.episodes},
               {"part", split_part_name(c.eval.part)}};
  j["baseline"] = {{"shots", c.baseline.shots},
                   {"draws", c.baseline.draws},
                   {"hidden", c.baseline.hidden},
                   {"epochs", c.baseline.epochs},
                   {"lr", c.baseline.lr},
                   {"batch_size", c.baseline.batch_size},
                   {"episodes", c.baseline.episodes}};
  j["skyline"] = {{"hidden", c.skyline.hidden},
                  {"epochs", c.skyline.epochs},
                  {"lr", c.skyline.lr},
                  {"batch_size", c.skyline.batch_size},
                  {"holdout_fraction", c.skyline.holdout_fraction}};
  j["confusion"] = {{"n_way", c.confusion.n_way},
                    {"m_shot", c.confusion.m_shot},
                    {"q_query", c.confusion.q_query},
                    {"episodes", c.confusion.episodes},
                    {"part", split_part_name(c.confusion.part)}};
  return j;
}

}  // namespace fsml
