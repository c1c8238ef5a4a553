#include "fsml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "fsml/error.hpp"
#include "fsml/rng.hpp"
#include "json.hpp"

namespace fsml {

namespace {
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string fmt_id(const char* prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, i);
  return buf;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::string text = read_text_file(path);
  DatasetManifest mf;
  mf.dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  static const std::set<std::string> kKeys = {"utterance_id", "speaker_id", "label",
                                             "feature_path", "n_frames", "feature_dim"};
  std::unordered_set<std::string> seen_ids;
  size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = eol == std::string::npos ? text.size() : eol + 1;
    ++line_no;
    if (line.empty() && pos >= text.size()) break;  // trailing newline

    auto fail = [&](const std::string& why) {
      throw ValidationError("manifest " + path.string() + " line " + std::to_string(line_no) +
                            ": " + why);
    };
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail("malformed JSON record");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!kKeys.count(it.key())) fail("unknown key '" + it.key() + "'");
    for (const auto& k : kKeys)
      if (!j.contains(k)) fail("missing key '" + k + "'");

    UtteranceRecord r;
    try {
      r.utterance_id = j.at("utterance_id").get<std::string>();
      r.speaker_id = j.at("speaker_id").get<std::string>();
      r.label = j.at("label").get<std::string>();
      r.feature_path = j.at("feature_path").get<std::string>();
      r.n_frames = j.at("n_frames").get<int>();
      r.feature_dim = j.at("feature_dim").get<int>();
    } catch (const json::exception& e) {
      fail(std::string("bad field type: ") + e.what());
    }
    if (r.utterance_id.empty()) fail("empty utterance_id");
    if (r.n_frames < 1) fail("n_frames must be >= 1");
    if (r.feature_dim < 1) fail("feature_dim must be >= 1");
    if (!seen_ids.insert(r.utterance_id).second)
      fail("duplicate utterance_id '" + r.utterance_id + "'");
    if (mf.records.empty())
      mf.feature_dim = r.feature_dim;
    else if (r.feature_dim != mf.feature_dim)
      fail("inconsistent feature_dim " + std::to_string(r.feature_dim) + " (manifest uses " +
           std::to_string(mf.feature_dim) + ")");
    r.resolved_path = mf.dir / r.feature_path;
    mf.records.push_back(std::move(r));
  }
  if (mf.records.empty()) throw ValidationError("empty manifest: " + path.string());

  std::set<std::string> cls, spk;
  for (const auto& r : mf.records) {
    cls.insert(r.label);
    spk.insert(r.speaker_id);
  }
  mf.classes.assign(cls.begin(), cls.end());
  mf.speakers.assign(spk.begin(), spk.end());
  return mf;
}

MatrixF read_features(const UtteranceRecord& record) {
  MatrixF m = read_fsfa(record.resolved_path);
  if (m.rows() != record.n_frames || m.cols() != record.feature_dim)
    throw ValidationError("feature archive header mismatch for '" + record.utterance_id +
                          "': archive is " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", manifest says " +
                          std::to_string(record.n_frames) + "x" +
                          std::to_string(record.feature_dim));
  return m;
}

void write_features(const std::filesystem::path& path, const MatrixF& m) {
  write_fsfa(path, m);
}

Eigen::VectorXd mean_pool(const MatrixF& m) {
  if (m.rows() < 1) throw ValidationError("mean_pool of empty matrix");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) acc(j) += static_cast<double>(m(i, j));
  return acc / static_cast<double>(m.rows());
}

DatasetManifest generate_synthetic(const SyntheticSpec& spec,
                                   const std::filesystem::path& out_dir) {
  if (spec.n_classes < 1 || spec.utterances_per_class < 1 || spec.feature_dim < 1 ||
      spec.n_speakers < 1)
    throw ValidationError("synthetic spec: counts must be positive");
  if (spec.frames_min < 1 || spec.frames_min > spec.frames_max)
    throw ValidationError("synthetic spec: need 1 <= frames_min <= frames_max");
  if (spec.class_separation < 0)
    throw ValidationError("synthetic spec: class_separation must be >= 0");
  if (spec.signal_dim < 0 || spec.signal_dim > spec.feature_dim)
    throw ValidationError("synthetic spec: signal_dim must be in [0, feature_dim]");

  std::filesystem::create_directories(out_dir / "features");

  const int d = spec.feature_dim;
  const int sig = spec.signal_dim;
  Rng mean_rng(derive_seed(spec.seed, "synth-means"));

  // Scalar-sequential generation (no vectorized reductions) so archives are
  // identical across platforms, not just across runs.
  std::vector<std::vector<double>> basis;  // sig rows of dim d, orthonormal
  if (sig > 0) {
    for (int s = 0; s < sig; ++s) {
      std::vector<double> v(d);
      for (int j = 0; j < d; ++j) v[j] = mean_rng.gaussian();
      for (const auto& u : basis) {
        double dot = 0;
        for (int j = 0; j < d; ++j) dot += v[j] * u[j];
        for (int j = 0; j < d; ++j) v[j] -= dot * u[j];
      }
      double norm2 = 0;
      for (int j = 0; j < d; ++j) norm2 += v[j] * v[j];
      double norm = std::sqrt(norm2);
      if (norm < 1e-8) throw NumericError("degenerate signal basis draw");
      for (int j = 0; j < d; ++j) v[j] /= norm;
      basis.push_back(std::move(v));
    }
  }

  // Directions on a sphere of radius sep/sqrt(2): two independent such means
  // sit at expected distance ~sep, in units of the unit frame noise.
  double radius = spec.class_separation / std::sqrt(2.0);
  std::vector<std::vector<double>> means(spec.n_classes, std::vector<double>(d, 0.0));
  for (int k = 0; k < spec.n_classes; ++k) {
    int dir_dim = sig > 0 ? sig : d;
    std::vector<double> u(dir_dim);
    double norm2 = 0;
    for (int j = 0; j < dir_dim; ++j) {
      u[j] = mean_rng.gaussian();
      norm2 += u[j] * u[j];
    }
    double norm = std::sqrt(norm2);
    if (norm < 1e-12) norm = 1.0;
    for (int j = 0; j < dir_dim; ++j) u[j] = u[j] / norm * radius;
    if (sig > 0) {
      for (int s = 0; s < sig; ++s)
        for (int j = 0; j < d; ++j) means[k][j] += u[s] * basis[s][j];
    } else {
      means[k] = u;
    }
  }

  const int id_width = 5;
  std::string manifest_text;
  DatasetManifest mf;
  mf.dir = out_dir;
  mf.feature_dim = d;

  int utt_counter = 0;
  for (int k = 0; k < spec.n_classes; ++k) {
    std::string label = fmt_id("cls", k, 3);
    for (int j = 0; j < spec.utterances_per_class; ++j) {
      Rng rng(derive_seed(spec.seed, "synth-utt", static_cast<uint64_t>(k),
                          static_cast<uint64_t>(j)));
      int n_frames = spec.frames_min + static_cast<int>(rng.below(
                         static_cast<uint64_t>(spec.frames_max - spec.frames_min + 1)));
      MatrixF frames(n_frames, d);
      for (int f = 0; f < n_frames; ++f)
        for (int c = 0; c < d; ++c)
          frames(f, c) = static_cast<float>(means[k][c] + rng.gaussian());

      UtteranceRecord r;
      r.utterance_id = fmt_id("utt", utt_counter, id_width);
      r.speaker_id = fmt_id(
          "spk", (k * spec.utterances_per_class + j) % spec.n_speakers, 3);
      r.label = label;
      r.feature_path = std::filesystem::path("features") / (r.utterance_id + ".fsfa");
      r.resolved_path = out_dir / r.feature_path;
      r.n_frames = n_frames;
      r.feature_dim = d;
      write_features(r.resolved_path, frames);

      ordered_json line;
      line["utterance_id"] = r.utterance_id;
      line["speaker_id"] = r.speaker_id;
      line["label"] = r.label;
      line["feature_path"] = r.feature_path.generic_string();
      line["n_frames"] = r.n_frames;
      line["feature_dim"] = r.feature_dim;
      manifest_text += line.dump();
      manifest_text += '\n';

      mf.records.push_back(std::move(r));
      ++utt_counter;
    }
  }
  write_text_file(out_dir / "manifest.jsonl", manifest_text);

  std::set<std::string> cls, spk;
  for (const auto& r : mf.records) {
    cls.insert(r.label);
    spk.insert(r.speaker_id);
  }
  mf.classes.assign(cls.begin(), cls.end());
  mf.speakers.assign(spk.begin(), spk.end());
  return mf;
}

}  // namespace fsml
